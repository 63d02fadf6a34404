#include "xmh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xmh/error.hpp"

namespace xmh {

void SynthConfig::validate() const {
  if (classes < 2) throw InvalidInput("synth: need at least 2 classes");
  if (per_class < 1) throw InvalidInput("synth: need at least 1 sample per class");
  if (image_dim < 1 || text_dim < 1) throw InvalidInput("synth: feature dims must be >= 1");
  if (!(noise > 0.0) || !std::isfinite(noise)) throw InvalidInput("synth: noise scale must be > 0");
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw InvalidInput("synth: separation must be finite and >= 0");
  }
  if (!(multi_label_prob >= 0.0 && multi_label_prob <= 1.0)) {
    throw InvalidInput("synth: label multiplicity probability must lie in [0,1]");
  }
  if (query_per_class >= per_class) {
    throw InvalidInput("synth: query_per_class must leave gallery items in every class");
  }
}

io::DatasetBundle synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto draw_means = [&](std::size_t dim) {
    Eigen::MatrixXd means(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(cfg.classes));
    for (Eigen::Index c = 0; c < means.cols(); ++c) {
      for (Eigen::Index d = 0; d < means.rows(); ++d) means(d, c) = cfg.separation * gauss(rng);
    }
    return means;
  };
  const Eigen::MatrixXd image_means = draw_means(cfg.image_dim);
  const Eigen::MatrixXd text_means = draw_means(cfg.text_dim);

  const std::size_t n = cfg.classes * cfg.per_class;
  std::vector<std::size_t> cls(n);
  for (std::size_t i = 0; i < n; ++i) cls[i] = i / cfg.per_class;
  std::shuffle(cls.begin(), cls.end(), rng);

  Eigen::MatrixXd image(static_cast<Eigen::Index>(cfg.image_dim), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd text(static_cast<Eigen::Index>(cfg.text_dim), static_cast<Eigen::Index>(n));
  std::vector<LabelSet> labels;
  labels.reserve(n);
  std::bernoulli_distribution extra(cfg.multi_label_prob);
  std::uniform_int_distribution<std::size_t> other(0, cfg.classes - 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const auto c = static_cast<Eigen::Index>(cls[i]);
    for (Eigen::Index d = 0; d < image.rows(); ++d) image(d, col) = image_means(d, c) + cfg.noise * gauss(rng);
    for (Eigen::Index d = 0; d < text.rows(); ++d) text(d, col) = text_means(d, c) + cfg.noise * gauss(rng);
    std::vector<std::int32_t> ids{static_cast<std::int32_t>(cls[i])};
    if (extra(rng)) {
      std::size_t second = other(rng);
      if (second >= cls[i]) ++second;
      ids.push_back(static_cast<std::int32_t>(second));
    }
    labels.emplace_back(std::move(ids));
  }

  io::DatasetBundle bundle;
  // Stored as f32 on disk; round here so in-memory and reloaded bundles agree.
  bundle.data.image = FeatureMatrix(image.cast<float>().cast<double>());
  bundle.data.text = FeatureMatrix(text.cast<float>().cast<double>());
  bundle.data.labels = std::move(labels);

  std::vector<std::size_t> taken(cfg.classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[cls[i]]++ < cfg.query_per_class) {
      bundle.query.push_back(i);
    } else {
      bundle.gallery.push_back(i);
    }
  }
  bundle.train = bundle.gallery;
  return bundle;
}

}  // namespace xmh
