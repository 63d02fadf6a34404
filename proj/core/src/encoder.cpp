#include "xmh/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xmh/error.hpp"

namespace xmh {

double attraction_score(double confidence, double area_fraction) {
  const auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(confidence) || !open_unit(area_fraction)) {
    throw InvalidInput("attraction_score: confidence and area fraction must lie in (0,1)");
  }
  return (confidence + area_fraction) / 2.0;
}

std::vector<double> aggregate_regions(std::span<const RegionProposal> proposals,
                                      std::span<const double> holistic, std::size_t k) {
  if (proposals.empty()) throw InvalidInput("aggregate_regions: no region proposals");
  if (k == 0) throw InvalidInput("aggregate_regions: k must be at least 1");
  const std::size_t dim = holistic.size();
  for (const auto& p : proposals) {
    if (p.feature.size() != dim) {
      throw InvalidInput("aggregate_regions: proposal feature length " +
                         std::to_string(p.feature.size()) + " != holistic length " +
                         std::to_string(dim));
    }
    const BoundingBox& b = p.bbox;
    for (double v : {b.center_x, b.center_y, b.width, b.height}) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("aggregate_regions: bbox outside [0,1]");
    }
  }

  std::vector<double> scores(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    scores[i] = attraction_score(proposals[i].confidence, proposals[i].area_fraction);
  }
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));

  std::vector<double> sum(dim + 4, 0.0);
  const auto accumulate = [&](std::span<const double> feat, const BoundingBox& box) {
    for (std::size_t d = 0; d < dim; ++d) sum[d] += feat[d];
    sum[dim + 0] += box.center_x;
    sum[dim + 1] += box.center_y;
    sum[dim + 2] += box.width;
    sum[dim + 3] += box.height;
  };
  for (std::size_t idx : order) accumulate(proposals[idx].feature, proposals[idx].bbox);
  accumulate(holistic, BoundingBox{});

  const double n = static_cast<double>(order.size() + 1);
  for (double& v : sum) v /= n;
  return sum;
}

std::vector<double> bag_of_words(std::span<const std::uint32_t> token_ids, std::size_t vocab_size) {
  std::vector<double> counts(vocab_size, 0.0);
  for (std::uint32_t id : token_ids) {
    if (id >= vocab_size) {
      throw InvalidInput("bag_of_words: token id " + std::to_string(id) +
                         " outside vocabulary of size " + std::to_string(vocab_size));
    }
    counts[id] += 1.0;
  }
  return counts;
}

EncoderModel::EncoderModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidInput("encoder needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.weight.rows() == 0 || layer.weight.cols() == 0) {
      throw InvalidInput("encoder layer " + std::to_string(l) + " has an empty weight matrix");
    }
    if (layer.bias.size() != layer.weight.rows()) {
      throw InvalidInput("encoder layer " + std::to_string(l) + " bias length mismatch");
    }
    if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
      throw InvalidInput("encoder layer " + std::to_string(l) + " input width " +
                         std::to_string(layer.in_dim()) + " does not chain with previous output " +
                         std::to_string(layers_[l - 1].out_dim()));
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw InvalidInput("encoder layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
}

EncoderModel EncoderModel::glorot(std::span<const std::size_t> dims, std::mt19937_64& rng) {
  if (dims.size() < 2) throw InvalidInput("encoder needs an input and an output width");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    // Column-major fill keeps the draw order independent of Eigen internals.
    for (Eigen::Index c = 0; c < in; ++c) {
      for (Eigen::Index r = 0; r < out; ++r) layer.weight(r, c) = dist(rng);
    }
    layers.push_back(std::move(layer));
  }
  return EncoderModel(std::move(layers));
}

EncoderModel EncoderModel::zeros(std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw InvalidInput("encoder needs an input and an output width");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  return EncoderModel(std::move(layers));
}

namespace {

void check_input(const EncoderModel& model, const FeatureMatrix& batch) {
  if (model.depth() == 0) throw InvalidInput("encoder has no layers");
  if (batch.dim() != model.input_dim()) {
    throw InvalidInput("encoder expects " + std::to_string(model.input_dim()) +
                       "-dim input, batch has " + std::to_string(batch.dim()));
  }
}

// Pre-activations of every layer; activations are recomputed from them.
std::vector<Eigen::MatrixXd> forward_preactivations(const EncoderModel& model,
                                                    const Eigen::MatrixXd& input) {
  std::vector<Eigen::MatrixXd> pre;
  pre.reserve(model.depth());
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z;
    if (l == 0) {
      z = layers[l].weight * input;
    } else {
      z = layers[l].weight * pre.back().cwiseMax(0.0);
    }
    z.colwise() += layers[l].bias;
    pre.push_back(std::move(z));
  }
  return pre;
}

}  // namespace

FeatureMatrix forward(const EncoderModel& model, const FeatureMatrix& batch) {
  check_input(model, batch);
  auto pre = forward_preactivations(model, batch.values());
  return FeatureMatrix(std::move(pre.back()));
}

double quantization_loss(const CodeMatrix& target, const FeatureMatrix& output,
                         const PenaltyConfig& cfg) {
  cfg.validate();
  if (target.code_len() != output.dim() || target.count() != output.count()) {
    throw InvalidInput("quantization_loss: target is " + std::to_string(target.code_len()) + "x" +
                       std::to_string(target.count()) + ", output is " +
                       std::to_string(output.dim()) + "x" + std::to_string(output.count()));
  }
  return cfg.eta * (unpack_bits(target) - output.values()).squaredNorm();
}

BackwardResult backward(const EncoderModel& model, const FeatureMatrix& batch,
                        const CodeMatrix& target, const PenaltyConfig& cfg) {
  check_input(model, batch);
  cfg.validate();
  if (target.code_len() != model.output_dim() || target.count() != batch.count()) {
    throw InvalidInput("backward: target shape does not match encoder output");
  }
  const auto& layers = model.layers();
  const auto pre = forward_preactivations(model, batch.values());
  const Eigen::MatrixXd residual = unpack_bits(target) - pre.back();

  BackwardResult out;
  out.loss = cfg.eta * residual.squaredNorm();
  out.grads.resize(layers.size());

  // d loss / d (last pre-activation); the output layer is the identity.
  Eigen::MatrixXd delta = -2.0 * cfg.eta * residual;
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l == 0) {
      out.grads[l].weight = delta * batch.values().transpose();
    } else {
      out.grads[l].weight = delta * pre[l - 1].cwiseMax(0.0).transpose();
    }
    out.grads[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = layers[l].weight.transpose() * delta;
      delta = (upstream.array() * (pre[l - 1].array() > 0.0).cast<double>()).matrix();
    }
  }
  out.output = FeatureMatrix(pre.back());
  return out;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("adam learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidInput("adam betas must lie in [0,1)");
  }
  if (!(epsilon > 0.0)) throw InvalidInput("adam epsilon must be > 0");
}

AdamState::AdamState(const EncoderModel& model, AdamConfig cfg) : config(cfg) {
  config.validate();
  for (const auto& layer : model.layers()) {
    first_moment.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                            Eigen::VectorXd::Zero(layer.bias.size())});
  }
  second_moment = first_moment;
}

namespace {

bool same_shape(const Gradients& a, const std::vector<DenseLayer>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weight.rows() != b[l].weight.rows() || a[l].weight.cols() != b[l].weight.cols() ||
        a[l].bias.size() != b[l].bias.size()) {
      return false;
    }
  }
  return true;
}

template <typename Param>
void adam_update(Param& param, Param& m, Param& v, const Param& g, const AdamConfig& c,
                 double correction1, double correction2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  param.array() -= c.learning_rate * (m.array() / correction1) /
                   ((v.array() / correction2).sqrt() + c.epsilon);
}

}  // namespace

void adam_step(AdamState& state, EncoderModel& model, const Gradients& grads) {
  auto& layers = model.mutable_layers();
  if (!same_shape(grads, layers) || !same_shape(state.first_moment, layers) ||
      !same_shape(state.second_moment, layers)) {
    throw InvalidInput("adam_step: gradient or moment shapes do not match the model");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.config.beta1, t);
  const double c2 = 1.0 - std::pow(state.config.beta2, t);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    adam_update(layers[l].weight, state.first_moment[l].weight, state.second_moment[l].weight,
                grads[l].weight, state.config, c1, c2);
    adam_update(layers[l].bias, state.first_moment[l].bias, state.second_moment[l].bias,
                grads[l].bias, state.config, c1, c2);
  }
}

}  // namespace xmh
