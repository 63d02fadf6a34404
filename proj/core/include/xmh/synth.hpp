#pragma once

#include <cstddef>
#include <cstdint>

#include "xmh/io.hpp"

namespace xmh {

// Gaussian-cluster paired data. Each class gets an independent mean per
// modality with coordinates ~ N(0, separation^2); items add N(0, noise^2)
// noise independently in each modality.
struct SynthConfig {
  std::size_t classes = 8;
  std::size_t per_class = 250;
  std::size_t image_dim = 64;
  std::size_t text_dim = 64;
  double separation = 4.0;
  double noise = 1.0;
  // Chance that an item also carries a second, different class label.
  double multi_label_prob = 0.0;
  // Items per class held out as queries; the rest form gallery and training set.
  std::size_t query_per_class = 25;
  std::uint64_t seed = 7;

  void validate() const;
};

io::DatasetBundle synth_generate(const SynthConfig& cfg);

}  // namespace xmh
