#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "xmh/codelearn.hpp"
#include "xmh/core.hpp"

namespace xmh {

// ============================================================================
// Feature pipelines
// ============================================================================

struct BoundingBox {
  double center_x = 0.5;
  double center_y = 0.5;
  double width = 1.0;
  double height = 1.0;
};

struct RegionProposal {
  std::vector<double> feature;
  double confidence = 0.0;     // detector score, in (0,1)
  double area_fraction = 0.0;  // proposal area / image area, in (0,1)
  BoundingBox bbox;            // normalized to [0,1]
};

// (confidence + area_fraction) / 2; both arguments must lie in (0,1).
double attraction_score(double confidence, double area_fraction);

/**
 * Mean-pools the k most attractive region proposals with the holistic image
 * feature.
 *
 * Proposals are ordered by attraction score (descending, ties keep input
 * order) and the first min(k, size) are kept. Each kept feature is
 * augmented with its box digits (center_x, center_y, width, height); the
 * holistic feature is augmented with (0.5, 0.5, 1, 1) and appended last.
 * The result is the elementwise mean of these vectors, length D_r + 4.
 */
std::vector<double> aggregate_regions(std::span<const RegionProposal> proposals,
                                      std::span<const double> holistic, std::size_t k);

// Token count histogram of length vocab_size.
std::vector<double> bag_of_words(std::span<const std::uint32_t> token_ids, std::size_t vocab_size);

// ============================================================================
// Feed-forward encoder
// ============================================================================

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }

  bool operator==(const DenseLayer& o) const {
    return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
           weight == o.weight && bias == o.bias;
  }
};

// Rectified hidden layers followed by an identity output layer.
class EncoderModel {
 public:
  EncoderModel() = default;
  explicit EncoderModel(std::vector<DenseLayer> layers);

  // Layer widths dims[0] -> dims[1] -> ... -> dims.back(). Weights are drawn
  // uniformly from +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
  static EncoderModel glorot(std::span<const std::size_t> dims, std::mt19937_64& rng);
  static EncoderModel zeros(std::span<const std::size_t> dims);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  std::size_t depth() const { return layers_.size(); }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  bool operator==(const EncoderModel&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Parameter-shaped gradients, one entry per layer.
using Gradients = std::vector<DenseLayer>;

FeatureMatrix forward(const EncoderModel& model, const FeatureMatrix& batch);

// eta * ||target - output||_F^2
double quantization_loss(const CodeMatrix& target, const FeatureMatrix& output,
                         const PenaltyConfig& cfg);

struct BackwardResult {
  Gradients grads;
  double loss = 0.0;
  FeatureMatrix output;
};

// Exact gradient of quantization_loss(target, forward(model, batch)) with
// respect to every weight and bias.
BackwardResult backward(const EncoderModel& model, const FeatureMatrix& batch,
                        const CodeMatrix& target, const PenaltyConfig& cfg);

// ============================================================================
// Adam
// ============================================================================

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  AdamConfig config;
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const EncoderModel& model, AdamConfig cfg);

  bool operator==(const AdamState& o) const {
    return first_moment == o.first_moment && second_moment == o.second_moment && step == o.step;
  }
};

// One bias-corrected Adam update of model in place.
void adam_step(AdamState& state, EncoderModel& model, const Gradients& grads);

}  // namespace xmh
