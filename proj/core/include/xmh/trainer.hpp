#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "xmh/codelearn.hpp"
#include "xmh/core.hpp"
#include "xmh/encoder.hpp"

namespace xmh {

enum class BatchingMode {
  stochastic,  // reshuffle into new batches every epoch
  fixed,       // shuffle once, reuse the same batches every epoch
};

struct TrainConfig {
  std::size_t code_len = 16;
  std::size_t batch_size = 64;
  double eta = 1e-4;
  std::size_t max_iterations = 1'000'000;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  AdamConfig adam;
  BatchingMode batching = BatchingMode::stochastic;
  std::size_t hidden_units = 512;
  // Training stops early once the epoch-mean loss_f + loss_g changes by less
  // than convergence_tol (relative) for convergence_patience epochs in a row.
  double convergence_tol = 1e-5;
  std::size_t convergence_patience = 3;

  PenaltyConfig penalty() const { return {eta}; }
  void validate() const;
};

// Paired image/text features sharing one label list; column i of each
// modality describes the same item.
struct PairedDataset {
  FeatureMatrix image;
  FeatureMatrix text;
  std::vector<LabelSet> labels;

  std::size_t size() const { return labels.size(); }
  void validate() const;
  PairedDataset subset(std::span<const std::size_t> indices) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t iteration = 0;  // cumulative steps at the end of the epoch
  double loss_f = 0.0;        // epoch mean
  double loss_g = 0.0;
  double objective = 0.0;     // epoch mean of the penalized objective after code updates
};

struct TrainState {
  CodeMatrix image_codes;  // B, M x N
  CodeMatrix text_codes;   // H, M x N
  EncoderModel image_model;
  EncoderModel text_model;
  AdamState image_adam;
  AdamState text_adam;
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  std::vector<EpochRecord> history;
};

// Penalized objective values observed inside one step, plus the encoder losses.
struct StepRecord {
  double objective_before = 0.0;
  double objective_after_image = 0.0;
  double objective_after_text = 0.0;
  double loss_f = 0.0;
  double loss_g = 0.0;
};

// Shuffled permutation of 0..n-1 cut into groups of batch_size. A trailing
// group with fewer than two items is dropped.
std::vector<std::vector<std::size_t>> stochastic_batches(std::size_t n, std::size_t batch_size,
                                                         std::mt19937_64& rng);

// Random +-1 codes and freshly initialized encoders for a dataset.
TrainState init_state(const PairedDataset& data, const TrainConfig& cfg, std::mt19937_64& rng);

/**
 * One batch of alternating optimization.
 *
 * 1. slice B_b, H_b from the global codes at batch_indices
 * 2. B_b <- sign(2 eta f(X_b) + H_b S_b^T)
 * 3. H_b <- sign(2 eta g(Y_b) + B_b S_b), using the new B_b
 * 4. one Adam step per encoder on eta ||B_b - f(X_b)||^2 and eta ||H_b - g(Y_b)||^2
 * 5. write B_b, H_b back
 */
StepRecord train_step(TrainState& state, std::span<const std::size_t> batch_indices,
                      const FeatureMatrix& image_batch, const FeatureMatrix& text_batch,
                      const SimilarityMatrix& similarity, const TrainConfig& cfg);

struct TrainResult {
  EncoderModel image_model;
  EncoderModel text_model;
  CodeMatrix image_codes;
  CodeMatrix text_codes;
  std::vector<EpochRecord> history;
  std::size_t iterations = 0;
  bool converged = false;
};

using EpochCallback = std::function<void(const EpochRecord&, const TrainState&)>;

TrainResult train(const PairedDataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace xmh
