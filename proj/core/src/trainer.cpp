#include "xmh/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xmh/error.hpp"

namespace xmh {

void TrainConfig::validate() const {
  if (code_len < 1) throw InvalidInput("code length must be >= 1");
  if (batch_size < 2) throw InvalidInput("batch size must be >= 2");
  if (max_iterations < 1) throw InvalidInput("max iterations must be >= 1");
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (hidden_units < 1) throw InvalidInput("hidden units must be >= 1");
  if (!(convergence_tol >= 0.0)) throw InvalidInput("convergence tolerance must be >= 0");
  penalty().validate();
  adam.validate();
}

void PairedDataset::validate() const {
  if (image.count() != labels.size() || text.count() != labels.size()) {
    throw InvalidInput("paired dataset has " + std::to_string(image.count()) + " images, " +
                       std::to_string(text.count()) + " texts and " +
                       std::to_string(labels.size()) + " label sets");
  }
}

PairedDataset PairedDataset::subset(std::span<const std::size_t> indices) const {
  PairedDataset out{image.select_columns(indices), text.select_columns(indices), {}};
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  return out;
}

std::vector<std::vector<std::size_t>> stochastic_batches(std::size_t n, std::size_t batch_size,
                                                         std::mt19937_64& rng) {
  if (batch_size == 0) throw InvalidInput("batch size must be >= 1");
  if (batch_size > n) {
    throw InvalidInput("batch size " + std::to_string(batch_size) + " exceeds dataset size " +
                       std::to_string(n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start < 2) break;
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainState init_state(const PairedDataset& data, const TrainConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  data.validate();
  TrainState state;
  state.image_codes = CodeMatrix(cfg.code_len, data.size());
  state.text_codes = CodeMatrix(cfg.code_len, data.size());
  std::bernoulli_distribution coin(0.5);
  for (CodeMatrix* codes : {&state.image_codes, &state.text_codes}) {
    for (std::size_t j = 0; j < codes->count(); ++j) {
      for (std::size_t i = 0; i < codes->code_len(); ++i) codes->set(i, j, coin(rng) ? 1 : -1);
    }
  }
  const std::vector<std::size_t> image_dims{data.image.dim(), cfg.hidden_units, cfg.code_len};
  const std::vector<std::size_t> text_dims{data.text.dim(), cfg.hidden_units, cfg.code_len};
  state.image_model = EncoderModel::glorot(image_dims, rng);
  state.text_model = EncoderModel::glorot(text_dims, rng);
  state.image_adam = AdamState(state.image_model, cfg.adam);
  state.text_adam = AdamState(state.text_model, cfg.adam);
  return state;
}

StepRecord train_step(TrainState& state, std::span<const std::size_t> batch_indices,
                      const FeatureMatrix& image_batch, const FeatureMatrix& text_batch,
                      const SimilarityMatrix& similarity, const TrainConfig& cfg) {
  const std::size_t nb = batch_indices.size();
  for (std::size_t idx : batch_indices) {
    if (idx >= state.image_codes.count() || idx >= state.text_codes.count()) {
      throw InvalidInput("batch index " + std::to_string(idx) + " out of range");
    }
  }
  if (image_batch.count() != nb || text_batch.count() != nb) {
    throw InvalidInput("batch features do not match the number of batch indices");
  }
  if (similarity.rows() != nb || similarity.cols() != nb) {
    throw InvalidInput("batch similarity must be " + std::to_string(nb) + "x" + std::to_string(nb));
  }
  const PenaltyConfig penalty = cfg.penalty();

  CodeMatrix image_codes = state.image_codes.select_columns(batch_indices);
  CodeMatrix text_codes = state.text_codes.select_columns(batch_indices);
  const FeatureMatrix image_out = forward(state.image_model, image_batch);
  const FeatureMatrix text_out = forward(state.text_model, text_batch);

  StepRecord rec;
  rec.objective_before =
      penalized_objective(image_codes, text_codes, similarity, image_out, text_out, penalty);
  image_codes = update_image_codes(image_out, similarity, text_codes, penalty);
  rec.objective_after_image =
      penalized_objective(image_codes, text_codes, similarity, image_out, text_out, penalty);
  text_codes = update_text_codes(text_out, similarity, image_codes, penalty);
  rec.objective_after_text =
      penalized_objective(image_codes, text_codes, similarity, image_out, text_out, penalty);

  const BackwardResult image_grad = backward(state.image_model, image_batch, image_codes, penalty);
  const BackwardResult text_grad = backward(state.text_model, text_batch, text_codes, penalty);
  rec.loss_f = image_grad.loss;
  rec.loss_g = text_grad.loss;
  adam_step(state.image_adam, state.image_model, image_grad.grads);
  adam_step(state.text_adam, state.text_model, text_grad.grads);

  for (std::size_t j = 0; j < nb; ++j) {
    state.image_codes.set_column(batch_indices[j], image_codes.column(j));
    state.text_codes.set_column(batch_indices[j], text_codes.column(j));
  }
  ++state.iteration;
  return rec;
}

TrainResult train(const PairedDataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  data.validate();
  if (std::all_of(data.labels.begin(), data.labels.end(),
                  [](const LabelSet& l) { return l.empty(); })) {
    throw InvalidInput("training set is degenerate: no item carries a label, so every batch "
                       "similarity would be all zeros");
  }
  if (data.size() < cfg.batch_size) {
    throw InvalidInput("dataset has " + std::to_string(data.size()) +
                       " pairs, fewer than the batch size " + std::to_string(cfg.batch_size));
  }

  std::mt19937_64 rng(cfg.seed);
  TrainState state = init_state(data, cfg, rng);

  std::vector<std::vector<std::size_t>> batches;
  if (cfg.batching == BatchingMode::fixed) batches = stochastic_batches(data.size(), cfg.batch_size, rng);

  TrainResult result;
  double previous_loss = 0.0;
  std::size_t calm_epochs = 0;
  bool done = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    if (cfg.batching == BatchingMode::stochastic) {
      batches = stochastic_batches(data.size(), cfg.batch_size, rng);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t steps = 0;
    for (const auto& batch : batches) {
      const FeatureMatrix image_batch = data.image.select_columns(batch);
      const FeatureMatrix text_batch = data.text.select_columns(batch);
      std::vector<LabelSet> batch_labels;
      batch_labels.reserve(batch.size());
      for (std::size_t i : batch) batch_labels.push_back(data.labels[i]);
      const SimilarityMatrix sim = build_similarity(batch_labels, batch_labels);

      const StepRecord step = train_step(state, batch, image_batch, text_batch, sim, cfg);
      rec.loss_f += step.loss_f;
      rec.loss_g += step.loss_g;
      rec.objective += step.objective_after_text;
      ++steps;
      if (state.iteration >= cfg.max_iterations) {
        done = true;
        break;
      }
    }
    if (steps > 0) {
      rec.loss_f /= static_cast<double>(steps);
      rec.loss_g /= static_cast<double>(steps);
      rec.objective /= static_cast<double>(steps);
    }
    rec.iteration = state.iteration;
    state.epoch = epoch + 1;
    state.history.push_back(rec);
    if (on_epoch) on_epoch(rec, state);

    const double loss = rec.loss_f + rec.loss_g;
    if (epoch > 0) {
      const double scale = std::max(std::abs(previous_loss), 1e-300);
      if (std::abs(loss - previous_loss) / scale < cfg.convergence_tol) {
        if (++calm_epochs >= cfg.convergence_patience) {
          result.converged = true;
          done = true;
        }
      } else {
        calm_epochs = 0;
      }
    }
    previous_loss = loss;
  }

  result.iterations = state.iteration;
  result.history = std::move(state.history);
  result.image_model = std::move(state.image_model);
  result.text_model = std::move(state.text_model);
  result.image_codes = std::move(state.image_codes);
  result.text_codes = std::move(state.text_codes);
  return result;
}

}  // namespace xmh
