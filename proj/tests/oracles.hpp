#pragma once

// Independent reference implementations used only by tests. They work on
// plain dense values and loops and never call into the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "xmh/core.hpp"
#include "xmh/encoder.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;  // [row][col]

inline Dense to_dense(const Eigen::MatrixXd& m) {
  Dense d(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

inline std::vector<std::vector<int>> random_signs(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<int>> m(rows, std::vector<int>(cols));
  for (auto& r : m)
    for (auto& v : r) v = coin(rng) ? 1 : -1;
  return m;
}

inline Eigen::MatrixXd to_eigen(const std::vector<std::vector<int>>& m) {
  Eigen::MatrixXd e(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) e(i, j) = m[i][j];
  return e;
}

inline Eigen::MatrixXd random_real(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = g(rng);
  return m;
}

inline Eigen::MatrixXd random_binary01(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.4);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = coin(rng) ? 1.0 : 0.0;
  return m;
}

// sum_{i,j,k} B_ij S_jk H_ik, negated.
inline double trace_objective(const Dense& b, const Dense& s, const Dense& h) {
  double t = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b[i].size(); ++j)
      for (std::size_t k = 0; k < s[j].size(); ++k) t += b[i][j] * s[j][k] * h[i][k];
  return -t;
}

inline double sq_diff(const Dense& a, const Dense& b) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  return t;
}

inline double penalized(const Dense& b, const Dense& h, const Dense& s, const Dense& f,
                        const Dense& g, double eta) {
  return trace_objective(b, s, h) + eta * (sq_diff(b, f) + sq_diff(h, g));
}

// Enumerates all 2^(rows*cols) sign matrices and returns (argmin, min) of
// objective. Ties keep the first candidate in enumeration order.
template <typename Objective>
std::pair<Dense, double> brute_force_argmin(std::size_t rows, std::size_t cols, Objective&& obj) {
  const std::size_t cells = rows * cols;
  Dense best;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
    Dense cand(rows, std::vector<double>(cols));
    for (std::size_t c = 0; c < cells; ++c) cand[c / cols][c % cols] = ((mask >> c) & 1u) ? 1.0 : -1.0;
    const double v = obj(cand);
    if (v < best_val) {
      best_val = v;
      best = std::move(cand);
    }
  }
  return {best, best_val};
}

// Per-column forward pass with explicit loops.
inline std::vector<double> forward_column(const xmh::EncoderModel& model, std::vector<double> x) {
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weight;
    std::vector<double> y(w.rows());
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double acc = layers[l].bias(r);
      for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * x[c];
      y[r] = (l + 1 < layers.size()) ? std::max(acc, 0.0) : acc;
    }
    x = std::move(y);
  }
  return x;
}

inline double loss_by_loops(const xmh::EncoderModel& model, const Eigen::MatrixXd& batch,
                            const Eigen::MatrixXd& target, double eta) {
  double t = 0.0;
  for (Eigen::Index j = 0; j < batch.cols(); ++j) {
    std::vector<double> x(batch.rows());
    for (Eigen::Index d = 0; d < batch.rows(); ++d) x[d] = batch(d, j);
    const auto y = forward_column(model, x);
    for (std::size_t i = 0; i < y.size(); ++i)
      t += (target(static_cast<Eigen::Index>(i), j) - y[i]) * (target(static_cast<Eigen::Index>(i), j) - y[i]);
  }
  return eta * t;
}

// Central finite differences of loss_by_loops for every parameter.
inline xmh::Gradients finite_difference_grads(const xmh::EncoderModel& model, const Eigen::MatrixXd& batch,
                                              const Eigen::MatrixXd& target, double eta, double step) {
  xmh::Gradients out;
  xmh::EncoderModel probe = model;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    xmh::DenseLayer g{Eigen::MatrixXd::Zero(model.layers()[l].weight.rows(), model.layers()[l].weight.cols()),
                      Eigen::VectorXd::Zero(model.layers()[l].bias.size())};
    auto& layer = probe.mutable_layers()[l];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        const double keep = layer.weight(r, c);
        layer.weight(r, c) = keep + step;
        const double up = loss_by_loops(probe, batch, target, eta);
        layer.weight(r, c) = keep - step;
        const double down = loss_by_loops(probe, batch, target, eta);
        layer.weight(r, c) = keep;
        g.weight(r, c) = (up - down) / (2 * step);
      }
      const double keep = layer.bias(r);
      layer.bias(r) = keep + step;
      const double up = loss_by_loops(probe, batch, target, eta);
      layer.bias(r) = keep - step;
      const double down = loss_by_loops(probe, batch, target, eta);
      layer.bias(r) = keep;
      g.bias(r) = (up - down) / (2 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// Number of mismatching (analytic, numeric) pairs under rel/abs tolerance.
inline std::size_t gradient_mismatches(const xmh::Gradients& analytic, const xmh::Gradients& numeric,
                                       double rel_tol, double abs_floor) {
  std::size_t bad = 0;
  auto cmp = [&](double a, double n) {
    const double err = std::abs(a - n);
    if (err > abs_floor && err > rel_tol * std::max(std::abs(a), std::abs(n))) ++bad;
  };
  for (std::size_t l = 0; l < analytic.size(); ++l) {
    for (Eigen::Index i = 0; i < analytic[l].weight.size(); ++i)
      cmp(analytic[l].weight.data()[i], numeric[l].weight.data()[i]);
    for (Eigen::Index i = 0; i < analytic[l].bias.size(); ++i) cmp(analytic[l].bias(i), numeric[l].bias(i));
  }
  return bad;
}

inline std::size_t hamming_bits(const xmh::CodeMatrix& a, std::size_t ca, const xmh::CodeMatrix& b, std::size_t cb) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.code_len(); ++i) d += a.at(i, ca) != b.at(i, cb);
  return d;
}

struct Ranked {
  std::size_t position;
  std::size_t distance;
};

// Compute every distance, then stable sort.
inline std::vector<Ranked> rank_by_sort(const xmh::CodeMatrix& gallery, const xmh::CodeMatrix& query, std::size_t qcol) {
  std::vector<Ranked> v;
  for (std::size_t j = 0; j < gallery.count(); ++j) v.push_back({j, hamming_bits(gallery, j, query, qcol)});
  std::stable_sort(v.begin(), v.end(), [](const Ranked& a, const Ranked& b) { return a.distance < b.distance; });
  return v;
}

inline double average_precision(const std::vector<std::size_t>& ranking, const std::vector<std::uint8_t>& rel) {
  std::vector<double> cum(ranking.size() + 1, 0.0);
  for (std::size_t r = 0; r < ranking.size(); ++r) cum[r + 1] = cum[r] + (rel[ranking[r]] ? 1.0 : 0.0);
  double sum = 0.0;
  for (std::size_t r = 0; r < ranking.size(); ++r)
    if (rel[ranking[r]]) sum += cum[r + 1] / static_cast<double>(r + 1);
  return sum / cum.back();
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline std::vector<std::uint8_t> random_relevance(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<std::uint8_t> rel(n);
  for (auto& r : rel) r = coin(rng);
  return rel;
}

}  // namespace oracle
