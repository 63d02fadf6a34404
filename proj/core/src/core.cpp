#include "xmh/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xmh/error.hpp"

namespace xmh {

namespace {

std::uint64_t padding_mask(std::size_t code_len) {
  const std::size_t tail = code_len % 64;
  return tail == 0 ? 0 : ~((std::uint64_t{1} << tail) - 1);
}

}  // namespace

CodeMatrix::CodeMatrix(std::size_t code_len, std::size_t count)
    : code_len_(code_len), count_(count), words_per_code_(words_for(code_len)) {
  if (code_len == 0) throw InvalidInput("code length must be at least 1");
  words_.assign(words_per_code_ * count_, 0);
}

CodeMatrix CodeMatrix::from_words(std::size_t code_len, std::size_t count,
                                  std::vector<std::uint64_t> words) {
  CodeMatrix out(code_len, 0);
  out.count_ = count;
  if (words.size() != out.words_per_code_ * count) {
    throw InvalidInput("packed word count " + std::to_string(words.size()) + " does not match " +
                       std::to_string(code_len) + "x" + std::to_string(count) + " codes");
  }
  const std::uint64_t pad = padding_mask(code_len);
  if (pad != 0) {
    for (std::size_t c = 0; c < count; ++c) {
      if (words[(c + 1) * out.words_per_code_ - 1] & pad) {
        throw InvalidInput("nonzero padding bits in code column " + std::to_string(c));
      }
    }
  }
  out.words_ = std::move(words);
  return out;
}

void CodeMatrix::set(std::size_t bit, std::size_t col, int sign) {
  std::uint64_t& w = words_[col * words_per_code_ + bit / 64];
  const std::uint64_t m = std::uint64_t{1} << (bit % 64);
  if (sign > 0) {
    w |= m;
  } else {
    w &= ~m;
  }
}

void CodeMatrix::set_column(std::size_t col, CodeView code) {
  if (code.code_len != code_len_) throw InvalidInput("code length mismatch in set_column");
  if (col >= count_) throw InvalidInput("column index out of range");
  std::copy(code.words.begin(), code.words.end(), words_.begin() + col * words_per_code_);
}

CodeMatrix CodeMatrix::select_columns(std::span<const std::size_t> cols) const {
  CodeMatrix out(code_len_, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= count_) throw InvalidInput("column index out of range");
    out.set_column(j, column(cols[j]));
  }
  return out;
}

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw InvalidInput("feature matrix contains non-finite entries");
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= count()) throw InvalidInput("column index out of range");
    out.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(cols[j]));
  }
  return FeatureMatrix(std::move(out));
}

LabelSet::LabelSet(std::vector<std::int32_t> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool LabelSet::intersects(const LabelSet& other) const {
  auto a = ids_.begin();
  auto b = other.ids_.begin();
  while (a != ids_.end() && b != other.ids_.end()) {
    if (*a == *b) return true;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), entries_(rows * cols, 0) {}

SimilarityMatrix SimilarityMatrix::identity(std::size_t n) {
  SimilarityMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) s.set(i, i, true);
  return s;
}

SimilarityMatrix SimilarityMatrix::from_dense(const Eigen::MatrixXd& entries) {
  SimilarityMatrix s(static_cast<std::size_t>(entries.rows()),
                     static_cast<std::size_t>(entries.cols()));
  for (Eigen::Index p = 0; p < entries.rows(); ++p) {
    for (Eigen::Index q = 0; q < entries.cols(); ++q) {
      const double v = entries(p, q);
      if (v != 0.0 && v != 1.0) throw InvalidInput("similarity entries must be 0 or 1");
      s.set(static_cast<std::size_t>(p), static_cast<std::size_t>(q), v == 1.0);
    }
  }
  return s;
}

Eigen::MatrixXd SimilarityMatrix::to_dense() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t p = 0; p < rows_; ++p) {
    for (std::size_t q = 0; q < cols_; ++q) {
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = at(p, q);
    }
  }
  return out;
}

CodeMatrix sign_matrix(const Eigen::MatrixXd& real) {
  if (!real.allFinite()) throw InvalidInput("sign_matrix: non-finite input");
  CodeMatrix out(static_cast<std::size_t>(real.rows()), static_cast<std::size_t>(real.cols()));
  for (Eigen::Index j = 0; j < real.cols(); ++j) {
    for (Eigen::Index i = 0; i < real.rows(); ++i) {
      out.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j), real(i, j) >= 0.0 ? 1 : -1);
    }
  }
  return out;
}

CodeMatrix pack_bits(const Eigen::MatrixXd& entries) {
  CodeMatrix out(static_cast<std::size_t>(entries.rows()), static_cast<std::size_t>(entries.cols()));
  for (Eigen::Index j = 0; j < entries.cols(); ++j) {
    for (Eigen::Index i = 0; i < entries.rows(); ++i) {
      const double v = entries(i, j);
      if (v != 1.0 && v != -1.0) {
        throw InvalidInput("pack_bits: entry (" + std::to_string(i) + "," + std::to_string(j) +
                           ") is not -1 or +1");
      }
      out.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j), v > 0 ? 1 : -1);
    }
  }
  return out;
}

Eigen::MatrixXd unpack_bits(const CodeMatrix& codes) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(codes.code_len()),
                      static_cast<Eigen::Index>(codes.count()));
  for (std::size_t j = 0; j < codes.count(); ++j) {
    const CodeView col = codes.column(j);
    for (std::size_t i = 0; i < codes.code_len(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col.at(i);
    }
  }
  return out;
}

SimilarityMatrix build_similarity(std::span<const LabelSet> labels_x,
                                  std::span<const LabelSet> labels_y) {
  if (labels_x.size() != labels_y.size()) {
    throw InvalidInput("build_similarity: label list lengths differ (" +
                       std::to_string(labels_x.size()) + " vs " + std::to_string(labels_y.size()) +
                       ")");
  }
  SimilarityMatrix s(labels_x.size(), labels_y.size());
  for (std::size_t p = 0; p < labels_x.size(); ++p) {
    for (std::size_t q = 0; q < labels_y.size(); ++q) {
      s.set(p, q, labels_x[p].intersects(labels_y[q]));
    }
  }
  return s;
}

}  // namespace xmh
