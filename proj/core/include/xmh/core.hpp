#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace xmh {

// ============================================================================
// Binary codes
// ============================================================================

// Read-only view of one packed code column.
//
// Bit i of the column lives in words[i / 64] at position i % 64. A set bit
// means +1, a cleared bit -1. Bits at positions >= code_len are always zero.
struct CodeView {
  std::span<const std::uint64_t> words;
  std::size_t code_len = 0;

  int at(std::size_t bit) const { return ((words[bit / 64] >> (bit % 64)) & 1u) ? 1 : -1; }
};

/**
 * CodeMatrix: M x N matrix of {-1,+1} entries, bit-packed column-major.
 *
 * Each column occupies words_per_code() = ceil(M/64) 64-bit words with
 * little-endian bit order inside a word. Padding bits are kept at zero so
 * XOR + popcount over whole words gives the Hamming distance directly.
 */
class CodeMatrix {
 public:
  CodeMatrix() = default;

  // All entries start at -1.
  CodeMatrix(std::size_t code_len, std::size_t count);

  // Adopts raw packed words; rejects wrong sizes and nonzero padding.
  static CodeMatrix from_words(std::size_t code_len, std::size_t count,
                               std::vector<std::uint64_t> words);

  static constexpr std::size_t words_for(std::size_t code_len) { return (code_len + 63) / 64; }

  std::size_t code_len() const { return code_len_; }
  std::size_t count() const { return count_; }
  std::size_t words_per_code() const { return words_per_code_; }

  int at(std::size_t bit, std::size_t col) const { return column(col).at(bit); }
  void set(std::size_t bit, std::size_t col, int sign);

  CodeView column(std::size_t col) const {
    return {std::span(words_).subspan(col * words_per_code_, words_per_code_), code_len_};
  }
  void set_column(std::size_t col, CodeView code);

  // Columns at the given positions, in order.
  CodeMatrix select_columns(std::span<const std::size_t> cols) const;

  std::span<const std::uint64_t> words() const { return words_; }

  bool operator==(const CodeMatrix&) const = default;

 private:
  std::size_t code_len_ = 0;
  std::size_t count_ = 0;
  std::size_t words_per_code_ = 0;
  std::vector<std::uint64_t> words_;
};

// ============================================================================
// Real-valued features
// ============================================================================

// D x N dense real matrix, one item per column. Entries are always finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(Eigen::MatrixXd values);

  std::size_t dim() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t count() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }

  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;

  bool operator==(const FeatureMatrix& other) const {
    return values_.rows() == other.values_.rows() && values_.cols() == other.values_.cols() &&
           values_ == other.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

// ============================================================================
// Labels and similarity
// ============================================================================

// Sorted, duplicate-free label ids of one item. May be empty.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::vector<std::int32_t> ids);  // NOLINT: implicit from a list is convenient
  LabelSet(std::initializer_list<std::int32_t> ids) : LabelSet(std::vector<std::int32_t>(ids)) {}

  const std::vector<std::int32_t>& ids() const { return ids_; }
  bool empty() const { return ids_.empty(); }
  bool intersects(const LabelSet& other) const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::int32_t> ids_;
};

// Dense {0,1} relevance between image items (rows) and text items (columns).
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols);
  static SimilarityMatrix identity(std::size_t n);
  // Entries must be exactly 0 or 1.
  static SimilarityMatrix from_dense(const Eigen::MatrixXd& entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t at(std::size_t p, std::size_t q) const { return entries_[p * cols_ + q]; }
  void set(std::size_t p, std::size_t q, bool similar) { entries_[p * cols_ + q] = similar ? 1 : 0; }

  Eigen::MatrixXd to_dense() const;

  bool operator==(const SimilarityMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> entries_;
};

// ============================================================================
// Operations
// ============================================================================

// Entrywise sign with sign(0) = +1. Throws InvalidInput on non-finite entries.
CodeMatrix sign_matrix(const Eigen::MatrixXd& real);
inline CodeMatrix sign_matrix(const FeatureMatrix& real) { return sign_matrix(real.values()); }

// Entries must be exactly -1 or +1.
CodeMatrix pack_bits(const Eigen::MatrixXd& entries);
Eigen::MatrixXd unpack_bits(const CodeMatrix& codes);

// s[p][q] = 1 iff labels_x[p] and labels_y[q] share a label.
SimilarityMatrix build_similarity(std::span<const LabelSet> labels_x,
                                  std::span<const LabelSet> labels_y);

}  // namespace xmh
