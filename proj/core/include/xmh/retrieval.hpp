#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xmh/core.hpp"
#include "xmh/encoder.hpp"

namespace xmh {

// sign(forward(model, feature)) as a single-column code matrix.
CodeMatrix encode_query(const EncoderModel& model, std::span<const double> feature);

// sign(forward(model, batch)), one code per column.
CodeMatrix encode_batch(const EncoderModel& model, const FeatureMatrix& batch);

// XOR + popcount over packed words. Code lengths must match.
std::size_t hamming_distance(CodeView a, CodeView b);

struct RankedItem {
  std::uint64_t id = 0;
  std::size_t position = 0;  // index into the gallery
  std::size_t distance = 0;

  bool operator==(const RankedItem&) const = default;
};

// Immutable gallery of packed codes with their labels and ids.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;
  // ids default to 0..N-1 when empty.
  RetrievalIndex(CodeMatrix codes, std::vector<LabelSet> labels, std::vector<std::uint64_t> ids = {});

  std::size_t size() const { return codes_.count(); }
  std::size_t code_len() const { return codes_.code_len(); }
  const CodeMatrix& codes() const { return codes_; }
  const std::vector<LabelSet>& labels() const { return labels_; }
  const std::vector<std::uint64_t>& ids() const { return ids_; }

 private:
  CodeMatrix codes_;
  std::vector<LabelSet> labels_;
  std::vector<std::uint64_t> ids_;
};

// Every gallery item by ascending Hamming distance; equal distances keep
// gallery order.
std::vector<RankedItem> rank_gallery(const RetrievalIndex& index, CodeView query);

// rank_gallery for each column of queries.
std::vector<std::vector<RankedItem>> rank_all(const RetrievalIndex& index, const CodeMatrix& queries);

}  // namespace xmh
