#include "xmh/retrieval.hpp"

#include <bit>
#include <numeric>
#include <string>

#include "xmh/error.hpp"

namespace xmh {

CodeMatrix encode_query(const EncoderModel& model, std::span<const double> feature) {
  if (feature.size() != model.input_dim()) {
    throw InvalidInput("query feature has " + std::to_string(feature.size()) +
                       " dims, encoder expects " + std::to_string(model.input_dim()));
  }
  Eigen::MatrixXd col(static_cast<Eigen::Index>(feature.size()), 1);
  for (std::size_t d = 0; d < feature.size(); ++d) col(static_cast<Eigen::Index>(d), 0) = feature[d];
  return encode_batch(model, FeatureMatrix(std::move(col)));
}

CodeMatrix encode_batch(const EncoderModel& model, const FeatureMatrix& batch) {
  return sign_matrix(forward(model, batch));
}

std::size_t hamming_distance(CodeView a, CodeView b) {
  if (a.code_len != b.code_len) {
    throw InvalidInput("hamming_distance: code lengths " + std::to_string(a.code_len) + " and " +
                       std::to_string(b.code_len) + " differ");
  }
  std::size_t d = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    d += static_cast<std::size_t>(std::popcount(a.words[w] ^ b.words[w]));
  }
  return d;
}

RetrievalIndex::RetrievalIndex(CodeMatrix codes, std::vector<LabelSet> labels,
                               std::vector<std::uint64_t> ids)
    : codes_(std::move(codes)), labels_(std::move(labels)), ids_(std::move(ids)) {
  if (ids_.empty()) {
    ids_.resize(codes_.count());
    std::iota(ids_.begin(), ids_.end(), std::uint64_t{0});
  }
  if (labels_.size() != codes_.count() || ids_.size() != codes_.count()) {
    throw InvalidInput("retrieval index needs one label set and one id per gallery code (" +
                       std::to_string(codes_.count()) + " codes, " +
                       std::to_string(labels_.size()) + " label sets, " +
                       std::to_string(ids_.size()) + " ids)");
  }
}

std::vector<RankedItem> rank_gallery(const RetrievalIndex& index, CodeView query) {
  const CodeMatrix& codes = index.codes();
  if (query.code_len != codes.code_len()) {
    throw InvalidInput("query code length " + std::to_string(query.code_len) +
                       " does not match index code length " + std::to_string(codes.code_len()));
  }
  const std::size_t n = codes.count();
  const std::size_t m = codes.code_len();
  std::vector<std::size_t> dist(n);
  for (std::size_t j = 0; j < n; ++j) dist[j] = hamming_distance(query, codes.column(j));

  // Distances live in [0, M], so a counting sort is stable and linear.
  std::vector<std::size_t> offset(m + 2, 0);
  for (std::size_t d : dist) ++offset[d + 1];
  for (std::size_t d = 1; d < offset.size(); ++d) offset[d] += offset[d - 1];
  std::vector<RankedItem> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[offset[dist[j]]++] = RankedItem{index.ids()[j], j, dist[j]};
  }
  return out;
}

std::vector<std::vector<RankedItem>> rank_all(const RetrievalIndex& index, const CodeMatrix& queries) {
  std::vector<std::vector<RankedItem>> out;
  out.reserve(queries.count());
  for (std::size_t q = 0; q < queries.count(); ++q) out.push_back(rank_gallery(index, queries.column(q)));
  return out;
}

}  // namespace xmh
