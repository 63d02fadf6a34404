#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "xmh/core.hpp"
#include "xmh/encoder.hpp"
#include "xmh/retrieval.hpp"
#include "xmh/trainer.hpp"

namespace xmh::io {

// Binary layouts (all integers and floats little-endian):
//
//   features  "XMBF" u32 version=1, u32 D, u32 N, D*N f32 column-major
//   codes     "XMBC" u32 version=1, u32 M, u32 N, N*ceil(M/64) u64 words
//   model     "XMBM" u32 version=1, u32 layers, then per layer
//             u32 out, u32 in, out*in f64 weights column-major, out f64 bias
inline constexpr std::uint32_t kFormatVersion = 1;

void write_features(const FeatureMatrix& m, std::ostream& out);
FeatureMatrix read_features(std::istream& in);
void write_features(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);

void write_codes(const CodeMatrix& c, std::ostream& out);
CodeMatrix read_codes(std::istream& in);
void write_codes(const CodeMatrix& c, const std::filesystem::path& path);
CodeMatrix read_codes(const std::filesystem::path& path);

void write_model(const EncoderModel& model, std::ostream& out);
EncoderModel read_model(std::istream& in);
void write_model(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel read_model(const std::filesystem::path& path);

// One line per item, whitespace-separated integer ids; a blank line is an
// unlabeled item.
void write_labels(std::span<const LabelSet> labels, std::ostream& out);
std::vector<LabelSet> read_labels(std::istream& in);
void write_labels(std::span<const LabelSet> labels, const std::filesystem::path& path);
std::vector<LabelSet> read_labels(const std::filesystem::path& path);

// Whitespace-separated item indices.
void write_indices(std::span<const std::size_t> idx, const std::filesystem::path& path);
std::vector<std::size_t> read_indices(const std::filesystem::path& path);

// One line per query: gallery ids in rank order.
void write_rankings(std::span<const std::vector<RankedItem>> rankings, std::ostream& out);
std::vector<std::vector<std::uint64_t>> read_rankings(std::istream& in);

// Directory layout: image.xmbf, text.xmbf, labels.txt and optional
// train.idx / query.idx / gallery.idx.
struct DatasetBundle {
  PairedDataset data;
  std::vector<std::size_t> train;
  std::vector<std::size_t> query;
  std::vector<std::size_t> gallery;

  // Counts agree, indices in range, query disjoint from train and gallery.
  void validate() const;
};

void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle read_bundle(const std::filesystem::path& dir);

// Per-epoch line "epoch,iter,loss_f,loss_g,objective".
void write_loss_header(std::ostream& out);
void write_loss_record(std::ostream& out, const EpochRecord& rec);

}  // namespace xmh::io
