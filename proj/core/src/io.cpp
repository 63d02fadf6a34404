#include "xmh/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "xmh/error.hpp"

namespace xmh::io {

namespace {

constexpr std::array<char, 4> kFeatureMagic{'X', 'M', 'B', 'F'};
constexpr std::array<char, 4> kCodeMagic{'X', 'M', 'B', 'C'};
constexpr std::array<char, 4> kModelMagic{'X', 'M', 'B', 'M'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(const std::array<char, 4>& m) { out_.write(m.data(), 4); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

 private:
  template <typename U>
  void le(U v) {
    std::array<char, sizeof(U)> buf;
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(buf.data(), buf.size());
  }

  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const { return offset_; }

  void magic(const std::array<char, 4>& expected, const char* what) {
    std::array<char, 4> got{};
    read(got.data(), 4);
    if (got != expected) {
      throw FormatError(std::string("bad magic bytes, not a ") + what + " file", offset_ - 4);
    }
  }
  void version() {
    const std::uint32_t v = u32();
    if (v != kFormatVersion) {
      throw FormatError("unsupported format version " + std::to_string(v), offset_ - 4);
    }
  }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw FormatError("trailing bytes after payload", offset_);
    }
  }

 private:
  template <typename U>
  U le() {
    std::array<unsigned char, sizeof(U)> buf{};
    read(reinterpret_cast<char*>(buf.data()), buf.size());
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }

  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) throw FormatError("unexpected end of file", offset_ + got);
    offset_ += n;
  }

  std::istream& in_;
  std::uint64_t offset_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput(std::string(what) + " does not fit the 32-bit header field");
  }
  return static_cast<std::uint32_t>(v);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::binary) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::binary) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

// Rethrows format errors with the offending file name attached.
template <typename F>
auto with_path(const std::filesystem::path& path, F&& body) {
  try {
    return body();
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// features

void write_features(const FeatureMatrix& m, std::ostream& out) {
  Writer w(out);
  w.magic(kFeatureMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(m.dim(), "feature dimension"));
  w.u32(checked_u32(m.count(), "feature count"));
  const Eigen::MatrixXd& v = m.values();
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const auto f = static_cast<float>(v(i, j));
      if (!std::isfinite(f)) throw InvalidInput("feature value overflows 32-bit float");
      w.f32(f);
    }
  }
}

FeatureMatrix read_features(std::istream& in) {
  Reader r(in);
  r.magic(kFeatureMagic, "feature");
  r.version();
  const std::uint32_t dim = r.u32();
  if (dim == 0) throw FormatError("feature dimension is zero", r.offset() - 4);
  const std::uint32_t count = r.u32();
  Eigen::MatrixXd v(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const float f = r.f32();
      if (!std::isfinite(f)) throw FormatError("non-finite feature value", r.offset() - 4);
      v(i, j) = f;
    }
  }
  r.expect_end();
  return FeatureMatrix(std::move(v));
}

void write_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_features(m, out);
  finish(out, path);
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_features(in); });
}

// ---------------------------------------------------------------------------
// codes

void write_codes(const CodeMatrix& c, std::ostream& out) {
  Writer w(out);
  w.magic(kCodeMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(c.code_len(), "code length"));
  w.u32(checked_u32(c.count(), "code count"));
  for (std::uint64_t word : c.words()) w.u64(word);
}

CodeMatrix read_codes(std::istream& in) {
  Reader r(in);
  r.magic(kCodeMagic, "code");
  r.version();
  const std::uint32_t m = r.u32();
  if (m == 0) throw FormatError("code length is zero", r.offset() - 4);
  const std::uint32_t n = r.u32();
  const std::size_t per = CodeMatrix::words_for(m);
  std::vector<std::uint64_t> words(per * n);
  const std::uint64_t pad = (m % 64 == 0) ? 0 : ~((std::uint64_t{1} << (m % 64)) - 1);
  for (std::size_t i = 0; i < words.size(); ++i) {
    words[i] = r.u64();
    if ((i + 1) % per == 0 && (words[i] & pad)) {
      throw FormatError("nonzero padding bits in code column " + std::to_string(i / per),
                        r.offset() - 8);
    }
  }
  r.expect_end();
  return CodeMatrix::from_words(m, n, std::move(words));
}

void write_codes(const CodeMatrix& c, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_codes(c, out);
  finish(out, path);
}

CodeMatrix read_codes(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_codes(in); });
}

// ---------------------------------------------------------------------------
// models

void write_model(const EncoderModel& model, std::ostream& out) {
  Writer w(out);
  w.magic(kModelMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(model.depth(), "layer count"));
  for (const auto& layer : model.layers()) {
    w.u32(checked_u32(layer.out_dim(), "layer width"));
    w.u32(checked_u32(layer.in_dim(), "layer width"));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) w.f64(layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.f64(layer.bias(r));
  }
}

EncoderModel read_model(std::istream& in) {
  Reader r(in);
  r.magic(kModelMagic, "model");
  r.version();
  const std::uint32_t depth = r.u32();
  if (depth == 0) throw FormatError("model has no layers", r.offset() - 4);
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < depth; ++l) {
    const std::uint64_t at = r.offset();
    const std::uint32_t out = r.u32();
    const std::uint32_t in_dim = r.u32();
    if (out == 0 || in_dim == 0) throw FormatError("zero layer width", at);
    if (l > 0 && in_dim != layers.back().out_dim()) {
      throw FormatError("layer " + std::to_string(l) + " does not chain with the previous layer", at);
    }
    DenseLayer layer{Eigen::MatrixXd(out, in_dim), Eigen::VectorXd(out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index row = 0; row < layer.weight.rows(); ++row) {
        const double v = r.f64();
        if (!std::isfinite(v)) throw FormatError("non-finite weight", r.offset() - 8);
        layer.weight(row, c) = v;
      }
    }
    for (Eigen::Index row = 0; row < layer.bias.size(); ++row) {
      const double v = r.f64();
      if (!std::isfinite(v)) throw FormatError("non-finite bias", r.offset() - 8);
      layer.bias(row) = v;
    }
    layers.push_back(std::move(layer));
  }
  r.expect_end();
  return EncoderModel(std::move(layers));
}

void write_model(const EncoderModel& model, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_model(model, out);
  finish(out, path);
}

EncoderModel read_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_model(in); });
}

// ---------------------------------------------------------------------------
// text formats

void write_labels(std::span<const LabelSet> labels, std::ostream& out) {
  for (const auto& set : labels) {
    const auto& ids = set.ids();
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
    out << '\n';
  }
}

std::vector<LabelSet> read_labels(std::istream& in) {
  std::vector<LabelSet> labels;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::int32_t> ids;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v < 0 || v > std::numeric_limits<std::int32_t>::max()) {
        throw FormatError("bad label id '" + tok + "' on line " +
                              std::to_string(labels.size() + 1),
                          offset);
      }
      ids.push_back(static_cast<std::int32_t>(v));
    }
    labels.emplace_back(std::move(ids));
    offset += line.size() + 1;
  }
  return labels;
}

void write_labels(std::span<const LabelSet> labels, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out);
  write_labels(labels, out);
  finish(out, path);
}

std::vector<LabelSet> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  return with_path(path, [&] { return read_labels(in); });
}

void write_indices(std::span<const std::size_t> idx, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out);
  for (std::size_t i : idx) out << i << '\n';
  finish(out, path);
}

std::vector<std::size_t> read_indices(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  std::vector<std::size_t> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || tok.front() == '-') {
      throw FormatError(path.string() + ": bad index '" + tok + "'",
                        static_cast<std::uint64_t>(in.tellg()));
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void write_rankings(std::span<const std::vector<RankedItem>> rankings, std::ostream& out) {
  for (const auto& ranked : rankings) {
    for (std::size_t r = 0; r < ranked.size(); ++r) out << (r ? " " : "") << ranked[r].id;
    out << '\n';
  }
}

std::vector<std::vector<std::uint64_t>> read_rankings(std::istream& in) {
  std::vector<std::vector<std::uint64_t>> out;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::uint64_t> ids;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || tok.front() == '-') {
        throw FormatError("bad gallery id '" + tok + "' in ranking " +
                              std::to_string(out.size() + 1),
                          offset);
      }
      ids.push_back(v);
    }
    out.push_back(std::move(ids));
    offset += line.size() + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// bundles

void DatasetBundle::validate() const {
  data.validate();
  const std::size_t n = data.size();
  for (const auto* split : {&train, &query, &gallery}) {
    for (std::size_t i : *split) {
      if (i >= n) throw InvalidInput("split index " + std::to_string(i) + " out of range");
    }
  }
  std::vector<std::uint8_t> is_query(n, 0);
  for (std::size_t i : query) is_query[i] = 1;
  for (const auto* split : {&train, &gallery}) {
    for (std::size_t i : *split) {
      if (is_query[i]) {
        throw InvalidInput("item " + std::to_string(i) + " is both a query and a train/gallery item");
      }
    }
  }
}

void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  bundle.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_features(bundle.data.image, dir / "image.xmbf");
  write_features(bundle.data.text, dir / "text.xmbf");
  write_labels(bundle.data.labels, dir / "labels.txt");
  if (!bundle.train.empty()) write_indices(bundle.train, dir / "train.idx");
  if (!bundle.query.empty()) write_indices(bundle.query, dir / "query.idx");
  if (!bundle.gallery.empty()) write_indices(bundle.gallery, dir / "gallery.idx");
}

DatasetBundle read_bundle(const std::filesystem::path& dir) {
  DatasetBundle b;
  b.data.image = read_features(dir / "image.xmbf");
  b.data.text = read_features(dir / "text.xmbf");
  b.data.labels = read_labels(dir / "labels.txt");
  if (std::filesystem::exists(dir / "train.idx")) b.train = read_indices(dir / "train.idx");
  if (std::filesystem::exists(dir / "query.idx")) b.query = read_indices(dir / "query.idx");
  if (std::filesystem::exists(dir / "gallery.idx")) b.gallery = read_indices(dir / "gallery.idx");
  b.validate();
  return b;
}

void write_loss_header(std::ostream& out) { out << "epoch,iter,loss_f,loss_g,objective\n"; }

void write_loss_record(std::ostream& out, const EpochRecord& rec) {
  const auto old = out.precision(12);
  out << rec.epoch << ',' << rec.iteration << ',' << rec.loss_f << ',' << rec.loss_g << ','
      << rec.objective << '\n';
  out.precision(old);
}

}  // namespace xmh::io
