#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "xmh/error.hpp"
#include "xmh/io.hpp"
#include "xmh/synth.hpp"

using namespace xmh;
namespace fs = std::filesystem;

namespace {

FeatureMatrix float_matrix(std::size_t d, std::size_t n, std::mt19937_64& rng) {
  return FeatureMatrix(oracle::random_real(d, n, rng).cast<float>().cast<double>());
}

std::string bytes_of_features(const FeatureMatrix& m) {
  std::ostringstream s;
  io::write_features(m, s);
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("xmh_test_io_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("feature file layout and round trip") {
  std::mt19937_64 rng(81);
  const FeatureMatrix m = float_matrix(8, 16, rng);
  const std::string bytes = bytes_of_features(m);
  REQUIRE(bytes.size() == 16 + 8 * 16 * 4);
  CHECK(bytes.substr(0, 4) == "XMBF");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);   // version, little-endian
  CHECK(static_cast<unsigned char>(bytes[8]) == 8);   // D
  CHECK(static_cast<unsigned char>(bytes[12]) == 16); // N
  // First float is entry (0,0), the next is (1,0): column-major.
  float first, second;
  std::memcpy(&first, bytes.data() + 16, 4);
  std::memcpy(&second, bytes.data() + 20, 4);
  CHECK(first == static_cast<float>(m.values()(0, 0)));
  CHECK(second == static_cast<float>(m.values()(1, 0)));

  std::istringstream in(bytes);
  const FeatureMatrix back = io::read_features(in);
  CHECK(back == m);
  CHECK(bytes_of_features(back) == bytes);

  const fs::path p = scratch("f.xmbf");
  io::write_features(m, p);
  CHECK(io::read_features(p) == m);
}

TEST_CASE("feature file corruption") {
  std::mt19937_64 rng(82);
  const std::string bytes = bytes_of_features(float_matrix(3, 4, rng));

  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  try {
    io::read_features(truncated);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == bytes.size() - 3);  // where the data ran out
  }

  std::string bad_magic = bytes;
  bad_magic[0] = 'Y';
  std::istringstream bm(bad_magic);
  CHECK_THROWS_AS(io::read_features(bm), FormatError);

  std::string bad_version = bytes;
  bad_version[4] = 2;
  std::istringstream bv(bad_version);
  CHECK_THROWS_AS(io::read_features(bv), FormatError);

  std::string zero_dim = bytes;
  zero_dim[8] = 0;
  std::istringstream zd(zero_dim);
  try {
    io::read_features(zd);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 8);
  }

  std::istringstream trailing(bytes + "x");
  CHECK_THROWS_AS(io::read_features(trailing), FormatError);

  std::string nan_value = bytes;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan_value.data() + 16, &nan, 4);
  std::istringstream nv(nan_value);
  CHECK_THROWS_AS(io::read_features(nv), FormatError);

  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_features(empty), FormatError);
  CHECK_THROWS_AS(io::read_features(fs::path("/nonexistent/x.xmbf")), IoError);
}

TEST_CASE("code file round trip and header") {
  std::mt19937_64 rng(83);
  for (std::size_t m : {1, 16, 64, 65, 130}) {
    const CodeMatrix c = pack_bits(oracle::to_eigen(oracle::random_signs(m, 9, rng)));
    std::stringstream s;
    io::write_codes(c, s);
    const std::string bytes = s.str();
    CHECK(bytes.size() == 16 + 9 * CodeMatrix::words_for(m) * 8);
    CHECK(bytes.substr(0, 4) == "XMBC");
    CHECK(io::read_codes(s) == c);
  }
  // Padding bits set on disk are rejected.
  std::stringstream s;
  io::write_codes(CodeMatrix(3, 1), s);
  std::string bytes = s.str();
  bytes[16] = static_cast<char>(0xF0);
  std::istringstream bad(bytes);
  CHECK_THROWS_AS(io::read_codes(bad), FormatError);
}

TEST_CASE("model file round trip is bit-exact") {
  std::mt19937_64 rng(84);
  const std::vector<std::size_t> dims{5, 7, 3};
  EncoderModel m = EncoderModel::glorot(dims, rng);
  m.mutable_layers()[1].bias << 0.1, -1e-300, 3.5;
  std::stringstream s;
  io::write_model(m, s);
  CHECK(io::read_model(s) == m);

  std::stringstream t;
  io::write_model(m, t);
  std::string bytes = t.str();
  std::istringstream cut(bytes.substr(0, 40));
  CHECK_THROWS_AS(io::read_model(cut), FormatError);
}

TEST_CASE("label file format") {
  std::istringstream in("1 2\n\n3\n  4   0 \n");
  const auto labels = io::read_labels(in);
  REQUIRE(labels.size() == 4);
  CHECK(labels[0] == LabelSet{1, 2});
  CHECK(labels[1].empty());
  CHECK(labels[3] == LabelSet{0, 4});
  std::ostringstream out;
  io::write_labels(labels, out);
  CHECK(out.str() == "1 2\n\n3\n0 4\n");

  std::istringstream bad("1 x\n");
  CHECK_THROWS_AS(io::read_labels(bad), FormatError);
  std::istringstream neg("-1\n");
  CHECK_THROWS_AS(io::read_labels(neg), FormatError);
}

TEST_CASE("ranking file format") {
  const std::vector<std::vector<RankedItem>> r{{{3, 3, 0}, {1, 1, 2}}, {{1, 1, 0}, {3, 3, 5}}};
  std::stringstream s;
  io::write_rankings(r, s);
  CHECK(s.str() == "3 1\n1 3\n");
  const auto back = io::read_rankings(s);
  CHECK(back == std::vector<std::vector<std::uint64_t>>{{3, 1}, {1, 3}});
}

TEST_CASE("synthetic bundles") {
  SynthConfig cfg;
  cfg.classes = 3;
  cfg.per_class = 20;
  cfg.image_dim = 5;
  cfg.text_dim = 4;
  cfg.query_per_class = 4;
  const io::DatasetBundle a = synth_generate(cfg);
  const io::DatasetBundle b = synth_generate(cfg);
  CHECK(a.data.image == b.data.image);
  CHECK(a.data.text == b.data.text);
  CHECK(a.data.labels == b.data.labels);
  CHECK(a.query == b.query);
  CHECK(a.data.size() == 60);
  CHECK(a.data.image.dim() == 5);
  CHECK(a.data.text.dim() == 4);
  CHECK(a.query.size() == 12);
  CHECK(a.gallery.size() == 48);
  CHECK_NOTHROW(a.validate());

  const fs::path dir = scratch("bundle");
  io::write_bundle(a, dir);
  const io::DatasetBundle r = io::read_bundle(dir);
  CHECK(r.data.image == a.data.image);
  CHECK(r.data.text == a.data.text);
  CHECK(r.data.labels == a.data.labels);
  CHECK(r.train == a.train);
  CHECK(r.query == a.query);
  CHECK(r.gallery == a.gallery);

  cfg.multi_label_prob = 1.0;
  for (const auto& l : synth_generate(cfg).data.labels) CHECK(l.ids().size() == 2);

  cfg.classes = 1;
  CHECK_THROWS_AS(synth_generate(cfg), InvalidInput);
  cfg.classes = 3;
  cfg.noise = 0.0;
  CHECK_THROWS_AS(synth_generate(cfg), InvalidInput);
}

TEST_CASE("synthetic within-class variance vanishes with the noise") {
  SynthConfig cfg;
  cfg.classes = 4;
  cfg.per_class = 30;
  cfg.image_dim = 6;
  cfg.text_dim = 6;
  cfg.noise = 1e-6;
  const io::DatasetBundle b = synth_generate(cfg);
  for (int c = 0; c < 4; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < b.data.size(); ++i)
      if (b.data.labels[i].ids()[0] == c) members.push_back(i);
    const Eigen::MatrixXd x = b.data.image.select_columns(members).values();
    const Eigen::VectorXd mean = x.rowwise().mean();
    const double var = (x.colwise() - mean).squaredNorm() / static_cast<double>(members.size());
    CHECK(var < 1e-9);
  }
}

TEST_CASE("synthetic reference task is learnable by nearest centroid") {
  SynthConfig cfg;  // 8 classes x 250, D = 64, separation 4 x noise
  const io::DatasetBundle b = synth_generate(cfg);
  for (const FeatureMatrix* f : {&b.data.image, &b.data.text}) {
    Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(f->dim(), 8);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(8);
    for (auto i : b.train) {
      const int c = b.data.labels[i].ids()[0];
      centroid.col(c) += f->values().col(static_cast<Eigen::Index>(i));
      count(c) += 1;
    }
    for (int c = 0; c < 8; ++c) centroid.col(c) /= count(c);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      Eigen::Index best;
      (centroid.colwise() - f->values().col(static_cast<Eigen::Index>(i))).colwise().squaredNorm().minCoeff(&best);
      correct += best == b.data.labels[i].ids()[0];
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(b.data.size()) >= 0.99);
  }
}

TEST_CASE("bundle validation") {
  io::DatasetBundle b = synth_generate(SynthConfig{.classes = 2, .per_class = 5, .image_dim = 2, .text_dim = 2, .query_per_class = 1});
  b.gallery.push_back(b.query.front());
  CHECK_THROWS_AS(b.validate(), InvalidInput);
  b.gallery.pop_back();
  b.train.push_back(1000);
  CHECK_THROWS_AS(b.validate(), InvalidInput);
}

TEST_CASE("loss log record format") {
  std::ostringstream s;
  io::write_loss_header(s);
  io::write_loss_record(s, EpochRecord{2, 58, 0.5, 0.25, -10.0});
  CHECK(s.str() == "epoch,iter,loss_f,loss_g,objective\n2,58,0.5,0.25,-10\n");
}
