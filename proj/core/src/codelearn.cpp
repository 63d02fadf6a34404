#include "xmh/codelearn.hpp"

#include <cmath>
#include <string>

#include "xmh/error.hpp"

namespace xmh {

namespace {

void check_codes_vs_similarity(const CodeMatrix& b, const CodeMatrix& h,
                               const SimilarityMatrix& s) {
  if (b.code_len() != h.code_len()) {
    throw InvalidInput("code length mismatch: " + std::to_string(b.code_len()) + " vs " +
                       std::to_string(h.code_len()));
  }
  if (b.count() != s.rows() || h.count() != s.cols()) {
    throw InvalidInput("similarity is " + std::to_string(s.rows()) + "x" +
                       std::to_string(s.cols()) + " but batch holds " + std::to_string(b.count()) +
                       " image and " + std::to_string(h.count()) + " text codes");
  }
}

void check_output_shape(const FeatureMatrix& out, std::size_t code_len, std::size_t count) {
  if (out.dim() != code_len || out.count() != count) {
    throw InvalidInput("encoder output is " + std::to_string(out.dim()) + "x" +
                       std::to_string(out.count()) + ", expected " + std::to_string(code_len) +
                       "x" + std::to_string(count));
  }
}

}  // namespace

void PenaltyConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidInput("eta must be finite and >= 0");
}

double trace_objective(const CodeMatrix& image_codes, const CodeMatrix& text_codes,
                       const SimilarityMatrix& similarity) {
  check_codes_vs_similarity(image_codes, text_codes, similarity);
  const Eigen::MatrixXd b = unpack_bits(image_codes);
  const Eigen::MatrixXd h = unpack_bits(text_codes);
  const Eigen::MatrixXd hs = h * similarity.to_dense().transpose();
  return -(b.array() * hs.array()).sum();
}

double penalized_objective(const CodeMatrix& image_codes, const CodeMatrix& text_codes,
                           const SimilarityMatrix& similarity, const FeatureMatrix& image_out,
                           const FeatureMatrix& text_out, const PenaltyConfig& cfg) {
  cfg.validate();
  const double trace = trace_objective(image_codes, text_codes, similarity);
  check_output_shape(image_out, image_codes.code_len(), image_codes.count());
  check_output_shape(text_out, text_codes.code_len(), text_codes.count());
  const double qb = (unpack_bits(image_codes) - image_out.values()).squaredNorm();
  const double qh = (unpack_bits(text_codes) - text_out.values()).squaredNorm();
  return trace + cfg.eta * (qb + qh);
}

Eigen::MatrixXd image_code_argument(const FeatureMatrix& image_out,
                                    const SimilarityMatrix& similarity,
                                    const CodeMatrix& text_codes, const PenaltyConfig& cfg) {
  cfg.validate();
  if (text_codes.count() != similarity.cols()) {
    throw InvalidInput("text code count does not match similarity columns");
  }
  check_output_shape(image_out, text_codes.code_len(), similarity.rows());
  return 2.0 * cfg.eta * image_out.values() +
         unpack_bits(text_codes) * similarity.to_dense().transpose();
}

Eigen::MatrixXd text_code_argument(const FeatureMatrix& text_out,
                                   const SimilarityMatrix& similarity,
                                   const CodeMatrix& image_codes, const PenaltyConfig& cfg) {
  cfg.validate();
  if (image_codes.count() != similarity.rows()) {
    throw InvalidInput("image code count does not match similarity rows");
  }
  check_output_shape(text_out, image_codes.code_len(), similarity.cols());
  return 2.0 * cfg.eta * text_out.values() + unpack_bits(image_codes) * similarity.to_dense();
}

CodeMatrix update_image_codes(const FeatureMatrix& image_out, const SimilarityMatrix& similarity,
                              const CodeMatrix& text_codes, const PenaltyConfig& cfg) {
  return sign_matrix(image_code_argument(image_out, similarity, text_codes, cfg));
}

CodeMatrix update_text_codes(const FeatureMatrix& text_out, const SimilarityMatrix& similarity,
                             const CodeMatrix& image_codes, const PenaltyConfig& cfg) {
  return sign_matrix(text_code_argument(text_out, similarity, image_codes, cfg));
}

}  // namespace xmh
