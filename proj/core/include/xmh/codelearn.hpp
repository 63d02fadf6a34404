#pragma once

#include "xmh/core.hpp"

namespace xmh {

// Weight of the quantization penalty that ties binary codes to encoder outputs.
struct PenaltyConfig {
  double eta = 1e-4;

  void validate() const;
};

// -trace(B S H^T) for M x N_b codes B, H and an N_b x N_b similarity S.
double trace_objective(const CodeMatrix& image_codes, const CodeMatrix& text_codes,
                       const SimilarityMatrix& similarity);

// trace_objective + eta * (||B - f_out||_F^2 + ||H - g_out||_F^2).
double penalized_objective(const CodeMatrix& image_codes, const CodeMatrix& text_codes,
                           const SimilarityMatrix& similarity, const FeatureMatrix& image_out,
                           const FeatureMatrix& text_out, const PenaltyConfig& cfg);

// Coefficient matrices whose entrywise signs solve the two code subproblems.
//
// With H and the encoders fixed, the image subproblem
//   min_B  eta ||B - f_out||^2 - trace(B S H^T)
// is linear in B (||B||^2 is constant on {-1,+1}) with coefficient
//   2 eta f_out + H S^T.
// The text subproblem has coefficient 2 eta g_out + B S.
Eigen::MatrixXd image_code_argument(const FeatureMatrix& image_out,
                                    const SimilarityMatrix& similarity,
                                    const CodeMatrix& text_codes, const PenaltyConfig& cfg);
Eigen::MatrixXd text_code_argument(const FeatureMatrix& text_out,
                                   const SimilarityMatrix& similarity,
                                   const CodeMatrix& image_codes, const PenaltyConfig& cfg);

// Global minimizers of the two subproblems: sign of the argument above.
CodeMatrix update_image_codes(const FeatureMatrix& image_out, const SimilarityMatrix& similarity,
                              const CodeMatrix& text_codes, const PenaltyConfig& cfg);
CodeMatrix update_text_codes(const FeatureMatrix& text_out, const SimilarityMatrix& similarity,
                             const CodeMatrix& image_codes, const PenaltyConfig& cfg);

}  // namespace xmh
