#pragma once

#include <string_view>
#include <vector>

#include "cfmimo/linalg.hpp"

namespace cfmimo {

enum class PrecoderKind { kMmse, kZf };

PrecoderKind parse_precoder_kind(std::string_view name);
std::string_view to_string(PrecoderKind kind);

// Column-normalized weight matrix. zero_columns lists columns whose
// unnormalized weight vanished (zero channel); those columns are left zero.
struct Weights {
  CMatrix w;
  std::vector<int> zero_columns;
};

// Regularized ZF with regularizer n * sigma_w2 / rho_f:
//   W = normalize_columns(conj(H) (H^T conj(H) + (n sigma_w2 / rho_f) I)^-1)
Weights mmse_weights(const CMatrix& h_hat, double rho_f, double sigma_w2);

// W = normalize_columns(conj(H) (H^T conj(H))^-1). Throws PrecodingError when
// n > M or the Gram matrix is numerically singular.
Weights zf_weights(const CMatrix& h_hat);

// Equal power loading: diagonal of D, every entry sqrt(p_total / n).
RVector equal_power(int n, double p_total);

struct Precoder {
  CMatrix w;           // M_c x n, unit-norm (or flagged zero) columns
  RVector d;           // diagonal of D, sqrt(p_i)
  CMatrix p;           // W * D
  double power_cap = 1.0;

  Eigen::Index users() const { return p.cols(); }
  double power() const { return p.squaredNorm(); }
};

// P = W D with the invariants checked: unit (or zero) columns, d >= 0, and
// ||P||_F^2 <= cap.
Precoder assemble(const CMatrix& w, const RVector& d, double power_cap);

// Weights from the channel estimate, equal power loading at p_total.
Precoder build_precoder(const CMatrix& h_hat, PrecoderKind kind, double rho_f, double sigma_w2,
                        double p_total);

// Empty M x 0 precoder (cluster with no scheduled users).
Precoder empty_precoder(Eigen::Index rows, double power_cap);

}  // namespace cfmimo
