#include "cfmimo/precoding.hpp"

#include <cmath>
#include <string>

#include "cfmimo/errors.hpp"

namespace cfmimo {

namespace {

constexpr double kUnitTol = 1e-9;
constexpr double kZfMinRcond = 1e-12;

Weights normalize_columns(CMatrix w) {
  Weights out;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const double norm = w.col(j).norm();
    if (norm == 0.0 || !std::isfinite(norm)) {
      w.col(j).setZero();
      out.zero_columns.push_back(static_cast<int>(j));
    } else {
      w.col(j) /= norm;
    }
  }
  out.w = std::move(w);
  return out;
}

}  // namespace

PrecoderKind parse_precoder_kind(std::string_view name) {
  if (name == "mmse") return PrecoderKind::kMmse;
  if (name == "zf") return PrecoderKind::kZf;
  throw ConfigError("unknown precoder '" + std::string(name) + "' (expected mmse or zf)");
}

std::string_view to_string(PrecoderKind kind) { return kind == PrecoderKind::kMmse ? "mmse" : "zf"; }

Weights mmse_weights(const CMatrix& h_hat, double rho_f, double sigma_w2) {
  if (!(rho_f > 0.0)) throw ConfigError("mmse_weights: rho_f must be > 0");
  if (!(sigma_w2 > 0.0)) throw ConfigError("mmse_weights: sigma_w2 must be > 0");
  const Eigen::Index n = h_hat.cols();
  if (h_hat.rows() < 1 || n < 1) throw UsageError("mmse_weights: empty channel matrix");

  CMatrix gram = h_hat.transpose() * h_hat.conjugate();
  gram.diagonal().array() += static_cast<double>(n) * sigma_w2 / rho_f;
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericError("mmse_weights: regularized Gram not positive definite");
  const CMatrix inv = llt.solve(CMatrix::Identity(n, n));
  return normalize_columns(h_hat.conjugate() * inv);
}

Weights zf_weights(const CMatrix& h_hat) {
  const Eigen::Index n = h_hat.cols();
  if (h_hat.rows() < 1 || n < 1) throw UsageError("zf_weights: empty channel matrix");
  if (n > h_hat.rows()) {
    throw PrecodingError("zf_weights: " + std::to_string(n) + " users exceed " +
                         std::to_string(h_hat.rows()) + " transmit antennas");
  }
  const CMatrix gram = h_hat.transpose() * h_hat.conjugate();
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > kZfMinRcond)) {
    throw PrecodingError("zf_weights: Gram matrix is rank deficient");
  }
  const CMatrix inv = llt.solve(CMatrix::Identity(n, n));
  return normalize_columns(h_hat.conjugate() * inv);
}

RVector equal_power(int n, double p_total) {
  if (n < 1) throw UsageError("equal_power: n must be >= 1");
  if (!(p_total > 0.0)) throw ConfigError("equal_power: total power must be > 0");
  return RVector::Constant(n, std::sqrt(p_total / n));
}

Precoder assemble(const CMatrix& w, const RVector& d, double power_cap) {
  if (w.cols() != d.size()) throw UsageError("assemble: W columns and D size differ");
  if ((d.array() < 0.0).any()) throw UsageError("assemble: power matrix has negative entries");
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const double norm = w.col(j).norm();
    if (norm != 0.0 && std::abs(norm - 1.0) > kUnitTol) {
      throw UsageError("assemble: column " + std::to_string(j) + " of W is not unit norm");
    }
  }
  Precoder pre;
  pre.w = w;
  pre.d = d;
  pre.p = w * d.asDiagonal();
  pre.power_cap = power_cap;
  if (pre.power() > power_cap * (1.0 + kUnitTol)) {
    throw PrecodingError("assemble: ||P||^2 = " + std::to_string(pre.power()) + " exceeds cap " +
                         std::to_string(power_cap));
  }
  return pre;
}

Precoder build_precoder(const CMatrix& h_hat, PrecoderKind kind, double rho_f, double sigma_w2,
                        double p_total) {
  const Weights w = kind == PrecoderKind::kMmse ? mmse_weights(h_hat, rho_f, sigma_w2) : zf_weights(h_hat);
  return assemble(w.w, equal_power(static_cast<int>(h_hat.cols()), p_total), p_total);
}

Precoder empty_precoder(Eigen::Index rows, double power_cap) {
  Precoder pre;
  pre.w = CMatrix::Zero(rows, 0);
  pre.d = RVector::Zero(0);
  pre.p = CMatrix::Zero(rows, 0);
  pre.power_cap = power_cap;
  return pre;
}

}  // namespace cfmimo
