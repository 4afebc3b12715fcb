#pragma once

#include <span>
#include <vector>

#include "cfmimo/linalg.hpp"
#include "cfmimo/precoding.hpp"

namespace cfmimo {

// Evaluates the sum-rate bound of an arbitrary user subset S under equal-power
// MMSE or ZF precoding computed from G_hat, without forming the M x n
// precoder. Everything is expressed through K x K Gram blocks:
//
//   Y   = (G_hh[S,S] + r I)^-1            r = n s2 / rho (MMSE), 0 (ZF)
//   B   = G_hh[S,S] Y                     = G_hat_S^T W_unnorm
//   E   = G_th[S,S] Y                     = G_tilde_S^T W_unnorm
//   lam = sqrt(P / n) / ||w_j||,          ||w_j||^2 = (Y B)_jj
//   rate = log2 det(rho B L^2 B^H + N) - log2 det(N),
//   N    = rho E L^2 E^H + s2 I + X[S,S]
//
// with G_hh = G_hat^T conj(G_hat), G_th = G_tilde^T conj(G_hat), and X an
// optional K x K interference-plus-noise addition (zero for the network-wide
// bound). The result equals cf_rate / cluster_rate on the explicit precoder.
//
// When G_tilde = c G_hat (the scaled-estimate CSI model) and X = 0, B = I - r Y
// and E = c B, so the rate only needs Y and Y^2:
//   rate = log2 det(s2 I + rho (1 + c^2) H) - log2 det(s2 I + rho c^2 H),
//   H = L B^2 L,  B^2 = I - 2 r Y + r^2 Y^2,  ||w_j||^2 = Y_jj - r (Y^2)_jj.
// Adding or removing one user changes Y and Y^2 by Schur-complement terms, so
// extend_each scores all one-user extensions of a base set from one inverse
// and SwapChain follows one-for-one swaps without refactoring.
class SubsetRateEvaluator {
 public:
  SubsetRateEvaluator(const CMatrix& g_hat, const CMatrix& g_tilde, double rho_f, double sigma_w2,
                      PrecoderKind kind, double p_total, CMatrix extra = {});

  // Throws PrecodingError for ZF on a singular Gram block.
  double operator()(std::span<const int> users) const;

  // Rate of base + {k} for every k in candidates (-inf where ZF is singular).
  std::vector<double> extend_each(std::span<const int> base, std::span<const int> candidates) const;

  int num_users() const { return static_cast<int>(ghh_.rows()); }
  bool incremental() const { return proportional_ && extra_.size() == 0; }

 private:
  friend class SwapChain;

  void check_indices(std::span<const int> users) const;
  double regularizer(Eigen::Index n) const;
  CMatrix regularized_inverse(std::span<const int> users, double r) const;
  double general_rate(std::span<const int> users) const;
  double proportional_rate(std::span<const int> users) const;
  double rate_from_inverse(const CMatrix& y, const CMatrix& y2, double r) const;

  CMatrix ghh_;
  CMatrix gth_;
  CMatrix extra_;
  bool proportional_ = false;
  double error_ratio_ = 0.0;  // c in G_tilde = c G_hat
  double rho_f_;
  double sigma_w2_;
  PrecoderKind kind_;
  double p_total_;
};

// Rates along a chain of one-for-one swaps (C-ESG stages). Keeps Y and Y^2 of
// the current set and updates both in O(n^2) per swap; a fresh inverse every
// kRefreshInterval swaps bounds the accumulated round-off. ZF (whose Gram
// blocks can be nearly singular) and non-incremental evaluators recompute
// every set.
class SwapChain {
 public:
  static constexpr int kRefreshInterval = 16;

  // rate() is -inf if the starting set is ZF-infeasible.
  SwapChain(const SubsetRateEvaluator& eval, std::span<const int> users);

  double rate() const { return rate_; }
  const std::vector<int>& users() const { return users_; }

  // Replaces `out` by `in` and returns the new rate. PrecodingError marks an
  // infeasible ZF set; the chain stays usable for further swaps.
  double swap(int out, int in);

 private:
  void refresh();

  const SubsetRateEvaluator& eval_;
  std::vector<int> users_;
  CMatrix y_;
  CMatrix y2_;
  double r_ = 0.0;
  double rate_ = 0.0;
  bool valid_ = false;
  int since_refresh_ = 0;
};

}  // namespace cfmimo
