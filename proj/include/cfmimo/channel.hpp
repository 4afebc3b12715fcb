#pragma once

#include <cstdint>
#include <span>

#include "cfmimo/linalg.hpp"
#include "cfmimo/topology.hpp"

namespace cfmimo {

// Three-slope path loss (COST-231 Hata attenuation) with shadowing beyond d1.
struct LargeScaleParams {
  double carrier_freq_mhz = 1900.0;
  double h_ap_m = 15.0;
  double h_user_m = 1.5;
  double d0_m = 10.0;
  double d1_m = 50.0;
  double sigma_sh_db = 8.0;

  void validate() const;
};

// Imperfect-CSI realization: G_hat = gamma * G, G_tilde = alpha * G.
struct ChannelRealization {
  CMatrix g;        // true channel, M x K
  CMatrix g_hat;    // estimate
  CMatrix g_tilde;  // error
  double gamma = 1.0;
  double alpha = 0.0;
};

// Attenuation constant D in dB.
double attenuation_constant(const LargeScaleParams& params);

// Path loss in dB (a negative number) at distance d metres, given D.
double pathloss_db(double d, double attenuation_db, const LargeScaleParams& params);

// Deterministic part of beta in dB: pathloss_db for every (AP, user) pair.
RMatrix pathloss_matrix_db(const NetworkLayout& layout, const LargeScaleParams& params);

// Linear-scale large-scale fading beta (M x K). One N(0,1) shadowing draw per
// pair in row-major (AP, user) order; the draw is discarded for d <= d1.
RMatrix large_scale_matrix(const NetworkLayout& layout, const LargeScaleParams& params,
                           std::uint64_t seed);

// G = sqrt(beta) .* h with h ~ CN(0, 1) i.i.d.
CMatrix draw_channel(const RMatrix& beta, std::uint64_t seed);

// Scaled CSI split; gamma in (0, 1], alpha = sqrt(1 - gamma^2).
ChannelRealization split_csi(const CMatrix& g, double gamma);

// Rows/columns picked in the given order. Indices must be in range and unique.
CMatrix subchannel(const CMatrix& g, std::span<const int> ap_indices,
                   std::span<const int> user_indices);

// Column selection with all rows kept.
CMatrix select_columns(const CMatrix& g, std::span<const int> user_indices);

// Debug dump: ap,user,beta,g_re,g_im per row.
void write_channel_csv(std::ostream& os, const RMatrix& beta, const CMatrix& g);

}  // namespace cfmimo
