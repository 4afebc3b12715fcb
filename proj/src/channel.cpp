#include "cfmimo/channel.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cfmimo/errors.hpp"
#include "cfmimo/format.hpp"

namespace cfmimo {

void LargeScaleParams::validate() const {
  if (!(carrier_freq_mhz > 0 && h_ap_m > 0 && h_user_m > 0 && d0_m > 0 && d1_m > 0)) {
    throw ConfigError("large-scale parameters must be positive");
  }
  if (!(sigma_sh_db >= 0)) throw ConfigError("shadowing std must be >= 0");
  if (!(d0_m < d1_m)) throw ConfigError("path-loss breakpoints require d0 < d1");
}

double attenuation_constant(const LargeScaleParams& p) {
  p.validate();
  const double lf = std::log10(p.carrier_freq_mhz);
  return 46.3 + 33.9 * lf - 13.82 * std::log10(p.h_ap_m) - (1.11 * lf - 0.7) * p.h_user_m +
         1.56 * lf - 0.8;
}

double pathloss_db(double d, double attenuation_db, const LargeScaleParams& p) {
  if (d > p.d1_m) return -attenuation_db - 35.0 * std::log10(d);
  if (d > p.d0_m) return -attenuation_db - 10.0 * std::log10(std::pow(p.d1_m, 1.5) * d * d);
  return -attenuation_db - 10.0 * std::log10(std::pow(p.d1_m, 1.5) * p.d0_m * p.d0_m);
}

RMatrix pathloss_matrix_db(const NetworkLayout& layout, const LargeScaleParams& params) {
  const double atten = attenuation_constant(params);
  const int m_count = layout.num_aps();
  const int k_count = layout.num_users();
  RMatrix pl(m_count, k_count);
  for (int m = 0; m < m_count; ++m) {
    for (int k = 0; k < k_count; ++k) {
      pl(m, k) = pathloss_db(distance(layout.ap_positions[m], layout.user_positions[k]), atten, params);
    }
  }
  return pl;
}

RMatrix large_scale_matrix(const NetworkLayout& layout, const LargeScaleParams& params,
                           std::uint64_t seed) {
  const RMatrix pl = pathloss_matrix_db(layout, params);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  RMatrix beta(pl.rows(), pl.cols());
  for (Eigen::Index m = 0; m < pl.rows(); ++m) {
    for (Eigen::Index k = 0; k < pl.cols(); ++k) {
      const double z = normal(rng);
      const double d = distance(layout.ap_positions[m], layout.user_positions[k]);
      const double shadow_db = d <= params.d1_m ? 0.0 : params.sigma_sh_db * z;
      beta(m, k) = db_to_linear(pl(m, k) + shadow_db);
    }
  }
  return beta;
}

CMatrix draw_channel(const RMatrix& beta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrix g(beta.rows(), beta.cols());
  for (Eigen::Index m = 0; m < beta.rows(); ++m) {
    for (Eigen::Index k = 0; k < beta.cols(); ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(m, k) = std::sqrt(beta(m, k)) * cd(re, im);
    }
  }
  return g;
}

ChannelRealization split_csi(const CMatrix& g, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("CSI quality gamma must lie in (0, 1], got " + std::to_string(gamma));
  }
  ChannelRealization ch;
  ch.gamma = gamma;
  ch.alpha = std::sqrt(std::max(0.0, 1.0 - gamma * gamma));
  ch.g = g;
  ch.g_hat = gamma * g;
  ch.g_tilde = ch.alpha * g;
  return ch;
}

namespace {

void check_indices(std::span<const int> idx, Eigen::Index bound, const char* what) {
  std::vector<bool> seen(static_cast<std::size_t>(bound), false);
  for (int i : idx) {
    if (i < 0 || i >= bound) {
      throw UsageError(std::string("subchannel: ") + what + " index " + std::to_string(i) +
                       " out of range [0, " + std::to_string(bound) + ")");
    }
    if (seen[i]) throw UsageError(std::string("subchannel: duplicate ") + what + " index " + std::to_string(i));
    seen[i] = true;
  }
}

}  // namespace

CMatrix subchannel(const CMatrix& g, std::span<const int> ap_indices, std::span<const int> user_indices) {
  check_indices(ap_indices, g.rows(), "AP");
  check_indices(user_indices, g.cols(), "user");
  CMatrix out(ap_indices.size(), user_indices.size());
  for (std::size_t j = 0; j < user_indices.size(); ++j) {
    for (std::size_t i = 0; i < ap_indices.size(); ++i) {
      out(i, j) = g(ap_indices[i], user_indices[j]);
    }
  }
  return out;
}

CMatrix select_columns(const CMatrix& g, std::span<const int> user_indices) {
  check_indices(user_indices, g.cols(), "user");
  CMatrix out(g.rows(), user_indices.size());
  for (std::size_t j = 0; j < user_indices.size(); ++j) out.col(j) = g.col(user_indices[j]);
  return out;
}

void write_channel_csv(std::ostream& os, const RMatrix& beta, const CMatrix& g) {
  if (beta.rows() != g.rows() || beta.cols() != g.cols()) {
    throw UsageError("write_channel_csv: beta and G dimensions differ");
  }
  os << "ap,user,beta,g_re,g_im\n";
  for (Eigen::Index m = 0; m < g.rows(); ++m) {
    for (Eigen::Index k = 0; k < g.cols(); ++k) {
      os << m << ',' << k << ',' << exact_str(beta(m, k)) << ',' << exact_str(g(m, k).real()) << ','
         << exact_str(g(m, k).imag()) << '\n';
    }
  }
}

}  // namespace cfmimo
