#include "cfmimo/subset_rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cfmimo/errors.hpp"

namespace cfmimo {

namespace {
constexpr double kZfMinRcond = 1e-12;
constexpr double kProportionalTol = 1e-12;
constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

CMatrix gather(const CMatrix& a, std::span<const int> idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  CMatrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = a(idx[i], idx[j]);
  }
  return out;
}

// Cholesky of a Hermitian matrix held as split real/imaginary column-major
// arrays (lower triangle used, overwritten). Returns ln det, NaN if not PD.
// Panels of four pivots, trailing columns updated two at a time.
// Updates use explicit fma and no reductions across rows, so the vectorized
// and generic builds round identically.
[[gnu::always_inline]] inline double cholesky_logdet_body(double* re, double* im, Eigen::Index n) {
  constexpr Eigen::Index kPanel = 4;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < n; k += kPanel) {
    const Eigen::Index end = std::min(n, k + kPanel);
    for (Eigen::Index c = k; c < end; ++c) {
      double* cre = re + c * n;
      double* cim = im + c * n;
      const double d = cre[c];
      if (!(d > 0.0)) return std::numeric_limits<double>::quiet_NaN();
      acc += std::log(d);
      const double inv = 1.0 / std::sqrt(d);
      for (Eigen::Index i = c + 1; i < n; ++i) {
        cre[i] *= inv;
        cim[i] *= inv;
      }
      for (Eigen::Index p = c + 1; p < end; ++p) {
        const double ljr = cre[p];
        const double lji = cim[p];
        double* ore = re + p * n;
        double* oim = im + p * n;
#pragma GCC ivdep
        for (Eigen::Index i = p; i < n; ++i) {
          ore[i] = std::fma(-cim[i], lji, std::fma(-cre[i], ljr, ore[i]));
          oim[i] = std::fma(cre[i], lji, std::fma(-cim[i], ljr, oim[i]));
        }
      }
    }
    if (end - k < kPanel) break;
    const double* r0 = re + k * n;
    const double* i0 = im + k * n;
    const double* r1 = r0 + n;
    const double* i1 = i0 + n;
    const double* r2 = r1 + n;
    const double* i2 = i1 + n;
    const double* r3 = r2 + n;
    const double* i3 = i2 + n;
    Eigen::Index j = end;
    for (; j + 1 < n; j += 2) {
      const double a0 = r0[j], b0 = i0[j], a1 = r1[j], b1 = i1[j];
      const double a2 = r2[j], b2 = i2[j], a3 = r3[j], b3 = i3[j];
      const double c0 = r0[j + 1], d0 = i0[j + 1], c1 = r1[j + 1], d1 = i1[j + 1];
      const double c2 = r2[j + 1], d2 = i2[j + 1], c3 = r3[j + 1], d3 = i3[j + 1];
      double* ore = re + j * n;
      double* oim = im + j * n;
      double* pre = ore + n;
      double* pim = oim + n;
#pragma GCC ivdep
      for (Eigen::Index i = j; i < n; ++i) {
        const double x0 = r0[i], y0 = i0[i], x1 = r1[i], y1 = i1[i];
        const double x2 = r2[i], y2 = i2[i], x3 = r3[i], y3 = i3[i];
        double x = ore[i];
        x = std::fma(-x0, a0, x); x = std::fma(-y0, b0, x); x = std::fma(-x1, a1, x); x = std::fma(-y1, b1, x);
        x = std::fma(-x2, a2, x); x = std::fma(-y2, b2, x); x = std::fma(-x3, a3, x); x = std::fma(-y3, b3, x);
        ore[i] = x;
        double y = oim[i];
        y = std::fma(-y0, a0, y); y = std::fma(x0, b0, y); y = std::fma(-y1, a1, y); y = std::fma(x1, b1, y);
        y = std::fma(-y2, a2, y); y = std::fma(x2, b2, y); y = std::fma(-y3, a3, y); y = std::fma(x3, b3, y);
        oim[i] = y;
        double z = pre[i];
        z = std::fma(-x0, c0, z); z = std::fma(-y0, d0, z); z = std::fma(-x1, c1, z); z = std::fma(-y1, d1, z);
        z = std::fma(-x2, c2, z); z = std::fma(-y2, d2, z); z = std::fma(-x3, c3, z); z = std::fma(-y3, d3, z);
        pre[i] = z;
        double w = pim[i];
        w = std::fma(-y0, c0, w); w = std::fma(x0, d0, w); w = std::fma(-y1, c1, w); w = std::fma(x1, d1, w);
        w = std::fma(-y2, c2, w); w = std::fma(x2, d2, w); w = std::fma(-y3, c3, w); w = std::fma(x3, d3, w);
        pim[i] = w;
      }
    }
    for (; j < n; ++j) {
      const double a0 = r0[j], b0 = i0[j], a1 = r1[j], b1 = i1[j];
      const double a2 = r2[j], b2 = i2[j], a3 = r3[j], b3 = i3[j];
      double* ore = re + j * n;
      double* oim = im + j * n;
#pragma GCC ivdep
      for (Eigen::Index i = j; i < n; ++i) {
        double x = ore[i];
        x = std::fma(-r0[i], a0, x); x = std::fma(-i0[i], b0, x); x = std::fma(-r1[i], a1, x); x = std::fma(-i1[i], b1, x);
        x = std::fma(-r2[i], a2, x); x = std::fma(-i2[i], b2, x); x = std::fma(-r3[i], a3, x); x = std::fma(-i3[i], b3, x);
        ore[i] = x;
        double y = oim[i];
        y = std::fma(-i0[i], a0, y); y = std::fma(r0[i], b0, y); y = std::fma(-i1[i], a1, y); y = std::fma(r1[i], b1, y);
        y = std::fma(-i2[i], a2, y); y = std::fma(r2[i], b2, y); y = std::fma(-i3[i], a3, y); y = std::fma(r3[i], b3, y);
        oim[i] = y;
      }
    }
  }
  return acc;
}

// C = A B on split column-major operands, A is rows x inner. Two columns of
// C per sweep over A.
[[gnu::always_inline]] inline void split_gemm_body(const double* ar, const double* ai, const double* br,
                                                   const double* bi, double* cr, double* ci, Eigen::Index rows,
                                                   Eigen::Index inner, Eigen::Index cols) {
  std::fill(cr, cr + rows * cols, 0.0);
  std::fill(ci, ci + rows * cols, 0.0);
  Eigen::Index c = 0;
  for (; c + 1 < cols; c += 2) {
    double* xr = cr + c * rows;
    double* xi = ci + c * rows;
    double* yr = xr + rows;
    double* yi = xi + rows;
    for (Eigen::Index p = 0; p < inner; ++p) {
      const double sr = br[p + c * inner], si = bi[p + c * inner];
      const double tr = br[p + (c + 1) * inner], ti = bi[p + (c + 1) * inner];
      const double* pr = ar + p * rows;
      const double* pi = ai + p * rows;
#pragma GCC ivdep
      for (Eigen::Index i = 0; i < rows; ++i) {
        xr[i] = std::fma(pr[i], sr, std::fma(-pi[i], si, xr[i]));
        xi[i] = std::fma(pr[i], si, std::fma(pi[i], sr, xi[i]));
        yr[i] = std::fma(pr[i], tr, std::fma(-pi[i], ti, yr[i]));
        yi[i] = std::fma(pr[i], ti, std::fma(pi[i], tr, yi[i]));
      }
    }
  }
  for (; c < cols; ++c) {
    double* xr = cr + c * rows;
    double* xi = ci + c * rows;
    for (Eigen::Index p = 0; p < inner; ++p) {
      const double sr = br[p + c * inner], si = bi[p + c * inner];
      const double* pr = ar + p * rows;
      const double* pi = ai + p * rows;
#pragma GCC ivdep
      for (Eigen::Index i = 0; i < rows; ++i) {
        xr[i] = std::fma(pr[i], sr, std::fma(-pi[i], si, xr[i]));
        xi[i] = std::fma(pr[i], si, std::fma(pi[i], sr, xi[i]));
      }
    }
  }
}

// Lower triangles of sigma^2 I + k H for both covariances of one extension,
// H = L B^2 L with B^2 = Q0 + alpha v v^H + beta (u v^H + v u^H) on the base
// block and the new user in row l.
struct ExtensionTerms {
  Eigen::Index l = 0;
  const double* q0re = nullptr;
  const double* q0im = nullptr;
  const double* vr = nullptr;
  const double* vi = nullptr;
  const double* ur = nullptr;
  const double* ui = nullptr;
  const double* ell = nullptr;
  double alpha = 0.0;
  double beta = 0.0;
  double hll = 0.0;
  double k_total = 0.0;
  double k_noise = 0.0;
  double sigma_w2 = 0.0;
};

[[gnu::always_inline]] inline void build_covariances_body(const ExtensionTerms& e, double* tre, double* tim,
                                                          double* nre, double* nim) {
  const Eigen::Index l = e.l;
  const Eigen::Index n = l + 1;
  const double *vr = e.vr, *vi = e.vi, *ur = e.ur, *ui = e.ui, *ell = e.ell;
  for (Eigen::Index j = 0; j < l; ++j) {
    const double vjr = vr[j], vji = vi[j], ujr = ur[j], uji = ui[j];
    const double lj = ell[j];
    const double* qre = e.q0re + j * l;
    const double* qim = e.q0im + j * l;
    double* cre = tre + j * n;
    double* cim = tim + j * n;
    double* dre = nre + j * n;
    double* dim = nim + j * n;
#pragma GCC ivdep
    for (Eigen::Index i = j; i < l; ++i) {
      // v_i conj(v_j), u_i conj(v_j) + v_i conj(u_j)
      const double pvr = vr[i] * vjr + vi[i] * vji;
      const double pvi = vi[i] * vjr - vr[i] * vji;
      const double pur = ur[i] * vjr + ui[i] * vji + vr[i] * ujr + vi[i] * uji;
      const double pui = ui[i] * vjr - ur[i] * vji + vi[i] * ujr - vr[i] * uji;
      const double sc = ell[i] * lj;
      const double hr = sc * (qre[i] + e.alpha * pvr + e.beta * pur);
      const double hi = sc * (qim[i] + e.alpha * pvi + e.beta * pui);
      cre[i] = e.k_total * hr;
      cim[i] = e.k_total * hi;
      dre[i] = e.k_noise * hr;
      dim[i] = e.k_noise * hi;
    }
    cre[j] += e.sigma_w2;
    dre[j] += e.sigma_w2;
    // row l: Q_kU = conj(Q_Uk), Q_Uk = -(alpha v + beta u)
    const double hr = -ell[l] * lj * (e.alpha * vjr + e.beta * ujr);
    const double hi = ell[l] * lj * (e.alpha * vji + e.beta * uji);
    cre[l] = e.k_total * hr;
    cim[l] = e.k_total * hi;
    dre[l] = e.k_noise * hr;
    dim[l] = e.k_noise * hi;
  }
  tre[l + l * n] = e.k_total * e.hll + e.sigma_w2;
  tim[l + l * n] = 0.0;
  nre[l + l * n] = e.k_noise * e.hll + e.sigma_w2;
  nim[l + l * n] = 0.0;
}

struct Kernels {
  double (*cholesky_logdet)(double*, double*, Eigen::Index);
  void (*split_gemm)(const double*, const double*, const double*, const double*, double*, double*, Eigen::Index,
                     Eigen::Index, Eigen::Index);
  void (*build_covariances)(const ExtensionTerms&, double*, double*, double*, double*);
};

#define CFMIMO_KERNEL_SET(attr, suffix)                                                                        \
  attr double cholesky_logdet_##suffix(double* re, double* im, Eigen::Index n) {                             \
    return cholesky_logdet_body(re, im, n);                                                                  \
  }                                                                                                          \
  attr void split_gemm_##suffix(const double* ar, const double* ai, const double* br, const double* bi,      \
                                double* cr, double* ci, Eigen::Index rows, Eigen::Index inner,               \
                                Eigen::Index cols) {                                                         \
    split_gemm_body(ar, ai, br, bi, cr, ci, rows, inner, cols);                                              \
  }                                                                                                          \
  attr void build_covariances_##suffix(const ExtensionTerms& e, double* tre, double* tim, double* nre,       \
                                       double* nim) {                                                        \
    build_covariances_body(e, tre, tim, nre, nim);                                                           \
  }

CFMIMO_KERNEL_SET([[gnu::target("avx2,fma")]], avx2)
CFMIMO_KERNEL_SET(, generic)
#undef CFMIMO_KERNEL_SET

Kernels pick_kernels() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return {cholesky_logdet_avx2, split_gemm_avx2, build_covariances_avx2};
  }
  return {cholesky_logdet_generic, split_gemm_generic, build_covariances_generic};
}

const Kernels kernels = pick_kernels();

struct SplitBuffer {
  std::vector<double> re;
  std::vector<double> im;
  explicit SplitBuffer(Eigen::Index n) : re(static_cast<std::size_t>(n * n)), im(static_cast<std::size_t>(n * n)) {}
};

double logdet_of(const CMatrix& m, SplitBuffer& buf) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      buf.re[i + j * n] = m(i, j).real();
      buf.im[i + j * n] = m(i, j).imag();
    }
  }
  return kernels.cholesky_logdet(buf.re.data(), buf.im.data(), n);
}

double bits_from(double ln_total, double ln_noise) {
  if (!std::isfinite(ln_total) || !std::isfinite(ln_noise)) {
    throw NumericError("SubsetRateEvaluator: covariance not positive definite");
  }
  return std::max(0.0, (ln_total - ln_noise) / std::numbers::ln2);
}

// log2 det(m1) - log2 det(m2), both Hermitian PD (lower triangles read).
double logdet_difference(const CMatrix& m1, const CMatrix& m2) {
  SplitBuffer buf(m1.rows());
  const double l1 = logdet_of(m1, buf);
  const double l2 = logdet_of(m2, buf);
  return bits_from(l1, l2);
}

}  // namespace

SubsetRateEvaluator::SubsetRateEvaluator(const CMatrix& g_hat, const CMatrix& g_tilde, double rho_f,
                                         double sigma_w2, PrecoderKind kind, double p_total, CMatrix extra)
    : extra_(std::move(extra)), rho_f_(rho_f), sigma_w2_(sigma_w2), kind_(kind), p_total_(p_total) {
  if (g_hat.rows() != g_tilde.rows() || g_hat.cols() != g_tilde.cols()) {
    throw UsageError("SubsetRateEvaluator: G_hat and G_tilde dimensions differ");
  }
  if (!(rho_f > 0.0) || !(sigma_w2 > 0.0) || !(p_total > 0.0)) {
    throw ConfigError("SubsetRateEvaluator: rho_f, sigma_w2 and power must be positive");
  }
  ghh_ = g_hat.transpose() * g_hat.conjugate();
  gth_ = g_tilde.transpose() * g_hat.conjugate();
  if (extra_.size() != 0 && (extra_.rows() != ghh_.rows() || extra_.cols() != ghh_.cols())) {
    throw UsageError("SubsetRateEvaluator: extra covariance must be K x K");
  }
  const double hat2 = g_hat.squaredNorm();
  if (hat2 > 0.0) {
    const double c = (g_hat.conjugate().cwiseProduct(g_tilde)).sum().real() / hat2;
    const double resid = (g_tilde - c * g_hat).norm();
    if (c >= 0.0 && resid <= kProportionalTol * std::max(g_tilde.norm(), std::sqrt(hat2))) {
      proportional_ = true;
      error_ratio_ = c;
    }
  }
}

double SubsetRateEvaluator::operator()(std::span<const int> users) const {
  if (users.empty()) return 0.0;
  check_indices(users);
  return proportional_ ? proportional_rate(users) : general_rate(users);
}

void SubsetRateEvaluator::check_indices(std::span<const int> users) const {
  std::vector<bool> seen(static_cast<std::size_t>(num_users()), false);
  for (int k : users) {
    if (k < 0 || k >= num_users()) throw UsageError("SubsetRateEvaluator: user index out of range");
    if (seen[k]) throw UsageError("SubsetRateEvaluator: duplicate user index");
    seen[k] = true;
  }
}

double SubsetRateEvaluator::regularizer(Eigen::Index n) const {
  return kind_ == PrecoderKind::kMmse ? static_cast<double>(n) * sigma_w2_ / rho_f_ : 0.0;
}

CMatrix SubsetRateEvaluator::regularized_inverse(std::span<const int> users, double r) const {
  const auto n = static_cast<Eigen::Index>(users.size());
  CMatrix reg = gather(ghh_, users);
  // ZF with n > M shows up as a rank-deficient Gram block here.
  reg.diagonal().array() += r;
  Eigen::LLT<CMatrix> llt(reg);
  if (llt.info() != Eigen::Success || (kind_ == PrecoderKind::kZf && !(llt.rcond() > kZfMinRcond))) {
    if (kind_ == PrecoderKind::kZf) throw PrecodingError("SubsetRateEvaluator: ZF Gram matrix is rank deficient");
    throw NumericError("SubsetRateEvaluator: regularized Gram not positive definite");
  }
  return llt.solve(CMatrix::Identity(n, n));
}

double SubsetRateEvaluator::general_rate(std::span<const int> users) const {
  const auto n = static_cast<Eigen::Index>(users.size());
  const CMatrix g = gather(ghh_, users);
  const CMatrix y = regularized_inverse(users, regularizer(n));
  const CMatrix b = g * y;
  const CMatrix e = gather(gth_, users) * y;

  RVector scale(n);
  const double per_user = std::sqrt(p_total_ / static_cast<double>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w2 = (y.row(j) * b.col(j)).value().real();
    scale(j) = (w2 > 0.0 && std::isfinite(w2)) ? per_user / std::sqrt(w2) : 0.0;
  }
  const CMatrix bs = b * scale.asDiagonal();
  const CMatrix es = e * scale.asDiagonal();

  CMatrix noise = CMatrix::Zero(n, n);
  noise.selfadjointView<Eigen::Lower>().rankUpdate(es, rho_f_);
  noise.diagonal().array() += sigma_w2_;
  if (extra_.size() != 0) noise += gather(extra_, users);
  CMatrix total = noise;
  total.selfadjointView<Eigen::Lower>().rankUpdate(bs, rho_f_);
  return logdet_difference(total, noise);
}

double SubsetRateEvaluator::proportional_rate(std::span<const int> users) const {
  const auto n = static_cast<Eigen::Index>(users.size());
  const double r = regularizer(n);
  const CMatrix y = regularized_inverse(users, r);

  // ||w_j||^2 = (Y G Y)_jj = Y_jj - r (Y^2)_jj
  CMatrix x = -r * y;
  x.diagonal().array() += 1.0;  // B = I - r Y
  const double per_user = std::sqrt(p_total_ / static_cast<double>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w2 = y(j, j).real() - r * y.col(j).squaredNorm();
    x.col(j) *= (w2 > 0.0 && std::isfinite(w2)) ? per_user / std::sqrt(w2) : 0.0;
  }

  const double c2 = error_ratio_ * error_ratio_;
  CMatrix noise = CMatrix::Zero(n, n);
  noise.selfadjointView<Eigen::Lower>().rankUpdate(x, rho_f_);  // rho B L^2 B
  CMatrix total = (1.0 + c2) * noise;
  noise *= c2;
  noise.diagonal().array() += sigma_w2_;
  total.diagonal().array() += sigma_w2_;
  if (extra_.size() != 0) {
    const CMatrix xs = gather(extra_, users);
    noise += xs;
    total += xs;
  }
  return logdet_difference(total, noise);
}

double SubsetRateEvaluator::rate_from_inverse(const CMatrix& y, const CMatrix& y2, double r) const {
  const Eigen::Index n = y.rows();
  const double per_user = std::sqrt(p_total_ / static_cast<double>(n));
  RVector ell(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w2 = y(j, j).real() - r * y2(j, j).real();
    ell(j) = (w2 > 0.0 && std::isfinite(w2)) ? per_user / std::sqrt(w2) : 0.0;
  }
  const double c2 = error_ratio_ * error_ratio_;
  SplitBuffer buf(n);
  auto fill = [&](double kappa) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j; i < n; ++i) {
        // B^2 = I - 2 r Y + r^2 Y^2
        const std::complex<double> q = r * r * y2(i, j) - 2.0 * r * y(i, j) + (i == j ? 1.0 : 0.0);
        const double sc = kappa * ell(i) * ell(j);
        buf.re[i + j * n] = sc * q.real() + (i == j ? sigma_w2_ : 0.0);
        buf.im[i + j * n] = sc * q.imag();
      }
    }
    return kernels.cholesky_logdet(buf.re.data(), buf.im.data(), n);
  };
  const double ln_total = fill(rho_f_ * (1.0 + c2));
  const double ln_noise = c2 > 0.0 ? fill(rho_f_ * c2) : static_cast<double>(n) * std::log(sigma_w2_);
  return bits_from(ln_total, ln_noise);
}

std::vector<double> SubsetRateEvaluator::extend_each(std::span<const int> base,
                                                     std::span<const int> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  check_indices(base);
  check_indices(candidates);

  if (!proportional_ || extra_.size() != 0 || base.empty()) {
    std::vector<int> set(base.begin(), base.end());
    set.push_back(-1);
    for (int k : candidates) {
      set.back() = k;
      try {
        out.push_back((*this)(set));
      } catch (const PrecodingError&) {
        out.push_back(kInfeasible);
      }
    }
    return out;
  }

  const auto l = static_cast<Eigen::Index>(base.size());
  const Eigen::Index n = l + 1;
  const double r = regularizer(n);
  CMatrix a_mat = gather(ghh_, base);
  a_mat.diagonal().array() += r;
  Eigen::LLT<CMatrix> llt(a_mat);
  if (llt.info() != Eigen::Success || (kind_ == PrecoderKind::kZf && !(llt.rcond() > kZfMinRcond))) {
    if (kind_ == PrecoderKind::kMmse) throw NumericError("SubsetRateEvaluator: regularized Gram not positive definite");
    out.assign(candidates.size(), kInfeasible);
    return out;
  }
  CMatrix a_inv = llt.solve(CMatrix::Identity(l, l));
  a_inv = (0.5 * (a_inv + a_inv.adjoint())).eval();
  const CMatrix a_inv2 = a_inv * a_inv;
  // Q0 = I - 2 r A^-1 + r^2 A^-2, the base block of B^2 before the update.
  CMatrix q0 = (r * r) * a_inv2 - (2.0 * r) * a_inv;
  q0.diagonal().array() += 1.0;
  const RVector y0 = a_inv.diagonal().real();
  const RVector y20 = a_inv2.diagonal().real();

  const double per_user = std::sqrt(p_total_ / static_cast<double>(n));
  const double c2 = error_ratio_ * error_ratio_;
  const double k_total = rho_f_ * (1.0 + c2);
  const double k_noise = rho_f_ * c2;
  const double ln_noise_floor = static_cast<double>(n) * std::log(sigma_w2_);
  // Columns of A^-1 G[base, k] and A^-2 G[base, k] for every candidate at once.
  const auto m_count = static_cast<Eigen::Index>(candidates.size());
  SplitBuffer inv_s(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index i = 0; i < l; ++i) {
      inv_s.re[i + j * l] = a_inv(i, j).real();
      inv_s.im[i + j * l] = a_inv(i, j).imag();
    }
  }
  const auto panel = static_cast<std::size_t>(l * m_count);
  std::vector<double> xr(panel), xi(panel), vr_all(panel), vi_all(panel), ur_all(panel), ui_all(panel);
  for (Eigen::Index j = 0; j < m_count; ++j) {
    for (Eigen::Index i = 0; i < l; ++i) {
      const cd g = ghh_(base[i], candidates[j]);
      xr[i + j * l] = g.real();
      xi[i + j * l] = g.imag();
    }
  }
  kernels.split_gemm(inv_s.re.data(), inv_s.im.data(), xr.data(), xi.data(), vr_all.data(), vi_all.data(), l, l,
                     m_count);
  kernels.split_gemm(inv_s.re.data(), inv_s.im.data(), vr_all.data(), vi_all.data(), ur_all.data(), ui_all.data(), l,
                     l, m_count);
  std::vector<double> ell(static_cast<std::size_t>(n));
  SplitBuffer q0s(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index i = j; i < l; ++i) {
      q0s.re[i + j * l] = q0(i, j).real();
      q0s.im[i + j * l] = q0(i, j).imag();
    }
  }
  SplitBuffer tot(n);
  SplitBuffer noi(n);
  ExtensionTerms terms;
  terms.l = l;
  terms.q0re = q0s.re.data();
  terms.q0im = q0s.im.data();
  terms.ell = ell.data();
  terms.k_total = k_total;
  terms.k_noise = k_noise;
  terms.sigma_w2 = sigma_w2_;

  for (Eigen::Index c = 0; c < m_count; ++c) {
    const int k = candidates[c];
    const double d = ghh_(k, k).real() + r;
    const double* vr = vr_all.data() + c * l;
    const double* vi = vi_all.data() + c * l;
    const double* ur = ur_all.data() + c * l;
    const double* ui = ui_all.data() + c * l;
    const double* gr = xr.data() + c * l;
    const double* gi = xi.data() + c * l;
    double gv = 0.0;
    double vv_sum = 0.0;
    for (Eigen::Index i = 0; i < l; ++i) {
      gv += gr[i] * vr[i] + gi[i] * vi[i];
      vv_sum += vr[i] * vr[i] + vi[i] * vi[i];
    }
    const double s = d - gv;
    if (!(s > kZfMinRcond * d)) {
      if (kind_ == PrecoderKind::kMmse) throw NumericError("SubsetRateEvaluator: regularized Gram not positive definite");
      out.push_back(kInfeasible);
      continue;
    }
    const double t = (vv_sum + 1.0) / (s * s);

    // Y and Y^2 of the extended set from the Schur complement s:
    //   Y   = [A^-1 + v v^H / s, -v / s; ., 1 / s]
    //   Y^2 = [A^-2 + (u v^H + v u^H) / s + t v v^H, -u / s - t v; ., t]
    for (Eigen::Index j = 0; j < l; ++j) {
      const double vv = vr[j] * vr[j] + vi[j] * vi[j];
      const double yjj = y0(j) + vv / s;
      const double y2jj = y20(j) + 2.0 * (ur[j] * vr[j] + ui[j] * vi[j]) / s + t * vv;
      const double w2 = yjj - r * y2jj;
      ell[j] = (w2 > 0.0 && std::isfinite(w2)) ? per_user / std::sqrt(w2) : 0.0;
    }
    {
      const double w2 = 1.0 / s - r * t;
      ell[l] = (w2 > 0.0 && std::isfinite(w2)) ? per_user / std::sqrt(w2) : 0.0;
    }
    terms.vr = vr;
    terms.vi = vi;
    terms.ur = ur;
    terms.ui = ui;
    terms.alpha = r * r * t - 2.0 * r / s;
    terms.beta = r * r / s;
    terms.hll = ell[l] * ell[l] * (1.0 - 2.0 * r / s + r * r * t);
    kernels.build_covariances(terms, tot.re.data(), tot.im.data(), noi.re.data(), noi.im.data());

    const double ln_total = kernels.cholesky_logdet(tot.re.data(), tot.im.data(), n);
    const double ln_noise = c2 > 0.0 ? kernels.cholesky_logdet(noi.re.data(), noi.im.data(), n) : ln_noise_floor;
    out.push_back(bits_from(ln_total, ln_noise));
  }
  return out;
}

SwapChain::SwapChain(const SubsetRateEvaluator& eval, std::span<const int> users)
    : eval_(eval), users_(users.begin(), users.end()) {
  if (users_.empty()) throw UsageError("SwapChain: empty user set");
  eval_.check_indices(users_);
  r_ = eval_.regularizer(static_cast<Eigen::Index>(users_.size()));
  try {
    refresh();
  } catch (const PrecodingError&) {
    rate_ = kInfeasible;
  }
}

void SwapChain::refresh() {
  valid_ = false;
  since_refresh_ = 0;
  if (!eval_.incremental()) {
    rate_ = eval_(users_);
    valid_ = true;
    return;
  }
  y_ = eval_.regularized_inverse(users_, r_);
  y_ = (0.5 * (y_ + y_.adjoint())).eval();
  y2_ = y_ * y_;
  rate_ = eval_.rate_from_inverse(y_, y2_, r_);
  valid_ = true;
}

double SwapChain::swap(int out, int in) {
  const auto it = std::find(users_.begin(), users_.end(), out);
  if (it == users_.end()) throw UsageError("SwapChain::swap: user " + std::to_string(out) + " is not scheduled");
  if (in < 0 || in >= eval_.num_users()) throw UsageError("SubsetRateEvaluator: user index out of range");
  if (std::find(users_.begin(), users_.end(), in) != users_.end()) {
    throw UsageError("SwapChain::swap: user " + std::to_string(in) + " is already scheduled");
  }
  const auto p = static_cast<Eigen::Index>(it - users_.begin());
  const auto l = static_cast<Eigen::Index>(users_.size()) - 1;

  if (!eval_.incremental() || eval_.kind_ != PrecoderKind::kMmse || !valid_ || ++since_refresh_ >= kRefreshInterval) {
    *it = in;
    refresh();
    return rate_;
  }

  // Move the outgoing user to the last slot, then drop it:
  //   Y_b   = Y_rr - y y^H / y_pp
  //   Y_b^2 = Y2_rr - y y^H - (z y^H + y z^H) / y_pp + |y|^2 y y^H / y_pp^2,
  //   z = Y2_rp - y y_pp.
  if (p != l) {
    std::swap(users_[p], users_[l]);
    y_.row(p).swap(y_.row(l));
    y_.col(p).swap(y_.col(l));
    y2_.row(p).swap(y2_.row(l));
    y2_.col(p).swap(y2_.col(l));
  }
  users_[l] = in;
  const double ypp = y_(l, l).real();
  const CVector yv = y_.col(l).head(l);
  const CVector z = y2_.col(l).head(l) - ypp * yv;
  const double kappa = 1.0 - yv.squaredNorm() / (ypp * ypp);
  for (Eigen::Index j = 0; j < l; ++j) {
    const cd yj = std::conj(yv(j));
    const cd zj = std::conj(z(j));
    for (Eigen::Index i = 0; i < l; ++i) {
      y_(i, j) -= yv(i) * yj / ypp;
      y2_(i, j) -= kappa * yv(i) * yj + (z(i) * yj + yv(i) * zj) / ypp;
    }
  }

  // Extend with the incoming user (Schur complement s).
  CVector a(l);
  for (Eigen::Index i = 0; i < l; ++i) a(i) = eval_.ghh_(users_[i], in);
  const double d = eval_.ghh_(in, in).real() + r_;
  const CVector v = y_.topLeftCorner(l, l) * a;
  const double s = d - a.dot(v).real();
  if (!(s > kZfMinRcond * d)) {
    valid_ = false;
    if (eval_.kind_ == PrecoderKind::kMmse) throw NumericError("SubsetRateEvaluator: regularized Gram not positive definite");
    throw PrecodingError("SubsetRateEvaluator: ZF Gram matrix is rank deficient");
  }
  const CVector u = y_.topLeftCorner(l, l) * v;
  const double t = (v.squaredNorm() + 1.0) / (s * s);
  for (Eigen::Index j = 0; j < l; ++j) {
    const cd vj = std::conj(v(j));
    const cd uj = std::conj(u(j));
    for (Eigen::Index i = 0; i < l; ++i) {
      y_(i, j) += v(i) * vj / s;
      y2_(i, j) += (u(i) * vj + v(i) * uj) / s + t * v(i) * vj;
    }
  }
  y_.col(l).head(l) = -v / s;
  y_.row(l).head(l) = y_.col(l).head(l).adjoint();
  y_(l, l) = 1.0 / s;
  y2_.col(l).head(l) = -u / s - t * v;
  y2_.row(l).head(l) = y2_.col(l).head(l).adjoint();
  y2_(l, l) = t;
  rate_ = eval_.rate_from_inverse(y_, y2_, r_);
  return rate_;
}

}  // namespace cfmimo
