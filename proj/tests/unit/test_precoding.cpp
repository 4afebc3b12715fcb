#include <doctest.h>

#include <cmath>

#include "cfmimo/errors.hpp"
#include "cfmimo/precoding.hpp"
#include "oracles.hpp"

using namespace cfmimo;

TEST_CASE("single user MMSE is a matched filter") {
  std::mt19937_64 rng(1);
  const CMatrix h = oracle::random_channel(6, 1, rng);
  const Weights w = mmse_weights(h, 3.0, 0.5);
  const CVector mf = h.conjugate().col(0) / h.norm();
  CHECK((w.w.col(0) - mf).norm() < 1e-12);
  CHECK(w.zero_columns.empty());
}

TEST_CASE("MMSE weights match the LU oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix h = oracle::random_channel(8, 5, rng, 6.0);
    const double rho = 0.1 + trial, s2 = 0.7;
    const CMatrix ref = oracle::precoder(h, oracle::mmse_reg(5, rho, s2), 5.0);
    const Weights w = mmse_weights(h, rho, s2);
    CHECK((w.w - ref).norm() < 1e-10 * ref.norm());
  }
}

TEST_CASE("MMSE tends to ZF at high SNR") {
  std::mt19937_64 rng(3);
  const CMatrix h = oracle::random_channel(8, 4, rng);
  const CMatrix zf = zf_weights(h).w;
  const CMatrix mmse = mmse_weights(h, 1e9, 1.0).w;
  CHECK((zf - mmse).norm() < 1e-6);
}

TEST_CASE("ZF nulls cross-user interference") {
  std::mt19937_64 rng(4);
  const CMatrix h = oracle::random_channel(10, 6, rng, 8.0);
  const CMatrix w = zf_weights(h).w;
  const CMatrix eff = h.transpose() * w;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i != j) CHECK(std::abs(eff(i, j)) < 1e-10 * std::abs(eff(j, j)));
    }
    CHECK(w.col(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ZF weights do not change when the channel is scaled") {
  std::mt19937_64 rng(5);
  const CMatrix h = oracle::random_channel(7, 4, rng);
  const CMatrix a = zf_weights(h).w;
  const CMatrix b = zf_weights(h * 1e-8).w;
  CHECK((a - b).norm() < 1e-9);
}

TEST_CASE("ZF refuses more users than antennas and singular Grams") {
  std::mt19937_64 rng(6);
  CHECK_THROWS_AS(zf_weights(oracle::random_channel(3, 4, rng)), PrecodingError);
  CMatrix h = oracle::random_channel(5, 3, rng);
  h.col(2) = h.col(0);
  CHECK_THROWS_AS(zf_weights(h), PrecodingError);
}

TEST_CASE("zero channel column gives a flagged zero weight") {
  std::mt19937_64 rng(7);
  CMatrix h = oracle::random_channel(4, 3, rng);
  h.col(1).setZero();
  const Weights w = mmse_weights(h, 1.0, 1.0);
  REQUIRE(w.zero_columns.size() == 1);
  CHECK(w.zero_columns[0] == 1);
  CHECK(w.w.col(1).isZero(0.0));
  CHECK(w.w.col(0).norm() == doctest::Approx(1.0));
}

TEST_CASE("MMSE parameter checks") {
  std::mt19937_64 rng(8);
  const CMatrix h = oracle::random_channel(4, 2, rng);
  CHECK_THROWS_AS(mmse_weights(h, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(mmse_weights(h, 1.0, -1.0), ConfigError);
  CHECK_THROWS_AS(mmse_weights(CMatrix(0, 0), 1.0, 1.0), UsageError);
}

TEST_CASE("equal power loading") {
  const RVector d = equal_power(4, 2.0);
  CHECK(d.size() == 4);
  CHECK(d.squaredNorm() == doctest::Approx(2.0));
  CHECK(d(3) == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(equal_power(0, 1.0), UsageError);
  CHECK_THROWS_AS(equal_power(2, 0.0), ConfigError);
}

TEST_CASE("built precoders meet the power budget exactly") {
  std::mt19937_64 rng(9);
  for (int n = 1; n <= 6; ++n) {
    const CMatrix h = oracle::random_channel(6, n, rng, 10.0);
    for (PrecoderKind kind : {PrecoderKind::kMmse, PrecoderKind::kZf}) {
      const Precoder p = build_precoder(h, kind, 5.0, 1.0, 0.25);
      CHECK(p.users() == n);
      CHECK(p.power() == doctest::Approx(0.25).epsilon(1e-12));
      CHECK((p.p - p.w * p.d.asDiagonal()).norm() == 0.0);
    }
  }
}

TEST_CASE("assemble enforces its invariants") {
  CMatrix w = CMatrix::Identity(3, 2);
  CHECK_NOTHROW(assemble(w, RVector::Constant(2, std::sqrt(0.5)), 1.0));
  CHECK_THROWS_AS(assemble(w, RVector::Constant(3, 0.1), 1.0), UsageError);
  CHECK_THROWS_AS(assemble(w, RVector::Constant(2, -0.1), 1.0), UsageError);
  CHECK_THROWS_AS(assemble(w * 2.0, RVector::Constant(2, 0.1), 1.0), UsageError);
  CHECK_THROWS_AS(assemble(w, RVector::Constant(2, 1.0), 1.0), PrecodingError);
  const Precoder e = empty_precoder(5, 1.0);
  CHECK(e.p.rows() == 5);
  CHECK(e.users() == 0);
  CHECK(e.power() == 0.0);
}

TEST_CASE("relabeling users permutes the precoder columns") {
  std::mt19937_64 rng(10);
  const CMatrix h = oracle::random_channel(8, 4, rng, 5.0);
  const std::vector<int> perm{2, 0, 3, 1};
  const CMatrix hp = oracle::columns(h, perm);
  for (PrecoderKind kind : {PrecoderKind::kMmse, PrecoderKind::kZf}) {
    const CMatrix a = build_precoder(h, kind, 2.0, 1.0, 1.0).p;
    const CMatrix b = build_precoder(hp, kind, 2.0, 1.0, 1.0).p;
    CHECK((oracle::columns(a, perm) - b).norm() < 1e-12);
  }
}

TEST_CASE("precoder kind names") {
  CHECK(parse_precoder_kind("mmse") == PrecoderKind::kMmse);
  CHECK(parse_precoder_kind("zf") == PrecoderKind::kZf);
  CHECK(to_string(PrecoderKind::kZf) == "zf");
  CHECK_THROWS_AS(parse_precoder_kind("mrt"), ConfigError);
}
