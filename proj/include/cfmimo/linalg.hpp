#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace cfmimo {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Natural log-determinant of a Hermitian positive-definite matrix via Cholesky.
// Throws NumericError if the factorization fails.
double hermitian_logdet(const CMatrix& a);

}  // namespace cfmimo
