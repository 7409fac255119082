#pragma once

// Dense matrix exponential: scaling and squaring with diagonal Pade
// approximants of degree 3, 5, 7, 9 or 13 (Higham 2005 thresholds), which
// gives backward error below unit roundoff in double precision.

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "superlab/error.hpp"

namespace superlab {

namespace detail {

template <typename MatrixType>
void pade_uv_low(const MatrixType& A, int degree, MatrixType& U, MatrixType& V) {
  using RealScalar = typename Eigen::NumTraits<typename MatrixType::Scalar>::Real;
  static constexpr std::array<double, 4> b3{120., 60., 12., 1.};
  static constexpr std::array<double, 6> b5{30240., 15120., 3360., 420., 30., 1.};
  static constexpr std::array<double, 8> b7{17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static constexpr std::array<double, 10> b9{17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                             2162160.,     110880.,      3960.,        90.,         1.};
  const double* b = degree == 3 ? b3.data() : degree == 5 ? b5.data() : degree == 7 ? b7.data() : b9.data();
  const auto n = A.rows();
  const MatrixType I = MatrixType::Identity(n, n);
  const MatrixType A2 = A * A;
  MatrixType power = I;
  MatrixType u_even = RealScalar(b[1]) * I;
  MatrixType v_even = RealScalar(b[0]) * I;
  for (int k = 2; k <= degree; k += 2) {
    power = power * A2;
    u_even += RealScalar(b[k + 1]) * power;
    v_even += RealScalar(b[k]) * power;
  }
  U = A * u_even;
  V = v_even;
}

template <typename MatrixType>
void pade_uv_13(const MatrixType& A, MatrixType& U, MatrixType& V) {
  using RealScalar = typename Eigen::NumTraits<typename MatrixType::Scalar>::Real;
  static constexpr std::array<double, 14> b{64764752532480000., 32382376266240000., 7771770303897600.,
                                            1187353796428800.,  129060195264000.,   10559470521600.,
                                            670442572800.,      33522128640.,       1323241920.,
                                            40840800.,          960960.,            16380.,
                                            182.,               1.};
  const auto n = A.rows();
  const MatrixType I = MatrixType::Identity(n, n);
  const MatrixType A2 = A * A;
  const MatrixType A4 = A2 * A2;
  const MatrixType A6 = A4 * A2;
  auto c = [](double x) { return RealScalar(x); };
  const MatrixType W1 = c(b[13]) * A6 + c(b[11]) * A4 + c(b[9]) * A2;
  const MatrixType W2 = c(b[7]) * A6 + c(b[5]) * A4 + c(b[3]) * A2 + c(b[1]) * I;
  U = A * (A6 * W1 + W2);
  const MatrixType Z1 = c(b[12]) * A6 + c(b[10]) * A4 + c(b[8]) * A2;
  V = A6 * Z1 + c(b[6]) * A6 + c(b[4]) * A4 + c(b[2]) * A2 + c(b[0]) * I;
}

}  // namespace detail

/// exp(A) for a square dense matrix of any real or complex scalar type.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> expm(const Eigen::MatrixBase<Derived>& A_in) {
  using Scalar = typename Derived::Scalar;
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A_in.rows() != A_in.cols()) throw PreconditionError("expm: matrix must be square");
  if (!A_in.allFinite()) throw PreconditionError("expm: non-finite matrix entry");
  MatrixType A = A_in;
  const auto n = A.rows();
  if (n == 0) return A;

  const double norm1 = static_cast<double>(A.cwiseAbs().colwise().sum().maxCoeff());
  MatrixType U, V;
  int squarings = 0;
  if (norm1 <= 1.495585217958292e-2) {
    detail::pade_uv_low(A, 3, U, V);
  } else if (norm1 <= 2.539398330063230e-1) {
    detail::pade_uv_low(A, 5, U, V);
  } else if (norm1 <= 9.504178996162932e-1) {
    detail::pade_uv_low(A, 7, U, V);
  } else if (norm1 <= 2.097847961257068) {
    detail::pade_uv_low(A, 9, U, V);
  } else {
    constexpr double theta13 = 5.371920351148152;
    if (norm1 > theta13) {
      squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
      A /= static_cast<typename Eigen::NumTraits<Scalar>::Real>(std::ldexp(1.0, squarings));
    }
    detail::pade_uv_13(A, U, V);
  }
  MatrixType R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) R = (R * R).eval();
  return R;
}

}  // namespace superlab
