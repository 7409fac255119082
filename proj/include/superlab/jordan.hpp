#pragma once

// Jordan chains of a dense matrix for one eigenvalue cluster.
//
// Given an approximate eigenvalue `lambda` of algebraic multiplicity m, the
// generalized eigenspace null((B - lambda I)^m) is computed by SVD, the
// nilpotent part is restricted to it, and chains are built from the top
// (longest first) so that each chain satisfies
//
//   (B - lambda I) v_1 = 0,   (B - lambda I) v_n = v_{n-1}.

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "superlab/error.hpp"

namespace superlab {

template <typename Scalar>
using ChainList = std::vector<std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>>;

namespace detail {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Orthonormal basis of null(M) using the SVD cutoff; the columns are right singular vectors.
template <typename Scalar>
Mat<Scalar> null_space(const Mat<Scalar>& M, double cutoff) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;
  return svd.matrixV().rightCols(M.cols() - rank);
}

}  // namespace detail

/// Chains for the cluster at `lambda`, longest first. `rank_tol` is relative
/// to norm_scale^p for the p-th power of (B - lambda I).
template <typename Scalar>
ChainList<Scalar> jordan_chains(const detail::Mat<Scalar>& B, Scalar lambda, int multiplicity,
                                double norm_scale, double rank_tol = 1e-10) {
  using Mat = detail::Mat<Scalar>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto n = B.rows();
  const int m = multiplicity;
  const double scale = std::max(norm_scale, 1e-300);

  const Mat N = B - lambda * Mat::Identity(n, n);
  Mat P = Mat::Identity(n, n);
  for (int p = 0; p < m; ++p) P = (P * N).eval();

  Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cutoff = rank_tol * std::pow(scale, m);
  Eigen::Index nullity = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) <= cutoff) ++nullity;
  if (nullity != m) {
    std::ostringstream os;
    os << "generalized eigenspace at lambda = " << lambda << " has dimension " << nullity
       << ", expected " << m << " (rank cutoff " << cutoff << ")";
    throw SpectralError(os.str());
  }
  const Mat U = svd.matrixV().rightCols(m);
  const Mat A = U.adjoint() * N * U;  // nilpotent on the invariant subspace

  // kernel bases of A^p, p = 0..v
  std::vector<Mat> kernels{Mat::Zero(m, 0)};
  std::vector<Eigen::Index> dims{0};
  Mat Ap = Mat::Identity(m, m);
  while (dims.back() < m) {
    Ap = (Ap * A).eval();
    const int p = static_cast<int>(dims.size());
    if (p > m) throw SpectralError("Jordan chain construction did not terminate");
    kernels.push_back(detail::null_space<Scalar>(Ap, rank_tol * std::pow(scale, p)));
    dims.push_back(kernels.back().cols());
    if (dims.back() <= dims[dims.size() - 2]) {
      std::ostringstream os;
      os << "rank sequence of (B - lambda I)^p stalled at dimension " << dims.back() << " of " << m
         << " for lambda = " << lambda;
      throw SpectralError(os.str());
    }
  }
  const int depth = static_cast<int>(dims.size()) - 1;

  struct Top {
    Vec x;
    int length;
  };
  std::vector<Top> tops;
  auto level_count = [&](int p) { return p > depth ? Eigen::Index(0) : dims[p] - dims[p - 1]; };
  for (int p = depth; p >= 1; --p) {
    const Eigen::Index need = level_count(p) - level_count(p + 1);
    if (need <= 0) continue;
    // span of ker A^{p-1} plus level-p members of the longer chains
    Mat S(m, kernels[p - 1].cols() + static_cast<Eigen::Index>(tops.size()));
    S.leftCols(kernels[p - 1].cols()) = kernels[p - 1];
    Eigen::Index col = kernels[p - 1].cols();
    for (const auto& t : tops) {
      Vec v = t.x;
      for (int j = 0; j < t.length - p; ++j) v = A * v;
      S.col(col++) = v;
    }
    Mat projected = kernels[p];
    if (S.cols() > 0) {
      Eigen::HouseholderQR<Mat> qr(S);
      const Mat Q = qr.householderQ() * Mat::Identity(m, S.cols());
      projected -= Q * (Q.adjoint() * kernels[p]);
    }
    Eigen::JacobiSVD<Mat> pick(projected, Eigen::ComputeThinU);
    for (Eigen::Index k = 0; k < need; ++k) tops.push_back({pick.matrixU().col(k), p});
  }

  ChainList<Scalar> chains;
  for (const auto& t : tops) {
    std::vector<Vec> chain(static_cast<std::size_t>(t.length));
    Vec v = t.x;
    for (int j = t.length - 1; j >= 0; --j) {
      chain[static_cast<std::size_t>(j)] = U * v;
      v = A * v;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace superlab
