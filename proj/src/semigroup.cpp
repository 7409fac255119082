#include "superlab/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "superlab/jordan.hpp"

namespace superlab {

struct SpectralAccess {
  static void set(SpectralData& sd, Eigen::MatrixXcd basis, Eigen::MatrixXcd inverse) {
    sd.basis_ = std::move(basis);
    sd.inverse_ = std::move(inverse);
  }
};

namespace {

using cplx = std::complex<double>;

double inf_norm(const Eigen::MatrixXd& B) { return B.cwiseAbs().rowwise().sum().maxCoeff(); }

/// Real eigenvector for the real eigenvalue `index` of `es`, sign fixed to be positive.
Eigen::VectorXd real_eigenvector(const Eigen::EigenSolver<Eigen::MatrixXd>& es, Eigen::Index index) {
  Eigen::VectorXcd v = es.eigenvectors().col(index);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::conj(v(imax)) / std::abs(v(imax));
  Eigen::VectorXd r = v.real();
  if (r.sum() < 0.0) r = -r;
  return r;
}

Eigen::Index dominant_index(const Eigen::VectorXcd& ev) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (ev(i).real() > ev(best).real()) best = i;
  return best;
}

struct Cluster {
  cplx center;
  int multiplicity = 0;
};

std::vector<Cluster> cluster_eigenvalues(const Eigen::VectorXcd& ev, double radius) {
  const auto n = static_cast<std::size_t>(ev.size());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(ev(static_cast<Eigen::Index>(i)) - ev(static_cast<Eigen::Index>(j))) <= radius)
        parent[find(i)] = find(j);
  std::vector<Cluster> out;
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    auto it = std::find(roots.begin(), roots.end(), r);
    std::size_t k;
    if (it == roots.end()) {
      roots.push_back(r);
      out.push_back({0.0, 0});
      k = out.size() - 1;
    } else {
      k = static_cast<std::size_t>(it - roots.begin());
    }
    out[k].center += ev(static_cast<Eigen::Index>(i));
    out[k].multiplicity += 1;
  }
  for (auto& c : out) {
    c.center /= static_cast<double>(c.multiplicity);
    if (std::abs(c.center.imag()) <= radius) c.center = {c.center.real(), 0.0};
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    if (a.center.real() != b.center.real()) return a.center.real() > b.center.real();
    return a.center.imag() > b.center.imag();
  });
  return out;
}

/// Scale a chain so the largest-modulus entry of its eigenvector equals 1.
template <typename Vec>
void normalize_chain(std::vector<Vec>& chain) {
  const auto& head = chain.front();
  const double top = head.cwiseAbs().maxCoeff();
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < head.size(); ++i)
    if (std::abs(head(i)) >= top * (1.0 - 1e-12)) {
      idx = i;
      break;
    }
  const auto s = decltype(head(0))(1.0) / head(idx);
  for (auto& v : chain) v *= s;
}

SpectralData decompose_with_radius(const Eigen::MatrixXd& B, const PerronTriplet& trip, double rel_radius) {
  const auto K = B.rows();
  const double normB = std::max(inf_norm(B), 1e-300);
  const double radius = rel_radius * normB;

  Eigen::EigenSolver<Eigen::MatrixXd> es(B, false);
  const std::vector<Cluster> clusters = cluster_eigenvalues(es.eigenvalues(), radius);

  if (clusters.front().multiplicity != 1 || clusters.front().center.imag() != 0.0)
    throw SpectralError("principal eigenvalue is not simple");
  if (clusters.size() > 1 && clusters[1].center.real() >= clusters.front().center.real())
    throw SpectralError("principal eigenvalue is not strictly dominant in real part");

  SpectralData sd;
  sd.lambda1 = trip.lambda1;
  sd.phi = trip.phi;
  sd.phitilde = trip.phitilde;
  sd.norm_B = normB;
  sd.cluster_tolerance = rel_radius;

  const Eigen::MatrixXcd Bc = B.cast<cplx>();
  std::vector<SpectralBlock>& blocks = sd.blocks;
  std::vector<char> done(clusters.size(), 0);

  auto make_block = [&](cplx lambda, const ChainList<cplx>& chains) {
    SpectralBlock blk;
    blk.eigenvalue = lambda;
    int n = 0;
    for (const auto& c : chains) n += static_cast<int>(c.size());
    blk.right.resize(K, n);
    int col = 0;
    for (const auto& c : chains) {
      blk.chain_lengths.push_back(static_cast<int>(c.size()));
      for (const auto& v : c) blk.right.col(col++) = v;
    }
    return blk;
  };

  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    if (done[ci]) continue;
    const Cluster& cl = clusters[ci];
    done[ci] = 1;
    if (ci == 0) {
      ChainList<cplx> chains{{trip.phi.cast<cplx>()}};
      blocks.push_back(make_block(trip.lambda1, chains));
      blocks.back().conjugate = 0;
      continue;
    }
    if (cl.center.imag() == 0.0) {
      auto real_chains = jordan_chains<double>(B, cl.center.real(), cl.multiplicity, normB);
      ChainList<cplx> chains;
      for (auto& c : real_chains) {
        normalize_chain(c);
        std::vector<Eigen::VectorXcd> cc;
        for (const auto& v : c) cc.push_back(v.cast<cplx>());
        chains.push_back(std::move(cc));
      }
      blocks.push_back(make_block(cl.center.real(), chains));
      blocks.back().conjugate = static_cast<int>(blocks.size()) - 1;
      continue;
    }
    // complex cluster: the partner must be the conjugate cluster
    std::size_t partner = clusters.size();
    for (std::size_t cj = ci + 1; cj < clusters.size(); ++cj)
      if (!done[cj] && clusters[cj].multiplicity == cl.multiplicity &&
          std::abs(clusters[cj].center - std::conj(cl.center)) <= radius * cl.multiplicity) {
        partner = cj;
        break;
      }
    if (partner == clusters.size() || cl.center.imag() < 0.0) {
      std::ostringstream os;
      os << "no conjugate partner for eigenvalue cluster at " << cl.center;
      throw SpectralError(os.str());
    }
    done[partner] = 1;
    auto chains = jordan_chains<cplx>(Bc, cl.center, cl.multiplicity, normB);
    for (auto& c : chains) normalize_chain(c);
    ChainList<cplx> conj_chains;
    for (const auto& c : chains) {
      std::vector<Eigen::VectorXcd> cc;
      for (const auto& v : c) cc.push_back(v.conjugate());
      conj_chains.push_back(std::move(cc));
    }
    const int k = static_cast<int>(blocks.size());
    blocks.push_back(make_block(cl.center, chains));
    blocks.push_back(make_block(std::conj(cl.center), conj_chains));
    blocks[static_cast<std::size_t>(k)].conjugate = k + 1;
    blocks[static_cast<std::size_t>(k) + 1].conjugate = k;
  }

  Eigen::MatrixXcd V(K, K);
  Eigen::Index col = 0;
  for (auto& blk : blocks) {
    blk.offset = col;
    V.middleCols(col, blk.size()) = blk.right;
    col += blk.size();
  }
  if (col != K) throw SpectralError("spectral blocks do not span the whole space");

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(V);
  if (!lu.isInvertible()) throw SpectralError("chain basis is singular");
  const double cond = (V.cwiseAbs().rowwise().sum().maxCoeff()) *
                      lu.inverse().cwiseAbs().rowwise().sum().maxCoeff();
  if (!(cond < 1e10)) {
    std::ostringstream os;
    os << "chain basis is ill-conditioned (condition " << cond << ") at cluster radius " << rel_radius
       << " * |B|";
    throw SpectralError(os.str());
  }
  Eigen::MatrixXcd W = lu.inverse();
  for (auto& blk : blocks) blk.dual = W.middleRows(blk.offset, blk.size()).adjoint();
  // exact conjugate symmetry of the duals
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto& blk = blocks[k];
    if (blk.conjugate > static_cast<int>(k)) {
      auto& partner = blocks[static_cast<std::size_t>(blk.conjugate)];
      partner.dual = blk.dual.conjugate();
      W.middleRows(partner.offset, partner.size()) = partner.dual.adjoint();
    }
  }

  // chain action check
  for (const auto& blk : blocks) {
    Eigen::Index c = 0;
    for (int len : blk.chain_lengths) {
      for (int n = 0; n < len; ++n) {
        Eigen::VectorXcd r = Bc * blk.right.col(c + n) - blk.eigenvalue * blk.right.col(c + n);
        if (n > 0) r -= blk.right.col(c + n - 1);
        if (r.cwiseAbs().maxCoeff() > 1e-8 * normB * std::max(1.0, blk.right.col(c + n).cwiseAbs().maxCoeff())) {
          std::ostringstream os;
          os << "Jordan chain residual " << r.cwiseAbs().maxCoeff() << " too large for eigenvalue "
             << blk.eigenvalue << " at cluster radius " << rel_radius << " * |B|";
          throw SpectralError(os.str());
        }
      }
      c += len;
    }
  }

  SpectralAccess::set(sd, std::move(V), std::move(W));
  return sd;
}

}  // namespace

PerronTriplet eigen_triplet(const Eigen::MatrixXd& B) {
  if (B.rows() != B.cols() || B.rows() == 0) throw PreconditionError("eigen_triplet: B must be square");
  if (!B.allFinite()) throw PreconditionError("eigen_triplet: non-finite entry");
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.cols(); ++j)
      if (i != j && B(i, j) < 0.0) throw SpectralError("eigen_triplet: B is not Metzler");
  if (!is_irreducible(B))
    throw SpectralError(
        "eigen_triplet: B is reducible (graph of positive off-diagonal entries is not strongly connected)");

  Eigen::EigenSolver<Eigen::MatrixXd> right(B, true);
  const Eigen::Index ir = dominant_index(right.eigenvalues());
  PerronTriplet out;
  out.lambda1 = right.eigenvalues()(ir).real();
  out.phi = real_eigenvector(right, ir);

  const Eigen::MatrixXd Bt = B.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> left(Bt, true);
  const Eigen::Index il = dominant_index(left.eigenvalues());
  out.phitilde = real_eigenvector(left, il);

  const double tol = 1e-12;
  if ((out.phi.array() <= -tol * out.phi.cwiseAbs().maxCoeff()).any() ||
      (out.phitilde.array() <= -tol * out.phitilde.cwiseAbs().maxCoeff()).any())
    throw SpectralError("eigen_triplet: Perron vectors are not positive");

  out.phi /= out.phi.maxCoeff();
  out.phitilde /= out.phi.dot(out.phitilde);
  out.supercritical = out.lambda1 > 0.0;
  return out;
}

double SpectralData::spectral_gap() const {
  if (blocks.size() < 2) return std::numeric_limits<double>::infinity();
  return lambda1 - blocks[1].eigenvalue.real();
}

Eigen::VectorXcd SpectralData::evolve(double t, const Eigen::VectorXcd& f) const {
  return evolve_coefficients(t, inverse_ * f);
}

Eigen::VectorXcd SpectralData::evolve_coefficients(double t, const Eigen::VectorXcd& c) const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(c.size());
  for (const auto& blk : blocks) {
    const cplx growth = std::exp(blk.eigenvalue * t);
    Eigen::Index base = blk.offset;
    for (int len : blk.chain_lengths) {
      for (int n = 0; n < len; ++n) {
        // n-th component of D(t) c: sum_l t^l / l! c_{n+l}
        cplx acc = 0.0;
        double w = 1.0;
        for (int l = 0; n + l < len; ++l) {
          acc += w * c(base + n + l);
          w *= t / (l + 1);
        }
        out += (growth * acc) * basis_.col(base + n);
      }
      base += len;
    }
  }
  return out;
}

Eigen::VectorXd SpectralData::evolve_real(double t, const Eigen::VectorXd& f) const {
  return evolve(t, f.cast<cplx>()).real();
}

SpectralData spectral_decompose(const Eigen::MatrixXd& B) {
  const PerronTriplet trip = eigen_triplet(B);
  // Defective clusters split by roughly eps^(1/d); widen the radius only when
  // the tight radius yields an inconsistent basis.
  static constexpr double radii[] = {1e-8, 1e-6, 1e-4};
  std::string last_error;
  for (double r : radii) {
    try {
      return decompose_with_radius(B, trip, r);
    } catch (const SpectralError& e) {
      last_error = e.what();
    }
  }
  throw SpectralError("spectral_decompose failed at all cluster radii; last attempt: " + last_error);
}

double delta_t(const SpectralData& spec, const Eigen::MatrixXd& B, double t) {
  if (!(t > 0.0)) throw PreconditionError("delta_t: t must be positive");
  const auto K = B.rows();
  Eigen::MatrixXd M = expm(t * B) * std::exp(-spec.lambda1 * t);
  M = spec.phi.cwiseInverse().asDiagonal() * M;
  M -= Eigen::VectorXd::Ones(K) * spec.phitilde.transpose();
  double best = 0.0;
  for (Eigen::Index x = 0; x < K; ++x) {
    const double pos = M.row(x).cwiseMax(0.0).sum();
    const double neg = -M.row(x).cwiseMin(0.0).sum();
    best = std::max({best, pos, neg});
  }
  return best;
}

}  // namespace superlab
