#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "risim/channels.hpp"
#include "risim/errors.hpp"

namespace risim::beamforming {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cxd = std::complex<double>;

enum class ConstraintMode { IdealUnconstrained, UnitModulusDiagonal, Quantized };

/// RIS tuning state. Physically the surface applies one complex coefficient
/// per element (diagonal, |coeff| <= 1 for a passive surface); the ideal
/// unconstrained mode keeps the full M x M matrix the decoupling solver
/// produces, for comparison against the realizable projection.
struct RegulationMatrix {
  VectorXcd coefficients;       // per-element, diagonal modes
  MatrixXcd full;               // ideal-unconstrained mode
  ConstraintMode mode = ConstraintMode::UnitModulusDiagonal;
  int quant_bits = 0;
  double amplitude_cap = 1.0;
  bool had_zero_diagonal = false;  // set when a projected entry had no phase

  Index size() const {
    return mode == ConstraintMode::IdealUnconstrained ? full.rows()
                                                      : coefficients.size();
  }

  /// Effective M x M matrix as seen by the cascade.
  MatrixXcd matrix() const {
    if (mode == ConstraintMode::IdealUnconstrained) return full;
    return MatrixXcd(coefficients.asDiagonal());
  }

  static RegulationMatrix identity(Index m) {
    RegulationMatrix r;
    r.coefficients = VectorXcd::Ones(m);
    r.mode = ConstraintMode::UnitModulusDiagonal;
    return r;
  }

  /// All-zero reflection (surface off).
  static RegulationMatrix off(Index m) {
    RegulationMatrix r;
    r.coefficients = VectorXcd::Zero(m);
    r.mode = ConstraintMode::IdealUnconstrained;
    r.full = MatrixXcd::Zero(m, m);
    return r;
  }

  static RegulationMatrix from_phases(const VectorXd& phases) {
    RegulationMatrix r;
    r.coefficients.resize(phases.size());
    for (Index n = 0; n < phases.size(); ++n)
      r.coefficients(n) = cxd(std::cos(phases(n)), std::sin(phases(n)));
    r.mode = ConstraintMode::UnitModulusDiagonal;
    return r;
  }

  void validate() const {
    if (mode == ConstraintMode::UnitModulusDiagonal) {
      for (Index n = 0; n < coefficients.size(); ++n)
        if (std::abs(std::abs(coefficients(n)) - 1.0) > 1e-12)
          throw DomainError("RegulationMatrix: unit-modulus violated");
    } else if (mode == ConstraintMode::Quantized) {
      const double step = 2.0 * M_PI / static_cast<double>(1 << quant_bits);
      for (Index n = 0; n < coefficients.size(); ++n) {
        if (std::abs(std::abs(coefficients(n)) - 1.0) > 1e-12)
          throw DomainError("RegulationMatrix: unit-modulus violated");
        double p = std::arg(coefficients(n));
        if (p < 0) p += 2.0 * M_PI;
        const double q = p / step;
        if (std::abs(q - std::round(q)) > 1e-9)
          throw DomainError("RegulationMatrix: phase off the quantizer grid");
      }
    }
  }
};

namespace detail {

/// Rotate each singular-vector pair so the first nonzero entry of the U
/// column is real-positive; V gets the matching rotation so U S V^H is
/// unchanged. Removes the SVD phase ambiguity, making results reproducible.
inline void canonicalize_svd(MatrixXcd& u, MatrixXcd& v) {
  const Index pairs = std::min(u.cols(), v.cols());
  for (Index i = 0; i < pairs; ++i) {
    Index k = 0;
    while (k < u.rows() && std::abs(u(k, i)) < 1e-14) ++k;
    if (k == u.rows()) continue;
    const cxd rot = std::conj(u(k, i)) / std::abs(u(k, i));
    u.col(i) *= rot;
    v.col(i) *= rot;
  }
  // Columns beyond the shared count carry an independent phase freedom.
  for (Index i = pairs; i < u.cols(); ++i) {
    Index k = 0;
    while (k < u.rows() && std::abs(u(k, i)) < 1e-14) ++k;
    if (k < u.rows()) u.col(i) *= std::conj(u(k, i)) / std::abs(u(k, i));
  }
  for (Index i = pairs; i < v.cols(); ++i) {
    Index k = 0;
    while (k < v.rows() && std::abs(v(k, i)) < 1e-14) ++k;
    if (k < v.rows()) v.col(i) *= std::conj(v(k, i)) / std::abs(v(k, i));
  }
}

struct CanonicalSvd {
  MatrixXcd u;
  VectorXd sigma;
  MatrixXcd v;
};

inline CanonicalSvd svd_full(const MatrixXcd& a) {
  Eigen::JacobiSVD<MatrixXcd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  CanonicalSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  canonicalize_svd(out.u, out.v);
  return out;
}

}  // namespace detail

/// Result of the cascade-decoupling solve: Phi2*Phi1 is the full RIS
/// regulation matrix, F/U the NB precoder and UE combiner, and the effective
/// channel U^H H Phi2 Phi1 G F is diagonal with the per-segment singular
/// value products.
struct DecoupledSolution {
  MatrixXcd phi1;      // M x M, receive response
  MatrixXcd phi2;      // M x M, outgoing regulation
  MatrixXcd precoder;  // F: N_nb x S
  MatrixXcd combiner;  // U: K x S
  VectorXd sigma_g;
  VectorXd sigma_h;
  Index streams = 0;

  MatrixXcd compose() const { return phi2 * phi1; }

  MatrixXcd effective(const MatrixXcd& G, const MatrixXcd& H) const {
    return combiner.adjoint() * H * phi2 * phi1 * G * precoder;
  }
};

/// Per-segment SVD decoupling. With G = Ug Sg Vg^H and H = Uh Sh Vh^H the
/// assignment Phi1 = Ug^H, Phi2 = Vh, F = Vg, U = Uh makes
///   U^H H Phi2 Phi1 G F = Sh Sg,
/// i.e. the cascade is exactly diagonalized while each segment is still
/// solved independently. `paper_literal` instead assigns Phi1 = Vg and
/// Phi2 = Vh^H as stated alongside the SVD equations; that variant only
/// typechecks for square segments and does not diagonalize -- it is kept
/// for side-by-side comparison.
inline DecoupledSolution decouple_bd_svd(const MatrixXcd& G, const MatrixXcd& H,
                                         Index streams = -1,
                                         bool paper_literal = false) {
  if (G.rows() != H.cols())
    throw DimensionError("decouple_bd_svd: G rows must equal H cols");
  const auto sg = detail::svd_full(G);
  const auto sh = detail::svd_full(H);
  if (sg.sigma.size() == 0 || sg.sigma(0) <= 0.0 || sh.sigma.size() == 0 ||
      sh.sigma(0) <= 0.0)
    throw DegenerateChannelError("decouple_bd_svd: rank-0 segment");

  const Index s_max = std::min({G.cols(), H.rows(), G.rows()});
  const Index s = (streams < 1) ? s_max : std::min(streams, s_max);

  DecoupledSolution sol;
  sol.sigma_g = sg.sigma;
  sol.sigma_h = sh.sigma;
  sol.streams = s;
  sol.precoder = sg.v.leftCols(s);
  sol.combiner = sh.u.leftCols(s);
  if (paper_literal) {
    if (G.rows() != G.cols() || H.rows() != H.cols())
      throw DimensionError(
          "decouple_bd_svd: literal assignment needs square segments");
    sol.phi1 = sg.v;
    sol.phi2 = sh.v.adjoint();
  } else {
    sol.phi1 = sg.u.adjoint();
    sol.phi2 = sh.v;
  }
  return sol;
}

/// Single-antenna commutation identity: h diag(phi) g == phi^T diag(h) g.
/// Returns both sides so callers can check the reordering that lets the
/// compound channel be decomposed before solving for the phases.
inline std::pair<RowVectorXcd, RowVectorXcd> single_antenna_reorder(
    const RowVectorXcd& h, const VectorXcd& phi, const MatrixXcd& g) {
  if (h.size() != phi.size() || phi.size() != g.rows())
    throw DimensionError("single_antenna_reorder: length mismatch");
  const RowVectorXcd lhs = h * phi.asDiagonal() * g;
  const RowVectorXcd rhs =
      phi.transpose() * MatrixXcd(h.transpose().asDiagonal()) * g;
  return {lhs, rhs};
}

/// Project the solver's full matrix onto a realizable surface state: take
/// the diagonal, force unit modulus, optionally snap phases to a 2^bits
/// uniform grid (ties toward the smaller phase index). A zero diagonal
/// entry has no phase; it maps to phase 0 and sets had_zero_diagonal.
inline RegulationMatrix project_constraint(const MatrixXcd& phi_full,
                                           ConstraintMode target,
                                           int bits = 0) {
  if (phi_full.rows() != phi_full.cols())
    throw DimensionError("project_constraint: matrix must be square");
  if (target == ConstraintMode::IdealUnconstrained)
    throw ConfigError("project_constraint: target must be a physical mode");
  if (target == ConstraintMode::Quantized && (bits < 1 || bits > 16))
    throw ConfigError("project_constraint: bits out of range");

  RegulationMatrix reg;
  reg.mode = target;
  reg.quant_bits = (target == ConstraintMode::Quantized) ? bits : 0;
  const Index m = phi_full.rows();
  reg.coefficients.resize(m);
  for (Index n = 0; n < m; ++n) {
    const cxd d = phi_full(n, n);
    double phase = (d == cxd(0.0, 0.0)) ? 0.0 : std::arg(d);
    if (d == cxd(0.0, 0.0)) reg.had_zero_diagonal = true;
    if (target == ConstraintMode::Quantized) {
      const long levels = 1L << bits;
      const double step = 2.0 * M_PI / static_cast<double>(levels);
      if (phase < 0) phase += 2.0 * M_PI;
      long idx = static_cast<long>(std::ceil(phase / step - 0.5));
      idx = ((idx % levels) + levels) % levels;
      phase = static_cast<double>(idx) * step;
    }
    reg.coefficients(n) = cxd(std::cos(phase), std::sin(phase));
  }
  return reg;
}

struct OracleResult {
  std::vector<int> phase_indices;  // per element, on the 2^bits grid
  VectorXd phases;
  double gain = 0.0;
};

/// Brute-force verification oracle for the SISO-via-RIS link: enumerates
/// every phase-index vector on the 2^bits grid and maximizes
/// |sum_n h_n e^{j theta_n} g_n|^2. Ties go to the lexicographically
/// smallest index vector. Guarded to M <= 12, bits in {1, 2}.
inline OracleResult exhaustive_oracle(const RowVectorXcd& h,
                                      const VectorXcd& g, int bits) {
  const Index m = h.size();
  if (g.size() != m) throw DimensionError("exhaustive_oracle: h/g mismatch");
  if (m < 1 || m > 12)
    throw ConfigError("exhaustive_oracle: M out of tractable range");
  if (bits != 1 && bits != 2)
    throw ConfigError("exhaustive_oracle: bits must be 1 or 2");

  const int levels = 1 << bits;
  const double step = 2.0 * M_PI / levels;
  std::vector<cxd> grid(levels);
  for (int i = 0; i < levels; ++i)
    grid[i] = cxd(std::cos(i * step), std::sin(i * step));
  std::vector<cxd> hg(m);
  for (Index n = 0; n < m; ++n) hg[n] = h(n) * g(n);

  const std::uint64_t total = 1ULL << (static_cast<unsigned>(bits) * m);
  OracleResult best;
  best.gain = -1.0;
  std::vector<int> idx(m, 0);
  for (std::uint64_t code = 0; code < total; ++code) {
    // decode most-significant-first so iteration order is lexicographic
    std::uint64_t c = code;
    for (Index n = m; n-- > 0;) {
      idx[n] = static_cast<int>(c & (levels - 1));
      c >>= bits;
    }
    cxd acc(0.0, 0.0);
    for (Index n = 0; n < m; ++n) acc += hg[n] * grid[idx[n]];
    const double gain = std::norm(acc);
    if (gain > best.gain) {
      best.gain = gain;
      best.phase_indices = idx;
    }
  }
  best.phases.resize(m);
  for (Index n = 0; n < m; ++n)
    best.phases(n) = best.phase_indices[n] * step;
  return best;
}

/// Equal-power MIMO capacity, log2 det(I + (snr/N_tx) H H^H) bits/s/Hz.
/// No water-filling; capacity comparisons stay solver-neutral.
inline double capacity(const MatrixXcd& h_eff, double snr_linear) {
  if (snr_linear < 0.0) throw DomainError("capacity: snr must be >= 0");
  if (!h_eff.allFinite()) throw NumericError("capacity: non-finite channel");
  if (h_eff.size() == 0) return 0.0;
  const double c = snr_linear / static_cast<double>(h_eff.cols());
  const MatrixXcd a = MatrixXcd::Identity(h_eff.rows(), h_eff.rows()) +
                      c * h_eff * h_eff.adjoint();
  const Eigen::LLT<MatrixXcd> llt(a);
  double log2det = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    log2det += 2.0 * std::log2(std::real(llt.matrixL()(i, i)));
  return log2det;
}

/// Capacity with the own-surface tuning divided by capacity with the tuning
/// actually applied; > 1 means the applied tuning costs this user. +inf when
/// the applied tuning yields zero capacity.
inline double tuning_loss(const MatrixXcd& H, const MatrixXcd& G,
                          const MatrixXcd& D, const MatrixXcd& theta_used,
                          const MatrixXcd& theta_own_optimal, double snr) {
  if (theta_used.rows() != theta_own_optimal.rows() ||
      theta_used.cols() != theta_own_optimal.cols())
    throw DimensionError("tuning_loss: theta shape mismatch");
  const double c_opt =
      capacity(channels::cascade(H, theta_own_optimal, G, D), snr);
  const double c_used = capacity(channels::cascade(H, theta_used, G, D), snr);
  if (c_used <= 0.0) return std::numeric_limits<double>::infinity();
  return c_opt / c_used;
}

}  // namespace risim::beamforming
