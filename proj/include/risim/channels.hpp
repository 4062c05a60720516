#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "risim/errors.hpp"
#include "risim/rng.hpp"

namespace risim::channels {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cxd = std::complex<double>;

/// One narrowband realization of every channel segment in a RIS link:
/// G is the NB->RIS segment (M x N_nb), H_users[k] the RIS->UE segment of
/// user k (N_ue,k x M), D_users[k] the direct NB->UE path (N_ue,k x N_nb,
/// kept all-zero when the link is RIS-only).
struct ChannelSet {
  MatrixXcd G;
  std::vector<MatrixXcd> H_users;
  std::vector<MatrixXcd> D_users;
  double carrier_hz = 0.0;
  std::string seed_tag;

  Index ris_elements() const { return G.rows(); }
  Index nb_antennas() const { return G.cols(); }
  Index user_count() const { return static_cast<Index>(H_users.size()); }

  void validate() const {
    const Index m = G.rows();
    const Index n = G.cols();
    if (m < 1 || n < 1) throw DimensionError("ChannelSet: empty G segment");
    if (H_users.empty()) throw DimensionError("ChannelSet: no users");
    if (!D_users.empty() && D_users.size() != H_users.size())
      throw DimensionError("ChannelSet: D_users/H_users count mismatch");
    for (std::size_t k = 0; k < H_users.size(); ++k) {
      if (H_users[k].cols() != m)
        throw DimensionError("ChannelSet: H_users[" + std::to_string(k) +
                             "] column count != RIS elements");
      if (!D_users.empty() && D_users[k].size() != 0) {
        if (D_users[k].rows() != H_users[k].rows() || D_users[k].cols() != n)
          throw DimensionError("ChannelSet: D_users[" + std::to_string(k) +
                               "] shape inconsistent");
      }
    }
  }
};

/// Rician fading draw with unit average element power:
///   sqrt(k/(k+1)) * 1  +  sqrt(1/(k+1)) * CN(0,1)   (i.i.d. entries).
/// The LOS term is the deterministic all-ones matrix (phase 0 convention);
/// k = 0 gives Rayleigh fading. Deterministic for a given seed.
inline MatrixXcd gen_channel(Index rows, Index cols, double rician_k,
                             std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw DimensionError("gen_channel: dimensions must be >= 1");
  if (!std::isfinite(rician_k) || rician_k < 0.0)
    throw DomainError("gen_channel: rician_k must be finite and >= 0");
  const double los = std::sqrt(rician_k / (rician_k + 1.0));
  const double nlos = std::sqrt(1.0 / (rician_k + 1.0));
  Rng rng(seed);
  MatrixXcd h(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) h(i, j) = los + nlos * rng.cnormal();
  return h;
}

/// Cascaded channel H * Phi * G (+ D). Phi is the effective M x M RIS
/// regulation matrix; D, when present, is the direct NB->UE path.
inline MatrixXcd cascade(const MatrixXcd& H, const MatrixXcd& Phi,
                         const MatrixXcd& G) {
  if (Phi.rows() != Phi.cols())
    throw DimensionError("cascade: Phi must be square");
  if (H.cols() != Phi.rows() || Phi.cols() != G.rows())
    throw DimensionError("cascade: inner dimensions do not match");
  return H * Phi * G;
}

inline MatrixXcd cascade(const MatrixXcd& H, const MatrixXcd& Phi,
                         const MatrixXcd& G, const MatrixXcd& D) {
  MatrixXcd c = cascade(H, Phi, G);
  if (D.size() == 0) return c;
  if (D.rows() != c.rows() || D.cols() != c.cols())
    throw DimensionError("cascade: direct path shape mismatch");
  return c + D;
}

/// Literal block-diagonal multi-user layout: user k's H occupies its own
/// row and column block, off-block entries exactly zero. Result is
/// K x (U*M) with K the total receive antenna count. This is the layout the
/// BD-SVD solver consumes; it is not the physical channel (each user in
/// fact sees all M columns), for that use stack_users().
inline MatrixXcd block_diag_users(const std::vector<MatrixXcd>& users) {
  if (users.empty()) throw DimensionError("block_diag_users: no users");
  const Index m = users.front().cols();
  Index total_rows = 0;
  for (const auto& h : users) {
    if (h.cols() != m)
      throw DimensionError("block_diag_users: users disagree on RIS size");
    total_rows += h.rows();
  }
  MatrixXcd out = MatrixXcd::Zero(total_rows,
                                  m * static_cast<Index>(users.size()));
  Index r = 0, c = 0;
  for (const auto& h : users) {
    out.block(r, c, h.rows(), h.cols()) = h;
    r += h.rows();
    c += h.cols();
  }
  return out;
}

/// Physically consistent multi-user layout: plain vertical stack, K x M.
inline MatrixXcd stack_users(const std::vector<MatrixXcd>& users) {
  if (users.empty()) throw DimensionError("stack_users: no users");
  const Index m = users.front().cols();
  Index total_rows = 0;
  for (const auto& h : users) {
    if (h.cols() != m)
      throw DimensionError("stack_users: users disagree on RIS size");
    total_rows += h.rows();
  }
  MatrixXcd out(total_rows, m);
  Index r = 0;
  for (const auto& h : users) {
    out.middleRows(r, h.rows()) = h;
    r += h.rows();
  }
  return out;
}

/// Delay-domain wideband channel: one matrix per subcarrier, all entries
/// reconstructible from the per-path gains and per-path-per-element delays.
struct WidebandChannelSet {
  std::vector<MatrixXcd> per_subcarrier;
  std::vector<double> f_subcarriers;
  MatrixXd path_delays;  // L paths x (rows*cols) elements, seconds
  VectorXcd path_gains;  // L
  Index rows = 0, cols = 0;

  Index subcarrier_count() const {
    return static_cast<Index>(per_subcarrier.size());
  }
};

/// Entry n (row-major) of the channel at subcarrier m:
///   H_m(n) = sum_l a_l * exp(-j 2 pi f_m Gamma_{l,n}).
/// path_delays holds Gamma, one row per path, one column per element.
inline WidebandChannelSet gen_wideband(const VectorXcd& path_gains,
                                       const MatrixXd& path_delays,
                                       const std::vector<double>& f_subcarriers,
                                       Index rows, Index cols) {
  const Index n_paths = path_gains.size();
  const Index n_elem = rows * cols;
  if (n_paths < 1) throw DimensionError("gen_wideband: need >= 1 path");
  if (f_subcarriers.empty())
    throw DimensionError("gen_wideband: need >= 1 subcarrier");
  if (path_delays.rows() != n_paths || path_delays.cols() != n_elem)
    throw DimensionError("gen_wideband: path_delays must be L x rows*cols");
  if ((path_delays.array() < 0.0).any())
    throw DomainError("gen_wideband: negative path delay");
  for (std::size_t m = 1; m < f_subcarriers.size(); ++m)
    if (!(f_subcarriers[m] > f_subcarriers[m - 1]))
      throw DomainError("gen_wideband: subcarrier frequencies must ascend");

  WidebandChannelSet wb;
  wb.f_subcarriers = f_subcarriers;
  wb.path_delays = path_delays;
  wb.path_gains = path_gains;
  wb.rows = rows;
  wb.cols = cols;
  wb.per_subcarrier.reserve(f_subcarriers.size());
  for (double fm : f_subcarriers) {
    MatrixXcd h(rows, cols);
    for (Index n = 0; n < n_elem; ++n) {
      cxd acc(0.0, 0.0);
      for (Index l = 0; l < n_paths; ++l) {
        const double phase = -2.0 * M_PI * fm * path_delays(l, n);
        acc += path_gains(l) * cxd(std::cos(phase), std::sin(phase));
      }
      h(n / cols, n % cols) = acc;
    }
    wb.per_subcarrier.push_back(std::move(h));
  }
  return wb;
}

/// Uniform-linear-array delay table: element n of path l sees
///   Gamma_{l,n} = base_delay_l + n * spacing_wl * sin(angle_l) / f_c,
/// shifted so every delay stays nonnegative for steering angles < 0.
inline MatrixXd ula_delays(const VectorXd& base_delays, const VectorXd& angles,
                           Index n_elem, double spacing_wl, double f_c) {
  if (base_delays.size() != angles.size())
    throw DimensionError("ula_delays: delays/angles length mismatch");
  if (f_c <= 0.0) throw DomainError("ula_delays: carrier must be positive");
  MatrixXd gamma(base_delays.size(), n_elem);
  for (Index l = 0; l < base_delays.size(); ++l) {
    const double step = spacing_wl * std::sin(angles(l)) / f_c;
    const double lift = step < 0.0 ? -step * static_cast<double>(n_elem - 1) : 0.0;
    for (Index n = 0; n < n_elem; ++n)
      gamma(l, n) = base_delays(l) + lift + step * static_cast<double>(n);
  }
  return gamma;
}

/// Dual-timescale channel state: the NB->RIS segment G is frozen for T_slow
/// slots (RIS deployment is static), the RIS->UE segment H is redrawn every
/// T_fast slots.
struct TimescaleState {
  MatrixXcd G_epoch;
  MatrixXcd H_current;
  long slot_counter = 0;
  // redraw parameters
  Index m_ris = 0, n_nb = 0, n_ue = 0;
  double rician_k = 0.0;
  std::uint64_t master_seed = 0;
};

inline TimescaleState make_timescale(Index m_ris, Index n_nb, Index n_ue,
                                     double rician_k,
                                     std::uint64_t master_seed) {
  TimescaleState s;
  s.m_ris = m_ris;
  s.n_nb = n_nb;
  s.n_ue = n_ue;
  s.rician_k = rician_k;
  s.master_seed = master_seed;
  return s;
}

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Advance one slot. H is redrawn when slot_counter % T_fast == 0, G only
/// when slot_counter % T_slow == 0; within a slow epoch G is bit-identical.
inline TimescaleState advance_timescale(TimescaleState state, long t_slow,
                                        long t_fast) {
  if (t_slow < 1 || t_fast < 1 || t_slow % t_fast != 0)
    throw ConfigError("advance_timescale: T_slow must be a multiple of T_fast");
  const long c = state.slot_counter;
  if (c % t_slow == 0) {
    const std::uint64_t s =
        detail::mix64(state.master_seed ^ detail::mix64(0x51ULL + c / t_slow));
    state.G_epoch = gen_channel(state.m_ris, state.n_nb, state.rician_k, s);
  }
  if (c % t_fast == 0) {
    const std::uint64_t s =
        detail::mix64(state.master_seed ^ detail::mix64(0xfa57ULL + c / t_fast));
    state.H_current = gen_channel(state.n_ue, state.m_ris, state.rician_k, s);
  }
  state.slot_counter = c + 1;
  return state;
}

/// Convenience builder for a full single-or-multi-user realization.
inline ChannelSet make_channel_set(Index m_ris, Index n_nb,
                                   const std::vector<Index>& n_ue_per_user,
                                   double rician_k, double carrier_hz,
                                   std::uint64_t seed, bool with_direct) {
  ChannelSet cs;
  cs.carrier_hz = carrier_hz;
  cs.seed_tag = "seed:" + std::to_string(seed);
  std::uint64_t sub = 0;
  auto next_seed = [&] { return detail::mix64(seed ^ detail::mix64(++sub)); };
  cs.G = gen_channel(m_ris, n_nb, rician_k, next_seed());
  for (Index n_ue : n_ue_per_user) {
    cs.H_users.push_back(gen_channel(n_ue, m_ris, rician_k, next_seed()));
    const std::uint64_t d_seed = next_seed();  // consumed either way
    cs.D_users.push_back(with_direct
                             ? gen_channel(n_ue, n_nb, rician_k, d_seed)
                             : MatrixXcd::Zero(n_ue, n_nb));
  }
  cs.validate();
  return cs;
}

}  // namespace risim::channels
