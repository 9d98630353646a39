// emoconv/registration.hpp

// Copyright 2026  The emoconv authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOCONV_REGISTRATION_HPP_
#define EMOCONV_REGISTRATION_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "emoconv/contour.hpp"
#include "emoconv/errors.hpp"

namespace emoconv {

enum class KernelMode { kTimeOnly, kTimeValue };

/// Gaussian kernel over frame indices; in time-value mode the kernel also
/// decays with the vertical (Hz) distance between contour samples.
struct KernelSpec {
  KernelMode mode = KernelMode::kTimeOnly;
  double sigma_t = 8.0;   // frames
  double sigma_q = 30.0;  // Hz, time-value mode only
  double jitter = 1e-8;   // ridge added to the Gram diagonal

  void validate() const {
    if (!(sigma_t > 0.0)) throw ConfigError("kernel sigma_t must be > 0");
    if (mode == KernelMode::kTimeValue && !(sigma_q > 0.0))
      throw ConfigError("kernel sigma_q must be > 0 in time-value mode");
    if (jitter < 0.0) throw ConfigError("kernel jitter must be >= 0");
  }
};

struct RegistrationConfig {
  KernelSpec kernel;
  double lambda = 10.0;    // endpoint data-fidelity weight
  int steps = 20;          // RK4 subdivisions of s in [0, 1]
  int max_iters = 500;
  double grad_tol = 1e-6;  // terminate when the sup-norm gradient drops below
  double step_init = 1.0;  // first line-search trial step

  void validate() const {
    kernel.validate();
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (!(grad_tol > 0.0)) throw ConfigError("grad_tol must be > 0");
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (!(step_init > 0.0)) throw ConfigError("step_init must be > 0");
  }
};

/// Full geodesic: landmark positions and momenta at each of the steps+1
/// discretization nodes, plus the Hamiltonian at each node.
struct Trajectory {
  Eigen::MatrixXd q;  // (steps+1) x T
  Eigen::MatrixXd m;  // (steps+1) x T
  std::vector<double> hamiltonian;
};

enum class SolveStatus { kConverged, kMaxIters, kStagnated };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIters: return "max_iters";
    case SolveStatus::kStagnated: return "stagnated";
  }
  return "unknown";
}

struct RegistrationResult {
  Momenta momenta;
  F0Contour warped;
  std::vector<double> energy_trace;  // accepted iterations, non-increasing
  double endpoint_mse = 0.0;
  SolveStatus status = SolveStatus::kConverged;
  int iterations = 0;
  bool warn_invertibility = false;  // time-value mode: sampled warp
                                    // derivative crossed zero
};

namespace detail {

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw NumericError(std::string(what) + ": non-finite value at index " +
                         std::to_string(i));
}

}  // namespace detail

/// Gram matrix of the kernel over the given frame indices (and contour values
/// in time-value mode). Diagonal carries the ridge: G(i,i) = 1 + jitter.
inline Eigen::MatrixXd gram_matrix(const std::vector<double>& t_indices,
                                   const std::vector<double>& values,
                                   const KernelSpec& kernel) {
  kernel.validate();
  if (t_indices.empty() || t_indices.size() != values.size())
    throw ShapeError("gram_matrix: " + std::to_string(t_indices.size()) +
                     " indices vs " + std::to_string(values.size()) +
                     " values");
  detail::require_finite(t_indices, "gram_matrix indices");
  detail::require_finite(values, "gram_matrix values");
  const auto n = static_cast<Eigen::Index>(t_indices.size());
  const double inv2st = 1.0 / (2.0 * kernel.sigma_t * kernel.sigma_t);
  const double inv2sq = kernel.mode == KernelMode::kTimeValue
                            ? 1.0 / (2.0 * kernel.sigma_q * kernel.sigma_q)
                            : 0.0;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = 1.0 + kernel.jitter;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dt = t_indices[i] - t_indices[j];
      double k = std::exp(-dt * dt * inv2st);
      if (kernel.mode == KernelMode::kTimeValue) {
        const double dq = values[i] - values[j];
        k *= std::exp(-dq * dq * inv2sq);
      }
      g(i, j) = k;
      g(j, i) = k;
    }
  }
  return g;
}

/// Gram matrix on the integer frame grid 0..T-1 of a contour.
inline Eigen::MatrixXd gram_matrix(const std::vector<double>& values,
                                   const KernelSpec& kernel) {
  std::vector<double> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx[i] = static_cast<double>(i);
  return gram_matrix(idx, values, kernel);
}

namespace detail {

// Hamiltonian right-hand side and its vector-Jacobian product for the
// time-value kernel. The time-only specialization (dm/ds = 0, K constant)
// is handled by the callers directly.
struct HamiltonianField {
  Eigen::MatrixXd time_part;  // exp(-(i-j)^2 / 2 sigma_t^2), unit diagonal
  double jitter;
  double inv_sq2;  // 1 / sigma_q^2
  KernelSpec kernel;

  explicit HamiltonianField(std::size_t n, const KernelSpec& k) : kernel(k) {
    jitter = k.jitter;
    inv_sq2 = 1.0 / (k.sigma_q * k.sigma_q);
    const auto ni = static_cast<Eigen::Index>(n);
    const double inv2st = 1.0 / (2.0 * k.sigma_t * k.sigma_t);
    time_part.resize(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
      time_part(i, i) = 1.0;
      for (Eigen::Index j = i + 1; j < ni; ++j) {
        const double dt = static_cast<double>(i - j);
        const double a = std::exp(-dt * dt * inv2st);
        time_part(i, j) = a;
        time_part(j, i) = a;
      }
    }
  }

  Eigen::MatrixXd kernel_at(const Eigen::VectorXd& q) const {
    const Eigen::Index n = q.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, i) = 1.0 + jitter;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double dq = q(i) - q(j);
        const double v = time_part(i, j) * std::exp(-0.5 * dq * dq * inv_sq2);
        k(i, j) = v;
        k(j, i) = v;
      }
    }
    return k;
  }

  double hamiltonian(const Eigen::VectorXd& q, const Eigen::VectorXd& m) const {
    return 0.5 * m.dot(kernel_at(q) * m);
  }

  // dq/ds = K(q) m;  dm_i/ds = (m_i / sigma_q^2) sum_j K_ij m_j (q_i - q_j)
  void rhs(const Eigen::VectorXd& q, const Eigen::VectorXd& m,
           Eigen::VectorXd& dq, Eigen::VectorXd& dm) const {
    const Eigen::Index n = q.size();
    dq.setZero(n);
    dm.setZero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double u = (1.0 + jitter) * m(i);  // j == i self term
      double w = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = q(i) - q(j);
        const double k = time_part(i, j) * std::exp(-0.5 * d * d * inv_sq2);
        u += k * m(j);
        w += k * m(j) * d;
      }
      dq(i) = u;
      dm(i) = m(i) * inv_sq2 * w;
    }
  }

  // Accumulates the vector-Jacobian product of rhs into (q_bar, m_bar):
  // given cotangents (a, b) of (dq, dm), adds (a, b)^T d(rhs)/d(q, m).
  void rhs_vjp(const Eigen::VectorXd& q, const Eigen::VectorXd& m,
               const Eigen::VectorXd& a, const Eigen::VectorXd& b,
               Eigen::VectorXd& q_bar, Eigen::VectorXd& m_bar) const {
    const Eigen::Index n = q.size();
    // Recompute w_i = sum_j K_ij m_j (q_i - q_j), needed by the dm_i path.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = q(i) - q(j);
        const double k = time_part(i, j) * std::exp(-0.5 * d * d * inv_sq2);
        w(i) += k * m(j) * d;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      // r_i = m_i * inv_sq2 * w_i
      m_bar(i) += b(i) * inv_sq2 * w(i);
      const double w_bar = b(i) * m(i) * inv_sq2;
      m_bar(i) += a(i) * (1.0 + jitter);  // self term of u_i
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = q(i) - q(j);
        const double k = time_part(i, j) * std::exp(-0.5 * d * d * inv_sq2);
        // u_i += k m_j ; w_i += k m_j d
        m_bar(j) += a(i) * k + w_bar * k * d;
        const double k_bar = a(i) * m(j) + w_bar * m(j) * d;
        const double pair_grad = w_bar * k * m(j) - k_bar * k * d * inv_sq2;
        q_bar(i) += pair_grad;
        q_bar(j) -= pair_grad;
      }
    }
  }
};

struct Rk4Stages {
  // Stage inputs y1..y4 and stage slopes k1..k4 for one step.
  Eigen::VectorXd q[4], m[4], kq[4], km[4];
};

}  // namespace detail

/// Integrates the canonical Hamiltonian system dq/ds = dH/dm, dm/ds = -dH/dq
/// with classical RK4 from (p_A, m0) over s in [0, 1].
inline Trajectory shoot(const F0Contour& p_a, const Momenta& m0,
                        const KernelSpec& kernel, int steps) {
  kernel.validate();
  if (steps < 1) throw ConfigError("shoot: steps must be >= 1");
  if (p_a.size() != m0.size() || p_a.size() == 0)
    throw ShapeError("shoot: contour length " + std::to_string(p_a.size()) +
                     " vs momenta length " + std::to_string(m0.size()));
  detail::require_finite(p_a.values, "shoot contour");
  detail::require_finite(m0.values, "shoot momenta");

  const auto n = static_cast<Eigen::Index>(p_a.size());
  Trajectory traj;
  traj.q.resize(steps + 1, n);
  traj.m.resize(steps + 1, n);
  traj.hamiltonian.resize(steps + 1);

  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(p_a.values.data(), n);
  Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(m0.values.data(), n);
  const double h = 1.0 / steps;

  if (kernel.mode == KernelMode::kTimeOnly) {
    // K does not depend on q: dm/ds = 0 and dq/ds = G m is constant, so every
    // RK4 stage coincides and each step advances q by h * G m exactly.
    const Eigen::MatrixXd g = gram_matrix(p_a.values, kernel);
    const Eigen::VectorXd gm = g * m;
    const double ham = 0.5 * m.dot(gm);
    for (int k = 0; k <= steps; ++k) {
      traj.q.row(k) = q.transpose();
      traj.m.row(k) = m.transpose();
      traj.hamiltonian[k] = ham;
      if (k < steps) q += h * gm;
    }
    traj.q.row(steps) = q.transpose();
    return traj;
  }

  detail::HamiltonianField field(p_a.size(), kernel);
  Eigen::VectorXd dq(n), dm(n), qt(n), mt(n);
  detail::Rk4Stages st;
  for (int k = 0; k < steps; ++k) {
    traj.q.row(k) = q.transpose();
    traj.m.row(k) = m.transpose();
    traj.hamiltonian[k] = field.hamiltonian(q, m);
    Eigen::VectorXd sum_q = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sum_m = Eigen::VectorXd::Zero(n);
    static constexpr double stage_shift[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double stage_weight[4] = {1.0, 2.0, 2.0, 1.0};
    Eigen::VectorXd prev_kq, prev_km;
    for (int s = 0; s < 4; ++s) {
      if (s == 0) {
        qt = q;
        mt = m;
      } else {
        qt = q + h * stage_shift[s] * prev_kq;
        mt = m + h * stage_shift[s] * prev_km;
      }
      field.rhs(qt, mt, dq, dm);
      sum_q += stage_weight[s] * dq;
      sum_m += stage_weight[s] * dm;
      prev_kq = dq;
      prev_km = dm;
    }
    q += (h / 6.0) * sum_q;
    m += (h / 6.0) * sum_m;
    if (!q.allFinite() || !m.allFinite())
      throw NumericError("shoot: divergence at step " + std::to_string(k + 1));
  }
  traj.q.row(steps) = q.transpose();
  traj.m.row(steps) = m.transpose();
  traj.hamiltonian[steps] = field.hamiltonian(q, m);
  return traj;
}

namespace detail {

// Endpoint q(1) plus per-step stage caches for the reverse sweep.
struct ShootCache {
  Eigen::VectorXd q1, m1;
  std::vector<Rk4Stages> stages;  // time-value mode only
};

inline void shoot_forward_cached(const HamiltonianField& field,
                                 const Eigen::VectorXd& q0,
                                 const Eigen::VectorXd& m0, int steps,
                                 ShootCache& cache) {
  const Eigen::Index n = q0.size();
  const double h = 1.0 / steps;
  Eigen::VectorXd q = q0, m = m0, dq(n), dm(n);
  cache.stages.assign(steps, Rk4Stages{});
  static constexpr double stage_shift[4] = {0.0, 0.5, 0.5, 1.0};
  static constexpr double stage_weight[4] = {1.0, 2.0, 2.0, 1.0};
  for (int k = 0; k < steps; ++k) {
    Rk4Stages& st = cache.stages[k];
    Eigen::VectorXd sum_q = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sum_m = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < 4; ++s) {
      if (s == 0) {
        st.q[s] = q;
        st.m[s] = m;
      } else {
        st.q[s] = q + h * stage_shift[s] * st.kq[s - 1];
        st.m[s] = m + h * stage_shift[s] * st.km[s - 1];
      }
      field.rhs(st.q[s], st.m[s], dq, dm);
      st.kq[s] = dq;
      st.km[s] = dm;
      sum_q += stage_weight[s] * dq;
      sum_m += stage_weight[s] * dm;
    }
    q += (h / 6.0) * sum_q;
    m += (h / 6.0) * sum_m;
    if (!q.allFinite() || !m.allFinite())
      throw NumericError("shoot: divergence at step " + std::to_string(k + 1));
  }
  cache.q1 = q;
  cache.m1 = m;
}

// Reverse (adjoint) sweep: given cotangents of (q(1), m(1)), returns the
// cotangents of (q(0), m(0)). Exact reverse of the discrete RK4 recursion.
inline void shoot_backward(const HamiltonianField& field,
                           const ShootCache& cache, int steps,
                           Eigen::VectorXd& q_bar, Eigen::VectorXd& m_bar) {
  const double h = 1.0 / steps;
  static constexpr double stage_shift[4] = {0.0, 0.5, 0.5, 1.0};
  static constexpr double stage_weight[4] = {1.0, 2.0, 2.0, 1.0};
  const Eigen::Index n = q_bar.size();
  for (int k = steps - 1; k >= 0; --k) {
    const Rk4Stages& st = cache.stages[k];
    Eigen::VectorXd kq_bar[4], km_bar[4];
    for (int s = 0; s < 4; ++s) {
      kq_bar[s] = (h / 6.0) * stage_weight[s] * q_bar;
      km_bar[s] = (h / 6.0) * stage_weight[s] * m_bar;
    }
    for (int s = 3; s >= 0; --s) {
      Eigen::VectorXd yq_bar = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd ym_bar = Eigen::VectorXd::Zero(n);
      field.rhs_vjp(st.q[s], st.m[s], kq_bar[s], km_bar[s], yq_bar, ym_bar);
      q_bar += yq_bar;
      m_bar += ym_bar;
      if (s > 0) {
        kq_bar[s - 1] += h * stage_shift[s] * yq_bar;
        km_bar[s - 1] += h * stage_shift[s] * ym_bar;
      }
    }
  }
}

// Shared scaffolding for energy and gradient evaluations of one pair.
struct RegistrationProblem {
  Eigen::VectorXd p_a, p_b;
  RegistrationConfig config;
  Eigen::MatrixXd gram;  // kernel Gram at the source contour
  bool time_only;
  HamiltonianField field;

  RegistrationProblem(const F0Contour& a, const F0Contour& b,
                      const RegistrationConfig& cfg)
      : config(cfg), field(a.size(), cfg.kernel) {
    cfg.validate();
    if (a.size() != b.size() || a.size() == 0)
      throw ShapeError("registration: source length " +
                       std::to_string(a.size()) + " vs target length " +
                       std::to_string(b.size()));
    require_finite(a.values, "registration source");
    require_finite(b.values, "registration target");
    const auto n = static_cast<Eigen::Index>(a.size());
    p_a = Eigen::Map<const Eigen::VectorXd>(a.values.data(), n);
    p_b = Eigen::Map<const Eigen::VectorXd>(b.values.data(), n);
    gram = gram_matrix(a.values, cfg.kernel);
    time_only = cfg.kernel.mode == KernelMode::kTimeOnly;
  }

  Eigen::Index size() const { return p_a.size(); }

  Eigen::VectorXd endpoint(const Eigen::VectorXd& m0) const {
    if (time_only) return p_a + gram * m0;
    ShootCache cache;
    shoot_forward_cached(field, p_a, m0, config.steps, cache);
    return cache.q1;
  }

  double energy(const Eigen::VectorXd& m0) const {
    const Eigen::VectorXd q1 = endpoint(m0);
    const Eigen::VectorXd r = q1 - p_b;
    return 0.5 * m0.dot(gram * m0) + config.lambda * r.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& m0) const {
    if (time_only) {
      const Eigen::VectorXd r = p_a + gram * m0 - p_b;
      return gram * (m0 + 2.0 * config.lambda * r);
    }
    ShootCache cache;
    shoot_forward_cached(field, p_a, m0, config.steps, cache);
    Eigen::VectorXd q_bar = 2.0 * config.lambda * (cache.q1 - p_b);
    Eigen::VectorXd m_bar = Eigen::VectorXd::Zero(size());
    shoot_backward(field, cache, config.steps, q_bar, m_bar);
    return gram * m0 + m_bar;
  }
};

}  // namespace detail

/// Value of the momenta objective: 0.5 m0' G m0 + lambda * |q(1) - p_B|^2.
inline double energy(const Momenta& m0, const F0Contour& p_a,
                     const F0Contour& p_b, const RegistrationConfig& config) {
  detail::RegistrationProblem prob(p_a, p_b, config);
  if (m0.size() != p_a.size())
    throw ShapeError("energy: momenta length " + std::to_string(m0.size()) +
                     " vs contour length " + std::to_string(p_a.size()));
  detail::require_finite(m0.values, "energy momenta");
  return prob.energy(Eigen::Map<const Eigen::VectorXd>(
      m0.values.data(), static_cast<Eigen::Index>(m0.size())));
}

/// Exact gradient of the discrete objective with respect to the initial
/// momenta. Time-only kernels use the closed linear form; time-value kernels
/// run the adjoint sweep through the stored RK4 stages.
inline Momenta energy_gradient(const Momenta& m0, const F0Contour& p_a,
                               const F0Contour& p_b,
                               const RegistrationConfig& config) {
  detail::RegistrationProblem prob(p_a, p_b, config);
  if (m0.size() != p_a.size())
    throw ShapeError("energy_gradient: momenta length " +
                     std::to_string(m0.size()) + " vs contour length " +
                     std::to_string(p_a.size()));
  detail::require_finite(m0.values, "energy_gradient momenta");
  const Eigen::VectorXd g = prob.gradient(Eigen::Map<const Eigen::VectorXd>(
      m0.values.data(), static_cast<Eigen::Index>(m0.size())));
  Momenta out;
  out.values.assign(g.data(), g.data() + g.size());
  return out;
}

/// Direct solve of the time-only optimality system (I + 2 lambda G) m =
/// 2 lambda (p_B - p_A) by Cholesky factorization with one refinement pass.
inline Momenta solve_momenta_closed_form(const F0Contour& p_a,
                                         const F0Contour& p_b,
                                         const KernelSpec& kernel,
                                         double lambda) {
  kernel.validate();
  if (kernel.mode != KernelMode::kTimeOnly)
    throw ConfigError(
        "solve_momenta_closed_form supports only the time-only kernel");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (p_a.size() != p_b.size() || p_a.size() == 0)
    throw ShapeError("closed form: source length " +
                     std::to_string(p_a.size()) + " vs target length " +
                     std::to_string(p_b.size()));
  detail::require_finite(p_a.values, "closed form source");
  detail::require_finite(p_b.values, "closed form target");

  const auto n = static_cast<Eigen::Index>(p_a.size());
  const Eigen::MatrixXd g = gram_matrix(p_a.values, kernel);
  Eigen::MatrixXd a = 2.0 * lambda * g;
  a.diagonal().array() += 1.0;
  const Eigen::VectorXd rhs =
      2.0 * lambda *
      (Eigen::Map<const Eigen::VectorXd>(p_b.values.data(), n) -
       Eigen::Map<const Eigen::VectorXd>(p_a.values.data(), n));

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericError(
        "closed form: Cholesky factorization failed; consider raising the "
        "kernel jitter");
  Eigen::VectorXd m = llt.solve(rhs);
  m += llt.solve(rhs - a * m);  // one refinement pass tightens the residual

  const double rhs_scale =
      (Eigen::Map<const Eigen::VectorXd>(p_b.values.data(), n) -
       Eigen::Map<const Eigen::VectorXd>(p_a.values.data(), n))
          .lpNorm<Eigen::Infinity>();
  const double resid = (a * m - rhs).lpNorm<Eigen::Infinity>();
  if (resid > 1e-9 * std::max(rhs_scale, 1e-300) && rhs_scale > 0.0)
    throw NumericError(
        "closed form: solve residual " + std::to_string(resid) +
        " exceeds tolerance; consider raising the kernel jitter");
  Momenta out;
  out.values.assign(m.data(), m.data() + m.size());
  return out;
}

/// Samples the derivative of the induced vertical map
/// x -> x + sum_j K((t, x), (t_j, q_j)) m_j at s = 1 over a grid of x and
/// reports whether it stays positive everywhere. Time-only kernels induce a
/// pure translation per frame, which is always invertible.
inline bool warp_derivative_positive(const Trajectory& traj,
                                     const KernelSpec& kernel,
                                     const F0Contour& p_a,
                                     int grid_points = 64) {
  if (kernel.mode == KernelMode::kTimeOnly) return true;
  const Eigen::Index n = traj.q.cols();
  const Eigen::VectorXd q1 = traj.q.row(traj.q.rows() - 1);
  const Eigen::VectorXd m1 = traj.m.row(traj.m.rows() - 1);
  const double lo =
      *std::min_element(p_a.values.begin(), p_a.values.end()) -
      3.0 * kernel.sigma_q;
  const double hi =
      *std::max_element(p_a.values.begin(), p_a.values.end()) +
      3.0 * kernel.sigma_q;
  const double inv_st2 = 1.0 / (kernel.sigma_t * kernel.sigma_t);
  const double inv_sq2 = 1.0 / (kernel.sigma_q * kernel.sigma_q);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (int g = 0; g < grid_points; ++g) {
      const double x =
          lo + (hi - lo) * static_cast<double>(g) / (grid_points - 1);
      double deriv = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double dt = static_cast<double>(t - j);
        const double dx = x - q1(j);
        const double k = std::exp(-0.5 * dt * dt * inv_st2) *
                         std::exp(-0.5 * dx * dx * inv_sq2);
        deriv += m1(j) * k * (-dx * inv_sq2);
      }
      if (!(deriv > 0.0)) return false;
    }
  }
  return true;
}

/// Gradient descent with Armijo backtracking from m0 = 0. The energy trace
/// records every accepted iterate and is non-increasing by construction.
/// Line-search stagnation is reported through the result status, carrying the
/// best iterate, so batch jobs keep going.
inline RegistrationResult register_contours(const F0Contour& p_a,
                                            const F0Contour& p_b,
                                            const RegistrationConfig& config) {
  detail::RegistrationProblem prob(p_a, p_b, config);
  const Eigen::Index n = prob.size();
  constexpr double kArmijoC = 1e-4;
  constexpr double kMinStepFactor = 1e-18;

  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  double e = prob.energy(m);
  RegistrationResult result;
  result.energy_trace.push_back(e);
  result.status = SolveStatus::kMaxIters;

  double step = config.step_init;
  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const Eigen::VectorXd grad = prob.gradient(m);
    if (grad.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
      result.status = SolveStatus::kConverged;
      break;
    }
    const double g2 = grad.squaredNorm();
    double s = std::min(2.0 * step, config.step_init * 1e6);
    bool accepted = false;
    while (s >= kMinStepFactor * config.step_init) {
      const Eigen::VectorXd trial = m - s * grad;
      const double et = prob.energy(trial);
      if (et <= e - kArmijoC * s * g2) {
        m = trial;
        e = et;
        step = s;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      result.status = SolveStatus::kStagnated;
      break;
    }
    result.energy_trace.push_back(e);
  }
  if (iter == config.max_iters) {
    const Eigen::VectorXd grad = prob.gradient(m);
    if (grad.lpNorm<Eigen::Infinity>() <= config.grad_tol)
      result.status = SolveStatus::kConverged;
  }
  result.iterations = iter;

  result.momenta.values.assign(m.data(), m.data() + n);
  const Trajectory traj = shoot(p_a, result.momenta, config.kernel,
                                config.steps);
  const Eigen::VectorXd q1 = traj.q.row(traj.q.rows() - 1);
  result.warped.values.assign(q1.data(), q1.data() + n);
  result.warped.voiced = p_a.voiced;
  result.warped.frame_step_ms = p_a.frame_step_ms;
  result.endpoint_mse = (q1 - prob.p_b).squaredNorm() / static_cast<double>(n);
  result.warn_invertibility =
      !warp_derivative_positive(traj, config.kernel, p_a);
  return result;
}

}  // namespace emoconv

#endif  // EMOCONV_REGISTRATION_HPP_
