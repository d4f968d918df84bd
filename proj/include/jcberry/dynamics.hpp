// Copyright 2026 The jcberry Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "jcberry/analytic.hpp"
#include "jcberry/core.hpp"
#include "jcberry/units.hpp"

namespace jcberry {

enum class EnvelopeKind { square_with_rise, ideal_instant };

/// Pulse envelope. For square_with_rise the amplitude ramps up and down with
/// raised-cosine edges of length rise_time.
struct Envelope {
  EnvelopeKind kind = EnvelopeKind::square_with_rise;
  double amplitude = 0.0;  // base per-photon coupling, rad/s
  double rise_time = 0.0;  // seconds
};

inline double envelope_value(const Envelope& env, double t, double duration) {
  if (env.kind != EnvelopeKind::square_with_rise) return 0.0;
  const double r = env.rise_time;
  if (t < 0.0 || t > duration) return 0.0;
  if (r == 0.0) return env.amplitude;
  if (t < r) return env.amplitude * 0.5 * (1.0 - std::cos(pi * t / r));
  if (t > duration - r)
    return env.amplitude * 0.5 * (1.0 - std::cos(pi * (duration - t) / r));
  return env.amplitude;
}

enum class Transition { ge, ef, fg_pair };

/// An ideal instantaneous rotation on one two-level transition. For ge/ef it
/// acts uniformly on every photon column; for fg_pair it acts on the single
/// {|f,photon>, |g,photon+1>} pair.
struct InstantRotation {
  Transition transition = Transition::ge;
  double angle = 0.0;       // Bloch rotation angle (pi for a pi pulse)
  double axis_phase = 0.0;  // azimuth of the rotation axis
  int photon = 0;           // used by fg_pair only
};

/// One contiguous piece of a pulse program: either a coupling pulse with a
/// linear phase ramp, or an instantaneous rotation (duration 0).
struct ControlSegment {
  double duration = 0.0;
  Envelope coupling;
  double phase_start = 0.0;
  double phase_sweep = 0.0;  // total linear ramp over the segment
  double detuning = 0.0;     // rad/s, signed
  int target_n = -1;         // -1: all pairs; >= 0: that pair only
  std::optional<InstantRotation> instant;

  bool is_instant() const { return instant.has_value(); }
  double phase_at(double t_local) const {
    return phase_start +
           (duration > 0.0 ? phase_sweep * t_local / duration : 0.0);
  }
  void validate() const {
    if (is_instant() && (duration != 0.0 || phase_sweep != 0.0))
      throw std::invalid_argument(
          "ControlSegment: instant rotations carry no duration or sweep");
    if (!is_instant() &&
        (coupling.rise_time < 0.0 || 2.0 * coupling.rise_time > duration) &&
        duration > 0.0)
      throw std::invalid_argument(
          "ControlSegment: rise_time outside [0, duration/2]");
  }
};

inline ControlSegment make_coupling_segment(double duration, double amplitude,
                                            double detuning, double phase_start,
                                            double phase_sweep, int target_n,
                                            double rise_time = 0.0) {
  ControlSegment s;
  s.duration = duration;
  s.coupling = Envelope{EnvelopeKind::square_with_rise, amplitude, rise_time};
  s.detuning = detuning;
  s.phase_start = phase_start;
  s.phase_sweep = phase_sweep;
  s.target_n = target_n;
  s.validate();
  return s;
}

inline ControlSegment make_instant_segment(const InstantRotation& rot) {
  ControlSegment s;
  s.duration = 0.0;
  s.coupling.kind = EnvelopeKind::ideal_instant;
  s.instant = rot;
  return s;
}

inline ControlSegment make_gap_segment(double duration) {
  ControlSegment s;
  s.duration = duration;
  s.coupling = Envelope{EnvelopeKind::square_with_rise, 0.0, 0.0};
  return s;
}

struct ControlSchedule {
  std::vector<ControlSegment> segments;
  int n_max = 0;

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }
};

struct IntegrationControl {
  double base_step = 1e-9;  // capped per segment at duration/200
  double tolerance = 1e-8;  // max-norm change of the final state on halving
  int max_refinements = 8;
};

class IntegratorError : public std::runtime_error {
 public:
  IntegratorError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Full-space Hamiltonian at global time t: block diagonal over the
/// {|f,n>, |g,n+1>} pairs, zero on every |e,n> and on |g,0>.
inline OperatorMatrix hamiltonian_at(const ControlSchedule& schedule,
                                     double t) {
  if (t < 0.0 || t > schedule.total_duration())
    throw std::out_of_range("hamiltonian_at: t outside the schedule");
  const Basis basis(schedule.n_max);
  OperatorMatrix h = OperatorMatrix::Zero(basis.size(), basis.size());
  double t0 = 0.0;
  for (const auto& seg : schedule.segments) {
    if (t >= t0 && t <= t0 + seg.duration && !seg.is_instant() &&
        seg.duration > 0.0) {
      const double tl = t - t0;
      const double amp = envelope_value(seg.coupling, tl, seg.duration);
      const double phase = seg.phase_at(tl);
      for (int n = 0; n + 1 <= schedule.n_max; ++n) {
        if (seg.target_n >= 0 && n != seg.target_n) continue;
        const Eigen::Matrix2cd blk =
            hamiltonian_block({amp, seg.detuning, n, phase});
        const int fi = basis.index(Level::f, n);
        const int gi = basis.index(Level::g, n + 1);
        h(fi, fi) = blk(0, 0);
        h(fi, gi) = blk(0, 1);
        h(gi, fi) = blk(1, 0);
        h(gi, gi) = blk(1, 1);
      }
      return h;
    }
    t0 += seg.duration;
  }
  return h;  // t on a boundary or instant: treat as gap
}

namespace detail {

// 2x2 rotation exp(-i angle/2 * sigma_axis) applied in place to the
// amplitude pair (lo, hi).
inline void apply_rotation(cdouble& lo, cdouble& hi, double angle,
                           double axis_phase) {
  const double c = std::cos(0.5 * angle);
  const cdouble ms = cdouble(0.0, -std::sin(0.5 * angle));
  const cdouble e_m = std::exp(cdouble(0.0, -axis_phase));
  const cdouble nlo = c * lo + ms * e_m * hi;
  const cdouble nhi = ms * std::conj(e_m) * lo + c * hi;
  lo = nlo;
  hi = nhi;
}

inline void apply_instant(Eigen::VectorXcd& amp, const InstantRotation& rot,
                          int n_max) {
  const Basis basis(n_max);
  switch (rot.transition) {
    case Transition::ge:
      for (int k = 0; k <= n_max; ++k)
        apply_rotation(amp[basis.index(Level::g, k)],
                       amp[basis.index(Level::e, k)], rot.angle,
                       rot.axis_phase);
      break;
    case Transition::ef:
      for (int k = 0; k <= n_max; ++k)
        apply_rotation(amp[basis.index(Level::e, k)],
                       amp[basis.index(Level::f, k)], rot.angle,
                       rot.axis_phase);
      break;
    case Transition::fg_pair:
      if (rot.photon + 1 > n_max)
        throw std::out_of_range("InstantRotation: photon index out of range");
      apply_rotation(amp[basis.index(Level::f, rot.photon)],
                     amp[basis.index(Level::g, rot.photon + 1)], rot.angle,
                     rot.axis_phase);
      break;
  }
}

struct PairDeriv {
  double half_delta;
  double sweep_rate;
  double phase_start;
  const Envelope* env;
  double duration;
  double root;  // sqrt(n+1)

  void operator()(double t, cdouble fv, cdouble gv, cdouble& df,
                  cdouble& dg) const {
    const double G = envelope_value(*env, t, duration) * root;
    const double phase = phase_start + sweep_rate * t;
    const cdouble w = G * std::exp(cdouble(0.0, -phase));
    df = cdouble(0.0, -1.0) * (-half_delta * fv + w * gv);
    dg = cdouble(0.0, -1.0) * (std::conj(w) * fv + half_delta * gv);
  }
};

inline void rk4_pair_step(const PairDeriv& deriv, double t, double h,
                          cdouble& f, cdouble& g) {
  cdouble k1f, k1g, k2f, k2g, k3f, k3g, k4f, k4g;
  deriv(t, f, g, k1f, k1g);
  deriv(t + 0.5 * h, f + 0.5 * h * k1f, g + 0.5 * h * k1g, k2f, k2g);
  deriv(t + 0.5 * h, f + 0.5 * h * k2f, g + 0.5 * h * k2g, k3f, k3g);
  deriv(t + h, f + h * k3f, g + h * k3g, k4f, k4g);
  f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
  g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
}

inline PairDeriv pair_deriv(const ControlSegment& seg, int n) {
  return PairDeriv{0.5 * seg.detuning,
                   seg.duration > 0.0 ? seg.phase_sweep / seg.duration : 0.0,
                   seg.phase_start, &seg.coupling, seg.duration,
                   std::sqrt(n + 1.0)};
}

inline double segment_step(const ControlSegment& seg, double base_step,
                           double scale) {
  return std::min(base_step, seg.duration / 200.0) * scale;
}

// The Hamiltonian never couples different {|f,n>, |g,n+1>} pairs, so each
// pair integrates independently; every other amplitude is stationary.
// Pair-major loop: fastest, no mid-step full-state access.
inline void integrate_segment(Eigen::VectorXcd& amp, const ControlSegment& seg,
                              int n_max, double base_step, double scale) {
  if (seg.duration <= 0.0) return;
  const Basis basis(n_max);
  const double step = segment_step(seg, base_step, scale);
  const int n_steps =
      std::max(1, static_cast<int>(std::ceil(seg.duration / step)));
  const double h = seg.duration / n_steps;

  for (int n = 0; n + 1 <= n_max; ++n) {
    if (seg.target_n >= 0 && n != seg.target_n) continue;
    const PairDeriv deriv = pair_deriv(seg, n);
    const int fi = basis.index(Level::f, n);
    const int gi = basis.index(Level::g, n + 1);
    cdouble f = amp[fi], g = amp[gi];
    for (int k = 0; k < n_steps; ++k) rk4_pair_step(deriv, k * h, h, f, g);
    amp[fi] = f;
    amp[gi] = g;
  }
}

// Step-major variant used when a per-step observer needs the full state.
inline void integrate_segment_observed(
    Eigen::VectorXcd& amp, const ControlSegment& seg, int n_max,
    double base_step, double scale,
    const std::function<void(double /*t_local*/)>& observer) {
  if (seg.duration <= 0.0) return;
  const Basis basis(n_max);
  const double step = segment_step(seg, base_step, scale);
  const int n_steps =
      std::max(1, static_cast<int>(std::ceil(seg.duration / step)));
  const double h = seg.duration / n_steps;

  std::vector<std::pair<int, PairDeriv>> pairs;
  for (int n = 0; n + 1 <= n_max; ++n) {
    if (seg.target_n >= 0 && n != seg.target_n) continue;
    pairs.emplace_back(n, pair_deriv(seg, n));
  }
  for (int k = 0; k < n_steps; ++k) {
    for (const auto& [n, deriv] : pairs) {
      const int fi = basis.index(Level::f, n);
      const int gi = basis.index(Level::g, n + 1);
      cdouble f = amp[fi], g = amp[gi];
      rk4_pair_step(deriv, k * h, h, f, g);
      amp[fi] = f;
      amp[gi] = g;
    }
    observer((k + 1) * h);
  }
}

}  // namespace detail

struct TrajectoryRow {
  double t = 0.0;
  std::vector<double> populations;  // |amplitude|^2 per basis label
  double tracked_phase = 0.0;
};

struct TrajectoryRequest {
  int samples = 200;
  BasisLabel tracked{Level::f, 0};
};

struct EvolveResult {
  StateVector state;
  double norm_drift = 0.0;  // accumulated |1 - norm| before renormalization
  int refinements = 0;      // step halvings taken beyond the base step
  double residual = 0.0;    // final-state change at the accepted halving
  std::vector<TrajectoryRow> trajectory;
};

namespace detail {

inline Eigen::VectorXcd run_schedule(const ControlSchedule& schedule,
                                     const Eigen::VectorXcd& initial,
                                     double base_step, double scale,
                                     double* norm_drift) {
  Eigen::VectorXcd amp = initial;
  double drift = 0.0;
  for (const auto& seg : schedule.segments) {
    if (seg.is_instant()) {
      apply_instant(amp, *seg.instant, schedule.n_max);
    } else if (seg.duration > 0.0) {
      integrate_segment(amp, seg, schedule.n_max, base_step, scale);
      const double nrm = amp.norm();
      drift += std::abs(1.0 - nrm);
      if (nrm > 0.0) amp /= nrm;
    }
  }
  if (norm_drift) *norm_drift = drift;
  return amp;
}

inline void run_schedule_traced(const ControlSchedule& schedule,
                                Eigen::VectorXcd amp, double base_step,
                                double scale, const TrajectoryRequest& req,
                                std::vector<TrajectoryRow>* rows) {
  const Basis basis(schedule.n_max);
  const int tracked = basis.index(req.tracked);
  const double total = schedule.total_duration();
  const double sample_dt =
      req.samples > 1 ? total / (req.samples - 1) : total;
  double next_sample = 0.0;
  double t_global = 0.0;

  auto record = [&](double t) {
    TrajectoryRow row;
    row.t = t;
    row.populations.resize(basis.size());
    for (int i = 0; i < basis.size(); ++i)
      row.populations[i] = std::norm(amp[i]);
    row.tracked_phase = std::arg(amp[tracked]);
    rows->push_back(row);
  };
  record(0.0);
  next_sample = sample_dt;

  for (const auto& seg : schedule.segments) {
    if (seg.is_instant()) {
      apply_instant(amp, *seg.instant, schedule.n_max);
      continue;
    }
    if (seg.duration <= 0.0) continue;
    const double t_seg = t_global;
    integrate_segment_observed(
        amp, seg, schedule.n_max, base_step, scale, [&](double t_local) {
          while (t_seg + t_local >= next_sample - 1e-18 &&
                 next_sample <= total + 1e-18) {
            record(t_seg + t_local);
            next_sample += sample_dt;
          }
        });
    const double nrm = amp.norm();
    if (nrm > 0.0) amp /= nrm;
    t_global += seg.duration;
  }
  if (rows->empty() || rows->back().t < total) record(total);
}

}  // namespace detail

/// Propagate an initial state through the schedule. Fixed-step RK4 per
/// coupling segment (step = min(base_step, duration/200)) with exact
/// instantaneous rotations; the step is halved until the final state moves
/// by less than ctrl.tolerance (max norm), up to ctrl.max_refinements
/// halvings.
inline EvolveResult evolve(const ControlSchedule& schedule,
                           const StateVector& initial,
                           const IntegrationControl& ctrl = {},
                           const std::optional<TrajectoryRequest>& traj = {}) {
  if (initial.n_max != schedule.n_max)
    throw std::invalid_argument("evolve: state/schedule n_max mismatch");
  for (const auto& s : schedule.segments) s.validate();

  bool has_coupling = false;
  for (const auto& s : schedule.segments)
    if (!s.is_instant() && s.duration > 0.0) has_coupling = true;

  EvolveResult out;
  out.state = initial;
  double scale = 1.0;

  if (!has_coupling) {
    double drift = 0.0;
    out.state.amp = detail::run_schedule(schedule, initial.amp,
                                         ctrl.base_step, 1.0, &drift);
    out.norm_drift = drift;
  } else {
    double drift = 0.0;
    Eigen::VectorXcd prev = detail::run_schedule(schedule, initial.amp,
                                                 ctrl.base_step, scale, &drift);
    bool accepted = false;
    double residual = 0.0;
    for (int k = 1; k <= ctrl.max_refinements; ++k) {
      scale *= 0.5;
      Eigen::VectorXcd cur = detail::run_schedule(
          schedule, initial.amp, ctrl.base_step, scale, &drift);
      residual = (cur - prev).cwiseAbs().maxCoeff();
      prev = cur;
      if (residual < ctrl.tolerance) {
        out.refinements = k;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw IntegratorError(
          "evolve: step refinement did not converge (residual " +
              std::to_string(residual) + ")",
          residual);
    out.state.amp = prev;
    out.norm_drift = drift;
    out.residual = residual;
  }

  if (traj)
    detail::run_schedule_traced(schedule, initial.amp, ctrl.base_step, scale,
                                *traj, &out.trajectory);
  return out;
}

/// Column-wise propagator of the whole schedule; unitary to ~1e-8.
inline OperatorMatrix propagator(const ControlSchedule& schedule,
                                 const IntegrationControl& ctrl = {}) {
  const Basis basis(schedule.n_max);
  OperatorMatrix u(basis.size(), basis.size());
  for (int j = 0; j < basis.size(); ++j) {
    StateVector col = StateVector::basis_state(basis.label(j), schedule.n_max);
    u.col(j) = evolve(schedule, col, ctrl).state.amp;
  }
  return u;
}

/// Drive-induced shift of the coupled transition, quadratic in the drive
/// amplitude. The coefficient comes from calibration data; the same model
/// both sets compensated drive frequencies and injects a deliberate
/// miscalibration for error studies.
struct StarkShiftModel {
  double c2 = 0.0;  // rad/s per (rad/s)^2
  double operator()(double omega_drive) const {
    return c2 * omega_drive * omega_drive;
  }
};

}  // namespace jcberry
