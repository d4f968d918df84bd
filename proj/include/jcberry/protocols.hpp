// Copyright 2026 The jcberry Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jcberry/analytic.hpp"
#include "jcberry/core.hpp"
#include "jcberry/dynamics.hpp"
#include "jcberry/estimation.hpp"
#include "jcberry/units.hpp"

namespace jcberry {

/// Device constants. g and the Stark coefficients feed the simulation; the
/// transition/cavity frequencies and coherence times are documentation only
/// (decoherence is not simulated).
struct DeviceParams {
  double g = mhz_to_rad(4.49);       // f,n <-> g,n+1 base coupling
  double omega_ge = ghz_to_rad(10.651);
  double omega_ef = ghz_to_rad(10.217);
  double cavity_mode_1 = ghz_to_rad(7.828);
  double cavity_mode_2 = ghz_to_rad(9.041);
  double cavity_mode_3 = ghz_to_rad(11.432);
  double t1 = 4.9e-6;
  double t2_star = 2.0e-6;
  double stark_c2 = 0.0;             // drive Stark coefficient, rad/s per (rad/s)^2
  // Photon-number Stark ladders, c0 + c1 n + c2 n^2 (rad/s).
  std::array<double, 3> stark_ge{0.0, 0.0, 0.0};
  std::array<double, 3> stark_ef{0.0, 0.0, 0.0};
  std::array<double, 3> stark_fg{0.0, 0.0, 0.0};
  bool stark_fg_from_sum = true;     // derive the pair shift as ge + ef
  double rise_time = 3e-9;
  int n_max = 2;
};

inline DeviceParams device_with_fock_headroom(DeviceParams d, int n_prepared) {
  d.n_max = std::max(d.n_max, n_prepared + 2);
  return d;
}

/// A simulated interference curve plus the provenance needed to rerun it.
struct ExperimentRecord {
  std::string experiment;
  std::string xname;  // unit-suffixed independent variable name
  std::vector<double> x;
  std::vector<std::array<double, 3>> pops;  // p_g, p_e, p_f per grid point
  std::string schedule_digest;
  DeviceParams device;
  std::uint64_t seed = 0;
  int shots = 0;

  std::vector<double> p(Level level) const {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto& row : pops) out.push_back(row[static_cast<int>(level)]);
    return out;
  }
};

namespace detail {

inline void check_record(const ExperimentRecord& r) {
  for (std::size_t i = 1; i < r.x.size(); ++i)
    if (!(r.x[i] > r.x[i - 1]))
      throw std::invalid_argument("ExperimentRecord: grid not increasing");
  for (const auto& row : r.pops)
    for (double p : row)
      if (p < -1e-9 || p > 1.0 + 1e-9)
        throw std::runtime_error("ExperimentRecord: population outside [0,1]");
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string schedule_digest(const ControlSchedule& sched) {
  std::ostringstream os;
  os.precision(17);
  os << "nmax=" << sched.n_max << ";";
  for (const auto& s : sched.segments) {
    if (s.is_instant())
      os << "I(" << static_cast<int>(s.instant->transition) << ","
         << s.instant->angle << "," << s.instant->axis_phase << ","
         << s.instant->photon << ");";
    else
      os << "C(" << s.duration << "," << s.coupling.amplitude << ","
         << s.coupling.rise_time << "," << s.detuning << "," << s.phase_start
         << "," << s.phase_sweep << "," << s.target_n << ");";
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

// Deterministic parallel map: results land in preallocated slots in grid
// order regardless of scheduling.
template <typename F>
inline void parallel_for(int count, F&& body) {
  int n_threads = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("JCBERRY_THREADS")) n_threads = std::atoi(env);
  n_threads = std::clamp(n_threads, 1, 16);
  if (n_threads == 1 || count < 4) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

inline void apply_shot_noise(ExperimentRecord& r) {
  if (r.shots <= 0) return;
  for (std::size_t i = 0; i < r.pops.size(); ++i) {
    std::mt19937_64 rng(r.seed ^ (0x9e3779b97f4a7c15ull * (i + 1)));
    std::discrete_distribution<int> dist(
        {std::max(0.0, r.pops[i][0]), std::max(0.0, r.pops[i][1]),
         std::max(0.0, r.pops[i][2])});
    std::array<int, 3> counts{0, 0, 0};
    for (int s = 0; s < r.shots; ++s) counts[dist(rng)]++;
    for (int k = 0; k < 3; ++k)
      r.pops[i][k] = static_cast<double>(counts[k]) / r.shots;
  }
}

}  // namespace detail

/// Pulses appended by the builders; grouped so protocol code reads like the
/// pulse diagrams.
namespace pulses {

inline void pi_ge(std::vector<ControlSegment>& out, double axis_phase = 0.0) {
  out.push_back(make_instant_segment({Transition::ge, pi, axis_phase, 0}));
}
inline void pi_ef(std::vector<ControlSegment>& out, double axis_phase = 0.0) {
  out.push_back(make_instant_segment({Transition::ef, pi, axis_phase, 0}));
}
inline void half_pi_ef(std::vector<ControlSegment>& out, double axis_phase) {
  out.push_back(
      make_instant_segment({Transition::ef, 0.5 * pi, axis_phase, 0}));
}
inline void pi_pair_instant(std::vector<ControlSegment>& out, int photon,
                            double axis_phase = 0.0) {
  out.push_back(
      make_instant_segment({Transition::fg_pair, pi, axis_phase, photon}));
}

// Resonant coupling pulse of Bloch area `angle` on the pair n: the rise and
// fall halves contribute half their span, so the flat top is stretched to
// keep the integrated area exact.
inline void coupling_area(std::vector<ControlSegment>& out,
                          const DeviceParams& dev, int n, double angle,
                          double phase) {
  const double G = block_coupling(dev.g, n);
  const double flat = 0.5 * angle / G;
  const double rise = std::min(dev.rise_time, flat);
  out.push_back(
      make_coupling_segment(flat + rise, dev.g, 0.0, phase, 0.0, n, rise));
}

}  // namespace pulses

/// Iterated pi-pulse ladder preparing |g,n> from |g,0>:
/// (g-e, e-f, f,k <-> g,k+1) repeated k = 0..n-1.
inline ControlSchedule fock_prep(const DeviceParams& dev, int n) {
  if (n + 1 > dev.n_max)
    throw std::out_of_range("fock_prep: photon cutoff exceeded");
  ControlSchedule sched;
  sched.n_max = dev.n_max;
  for (int k = 0; k < n; ++k) {
    pulses::pi_ge(sched.segments);
    pulses::pi_ef(sched.segments);
    pulses::pi_pair_instant(sched.segments, k);
  }
  return sched;
}

enum class Branch { minus, plus };

struct RamseyOptions {
  double transfer_phase = 0.0;  // phase of the first coupling pulse
  std::uint64_t seed = 1;
  int shots = 0;
  IntegrationControl integration;
};

namespace detail {

// Ramp-start phase that aligns the dressed state prepared by a resonant
// transfer pulse of phase phi_c: the pulse sends |f,n> to the dressed state
// of azimuth phi_c + pi/2.
inline double aligned_ramp_phase(double transfer_phase) {
  return transfer_phase + 0.5 * pi;
}

inline ControlSchedule ramsey_schedule(const DeviceParams& dev, int n,
                                       Branch branch, double tau, double dphi,
                                       double phi_r, double transfer_phase) {
  ControlSchedule sched = fock_prep(dev, n);
  pulses::pi_ge(sched.segments);
  pulses::half_pi_ef(sched.segments, 0.0);

  const double phi_c =
      transfer_phase + (branch == Branch::plus ? pi : 0.0);
  pulses::coupling_area(sched.segments, dev, n, 0.5 * pi, phi_c);

  const double ramp_start = aligned_ramp_phase(transfer_phase);
  sched.segments.push_back(make_coupling_segment(
      tau, dev.g, 0.0, ramp_start, dphi, n, std::min(dev.rise_time, 0.5 * tau)));

  const double ramp_end = ramp_start + dphi;
  const double inverse_phase =
      ramp_end + (branch == Branch::plus ? -0.5 * pi : 0.5 * pi);
  pulses::coupling_area(sched.segments, dev, n, 0.5 * pi, inverse_phase);

  pulses::half_pi_ef(sched.segments, phi_r);
  return sched;
}

}  // namespace detail

/// Resonant Ramsey interference pattern P_e(phi_R) after a coupling-phase
/// excursion dphi over a hold time tau, with |e,n> as the stationary
/// reference. Pair a dphi = 2*pi record with a dphi = 0 one to isolate the
/// geometric phase.
inline ExperimentRecord ramsey_geometric(const DeviceParams& dev_in, int n,
                                         Branch branch, double tau, double dphi,
                                         const std::vector<double>& phi_r_grid,
                                         const RamseyOptions& opts = {}) {
  if (tau <= 0.0) throw std::invalid_argument("ramsey_geometric: tau must be > 0");
  const DeviceParams dev = device_with_fock_headroom(dev_in, n);
  // Sudden-approximation sanity: the coupling must switch on fast compared
  // with the dressed precession.
  if (dev.rise_time * 2.0 * block_coupling(dev.g, n) > 1.0)
    throw std::invalid_argument("ramsey_geometric: rise time not sudden");

  ExperimentRecord rec;
  rec.experiment = branch == Branch::plus ? "ramsey_plus" : "ramsey_minus";
  rec.xname = "phi_r_rad";
  rec.x = phi_r_grid;
  rec.pops.resize(phi_r_grid.size());
  rec.device = dev;
  rec.seed = opts.seed;
  rec.shots = opts.shots;

  const StateVector ground =
      StateVector::basis_state({Level::g, 0}, dev.n_max);
  detail::parallel_for(static_cast<int>(phi_r_grid.size()), [&](int i) {
    ControlSchedule sched = detail::ramsey_schedule(
        dev, n, branch, tau, dphi, phi_r_grid[i], opts.transfer_phase);
    if (i == 0) rec.schedule_digest = detail::schedule_digest(sched);
    const StateVector fin = evolve(sched, ground, opts.integration).state;
    rec.pops[i] = {population(fin, Level::g), population(fin, Level::e),
                   population(fin, Level::f)};
  });
  detail::apply_shot_noise(rec);
  detail::check_record(rec);
  return rec;
}

/// Cyclic-evolution variant probing |f,n> directly: the transfer pulses are
/// omitted and the hold time is pinned to tau = pi k / (g sqrt(n+1)) so the
/// free dressed evolution closes on itself.
inline ExperimentRecord fstate_loop(const DeviceParams& dev_in, int n, int k,
                                    double dphi,
                                    const std::vector<double>& phi_r_grid,
                                    const RamseyOptions& opts = {}) {
  if (k < 1) throw std::invalid_argument("fstate_loop: k must be a positive integer");
  const DeviceParams dev = device_with_fock_headroom(dev_in, n);
  const double tau = pi * k / block_coupling(dev.g, n);

  ExperimentRecord rec;
  rec.experiment = "fstate_loop";
  rec.xname = "phi_r_rad";
  rec.x = phi_r_grid;
  rec.pops.resize(phi_r_grid.size());
  rec.device = dev;
  rec.seed = opts.seed;
  rec.shots = opts.shots;

  const StateVector ground =
      StateVector::basis_state({Level::g, 0}, dev.n_max);
  detail::parallel_for(static_cast<int>(phi_r_grid.size()), [&](int i) {
    ControlSchedule sched = fock_prep(dev, n);
    pulses::pi_ge(sched.segments);
    pulses::half_pi_ef(sched.segments, 0.0);
    sched.segments.push_back(make_coupling_segment(
        tau, dev.g, 0.0, detail::aligned_ramp_phase(opts.transfer_phase), dphi,
        n, std::min(dev.rise_time, 0.5 * tau)));
    pulses::half_pi_ef(sched.segments, phi_r_grid[i]);
    if (i == 0) rec.schedule_digest = detail::schedule_digest(sched);
    const StateVector fin = evolve(sched, ground, opts.integration).state;
    rec.pops[i] = {population(fin, Level::g), population(fin, Level::e),
                   population(fin, Level::f)};
  });
  detail::apply_shot_noise(rec);
  detail::check_record(rec);
  return rec;
}

struct EchoOptions {
  double gap = 10e-9;
  double injected_detuning = 0.0;  // common drive-frequency error, rad/s
  double phase_slip = 0.0;         // frame slip accumulated across the gap
  bool compensate_slip = true;     // apply the calibrated slip correction
  std::uint64_t seed = 1;
  int shots = 0;
  IntegrationControl integration;
};

namespace detail {

inline ControlSchedule echo_schedule(const DeviceParams& dev, int n,
                                     double delta, double tau, double dphi,
                                     const EchoOptions& opts) {
  ControlSchedule sched = fock_prep(dev, n);
  pulses::pi_ge(sched.segments);
  pulses::pi_ef(sched.segments);

  // First sweep: detuning delta, phase ramp 0 -> dphi.
  const double rise = std::min(dev.rise_time, 0.5 * tau);
  sched.segments.push_back(make_coupling_segment(
      tau, dev.g, delta + opts.injected_detuning, 0.0, dphi, n, rise));
  sched.segments.push_back(make_gap_segment(opts.gap));
  // Echoed sweep: opposite detuning, pi offset, the mirrored ramp continuing
  // in the frame of the first. The slip across the gap shifts the applied
  // phase; the calibrated sequence adds it back.
  double start = pi + dphi - opts.phase_slip;
  if (opts.compensate_slip) start += opts.phase_slip;
  sched.segments.push_back(make_coupling_segment(
      tau, dev.g, -delta + opts.injected_detuning, start, dphi, n, rise));
  return sched;
}

}  // namespace detail

/// Open-loop spin-echo record: P_f as a function of the phase displacement
/// dphi. The echoed second sweep cancels the dynamic phase and doubles the
/// geometric one, so the oscillation frequency in dphi measures
/// gamma+ - gamma-.
inline ExperimentRecord echo_openloop(const DeviceParams& dev_in, int n,
                                      double delta, double tau,
                                      const std::vector<double>& dphi_grid,
                                      const EchoOptions& opts = {}) {
  if (tau <= 0.0) throw std::invalid_argument("echo_openloop: tau must be > 0");
  const DeviceParams dev = device_with_fock_headroom(dev_in, n);

  ExperimentRecord rec;
  rec.experiment = "echo_openloop";
  rec.xname = "dphi_rad";
  rec.x = dphi_grid;
  rec.pops.resize(dphi_grid.size());
  rec.device = dev;
  rec.seed = opts.seed;
  rec.shots = opts.shots;

  const StateVector ground =
      StateVector::basis_state({Level::g, 0}, dev.n_max);
  detail::parallel_for(static_cast<int>(dphi_grid.size()), [&](int i) {
    ControlSchedule sched =
        detail::echo_schedule(dev, n, delta, tau, dphi_grid[i], opts);
    if (i == 0) rec.schedule_digest = detail::schedule_digest(sched);
    const StateVector fin = evolve(sched, ground, opts.integration).state;
    rec.pops[i] = {population(fin, Level::g), population(fin, Level::e),
                   population(fin, Level::f)};
  });
  detail::apply_shot_noise(rec);
  detail::check_record(rec);
  return rec;
}

/// Rabi spectroscopy of the pair transition: P_f(tau) for each detuning.
/// The fitted oscillation frequency maps out Omega_R = sqrt(delta^2 + 4 g^2).
inline std::vector<ExperimentRecord> rabi_spectroscopy(
    const DeviceParams& dev_in, int n, const std::vector<double>& delta_grid,
    const std::vector<double>& tau_grid, const RamseyOptions& opts = {}) {
  if (delta_grid.empty() || tau_grid.empty())
    throw std::invalid_argument("rabi_spectroscopy: empty grid");
  const DeviceParams dev = device_with_fock_headroom(dev_in, n);
  std::vector<ExperimentRecord> records(delta_grid.size());

  const StateVector ground =
      StateVector::basis_state({Level::g, 0}, dev.n_max);
  for (std::size_t d = 0; d < delta_grid.size(); ++d) {
    ExperimentRecord& rec = records[d];
    rec.experiment = "rabi";
    rec.xname = "tau_ns";
    rec.x.reserve(tau_grid.size());
    for (double t : tau_grid) rec.x.push_back(s_to_ns(t));
    rec.pops.resize(tau_grid.size());
    rec.device = dev;
    rec.seed = opts.seed;
    rec.shots = opts.shots;
    detail::parallel_for(static_cast<int>(tau_grid.size()), [&](int i) {
      ControlSchedule sched = fock_prep(dev, n);
      pulses::pi_ge(sched.segments);
      pulses::pi_ef(sched.segments);
      const double tau = tau_grid[i];
      if (tau > 0.0)
        sched.segments.push_back(make_coupling_segment(
            tau, dev.g, delta_grid[d], 0.0, 0.0, n,
            std::min(dev.rise_time, 0.5 * tau)));
      if (i == 0) rec.schedule_digest = detail::schedule_digest(sched);
      const StateVector fin = evolve(sched, ground, opts.integration).state;
      rec.pops[i] = {population(fin, Level::g), population(fin, Level::e),
                     population(fin, Level::f)};
    });
    detail::apply_shot_noise(rec);
  }
  return records;
}

struct PhaseCalibration {
  ExperimentRecord amplitude_vs_phi0;  // oscillation amplitude in the p_f slot
  double phi_s_estimate = 0.0;
};

/// Spin-echo phase calibration: two resonant coupling pulses of equal length
/// separated by an applied phase shift phi0. The Rabi oscillation amplitude
/// versus tau collapses when phi0 - phi_s = pi; scanning phi0 locates the
/// frame slip phi_s.
inline PhaseCalibration echo_phase_calibration(
    const DeviceParams& dev_in, int n, const std::vector<double>& phi0_grid,
    const std::vector<double>& tau_grid, const EchoOptions& opts = {}) {
  if (phi0_grid.empty() || tau_grid.empty())
    throw std::invalid_argument("echo_phase_calibration: empty grid");
  const DeviceParams dev = device_with_fock_headroom(dev_in, n);

  PhaseCalibration out;
  ExperimentRecord& rec = out.amplitude_vs_phi0;
  rec.experiment = "echo_phase_calibration";
  rec.xname = "phi0_rad";
  rec.x = phi0_grid;
  rec.pops.resize(phi0_grid.size());
  rec.device = dev;
  rec.seed = opts.seed;

  const StateVector ground =
      StateVector::basis_state({Level::g, 0}, dev.n_max);
  std::vector<double> amplitude(phi0_grid.size());
  detail::parallel_for(static_cast<int>(phi0_grid.size()), [&](int idx) {
    std::vector<double> pf(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
      ControlSchedule sched = fock_prep(dev, n);
      pulses::pi_ge(sched.segments);
      pulses::pi_ef(sched.segments);
      const double tau = tau_grid[i];
      const double rise = std::min(dev.rise_time, 0.49 * tau);
      sched.segments.push_back(
          make_coupling_segment(tau, dev.g, 0.0, 0.0, 0.0, n, rise));
      sched.segments.push_back(make_gap_segment(opts.gap));
      // The applied shift phi0 lands in the drive frame reduced by the slip.
      sched.segments.push_back(make_coupling_segment(
          tau, dev.g, 0.0, phi0_grid[idx] - opts.phase_slip, 0.0, n, rise));
      const StateVector fin = evolve(sched, ground, opts.integration).state;
      pf[i] = population(fin, Level::f);
    }
    double lo = pf[0], hi = pf[0];
    for (double v : pf) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    amplitude[idx] = 0.5 * (hi - lo);
  });
  for (std::size_t i = 0; i < phi0_grid.size(); ++i)
    rec.pops[i] = {0.0, 0.0, amplitude[i]};

  // Quadratic refinement around the sampled minimum.
  std::size_t imin = 0;
  for (std::size_t i = 1; i < amplitude.size(); ++i)
    if (amplitude[i] < amplitude[imin]) imin = i;
  double phi_min = phi0_grid[imin];
  if (imin > 0 && imin + 1 < amplitude.size()) {
    const double y0 = amplitude[imin - 1], y1 = amplitude[imin],
                 y2 = amplitude[imin + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-30) {
      const double h = 0.5 * (phi0_grid[imin + 1] - phi0_grid[imin - 1]);
      phi_min += 0.5 * h * (y0 - y2) / denom;
    }
  }
  out.phi_s_estimate = wrap_pm_pi(phi_min - pi);
  return out;
}

struct StarkLadderRow {
  int n = 0;
  double shift_ge = 0.0;
  double shift_ef = 0.0;
  double shift_fg = 0.0;
  double additivity_residual = 0.0;  // shift_fg - (shift_ge + shift_ef)
};

/// Photon-number Stark ladder: evaluates the configured second-order
/// polynomial shifts of the three transitions and the additivity residual.
inline std::vector<StarkLadderRow> stark_ladder_report(
    const DeviceParams& dev, const std::vector<int>& n_grid) {
  auto poly = [](const std::array<double, 3>& c, int n) {
    return c[0] + c[1] * n + c[2] * static_cast<double>(n) * n;
  };
  std::vector<StarkLadderRow> rows;
  rows.reserve(n_grid.size());
  for (int n : n_grid) {
    StarkLadderRow row;
    row.n = n;
    row.shift_ge = poly(dev.stark_ge, n);
    row.shift_ef = poly(dev.stark_ef, n);
    row.shift_fg = dev.stark_fg_from_sum ? row.shift_ge + row.shift_ef
                                         : poly(dev.stark_fg, n);
    row.additivity_residual = row.shift_fg - (row.shift_ge + row.shift_ef);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Extraction pipelines
// ---------------------------------------------------------------------------

/// Dynamic-phase mismatch between a swept pulse and its static reference: a
/// linear ramp of dphi over tau is a frequency offset omega = dphi/tau, so
/// the dressed splitting during the sweep is R(delta + omega) rather than
/// R(delta). The reference subtraction removes everything else; this term is
/// subtracted explicitly.
inline double sweep_dynamic_correction(double g, int n, double delta,
                                       double tau, double dphi, Branch branch) {
  if (tau <= 0.0 || dphi == 0.0) return 0.0;
  const double omega = dphi / tau;
  const double G2 = 2.0 * block_coupling(g, n);
  const double r_swept = std::hypot(delta + omega, G2);
  const double r_static = std::hypot(delta, G2);
  const double corr = 0.5 * tau * (r_swept - r_static);
  return branch == Branch::minus ? corr : -corr;
}

struct RamseyExtraction {
  double gamma = 0.0;      // extracted geometric phase, anchored near pi
  double raw_shift = 0.0;  // fitted pattern shift before the sweep correction
  double correction = 0.0;
  SinusoidFit fit_reference;
  SinusoidFit fit_swept;
};

inline RamseyExtraction extract_ramsey_phase(const ExperimentRecord& reference,
                                             const ExperimentRecord& swept,
                                             double correction) {
  SinusoidFitOptions fo;
  fo.frequency_hint = 1.0;  // P_e oscillates once per 2*pi of phi_R
  RamseyExtraction out;
  out.fit_reference = fit_sinusoid(reference.x, reference.p(Level::e), fo);
  out.fit_swept = fit_sinusoid(swept.x, swept.p(Level::e), fo);
  out.raw_shift = extract_phase_shift(out.fit_swept, out.fit_reference);
  out.correction = correction;
  out.gamma = wrap_near(out.raw_shift - correction, pi);
  return out;
}

/// Full resonant pipeline: runs the dphi = 2*pi and dphi = 0 patterns and
/// extracts the geometric phase from their shift.
inline RamseyExtraction run_ramsey_gamma(const DeviceParams& dev, int n,
                                         Branch branch, double tau,
                                         int phi_r_points = 24,
                                         const RamseyOptions& opts = {}) {
  std::vector<double> grid(phi_r_points);
  for (int i = 0; i < phi_r_points; ++i) grid[i] = two_pi * i / phi_r_points;
  ExperimentRecord ref = ramsey_geometric(dev, n, branch, tau, 0.0, grid, opts);
  ExperimentRecord swp =
      ramsey_geometric(dev, n, branch, tau, two_pi, grid, opts);
  const double corr =
      sweep_dynamic_correction(dev.g, n, 0.0, tau, two_pi, branch);
  return extract_ramsey_phase(ref, swp, corr);
}

inline RamseyExtraction run_fstate_gamma(const DeviceParams& dev, int n, int k,
                                         int phi_r_points = 24,
                                         const RamseyOptions& opts = {}) {
  std::vector<double> grid(phi_r_points);
  for (int i = 0; i < phi_r_points; ++i) grid[i] = two_pi * i / phi_r_points;
  ExperimentRecord ref = fstate_loop(dev, n, k, 0.0, grid, opts);
  ExperimentRecord swp = fstate_loop(dev, n, k, two_pi, grid, opts);
  return extract_ramsey_phase(ref, swp, 0.0);
}

struct EchoExtraction {
  double gamma_magnitude = 0.0;  // |gamma+ - gamma-| from the frequency
  double gamma_signed = 0.0;     // sign convention: -sgn(delta) * magnitude
  double pattern_phase = 0.0;
  SinusoidFit fit;
};

inline EchoExtraction extract_echo_gamma(const ExperimentRecord& record,
                                         double delta) {
  SinusoidFitOptions fo;
  EchoExtraction out;
  out.fit = fit_sinusoid(record.x, record.p(Level::f), fo);
  out.gamma_magnitude = geometric_phase_from_frequency(out.fit);
  out.gamma_signed =
      (delta > 0.0 ? -1.0 : (delta < 0.0 ? 1.0 : 0.0)) * out.gamma_magnitude;
  out.pattern_phase = out.fit.phase;
  return out;
}

inline EchoExtraction run_echo_gamma(const DeviceParams& dev, int n,
                                     double delta, double tau,
                                     int grid_points = 96, double loops = 4.0,
                                     const EchoOptions& opts = {}) {
  std::vector<double> grid(grid_points);
  for (int i = 0; i < grid_points; ++i)
    grid[i] = loops * two_pi * i / (grid_points - 1);
  ExperimentRecord rec = echo_openloop(dev, n, delta, tau, grid, opts);
  return extract_echo_gamma(rec, delta);
}

}  // namespace jcberry
