// Copyright 2026 The jcberry Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "jcberry/core.hpp"
#include "jcberry/units.hpp"

namespace jcberry {

/// Parameters of one {|f,n>, |g,n+1>} coupling block: base coupling g,
/// signed detuning delta (both angular rad/s), photon index n and
/// coupling phase phi.
struct CouplingParams {
  double g = 0.0;
  double delta = 0.0;
  int n = 0;
  double phi = 0.0;
};

struct MixingAngle {
  double theta = 0.0;  // rad, in (0, pi) for g > 0
};

/// A pair of branch phases (lower, upper dressed state). Stored unreduced;
/// reduce with phase_pair_mod_2pi when a mod-2pi view is needed.
struct PhasePair {
  double minus = 0.0;
  double plus = 0.0;
};

inline PhasePair phase_pair_mod_2pi(const PhasePair& p) {
  return PhasePair{wrap_2pi(p.minus), wrap_2pi(p.plus)};
}

/// Effective coupling of the n-th block, g*sqrt(n+1).
inline double block_coupling(double g, int n) { return g * std::sqrt(n + 1.0); }

/// Dressed-state splitting sqrt(delta^2 + 4 g^2 (n+1)).
inline double rabi_splitting(double g, double delta, int n) {
  return std::hypot(delta, 2.0 * block_coupling(g, n));
}

// The 2x2 block in the ordered pair (|f,n>, |g,n+1>), rotating frame:
//
//   [ -delta/2            G e^{-i phi} ]
//   [  G e^{+i phi}       +delta/2     ]      with G = g sqrt(n+1).
//
// The matrix element <g,n+1|H|f,n> carries e^{+i phi}, as dictated by the
// sigma_- a^dag e^{+i phi} coupling term; in this ordering the dressed
// states below are exact eigenvectors for every phi.
inline Eigen::Matrix2cd hamiltonian_block(const CouplingParams& p) {
  const double G = block_coupling(p.g, p.n);
  const cdouble off = G * std::exp(cdouble(0.0, -p.phi));
  Eigen::Matrix2cd h;
  h << -0.5 * p.delta, off, std::conj(off), 0.5 * p.delta;
  return h;
}

/// Mixing angle theta = atan2(2 g sqrt(n+1), delta) in (0, pi). The atan2
/// form fixes theta uniquely for delta < 0 as well.
inline MixingAngle mixing_angle(double g, double delta, int n) {
  return MixingAngle{std::atan2(2.0 * block_coupling(g, n), delta)};
}

/// Instantaneous dressed states (Psi_minus, Psi_plus) of the block, with
/// eigenvalues -R/2 and +R/2. Gauge: the |f,n> coefficient is real and
/// non-negative:
///   Psi_minus = cos(theta/2) |f,n> - sin(theta/2) e^{i phi} |g,n+1>
///   Psi_plus  = sin(theta/2) |f,n> + cos(theta/2) e^{i phi} |g,n+1>
inline std::pair<SubspaceVector, SubspaceVector> eigenstates(
    const CouplingParams& p) {
  const double theta = mixing_angle(p.g, p.delta, p.n).theta;
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const cdouble ph = std::exp(cdouble(0.0, p.phi));
  SubspaceVector minus(c, -s * ph, p.n);
  SubspaceVector plus(s, c * ph, p.n);
  return {minus, plus};
}

/// Closed-loop Berry phases gamma^+- = pi * (1 -+ delta / R) for one full
/// 2*pi phase cycle.
inline PhasePair berry_phase_closed(double g, double delta, int n) {
  const double c = delta / rabi_splitting(g, delta, n);
  return PhasePair{pi * (1.0 + c), pi * (1.0 - c)};
}

/// Open-loop geometric phases for a phase excursion dphi at fixed mixing
/// angle: gamma^+- = -(1 +- cos theta) * dphi / 2. Exactly linear in dphi.
inline PhasePair geometric_phase_open(const MixingAngle& m, double dphi) {
  const double c = std::cos(m.theta);
  return PhasePair{-0.5 * (1.0 - c) * dphi, -0.5 * (1.0 + c) * dphi};
}

/// Dynamic phases xi^-+ = -+ (tau/2) R accumulated over a hold time tau.
inline PhasePair dynamic_phase(double g, double delta, int n, double tau) {
  if (tau < 0) throw std::invalid_argument("dynamic_phase: tau must be >= 0");
  const double xi = 0.5 * tau * rabi_splitting(g, delta, n);
  return PhasePair{-xi, +xi};
}

/// Survival probability of an arbitrary initial block state under an
/// adiabatic open-loop phase excursion:
///   P = | sum_a <i|Psi_a(dphi)> e^{i (xi_a + gamma_a)} <Psi_a(0)|i> |^2
inline double openloop_probability_general(const SubspaceVector& initial,
                                           const CouplingParams& p, double tau,
                                           double dphi) {
  CouplingParams at_end = p;
  at_end.phi = p.phi + dphi;
  const auto [m0, p0] = eigenstates(p);
  const auto [m1, p1] = eigenstates(at_end);
  const PhasePair xi = dynamic_phase(p.g, p.delta, p.n, tau);
  const PhasePair gm =
      geometric_phase_open(mixing_angle(p.g, p.delta, p.n), dphi);

  const cdouble term_minus = inner_product(initial, m1) *
                             std::exp(cdouble(0.0, xi.minus + gm.minus)) *
                             inner_product(m0, initial);
  const cdouble term_plus = inner_product(initial, p1) *
                            std::exp(cdouble(0.0, xi.plus + gm.plus)) *
                            inner_product(p0, initial);
  return std::norm(term_minus + term_plus);
}

/// Same probability for the initial state |f,n>, reduced to
///   P = cos^2 theta + sin^2 theta * cos^2[ (xi+ - xi- + gamma+ - gamma-)/2 ].
/// The interference pattern has visibility sin^2 theta.
inline double openloop_probability_fstate(double g, double delta, int n,
                                          double tau, double dphi) {
  const double theta = mixing_angle(g, delta, n).theta;
  const PhasePair xi = dynamic_phase(g, delta, n, tau);
  const PhasePair gm = geometric_phase_open(MixingAngle{theta}, dphi);
  const double half = 0.5 * ((xi.plus - xi.minus) + (gm.plus - gm.minus));
  const double c = std::cos(theta), s = std::sin(theta);
  const double cc = std::cos(half);
  return c * c + s * s * cc * cc;
}

/// Ideal interference pattern of the two-pulse echoed sequence: the echo
/// cancels the dynamic phase and doubles the geometric one, leaving
///   P_f(dphi) = cos^2 theta + sin^2 theta * cos^2(dphi * cos theta),
/// independent of the pulse duration.
inline double echoed_probability_fstate(double g, double delta, int n,
                                        double dphi) {
  const double theta = mixing_angle(g, delta, n).theta;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cc = std::cos(dphi * c);
  return c * c + s * s * cc * cc;
}

/// Parameter substitution realizing the spin-echo conjugation
/// H -> exp(-i sigma_y pi/2) H exp(+i sigma_y pi/2): delta -> -delta,
/// phi -> pi - phi.
inline CouplingParams echo_substitution(const CouplingParams& p) {
  return CouplingParams{p.g, -p.delta, p.n, pi - p.phi};
}

/// Solid angle of the polar cap of half-opening theta.
inline double solid_angle_cap(double theta) {
  if (theta < 0.0 || theta > pi)
    throw std::invalid_argument("solid_angle_cap: theta outside [0, pi]");
  return two_pi * (1.0 - std::cos(theta));
}

/// Geometric phase from an enclosed solid angle, gamma = Omega / 2.
inline double berry_from_solid_angle(double omega) { return 0.5 * omega; }

namespace detail {

inline Eigen::Vector3d sphere_point(double colat, double az) {
  return {std::sin(colat) * std::cos(az), std::sin(colat) * std::sin(az),
          std::cos(colat)};
}

// Signed solid angle of the spherical triangle (a, b, c); the sign follows
// the orientation of the vertex sequence.
inline double triangle_solid_angle(const Eigen::Vector3d& a,
                                   const Eigen::Vector3d& b,
                                   const Eigen::Vector3d& c) {
  const double num = a.dot(b.cross(c));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

// Area swept between the pole and an arc of constant colatitude spanning
// azimuths [0, dphi], computed as a fan of geodesic triangles anchored at
// the pole. Subdivision doubles until the total changes by < tol_sr.
inline double pole_sector_area(double colat, double dphi, double tol_sr) {
  const Eigen::Vector3d pole(0.0, 0.0, 1.0);
  auto fan = [&](int segments) {
    double total = 0.0;
    for (int k = 0; k < segments; ++k) {
      const double a0 = dphi * k / segments;
      const double a1 = dphi * (k + 1) / segments;
      total += triangle_solid_angle(pole, sphere_point(colat, a0),
                                    sphere_point(colat, a1));
    }
    return total;
  };
  int segments = 16;
  double prev = fan(segments);
  for (int iter = 0; iter < 20; ++iter) {
    segments *= 2;
    const double cur = fan(segments);
    if (std::abs(cur - prev) < tol_sr) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace detail

struct GeodesicClosure {
  double omega_minus = 0.0;
  double omega_plus = 0.0;
  double difference = 0.0;  // omega_minus - omega_plus = 2 (gamma+ - gamma-)
};

/// Solid angles swept by the open paths of the two dressed states, closed
/// through the |f,n> pole by geodesics. Psi_minus travels on the circle of
/// colatitude theta, Psi_plus on pi - theta; the closing geodesics are
/// meridians, so each closed figure is a fan-integrable pole sector.
inline GeodesicClosure geodesic_closure_angles(double theta, double dphi,
                                               double tol_sr = 1e-8) {
  if (dphi < 0.0 || dphi > two_pi)
    throw std::invalid_argument("geodesic_closure_angles: dphi outside [0, 2pi]");
  constexpr double kDegenerate = 1e-12;
  if (theta < kDegenerate || pi - theta < kDegenerate)
    throw std::invalid_argument(
        "geodesic_closure_angles: path endpoint antipodal to the pole, "
        "geodesic closure degenerate");
  GeodesicClosure out;
  out.omega_minus = detail::pole_sector_area(theta, dphi, tol_sr);
  out.omega_plus = detail::pole_sector_area(pi - theta, dphi, tol_sr);
  out.difference = out.omega_minus - out.omega_plus;
  return out;
}

/// Semiclassical comparator: a classical drive of amplitude alpha and dipole
/// strength mu tilts the effective field to theta = atan2(2 mu alpha, delta);
/// the ground-state geometric phase is half the swept solid angle. As
/// alpha -> 0 at fixed detuning the phase vanishes: a classical drive has no
/// vacuum contribution.
struct SemiclassicalField {
  double mu = 0.0;
  double alpha = 0.0;
  double phi = 0.0;
  double delta = 0.0;
};

struct SemiclassicalPath {
  double theta = 0.0;
  double gamma = 0.0;
};

inline SemiclassicalPath semiclassical_path(const SemiclassicalField& field,
                                            double dphi) {
  const double theta = std::atan2(2.0 * field.mu * field.alpha, field.delta);
  return SemiclassicalPath{theta, 0.5 * dphi * (1.0 - std::cos(theta))};
}

/// Adiabaticity parameter A = pi / (g tau); the sweep is adiabatic for A << 1
/// and the crossover to nonadiabatic dynamics sits near A ~ 1.
inline double adiabaticity(double g, double tau) {
  if (g <= 0.0 || tau <= 0.0)
    throw std::invalid_argument("adiabaticity: g and tau must be > 0");
  return pi / (g * tau);
}

}  // namespace jcberry
