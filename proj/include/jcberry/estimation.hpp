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
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jcberry/units.hpp"

namespace jcberry {

enum class FitStatus { ok, no_oscillation, not_converged };

struct SinusoidFit {
  double amplitude = 0.0;  // >= 0
  double omega = 0.0;      // angular frequency per unit of x
  double phase = 0.0;      // in (-pi, pi]
  double offset = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  FitStatus status = FitStatus::not_converged;
  int iterations = 0;
};

struct SinusoidFitOptions {
  double frequency_hint = 0.0;   // > 0: skip the grid search, start here
  bool fix_frequency = false;    // keep omega at the hint
  double visibility_floor = 0.02;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Linear least squares of y = c0 + a sin(w x) + b cos(w x) at fixed w.
inline double sinusoid_linear_rss(const std::vector<double>& x,
                                  const std::vector<double>& y, double w,
                                  double* c0, double* a, double* b) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd m(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = 1.0;
    m(i, 1) = std::sin(w * x[i]);
    m(i, 2) = std::cos(w * x[i]);
    rhs[i] = y[i];
  }
  Eigen::Vector3d sol = m.colPivHouseholderQr().solve(rhs);
  if (c0) *c0 = sol[0];
  if (a) *a = sol[1];
  if (b) *b = sol[2];
  return (m * sol - rhs).squaredNorm();
}

}  // namespace detail

/// Damped Gauss-Newton least squares of y = offset + amplitude sin(w x +
/// phase). The frequency is initialized from a coarse discrete-spectrum grid
/// search unless a hint is supplied; convergence is declared when the
/// relative parameter change drops below 1e-10.
inline SinusoidFit fit_sinusoid(const std::vector<double>& x,
                                const std::vector<double>& y,
                                const SinusoidFitOptions& opts = {}) {
  const int n = static_cast<int>(x.size());
  if (n != static_cast<int>(y.size()))
    throw std::invalid_argument("fit_sinusoid: size mismatch");
  if (n < 4) throw std::invalid_argument("fit_sinusoid: need at least 4 points");

  const double span = *std::max_element(x.begin(), x.end()) -
                      *std::min_element(x.begin(), x.end());
  if (span <= 0.0) throw std::invalid_argument("fit_sinusoid: degenerate grid");

  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) mean += y[i];
  mean /= n;
  for (int i = 0; i < n; ++i) sq += (y[i] - mean) * (y[i] - mean);
  const double y_scatter = std::sqrt(sq / n);

  SinusoidFit fit;
  fit.offset = mean;

  // Essentially constant data: report the zero-amplitude diagnosis rather
  // than chasing a frequency.
  const double y_scale = std::max(std::abs(mean), 1.0e-300);
  if (y_scatter < 1e-12 * std::max(1.0, y_scale)) {
    fit.status = FitStatus::no_oscillation;
    fit.residual_norm = std::sqrt(sq);
    return fit;
  }

  double w = opts.frequency_hint;
  double c0 = mean, a = 0.0, b = 0.0;
  if (w <= 0.0) {
    // Discrete-spectrum scan: candidate frequencies up to ~N/4 periods over
    // the span, on a grid fine enough not to skip a lobe.
    const double w_min = 0.5 * two_pi / span;
    const double w_max = 0.25 * n * two_pi / span;
    double best_rss = std::numeric_limits<double>::infinity();
    const int candidates = 12 * n;
    for (int k = 0; k <= candidates; ++k) {
      const double wc = w_min + (w_max - w_min) * k / candidates;
      double cc, aa, bb;
      const double rss = detail::sinusoid_linear_rss(x, y, wc, &cc, &aa, &bb);
      if (rss < best_rss) {
        best_rss = rss;
        w = wc;
        c0 = cc;
        a = aa;
        b = bb;
      }
    }
  } else {
    detail::sinusoid_linear_rss(x, y, w, &c0, &a, &b);
  }

  // Gauss-Newton on (c0, a, b[, w]) with multiplicative damping.
  const int n_par = opts.fix_frequency ? 3 : 4;
  Eigen::VectorXd p(4);
  p << c0, a, b, w;
  auto residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r,
                       Eigen::MatrixXd* jac) {
    r.resize(n);
    if (jac) jac->resize(n, n_par);
    for (int i = 0; i < n; ++i) {
      const double s = std::sin(q[3] * x[i]);
      const double c = std::cos(q[3] * x[i]);
      r[i] = q[0] + q[1] * s + q[2] * c - y[i];
      if (jac) {
        (*jac)(i, 0) = 1.0;
        (*jac)(i, 1) = s;
        (*jac)(i, 2) = c;
        if (n_par == 4) (*jac)(i, 3) = x[i] * (q[1] * c - q[2] * s);
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(p, r, &jac);
  double rss = r.squaredNorm();
  double lambda = 1e-10;
  int iter = 0;
  bool converged = false;
  for (; iter < 200; ++iter) {
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * r;
    Eigen::MatrixXd damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
    Eigen::VectorXd step = damped.ldlt().solve(-jtr);

    Eigen::VectorXd trial = p;
    for (int j = 0; j < n_par; ++j) trial[j] += step[j];
    Eigen::VectorXd rt;
    residuals(trial, rt, nullptr);
    const double rss_t = rt.squaredNorm();
    if (rss_t <= rss) {
      double rel = 0.0;
      for (int j = 0; j < n_par; ++j)
        rel = std::max(rel, std::abs(step[j]) / std::max(1.0, std::abs(p[j])));
      p = trial;
      residuals(p, r, &jac);
      rss = rss_t;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (rel < 1e-10) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  fit.offset = p[0];
  fit.amplitude = std::hypot(p[1], p[2]);
  fit.omega = std::abs(p[3]);
  // a sin + b cos = A sin(w x + phase); a negative fitted frequency folds
  // into the phase.
  double aa = p[1], bb = p[2];
  if (p[3] < 0.0) aa = -aa;
  fit.phase = std::atan2(bb, aa);
  fit.residual_norm = std::sqrt(rss);
  fit.iterations = iter + 1;

  const double vis_scale = std::max(std::abs(fit.offset), 1e-300);
  if (fit.amplitude / vis_scale < opts.visibility_floor) {
    fit.status = FitStatus::no_oscillation;
    fit.converged = false;
  } else if (converged) {
    fit.status = FitStatus::ok;
    fit.converged = true;
  } else {
    fit.status = FitStatus::not_converged;
    fit.converged = false;
  }
  return fit;
}

/// Wrapped phase difference b - a in (-pi, pi]. The two patterns must agree
/// in frequency to 1%.
inline double extract_phase_shift(const SinusoidFit& a, const SinusoidFit& b) {
  const double wmax = std::max(std::abs(a.omega), std::abs(b.omega));
  if (wmax > 0.0 && std::abs(a.omega - b.omega) > 0.01 * wmax)
    throw std::invalid_argument("extract_phase_shift: frequency mismatch");
  return wrap_pm_pi(b.phase - a.phase);
}

/// Continuity unwrap of a phase series ordered by its independent variable;
/// the first point is anchored into (-pi, pi].
inline std::vector<double> unwrap_series(const std::vector<double>& phases) {
  std::vector<double> out;
  out.reserve(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i == 0)
      out.push_back(wrap_pm_pi(phases[0]));
    else
      out.push_back(out[i - 1] + wrap_pm_pi(phases[i] - out[i - 1]));
  }
  return out;
}

/// Geometric phase from the oscillation frequency of an echoed interference
/// trace: gamma = pi * f, with f the number of oscillations per full 2*pi
/// cycle of the phase displacement. A flat trace carries zero phase.
inline double geometric_phase_from_frequency(const SinusoidFit& fit) {
  if (fit.status == FitStatus::no_oscillation) return 0.0;
  return pi * fit.omega;
}

struct RabiFit {
  double g = 0.0;        // rad/s
  double omega_d = 0.0;  // detuning-axis offset of the minimum
  FitResult result;
};

/// Least squares of Omega_R(delta) = sqrt((delta - d0)^2 + 4 g^2). The grid
/// must bracket the minimum.
inline RabiFit fit_rabi(const std::vector<double>& delta,
                        const std::vector<double>& omega_r) {
  const int n = static_cast<int>(delta.size());
  if (n != static_cast<int>(omega_r.size()) || n < 3)
    throw std::invalid_argument("fit_rabi: need >= 3 matched points");
  int imin = 0;
  for (int i = 1; i < n; ++i)
    if (omega_r[i] < omega_r[imin]) imin = i;
  if (imin == 0 || imin == n - 1)
    throw std::invalid_argument("fit_rabi: minimum outside grid");

  double g = 0.5 * omega_r[imin];
  double d0 = delta[imin];
  double rss = 0.0;
  int iter = 0;
  bool converged = false;
  for (; iter < 100; ++iter) {
    Eigen::MatrixXd jac(n, 2);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      const double dd = delta[i] - d0;
      const double m = std::hypot(dd, 2.0 * g);
      r[i] = m - omega_r[i];
      jac(i, 0) = 4.0 * g / m;   // d/dg
      jac(i, 1) = -dd / m;       // d/dd0
    }
    rss = r.squaredNorm();
    Eigen::Vector2d step =
        (jac.transpose() * jac).ldlt().solve(-jac.transpose() * r);
    g += step[0];
    d0 += step[1];
    const double rel = std::max(std::abs(step[0]) / std::max(1.0, std::abs(g)),
                                std::abs(step[1]) / std::max(1.0, std::abs(d0)));
    if (rel < 1e-12) {
      converged = true;
      break;
    }
  }

  RabiFit out;
  out.g = std::abs(g);
  out.omega_d = d0;
  out.result.names = {"g", "omega_d"};
  out.result.estimates = {out.g, d0};
  out.result.residual_norm = std::sqrt(rss);
  out.result.iterations = iter + 1;
  out.result.converged = converged;
  const double dof = std::max(1, n - 2);
  const double s2 = rss / dof;
  Eigen::MatrixXd jac(n, 2);
  for (int i = 0; i < n; ++i) {
    const double dd = delta[i] - d0;
    const double m = std::hypot(dd, 2.0 * g);
    jac(i, 0) = 4.0 * g / m;
    jac(i, 1) = -dd / m;
  }
  Eigen::Matrix2d cov = (jac.transpose() * jac).inverse() * s2;
  out.result.std_errors = {std::sqrt(std::abs(cov(0, 0))),
                           std::sqrt(std::abs(cov(1, 1)))};
  return out;
}

/// Ordinary least squares line fit; exact on linear data.
inline std::pair<double, double> fit_linear(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n != static_cast<int>(y.size()) || n < 2)
    throw std::invalid_argument("fit_linear: need >= 2 matched points");
  Eigen::MatrixXd m(n, 2);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = x[i];
    m(i, 1) = 1.0;
    rhs[i] = y[i];
  }
  auto qr = m.colPivHouseholderQr();
  if (qr.rank() < 2) throw std::invalid_argument("fit_linear: rank deficient");
  Eigen::Vector2d sol = qr.solve(rhs);
  return {sol[0], sol[1]};  // slope, intercept
}

/// Ordinary least squares quadratic; returns (c0, c1, c2) of
/// y = c0 + c1 x + c2 x^2.
inline std::array<double, 3> fit_quadratic(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n != static_cast<int>(y.size()) || n < 3)
    throw std::invalid_argument("fit_quadratic: need >= 3 matched points");
  Eigen::MatrixXd m(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = 1.0;
    m(i, 1) = x[i];
    m(i, 2) = x[i] * x[i];
    rhs[i] = y[i];
  }
  auto qr = m.colPivHouseholderQr();
  if (qr.rank() < 3)
    throw std::invalid_argument("fit_quadratic: rank deficient");
  Eigen::Vector3d sol = qr.solve(rhs);
  return {sol[0], sol[1], sol[2]};
}

/// Single-parameter least squares of g_n^2 = g^2 (n+1).
inline double fit_gn(const std::vector<int>& n_grid,
                     const std::vector<double>& gn_squared) {
  if (n_grid.size() != gn_squared.size() || n_grid.empty())
    throw std::invalid_argument("fit_gn: need matched non-empty grids");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const double w = n_grid[i] + 1.0;
    num += w * gn_squared[i];
    den += w * w;
  }
  return std::sqrt(std::max(0.0, num / den));
}

struct BerryDataset {
  int n = 0;
  std::vector<double> delta;  // rad/s, signed
  std::vector<double> gamma_diff;  // observed gamma_plus - gamma_minus, rad
};

/// Simultaneous fit of gamma+ - gamma- = -2 pi delta / sqrt(delta^2 +
/// 4 g^2 (n+1)) to every dataset, with the coupling g as the only parameter.
inline FitResult global_fit_berry(const std::vector<BerryDataset>& datasets,
                                  double g_init = 0.0) {
  int n_pts = 0;
  for (const auto& d : datasets) {
    if (d.delta.size() != d.gamma_diff.size())
      throw std::invalid_argument("global_fit_berry: size mismatch");
    n_pts += static_cast<int>(d.delta.size());
  }
  if (datasets.size() < 2 || n_pts < 2)
    throw std::invalid_argument("global_fit_berry: need >= 2 datasets");

  double g = g_init;
  if (g <= 0.0) {
    // Invert the steepest usable point for a starting value.
    g = 1.0;
    for (const auto& d : datasets)
      for (std::size_t i = 0; i < d.delta.size(); ++i) {
        const double yd = d.gamma_diff[i];
        if (std::abs(yd) > 0.1 && std::abs(yd) < 0.9 * two_pi) {
          const double c = -yd / two_pi;  // = cos(theta)
          if (std::abs(c) < 0.999 && std::abs(c) > 1e-6) {
            const double r = d.delta[i] / c;
            const double gg2 = (r * r - d.delta[i] * d.delta[i]) /
                               (4.0 * (d.n + 1.0));
            if (gg2 > 0) g = std::sqrt(gg2);
          }
        }
      }
  }

  auto model = [](double gg, int n, double delta) {
    return -two_pi * delta / std::hypot(delta, 2.0 * gg * std::sqrt(n + 1.0));
  };
  auto dmodel_dg = [](double gg, int n, double delta) {
    const double r = std::hypot(delta, 2.0 * gg * std::sqrt(n + 1.0));
    return two_pi * delta * 4.0 * gg * (n + 1.0) / (r * r * r);
  };

  double rss = 0.0;
  int iter = 0;
  bool converged = false;
  for (; iter < 200; ++iter) {
    double jtj = 0.0, jtr = 0.0;
    rss = 0.0;
    for (const auto& d : datasets)
      for (std::size_t i = 0; i < d.delta.size(); ++i) {
        const double r = model(g, d.n, d.delta[i]) - d.gamma_diff[i];
        const double j = dmodel_dg(g, d.n, d.delta[i]);
        jtj += j * j;
        jtr += j * r;
        rss += r * r;
      }
    if (jtj == 0.0) break;
    const double step = -jtr / jtj;
    g += step;
    if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(g))) {
      converged = true;
      break;
    }
  }

  FitResult out;
  out.names = {"g"};
  out.estimates = {g};
  out.residual_norm = std::sqrt(rss);
  out.iterations = iter + 1;
  out.converged = converged;
  double jtj = 0.0;
  for (const auto& d : datasets)
    for (std::size_t i = 0; i < d.delta.size(); ++i) {
      const double j = dmodel_dg(g, d.n, d.delta[i]);
      jtj += j * j;
    }
  const double dof = std::max(1, n_pts - 1);
  out.std_errors = {jtj > 0.0 ? std::sqrt(rss / dof / jtj) : 0.0};
  if (!converged) throw std::runtime_error("global_fit_berry: no convergence");
  return out;
}

}  // namespace jcberry
