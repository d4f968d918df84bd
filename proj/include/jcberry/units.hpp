// Copyright 2026 The jcberry Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <numbers>

namespace jcberry {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// All internal frequencies are angular (rad/s); times are seconds.
// Config and CLI boundaries speak ordinary MHz and ns/us and convert
// exactly once through these helpers.
constexpr double mhz_to_rad(double f_mhz) { return two_pi * 1.0e6 * f_mhz; }
constexpr double rad_to_mhz(double w) { return w / (two_pi * 1.0e6); }
constexpr double ghz_to_rad(double f_ghz) { return two_pi * 1.0e9 * f_ghz; }
constexpr double ns_to_s(double t_ns) { return 1.0e-9 * t_ns; }
constexpr double s_to_ns(double t_s) { return 1.0e9 * t_s; }
constexpr double us_to_s(double t_us) { return 1.0e-6 * t_us; }

// Wrap into (-pi, pi].
inline double wrap_pm_pi(double x) {
  double y = std::remainder(x, two_pi);
  if (y <= -pi) y += two_pi;
  return y;
}

// Wrap into [0, 2*pi).
inline double wrap_2pi(double x) {
  double y = std::fmod(x, two_pi);
  if (y < 0) y += two_pi;
  return y;
}

// Wrap so the result lands within (anchor - pi, anchor + pi].
inline double wrap_near(double x, double anchor) {
  return anchor + wrap_pm_pi(x - anchor);
}

}  // namespace jcberry
