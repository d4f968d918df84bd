// Copyright 2026 The jcberry Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jcberry/units.hpp"

namespace jcberry {

using cdouble = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

/// Transmon level. Only g, e, f take part; ordering is part of the basis
/// contract and must not change.
enum class Level : int { g = 0, e = 1, f = 2 };

inline const char* level_name(Level l) {
  switch (l) {
    case Level::g: return "g";
    case Level::e: return "e";
    case Level::f: return "f";
  }
  return "?";
}

/// One ket |level, photons> of the composite transmon-cavity basis.
struct BasisLabel {
  Level level = Level::g;
  int photons = 0;

  friend bool operator==(const BasisLabel&, const BasisLabel&) = default;
  // Total order: photons-major, level-minor, so each {|f,n>, |g,n+1>}
  // pair sits near-adjacent.
  friend bool operator<(const BasisLabel& a, const BasisLabel& b) {
    if (a.photons != b.photons) return a.photons < b.photons;
    return static_cast<int>(a.level) < static_cast<int>(b.level);
  }
};

inline std::string label_name(const BasisLabel& l) {
  return std::string(level_name(l.level)) + std::to_string(l.photons);
}

/// Canonical ordered basis {g,e,f} x {0..n_max}, photons-major.
class Basis {
 public:
  explicit Basis(int n_max) : n_max_(n_max) {
    if (n_max < 0) throw std::invalid_argument("Basis: n_max must be >= 0");
  }

  int n_max() const { return n_max_; }
  int size() const { return 3 * (n_max_ + 1); }

  int index(Level level, int photons) const {
    check_photons(photons);
    return 3 * photons + static_cast<int>(level);
  }
  int index(const BasisLabel& l) const { return index(l.level, l.photons); }

  BasisLabel label(int i) const {
    if (i < 0 || i >= size()) throw std::out_of_range("Basis: index");
    return BasisLabel{static_cast<Level>(i % 3), i / 3};
  }

  std::vector<BasisLabel> labels() const {
    std::vector<BasisLabel> out;
    out.reserve(size());
    for (int i = 0; i < size(); ++i) out.push_back(label(i));
    return out;
  }

 private:
  void check_photons(int photons) const {
    if (photons < 0 || photons > n_max_)
      throw std::out_of_range("Basis: photon index out of range");
  }
  int n_max_;
};

inline Basis make_basis(int n_max) { return Basis(n_max); }

/// Complex amplitudes over the canonical basis.
struct StateVector {
  Eigen::VectorXcd amp;
  int n_max = 0;

  StateVector() = default;
  StateVector(Eigen::VectorXcd a, int nmax) : amp(std::move(a)), n_max(nmax) {
    if (amp.size() != 3 * (n_max + 1))
      throw std::invalid_argument("StateVector: dimension mismatch");
  }

  static StateVector zero(int n_max) {
    return StateVector(Eigen::VectorXcd::Zero(3 * (n_max + 1)), n_max);
  }
  static StateVector basis_state(const BasisLabel& l, int n_max) {
    StateVector s = zero(n_max);
    s.amp[Basis(n_max).index(l)] = 1.0;
    return s;
  }

  int dim() const { return static_cast<int>(amp.size()); }
  double norm() const { return amp.norm(); }

  StateVector& normalize() {
    double n = norm();
    if (n == 0.0) throw std::runtime_error("StateVector: cannot normalize zero state");
    amp /= n;
    return *this;
  }
};

inline cdouble inner_product(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("inner_product: dimension mismatch");
  return a.amp.dot(b.amp);  // Eigen dot conjugates the first argument
}

inline double population(const StateVector& s, Level level) {
  double p = 0.0;
  for (int n = 0; n <= s.n_max; ++n)
    p += std::norm(s.amp[3 * n + static_cast<int>(level)]);
  return p;
}

inline double population(const StateVector& s, const BasisLabel& l) {
  return std::norm(s.amp[Basis(s.n_max).index(l)]);
}

/// Two amplitudes over the ordered pair (|f,n>, |g,n+1>).
struct SubspaceVector {
  Eigen::Vector2cd amp;
  int n = 0;

  SubspaceVector() : amp(Eigen::Vector2cd::Zero()) {}
  SubspaceVector(cdouble f_comp, cdouble g_comp, int n_)
      : amp(f_comp, g_comp), n(n_) {}

  double norm() const { return amp.norm(); }
  SubspaceVector& normalize() {
    amp /= norm();
    return *this;
  }
};

inline cdouble inner_product(const SubspaceVector& a, const SubspaceVector& b) {
  return a.amp.dot(b.amp);
}

inline StateVector embed_subspace(const SubspaceVector& v, int n_max) {
  if (v.n + 1 > n_max)
    throw std::out_of_range("embed_subspace: photon index out of range");
  Basis basis(n_max);
  StateVector s = StateVector::zero(n_max);
  s.amp[basis.index(Level::f, v.n)] = v.amp[0];
  s.amp[basis.index(Level::g, v.n + 1)] = v.amp[1];
  return s;
}

inline SubspaceVector project_subspace(const StateVector& s, int n) {
  if (n + 1 > s.n_max)
    throw std::out_of_range("project_subspace: photon index out of range");
  Basis basis(s.n_max);
  SubspaceVector v;
  v.n = n;
  v.amp[0] = s.amp[basis.index(Level::f, n)];
  v.amp[1] = s.amp[basis.index(Level::g, n + 1)];
  return v;
}

inline double hermiticity_defect(const OperatorMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double unitarity_defect(const OperatorMatrix& u) {
  OperatorMatrix d = u.adjoint() * u;
  d.diagonal().array() -= 1.0;
  return d.cwiseAbs().maxCoeff();
}

}  // namespace jcberry
