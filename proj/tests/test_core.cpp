// Copyright 2026 The jcberry Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0

#include "jcberry/core.hpp"

#include <random>

#include <gtest/gtest.h>

using namespace jcberry;

namespace {

StateVector random_state(int n_max, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Eigen::VectorXcd amp(3 * (n_max + 1));
  for (int i = 0; i < amp.size(); ++i) amp[i] = cdouble(dist(rng), dist(rng));
  StateVector s(amp, n_max);
  return s.normalize();
}

}  // namespace

TEST(Basis, SmallestSpace) {
  Basis b = make_basis(0);
  ASSERT_EQ(b.size(), 3);
  EXPECT_EQ(b.label(0), (BasisLabel{Level::g, 0}));
  EXPECT_EQ(b.label(1), (BasisLabel{Level::e, 0}));
  EXPECT_EQ(b.label(2), (BasisLabel{Level::f, 0}));
}

TEST(Basis, Counting) {
  EXPECT_EQ(make_basis(1).size(), 6);
  EXPECT_EQ(make_basis(1).label(5), (BasisLabel{Level::f, 1}));
  EXPECT_EQ(make_basis(4).size(), 15);
}

TEST(Basis, OrderingIsPhotonsMajor) {
  Basis b = make_basis(3);
  auto labels = b.labels();
  for (std::size_t i = 1; i < labels.size(); ++i)
    EXPECT_TRUE(labels[i - 1] < labels[i]);
  for (int i = 0; i < b.size(); ++i) EXPECT_EQ(b.index(b.label(i)), i);
}

TEST(Basis, RejectsBadInput) {
  EXPECT_THROW(make_basis(-1), std::invalid_argument);
  EXPECT_THROW(make_basis(2).index(Level::g, 3), std::out_of_range);
}

TEST(InnerProduct, NormalizationAndOrthogonality) {
  StateVector g0 = StateVector::basis_state({Level::g, 0}, 1);
  StateVector f0 = StateVector::basis_state({Level::f, 0}, 1);
  EXPECT_NEAR(std::abs(inner_product(g0, g0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(inner_product(g0, f0)), 0.0, 1e-15);

  StateVector psi = g0;
  psi.amp += f0.amp;
  psi.normalize();
  EXPECT_NEAR(std::abs(inner_product(psi, f0)), 1.0 / std::sqrt(2.0), 1e-14);
}

TEST(InnerProduct, ConjugateLinearInFirstArgument) {
  std::mt19937_64 rng(7);
  StateVector a = random_state(2, rng);
  StateVector b = random_state(2, rng);
  const cdouble z(0.3, -1.2);
  StateVector za = a;
  za.amp *= z;
  EXPECT_NEAR(std::abs(inner_product(za, b) - std::conj(z) * inner_product(a, b)),
              0.0, 1e-14);
  EXPECT_GE(inner_product(a, a).real(), 0.0);
  EXPECT_NEAR(inner_product(a, a).imag(), 0.0, 1e-14);
}

TEST(InnerProduct, DimensionMismatch) {
  StateVector a = StateVector::basis_state({Level::g, 0}, 1);
  StateVector b = StateVector::basis_state({Level::g, 0}, 2);
  EXPECT_THROW(inner_product(a, b), std::invalid_argument);
}

TEST(Subspace, EmbedPlacesPair) {
  StateVector s = embed_subspace(SubspaceVector(1.0, 0.0, 0), 2);
  EXPECT_NEAR(population(s, BasisLabel{Level::f, 0}), 1.0, 1e-15);

  StateVector t = embed_subspace(SubspaceVector(0.0, 1.0, 2), 3);
  EXPECT_NEAR(population(t, BasisLabel{Level::g, 3}), 1.0, 1e-15);
}

TEST(Subspace, RoundTrip) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist;
  for (int rep = 0; rep < 50; ++rep) {
    SubspaceVector v(cdouble(dist(rng), dist(rng)), cdouble(dist(rng), dist(rng)),
                     rep % 3);
    v.normalize();
    SubspaceVector back = project_subspace(embed_subspace(v, 4), v.n);
    EXPECT_NEAR((back.amp - v.amp).norm(), 0.0, 1e-15);
  }
}

TEST(Subspace, RangeErrors) {
  EXPECT_THROW(embed_subspace(SubspaceVector(1.0, 0.0, 2), 2), std::out_of_range);
  StateVector s = StateVector::zero(2);
  EXPECT_THROW(project_subspace(s, 2), std::out_of_range);
}

TEST(Population, SelectorsAndCompleteness) {
  StateVector f0 = StateVector::basis_state({Level::f, 0}, 1);
  EXPECT_NEAR(population(f0, Level::f), 1.0, 1e-15);

  StateVector mix = StateVector::zero(1);
  mix.amp[Basis(1).index(Level::e, 0)] = 1.0 / std::sqrt(2.0);
  mix.amp[Basis(1).index(Level::f, 0)] = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(population(mix, Level::e), 0.5, 1e-15);

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    StateVector s = random_state(3, rng);
    const double total = population(s, Level::g) + population(s, Level::e) +
                         population(s, Level::f);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Operators, HermiticityAndUnitarityDefects) {
  Eigen::MatrixXcd h(2, 2);
  h << 1.0, cdouble(0.0, 2.0), cdouble(0.0, -2.0), -1.0;
  EXPECT_NEAR(hermiticity_defect(h), 0.0, 1e-15);

  Eigen::MatrixXcd u(2, 2);
  const double c = std::cos(0.3), s = std::sin(0.3);
  u << c, -s, s, c;
  EXPECT_NEAR(unitarity_defect(u), 0.0, 1e-15);
}
