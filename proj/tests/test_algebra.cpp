#include <gtest/gtest.h>

#include "htype/catalog.hpp"
#include "htype/model.hpp"

using namespace htype;

namespace {

const std::vector<std::string> kCatalog = {"heisenberg:d=1", "heisenberg:d=2", "quaternionic:k=1", "carnot:n=4,m=2",
                                           "su2:s=1"};

}  // namespace

TEST(Clifford, TwoByOneIsRotation) {
  const CliffordModule cm = clifford_generators(2, 1);
  ASSERT_EQ(cm.J.size(), 1u);
  Mat rot(2, 2);
  rot << 0, -1, 1, 0;
  EXPECT_TRUE(cm.J[0].isApprox(rot) || cm.J[0].isApprox(-rot));
  EXPECT_LE((cm.J[0] * cm.J[0] + Mat::Identity(2, 2)).norm(), 1e-15);
}

TEST(Clifford, QuaternionTable) {
  const CliffordModule cm = clifford_generators(4, 3);
  EXPECT_TRUE(validate_clifford(cm).pass());
  const Mat p = cm.J[0] * cm.J[1];
  EXPECT_TRUE(p.isApprox(cm.J[2], 1e-14) || p.isApprox(-cm.J[2], 1e-14));
}

TEST(Clifford, InadmissibleRanks) {
  try {
    clifford_generators(3, 1);
    FAIL() << "expected InadmissibleDimensions";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InadmissibleDimensions);
  }
  EXPECT_THROW(clifford_generators(4, 4), Error);
}

TEST(Clifford, RelationsForSeveralCoranks) {
  for (auto [n, m] : std::vector<std::pair<int, int>>{{2, 1}, {4, 1}, {4, 2}, {4, 3}, {8, 4}, {8, 7}, {16, 8}, {8, 3}}) {
    const CliffordModule cm = clifford_generators(n, m);
    const ValidationReport r = validate_clifford(cm);
    EXPECT_TRUE(r.pass()) << n << "," << m;
  }
}

TEST(Catalog, HeisenbergOne) {
  const HTypeModel M = parse_model_spec("heisenberg:d=1");
  EXPECT_EQ(M.n, 2);
  EXPECT_EQ(M.m, 1);
  EXPECT_TRUE(M.flags.isCarnot);
  ASSERT_TRUE(M.kappa.has_value());
  EXPECT_EQ(*M.kappa, 0.0);
  // one bracket pair, [X1,X2] = +-Z
  EXPECT_EQ(M.nz.size(), 2u);
  EXPECT_EQ(std::abs(M.C(0, 1, 2)), 1.0);
}

TEST(Catalog, J2Flags) {
  EXPECT_TRUE(parse_model_spec("quaternionic:k=1").flags.satisfiesJ2);
  EXPECT_TRUE(parse_model_spec("quaternionic:k=2").flags.satisfiesJ2);
  EXPECT_TRUE(parse_model_spec("heisenberg:d=2").flags.satisfiesJ2);
  const HTypeModel C = parse_model_spec("carnot:n=4,m=2");
  EXPECT_FALSE(C.flags.satisfiesJ2);
  const ValidationReport r = validate_j2(C);
  EXPECT_GT(r.checks[0].maxResidual, 1e-3);
}

TEST(Catalog, StructureInvariants) {
  for (const auto& s : kCatalog) {
    const HTypeModel M = parse_model_spec(s);
    EXPECT_TRUE(validate_structure(M).pass()) << s;
    const ValidationReport h = validate_htype(M);
    EXPECT_TRUE(h.pass()) << s;
    EXPECT_LE(h.checks[0].maxResidual, 1e-14) << s;
  }
}

TEST(Catalog, PerturbedModuleFailsHtype) {
  CliffordModule cm = clifford_generators(4, 1);
  cm.J[0] *= 1.01;
  const ValidationReport r = validate_htype(cm.J);
  EXPECT_FALSE(r.pass());
  // |(1.01 J)^2 + I| on a unit Z, Frobenius over a rank-4 identity
  EXPECT_NEAR(r.checks[0].maxResidual, 0.0201 * 2.0, 1e-9);
}

TEST(Catalog, KappaValues) {
  for (const auto& s : {"heisenberg:d=1", "heisenberg:d=2", "quaternionic:k=1", "carnot:n=4,m=2"}) {
    const HTypeModel M = parse_model_spec(s);
    ASSERT_TRUE(M.kappa.has_value()) << s;
    EXPECT_EQ(*M.kappa, 0.0) << s;
  }
  // corank one: the defining law is vacuous and the fit returns the minimum-norm value
  const Geometry G(parse_model_spec("su2:s=1"));
  const KappaFit fit = fit_clifford_kappa(G);
  EXPECT_TRUE(fit.designZero);
  ASSERT_TRUE(fit.kappa.has_value());
  EXPECT_EQ(*fit.kappa, 0.0);
}

TEST(Catalog, PerturbedModelHasNoKappa) {
  // a non-unimodular vertical bracket [Z1, Z2] = Z2 gives (nabla_{Z2} J)_{Z2} = -J_{Z1}, which no kappa matches
  HTypeModel M = parse_model_spec("quaternionic:k=1");
  const int N = M.N();
  M.c[(4 * N + 5) * N + 5] = 1.0;
  M.c[(5 * N + 4) * N + 5] = -1.0;
  detail::finish_constants(M);
  const KappaFit fit = fit_clifford_kappa(Geometry(M));
  EXPECT_FALSE(fit.kappa.has_value());
  EXPECT_GT(fit.residual, 1e-6);
}

TEST(Catalog, JsonRoundTripIsBitwise) {
  for (const auto& s : kCatalog) {
    const HTypeModel M = parse_model_spec(s);
    const nlohmann::json j = model_to_json(M);
    const HTypeModel back = model_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.c, M.c) << s;
    EXPECT_EQ(back.id(), M.id());
    EXPECT_EQ(model_to_json(back).dump(), j.dump());
  }
}

TEST(Catalog, Determinism) {
  for (const auto& s : kCatalog) {
    const HTypeModel a = parse_model_spec(s), b = parse_model_spec(s);
    EXPECT_EQ(a.c, b.c);
    EXPECT_EQ(validate_j2(a).to_csv(), validate_j2(b).to_csv());
  }
}

TEST(Catalog, BadSpecs) {
  EXPECT_THROW(parse_model_spec("heisenberg:d=0"), Error);
  EXPECT_THROW(parse_model_spec("su2:s=-1"), Error);
  EXPECT_THROW(parse_model_spec("torus"), Error);
  EXPECT_THROW(parse_model_spec("carnot:n=3,m=1"), Error);
}
