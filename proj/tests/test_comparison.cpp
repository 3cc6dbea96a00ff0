#include <gtest/gtest.h>

#include <complex>

#include "htype/catalog.hpp"
#include "htype/comparison.hpp"

using namespace htype;

namespace {

// closed forms in complex arithmetic, valid for either sign of k away from k = 0
double riem_closed(double r, double k) {
  const std::complex<double> q = std::sqrt(std::complex<double>(k, 0));
  return (q * std::cos(q * r) / std::sin(q * r)).real();
}
double sas_closed(double r, double k) {
  const std::complex<double> q = std::sqrt(std::complex<double>(k, 0)), s = q * r;
  return (q * (std::sin(s) - s * std::cos(s)) / (2.0 - 2.0 * std::cos(s) - s * std::sin(s))).real();
}

SearchOptions fast() {
  SearchOptions o;
  o.gridDensity = 3;
  return o;
}

Vec interior_point(const HTypeModel& M, Rng& rng) {
  const double r = rng.uniform(0.5, 2.0);
  Vec xi = Vec::Zero(M.N());
  xi.head(M.n) = r * rng.unit_vec(M.n);
  xi.tail(M.m) = 0.1 * r * r * rng.uniform(-1, 1) * rng.unit_vec(M.m);
  return chart::exp_frame(M, xi);
}

}  // namespace

TEST(ComparisonFunction, FlatValues) {
  EXPECT_EQ(comparison_function(CompKind::Riem, 1.0, 0.0), 1.0);
  EXPECT_EQ(comparison_function(CompKind::Sas, 1.0, 0.0), 4.0);
  for (double r : {0.1, 3.7}) {
    EXPECT_DOUBLE_EQ(comparison_function(CompKind::Riem, r, 0.0) * r, 1.0);
    EXPECT_DOUBLE_EQ(comparison_function(CompKind::Sas, r, 0.0) * r, 4.0);
  }
}

TEST(ComparisonFunction, ReferenceValues) {
  EXPECT_NEAR(comparison_function(CompKind::Riem, 0.5, 4.0), 2.0 / std::tan(1.0), 1e-14);
  for (double k : {-3.0, -1.0, -0.4, 0.4, 1.0, 2.5, 9.0}) {
    const double r = 1.0;
    if (k * r * r < M_PI * M_PI) EXPECT_NEAR(comparison_function(CompKind::Riem, r, k), riem_closed(r, k), 1e-10) << k;
    EXPECT_NEAR(comparison_function(CompKind::Sas, r, k), sas_closed(r, k), 1e-10) << k;
  }
}

TEST(ComparisonFunction, ContinuousAcrossSeriesSwitch) {
  for (CompKind kind : {CompKind::Riem, CompKind::Sas})
    for (double sgn : {1.0, -1.0}) {
      const double a = comparison_function(kind, 1.0, sgn * (1e-4 - 1e-12));
      const double b = comparison_function(kind, 1.0, sgn * (1e-4 + 1e-12));
      EXPECT_NEAR(a, b, 1e-12);
    }
  // the Sasakian series region joins the closed form at |x| = 1
  EXPECT_NEAR(comparison_function(CompKind::Sas, 1.0, 1.0 - 1e-12), comparison_function(CompKind::Sas, 1.0, 1.0 + 1e-12),
              1e-11);
  EXPECT_NEAR(comparison_function(CompKind::Sas, 1.0, -1.0 + 1e-12),
              comparison_function(CompKind::Sas, 1.0, -1.0 - 1e-12), 1e-11);
}

TEST(ComparisonFunction, Poles) {
  EXPECT_NEAR(comparison_pole(CompKind::Riem), M_PI, 1e-10);
  EXPECT_NEAR(comparison_pole(CompKind::Sas), 2 * M_PI, 1e-10);
  EXPECT_LE(std::abs(sas_denominator(2 * M_PI)), 1e-12);
  // both functions fall to -infinity at their poles
  EXPECT_LT(comparison_function(CompKind::Riem, 1.0, std::pow(M_PI - 1e-6, 2)), -1e5);
  EXPECT_LT(comparison_function(CompKind::Sas, 1.0, std::pow(2 * M_PI - 1e-6, 2)), -1e5);
  try {
    comparison_function(CompKind::Riem, 1.0, M_PI * M_PI);
    FAIL() << "expected DomainExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainExceeded);
  }
  EXPECT_THROW(comparison_function(CompKind::Sas, 1.0, 4 * M_PI * M_PI + 1e-9), Error);
  EXPECT_THROW(comparison_function(CompKind::Sas, -1.0, 0.0), Error);
}

TEST(ComparisonFunction, ConstantC) {
  const double C = sublaplacian_constant_C();
  EXPECT_NEAR(C, 7.7367242914258992127209077788909032321435209790668, 1e-12);
  EXPECT_GT(C, 4.0);
  // r F_Sas(r, -4 pi^2 / r^2) is the same number
  EXPECT_NEAR(comparison_function(CompKind::Sas, 1.0, -4 * M_PI * M_PI), C, 1e-10);
}

TEST(RhsSasEps, ReducesAtZeroEps) {
  for (double K : {-2.0, 0.0, 0.5, 3.0}) EXPECT_NEAR(rhs_sas_eps(1.3, K, 0.0), comparison_function(CompKind::Sas, 1.3, K), 1e-12);
}

TEST(RhsSasEps, FlatLimit) {
  for (double eps : {0.0, 0.1, 1.0}) {
    const double r = 0.8, mu = eps / (r * r);
    EXPECT_NEAR(rhs_sas_eps(r, 0.0, eps), (4 + 12 * mu) / (1 + 12 * mu) / r, 1e-12);
    EXPECT_NEAR(rhs_sas_eps(r, 1e-9, eps), rhs_sas_eps(r, 0.0, eps), 1e-8);
  }
}

TEST(RhsSasEps, NonincreasingInEpsOnGrid) {
  const double r = 1.0;
  // the eps = 1 denominator reaches zero first; its root bounds the grid
  double lo = 1.0, hi = 4 * M_PI * M_PI;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    try {
      rhs_sas_eps(r, mid, 1.0);
      lo = mid;
    } catch (const Error&) {
      hi = mid;
    }
  }
  EXPECT_LT(lo, 4 * M_PI * M_PI);
  const double Kmax = lo - 1e-3;
  int evaluated = 0;
  for (int i = 0; i < 100; ++i) {
    const double K = -10.0 + (Kmax + 10.0) * i / 99.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 100; ++j) {
      const double eps = j / 99.0;
      double v;
      try {
        v = rhs_sas_eps(r, K, eps);
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DomainExceeded);
        break;
      }
      ++evaluated;
      EXPECT_LE(v, prev + 1e-12) << "K=" << K << " eps=" << eps;
      EXPECT_LE(v, comparison_function(CompKind::Sas, r, K) + 1e-12);
      prev = v;
    }
  }
  EXPECT_EQ(evaluated, 10000);
}

TEST(Records, CsvHeaderAndQuoting) {
  EXPECT_EQ(csv_header(3),
            "theorem_id,model,eps,x0,x1,x2,y0,y1,y2,r,h,v,rho,kappa,K,K1,K2,lhs,rhs,margin,status");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("carnot:n=4,m=2"), "\"carnot:n=4,m=2\"");
  EXPECT_EQ(csv_field("a\"b"), "\"a\"\"b\"");
}

TEST(Records, SettleUsesTolerance) {
  ComparisonRecord rec;
  Tolerance tol;
  rec.rhs = 10.0;
  rec.lhs = 10.0 + 0.5 * tol.at(10.0);
  settle(rec, tol);
  EXPECT_EQ(rec.status, Status::Pass);
  rec.lhs = 10.0 + 2 * tol.at(10.0);
  settle(rec, tol);
  EXPECT_EQ(rec.status, Status::Fail);
  EXPECT_DOUBLE_EQ(rec.margin, rec.rhs - rec.lhs);
}

TEST(Records, TheoremNamesRoundTrip) {
  for (TheoremId id : all_theorems()) EXPECT_EQ(theorem_from_name(theorem_name(id)), id);
  EXPECT_FALSE(theorem_from_name("NOPE").has_value());
  EXPECT_EQ(all_theorems().size(), 18u);
}

TEST(Checks, GeodesicDirectionOnHeisenbergOne) {
  const Geometry G(parse_model_spec("heisenberg:d=1"));
  const CurvatureInvariants ci = curvature_invariants(G);
  Vec y(3);
  y << 1.0, 0.3, 0.12;
  const ComparisonRecord rec = check_inequality(G, ci, TheoremId::GEOD_DIR, 0.2, chart::identity(G.model), y, {}, fast());
  EXPECT_EQ(rec.status, Status::Pass) << rec.note;
  EXPECT_GE(rec.margin, 0.0);
  EXPECT_NEAR(rec.rhs, (1 - rec.h * rec.h) / rec.r, 1e-15);
}

TEST(Checks, StructuralSkips) {
  const Geometry Q(parse_model_spec("quaternionic:k=1"));
  const CurvatureInvariants ciQ = curvature_invariants(Q);
  Rng rng(3);
  const Vec y = interior_point(Q.model, rng);
  const ComparisonRecord avg = check_inequality(Q, ciQ, TheoremId::RIEM_AVG, 0.5, chart::identity(Q.model), y, {}, fast());
  EXPECT_EQ(avg.status, Status::HypothesisSkipped);
  EXPECT_EQ(avg.note, "n - m - 1 = 0");

  const Geometry C(parse_model_spec("carnot:n=4,m=2"));
  const CheckContext ctx{&C, curvature_invariants(C), {}};
  EXPECT_EQ(detail::structural_skip(ctx, TheoremId::RIEM_AVG), std::optional<std::string>("J2 condition fails"));
  EXPECT_EQ(detail::structural_skip(ctx, TheoremId::SUBLAP_SR), std::optional<std::string>("J2 condition fails"));
  EXPECT_FALSE(detail::structural_skip(ctx, TheoremId::RIEM_SECT).has_value());

  const Geometry H(parse_model_spec("heisenberg:d=1"));
  const ComparisonRecord sr =
      check_inequality(H, curvature_invariants(H), TheoremId::SUBLAP_SR, 0.5, chart::identity(H.model),
                       interior_point(H.model, rng), {}, fast());
  EXPECT_EQ(sr.status, Status::HypothesisSkipped);
  EXPECT_EQ(sr.note, "stated for eps = 0 only");
}

TEST(Checks, VerticalGradientAndSublaplacian) {
  const Geometry G(parse_model_spec("heisenberg:d=1"));
  const CurvatureInvariants ci = curvature_invariants(G);
  Rng rng(4);
  for (int k = 0; k < 3; ++k) {
    const Vec y = interior_point(G.model, rng);
    const ComparisonRecord vg = check_inequality(G, ci, TheoremId::VERT_GRAD, 0.3, chart::identity(G.model), y, {}, fast());
    EXPECT_EQ(vg.status, Status::Pass);
    const ComparisonRecord sl = check_inequality(G, ci, TheoremId::SUBLAP_EPS, 0.3, chart::identity(G.model), y, {}, fast());
    EXPECT_EQ(sl.status, Status::Pass) << sl.note;
    EXPECT_LE(sl.r * sl.lhs, 1 - sl.h * sl.h + 4 + 1e-9);
    EXPECT_NE(sl.note.find("hessian=bott"), std::string::npos);
  }
}

TEST(Checks, SublaplacianConstantsLimit) {
  const Geometry G(parse_model_spec("quaternionic:k=1"));
  const CheckContext ctx{&G, curvature_invariants(G), {}};
  Hypothesis a, b;
  const double r = 0.9, v = 0.7, eps = 1e-6;
  const double h = std::sqrt(1 - eps * v * v);
  const double rhsEps = detail::theorem_rhs(ctx, TheoremId::SUBLAP_EPS, eps, r, h, v, a);
  const double rhsSr = detail::theorem_rhs(ctx, TheoremId::SUBLAP_SR, 0.0, r, 1.0, v, b);
  EXPECT_NEAR(b.K, ctx.ci.secMin_H + v * v / 4, 1e-15);
  EXPECT_NEAR(b.K1, ctx.ci.secMin_H + v * v, 1e-15);
  EXPECT_NEAR(b.K2, ctx.ci.secMin_H - 2 * v * v, 1e-15);
  EXPECT_NEAR(a.K2, b.K2, 1e-5);
  EXPECT_NEAR(rhsEps, rhsSr, 1e-5);
}

TEST(Checks, BonnetMyersNote) {
  const Geometry G(parse_model_spec("heisenberg:d=2"));
  Rng rng(5);
  const ComparisonRecord rec = check_inequality(G, curvature_invariants(G), TheoremId::BM_TRACE, 0.0,
                                                chart::identity(G.model), interior_point(G.model, rng), {}, fast());
  EXPECT_EQ(rec.status, Status::Pass) << rec.note;
  EXPECT_NE(rec.note.find("m-n-1"), std::string::npos);
  EXPECT_NE(rec.note.find("richardson"), std::string::npos);
}

TEST(Diameter, Certificates) {
  const Geometry H(parse_model_spec("heisenberg:d=1"));
  const DiameterCertificate dh = diameter_certificate(H, curvature_invariants(H));
  EXPECT_FALSE(dh.bound_a || dh.bound_b || dh.bound_c || dh.bmii_bound || dh.empiricalDiameterLowerBound);

  const Geometry S(parse_model_spec("su2:s=1"));
  const CurvatureInvariants ci = curvature_invariants(S);
  const DiameterCertificate ds = diameter_certificate(S, ci, 8, 42, fast());
  ASSERT_TRUE(ds.bound_b && ds.bound_c && ds.empiricalDiameterLowerBound);
  EXPECT_NEAR(*ds.bound_b, 2 * M_PI, 1e-10);
  EXPECT_NEAR(*ds.bound_c / *ds.bound_b, std::sqrt(3.0), 1e-12);
  EXPECT_LE(*ds.empiricalDiameterLowerBound, *ds.bound_b);
  const auto recs = diameter_records(S, ci, ds, {});
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].status, Status::HypothesisSkipped);
  EXPECT_EQ(recs[1].status, Status::Pass);
  EXPECT_EQ(recs[2].status, Status::Pass);
}
