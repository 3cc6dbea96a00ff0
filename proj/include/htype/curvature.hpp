#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "htype/connection.hpp"
#include "htype/core.hpp"
#include "htype/model.hpp"
#include "htype/report.hpp"

namespace htype {

// Frame-constant tensors of the Bott connection, built once per model.
struct Geometry {
  HTypeModel model;
  ConnectionTable bott;
  Bilinear T;   // Bott torsion
  Bilinear J;   // J_Z X, eps = 1
  CurvatureTensor R;

  explicit Geometry(const HTypeModel& M)
      : model(M), bott(bott_table(M)), T(torsion_tensor(M, bott)), J(j_eps_tensor(M, T, 1.0)),
        R(curvature_tensor(M, bott)) {}

  int n() const { return model.n; }
  int m() const { return model.m; }
  int N() const { return model.N(); }

  Vec H(const Vec& X) const { return proj_h(model, X); }
  Vec V(const Vec& X) const { return proj_v(model, X); }
  Vec embed_h(const Vec& x) const {
    Vec X = Vec::Zero(N());
    X.head(n()) = x;
    return X;
  }
  Vec embed_v(const Vec& z) const {
    Vec X = Vec::Zero(N());
    X.tail(m()) = z;
    return X;
  }

  // Sec(X ^ Y) = <R(X,Y)Y, X>, no normalisation
  double sec(const Vec& X, const Vec& Y) const { return R(X, Y, Y).dot(X); }

  // Ric_H(X,X) = sum_i <R(W_i, X)X, W_i> over a g-orthonormal basis of H
  double ric_h(const Vec& X) const {
    double s = 0;
    for (int i = 0; i < n(); ++i) {
      const Vec W = Vec::Unit(N(), i);
      s += R(W, X, X).dot(W);
    }
    return s;
  }

  // Ric_Sas(X,X) = |X_H|^{-2} sum_a <R(J_a X, X_H) X_H, J_a X>
  double ric_sas(const Vec& X) const {
    const Vec Xh = H(X);
    const double nh2 = Xh.squaredNorm();
    double s = 0;
    for (int a = 0; a < m(); ++a) {
      const Vec JX = J(embed_v(Vec::Unit(m(), a)), X);
      s += R(JX, Xh, Xh).dot(JX);
    }
    return s / nh2;
  }

  // orthonormal basis (columns, frame coordinates) of H_Riem(Y) = H minus J_V Y and Y_H
  Mat h_riem_basis(const Vec& Y) const {
    Mat S(N(), m() + 1);
    for (int a = 0; a < m(); ++a) S.col(a) = J(embed_v(Vec::Unit(m(), a)), Y);
    S.col(m()) = H(Y);
    Mat Hb = Mat::Zero(N(), n());
    Hb.topRows(n()) = Mat::Identity(n(), n());
    return complement_in(Hb, S);
  }

  // trace of <R(W, X)X, W> over H_Riem(X)
  double ric_riem(const Vec& X) const {
    const Mat B = h_riem_basis(X);
    double s = 0;
    for (int i = 0; i < B.cols(); ++i) s += R(B.col(i), X, X).dot(B.col(i));
    return s;
  }

  // (nabla_X J)_Y Z for the Bott connection
  Vec nabla_j(const Vec& X, const Vec& Y, const Vec& Z) const { return cov_deriv(bott, J, X, Y, Z); }
  Vec nabla_t(const Vec& X, const Vec& Y, const Vec& Z) const { return cov_deriv(bott, T, X, Y, Z); }

  // curvature combination of the sharp Bonnet-Myers hypothesis, X unit horizontal
  double bmii_combination(const Vec& X) const {
    double s = ric_h(X);
    for (int a = 0; a < m(); ++a) {
      const Vec JX = J(embed_v(Vec::Unit(m(), a)), X);
      s -= R(X, JX, JX).dot(X);
    }
    for (int a = 0; a < m(); ++a) {
      const Vec D = nabla_j(X, embed_v(Vec::Unit(m(), a)), X);
      double proj = 0;
      for (int b = 0; b < m(); ++b) {
        const double c = D.dot(J(embed_v(Vec::Unit(m(), b)), X));
        proj += c * c;
      }
      s -= D.squaredNorm() - proj;
    }
    return s;
  }
};

namespace detail {

inline double sym_min_eig(const Mat& A) {
  if (A.rows() == 0) return std::numeric_limits<double>::infinity();
  const Mat S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

// quadratic form X -> <R(X, Y)Y, X> restricted to span(B)
inline double min_sec_on(const Geometry& G, const Vec& Y, const Mat& B) {
  const int k = static_cast<int>(B.cols());
  if (k == 0) return std::numeric_limits<double>::infinity();
  Mat Q(k, k);
  std::vector<Vec> RY(k);
  for (int i = 0; i < k; ++i) RY[i] = G.R(B.col(i), Y, Y);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) Q(i, j) = RY[j].dot(B.col(i));
  return sym_min_eig(Q);
}

}  // namespace detail

// Minimum of f over the unit sphere of R^d: dense sampling then pattern-search refinement.
inline double sphere_min(const std::function<double(const Vec&)>& f, int d, int samples, std::uint64_t seed) {
  if (d == 1) return std::min(f(Vec::Constant(1, 1.0)), f(Vec::Constant(1, -1.0)));
  const auto dirs = sphere_directions(d, samples, seed);
  std::vector<std::pair<double, int>> vals;
  vals.reserve(dirs.size());
  for (int i = 0; i < static_cast<int>(dirs.size()); ++i) vals.emplace_back(f(dirs[i]), i);
  const int keep = std::min<int>(3, static_cast<int>(vals.size()));
  std::partial_sort(vals.begin(), vals.begin() + keep, vals.end());
  double best = vals[0].first;
  for (int c = 0; c < keep; ++c) {
    Vec x = dirs[vals[c].second];
    double fx = vals[c].first;
    double step = 0.05;
    while (step > 1e-10) {
      bool improved = false;
      Mat P = Mat::Identity(d, d) - x * x.transpose();
      const Mat Tb = orthonormalize(P);
      for (int k = 0; k < Tb.cols() && !improved; ++k)
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          Vec y = x + sgn * step * Tb.col(k);
          y.normalize();
          const double fy = f(y);
          if (fy < fx) {
            x = y;
            fx = fy;
            improved = true;
            break;
          }
        }
      if (!improved) step *= 0.5;
    }
    best = std::min(best, fx);
  }
  return best;
}

struct CurvatureInvariants {
  double secMin_H = 0;           // all horizontal planes
  double secMin_RiemPlanes = 0;  // X in H_Riem(Y)
  double secMin_SasPlanes = 0;   // X ^ J_Z X
  double ricRiem_min = 0;        // Ric_Riem over unit horizontal X
  double ricSas_min = 0;         // Ric_Sas over unit horizontal X
  double bmii_min = 0;           // Bonnet-Myers combination over unit horizontal X
  std::optional<double> kappa;
  bool riemPlanesEmpty = false;
};

inline CurvatureInvariants curvature_invariants(const Geometry& G, int samples = 8192, std::uint64_t seed = 19) {
  CurvatureInvariants ci;
  const int n = G.n(), m = G.m(), N = G.N();
  auto clean = [](double v) { return std::abs(v) < 1e-13 ? 0.0 : v; };
  Mat Hb = Mat::Zero(N, n);
  Hb.topRows(n) = Mat::Identity(n, n);

  ci.secMin_H = clean(sphere_min(
      [&](const Vec& y) {
        const Vec Y = G.embed_h(y);
        return detail::min_sec_on(G, Y, complement_in(Hb, Y));
      },
      n, samples, seed));

  if (n - m - 1 > 0) {
    ci.secMin_RiemPlanes = clean(sphere_min(
        [&](const Vec& y) {
          const Vec Y = G.embed_h(y);
          return detail::min_sec_on(G, Y, G.h_riem_basis(Y));
        },
        n, samples, seed + 1));
    ci.ricRiem_min = clean(sphere_min([&](const Vec& x) { return G.ric_riem(G.embed_h(x)); }, n, samples, seed + 3));
    ci.bmii_min = clean(sphere_min([&](const Vec& x) { return G.bmii_combination(G.embed_h(x)); }, n, samples, seed + 5));
  } else {
    ci.riemPlanesEmpty = true;
  }

  // Sec(X ^ J_Z X) is quadratic in Z for fixed unit X
  ci.secMin_SasPlanes = clean(sphere_min(
      [&](const Vec& x) {
        const Vec X = G.embed_h(x);
        Mat Q(m, m);
        std::vector<Vec> JX(m);
        for (int a = 0; a < m; ++a) JX[a] = G.J(G.embed_v(Vec::Unit(m, a)), X);
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) Q(a, b) = G.R(X, JX[a], JX[b]).dot(X);
        return detail::sym_min_eig(Q);
      },
      n, samples, seed + 2));
  ci.ricSas_min = clean(sphere_min([&](const Vec& x) { return G.ric_sas(G.embed_h(x)); }, n, samples, seed + 4));
  ci.kappa = G.model.kappa;
  return ci;
}

// Least-squares fit of (nabla_{Z1} J)_{Z2} = -kappa (J_{Z1} J_{Z2} + <Z1,Z2> Id) over vertical basis pairs.
struct KappaFit {
  std::optional<double> kappa;
  double residual = 0;
  bool designZero = false;
};

inline KappaFit fit_clifford_kappa(const Geometry& G, double tol = 1e-10) {
  const int n = G.n(), m = G.m();
  double num = 0, den = 0;
  std::vector<std::pair<Mat, Mat>> rows;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const Vec Z1 = G.embed_v(Vec::Unit(m, a)), Z2 = G.embed_v(Vec::Unit(m, b));
      Mat lhs(n, n), A(n, n);
      for (int i = 0; i < n; ++i) {
        const Vec X = G.embed_h(Vec::Unit(n, i));
        lhs.col(i) = G.nabla_j(Z1, Z2, X).head(n);
        A.col(i) = -(G.J(Z1, G.J(Z2, X)) + (a == b ? 1.0 : 0.0) * X).head(n);
      }
      num += (A.array() * lhs.array()).sum();
      den += A.squaredNorm();
      rows.emplace_back(lhs, A);
    }
  KappaFit fit;
  fit.designZero = den < 1e-24;
  const double k = fit.designZero ? 0.0 : num / den;
  double res = 0;
  for (const auto& [lhs, A] : rows) res = std::max(res, (lhs - k * A).cwiseAbs().maxCoeff());
  fit.residual = res;
  if (res <= tol) fit.kappa = k;
  return fit;
}

// sectional curvature of the vertical leaves (Bott), max deviation from kappa^2 over basis pairs
inline double leaf_curvature_defect(const Geometry& G, double kappa) {
  const int m = G.m();
  double worst = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      const Vec Z1 = G.embed_v(Vec::Unit(m, a)), Z2 = G.embed_v(Vec::Unit(m, b));
      worst = std::max(worst, std::abs(G.sec(Z1, Z2) - kappa * kappa));
    }
  return worst;
}

// Euler-Arnold rate of the frame covector: hdot_a = -sum c_ab^k h_k u_b, u = w * h
inline Vec coadjoint_rate(const HTypeModel& M, const Vec& h, const Vec& w) {
  const Vec u = w.cwiseProduct(h);
  Vec out = Vec::Zero(M.N());
  for (const auto& e : M.nz) out[e.a] -= e.v * h[e.k] * u[e.b];
  return out;
}

namespace detail {

// D1_u (D2_u W) for W(t) with derivatives (W, Wd, Wdd) along a curve with velocity u, acceleration ud
inline Vec second_cov(const ConnectionTable& D1, const ConnectionTable& D2, const Vec& u, const Vec& ud, const Vec& W,
                      const Vec& Wd, const Vec& Wdd) {
  const Vec inner = Wd + D2.apply(u, W);
  const Vec inner_d = Wdd + D2.apply(ud, W) + D2.apply(u, Wd);
  return inner_d + D1.apply(u, inner);
}

}  // namespace detail

struct JacobiOperatorTerms {
  Vec direct;  // hat-nabla(nabla^eps W) + hat-R(W, u)u
  Vec formulaA;
  Vec formulaB;
};

// Both sides of the Jacobi operator expansions at one point of a geodesic.
inline JacobiOperatorTerms jacobi_operator_terms(const Geometry& G, double eps, const Vec& h, const Vec& W,
                                                 const Vec& Wd, const Vec& Wdd) {
  const HTypeModel& M = G.model;
  const Vec w = M.weights(eps);
  const Vec u = w.cwiseProduct(h);
  const Vec ud = w.cwiseProduct(coadjoint_rate(M, h, w));
  const ConnectionTable hat = hat_eps_table(M, eps);
  const ConnectionTable adj = adjoint_eps_table(M, eps);
  const CurvatureTensor Rhat = curvature_tensor(M, hat);
  const Bilinear Je = j_eps_tensor(M, G.T, eps);
  const double kappa = M.kappa.value_or(0.0);

  JacobiOperatorTerms out;
  out.direct = detail::second_cov(hat, adj, u, ud, W, Wd, Wdd) + Rhat(W, u, u);

  const Vec hatW = Wd + hat.apply(u, W);
  const Vec hathat = detail::second_cov(hat, hat, u, ud, W, Wd, Wdd);
  const Vec TWu = G.T(W, u);
  const Vec TWu_d = G.T(Wd, u) + G.T(W, ud);
  const Vec hatT = TWu_d + hat.apply(u, TWu);
  const Vec common = hathat - Je(u, hatW) + Je(hatW, u) + Je(TWu, u) + G.R(G.H(W), G.H(u), G.H(u)) + hatT;

  out.formulaA = common - cov_deriv(G.bott, Je, u, W, u) + G.nabla_t(u, W, u) + G.R(G.V(W), G.V(u), G.V(u));

  // (W_V)_perp: vertical part of W with its component along u_V removed
  Vec WV = G.V(W);
  const Vec uV = G.V(u);
  if (uV.squaredNorm() > 0) WV -= (WV.dot(uV) / uV.squaredNorm()) * uV;
  out.formulaB = common + kappa * G.J(u, Je(WV, u)) + kappa * (G.T(G.J(u, W), u) + W.dot(G.H(u)) * uV) +
                 kappa * kappa * uV.squaredNorm() * WV;
  return out;
}

// Residual suite for the algebraic and differential identities of the model.
inline ValidationReport verify_structure_identities(const Geometry& G, double eps, int sampleCount,
                                                    std::uint64_t seed = 2024) {
  const HTypeModel& M = G.model;
  const int N = M.N();
  ValidationReport rep;
  Rng rng(seed);
  const ConnectionTable hat = hat_eps_table(M, eps);
  const ConnectionTable adj = adjoint_eps_table(M, eps);
  const Bilinear Je = j_eps_tensor(M, G.T, eps);
  const Vec g = M.metric(eps);

  rep.add("bott_metric", metric_residual(G.bott, Vec::Ones(N)), 1e-12);
  rep.add("hat_metric", metric_residual(hat, g), 1e-12);
  rep.add("adjoint_metric", metric_residual(adj, g), 1e-12);
  rep.add("hat_skew_torsion", skew_torsion_residual(M, hat, g), 1e-12);
  rep.add("a_tensor", a_tensor_max(M), 1e-12);

  auto scale = [](const Vec& v) { return std::max(1.0, v.cwiseAbs().maxCoeff()); };
  double nablaJ = 0, perpB = 0, perpH = 0, propT = 0, ntnj = 0, lemA = 0, lemB = 0, bianchi = 0, ric = 0;
  for (int s = 0; s < sampleCount; ++s) {
    const Vec X = rng.normal_vec(N), Y = rng.normal_vec(N), Zf = rng.normal_vec(N);
    const Vec Z = G.V(rng.normal_vec(N));

    // (hat-nabla_X J)_Y Zf = (nabla_X J)_Y Zf + [J^eps_X, J_Y] Zf
    const Vec lhs = cov_deriv(hat, G.J, X, Y, Zf);
    const Vec rhs = G.nabla_j(X, Y, Zf) + Je(X, G.J(Y, Zf)) - G.J(Y, Je(X, Zf));
    nablaJ = std::max(nablaJ, (lhs - rhs).norm() / scale(lhs));

    const Vec JZY = G.J(Z, Y);
    perpB = std::max(perpB, std::abs(JZY.dot(G.nabla_j(X, Z, Y))));
    perpH = std::max(perpH, std::abs(JZY.dot(cov_deriv(hat, G.J, X, Z, Y))));

    propT = std::max(propT, (G.T(G.J(Z, X), X) + G.H(X).squaredNorm() * Z).norm());

    ntnj = std::max(ntnj, (G.nabla_t(Y, G.J(Z, X), X) + G.T(G.nabla_j(Y, Z, X), X)).norm());

    const Vec RWXX = G.R(Y, X, X);
    const Vec dec = G.R(G.H(Y), G.H(X), G.H(X)) + G.R(G.V(Y), G.V(X), G.V(X)) + G.nabla_t(X, Y, X);
    bianchi = std::max(bianchi, (RWXX - dec).norm());

    // Ric_H = Ric_Riem + Ric_Sas on horizontal X (the direction term vanishes there)
    const Vec Xh = G.H(X);
    ric = std::max(ric, std::abs(G.ric_h(Xh) - G.ric_riem(Xh) - G.ric_sas(Xh)));

    // Jacobi operator expansions along a geodesic through a random covector
    const Vec h = rng.normal_vec(N);
    const Vec W = rng.normal_vec(N), Wd = rng.normal_vec(N), Wdd = rng.normal_vec(N);
    const auto jt = jacobi_operator_terms(G, eps, h, W, Wd, Wdd);
    lemA = std::max(lemA, (jt.direct - jt.formulaA).norm() / scale(jt.direct));
    lemB = std::max(lemB, (jt.direct - jt.formulaB).norm() / scale(jt.direct));
  }
  rep.add("nablaJ", nablaJ, 1e-10);
  rep.add("perpendicularity_bott", perpB, 1e-10);
  rep.add("perpendicularity_hat", perpH, 1e-10);
  rep.add("propT", propT, 1e-10);
  rep.add("nablaT_nablaJ", ntnj, 1e-10);
  rep.add("R_decomposition", bianchi, 1e-10);
  rep.add("Ric_decomposition", ric, 1e-10);
  rep.add("jacobi_operator_a", lemA, 1e-10);
  if (M.kappa) rep.add("jacobi_operator_b", lemB, M.kind == ModelKind::SU2 ? 1e-9 : 1e-10);
  return rep;
}

}  // namespace htype
