#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htype/connection.hpp"
#include "htype/core.hpp"
#include "htype/curvature.hpp"
#include "htype/geodesic.hpp"
#include "htype/model.hpp"

namespace htype {

// Minimizing geodesic sampled on a uniform grid together with its full tangent-linear flow.
// Stored in the T = 1 parametrisation; unit-speed time is t = r s.
struct GeodesicTrace {
  const HTypeModel* model = nullptr;
  double eps = 0;
  double r = 0;
  int K = 0;                 // number of intervals
  Vec lambda;
  std::vector<Vec> h;        // covector at s_j = j / K
  std::vector<Vec> point;
  std::vector<Mat> Phi;      // 2N x 2N, d(delta h, eta)(s_j) / d(delta h, eta)(0)

  int N() const { return model->N(); }
  double t(int j) const { return r * j / K; }
  Vec u(int j) const { return model->weights(eps).cwiseProduct(h[j]); }
  Vec velocity(int j) const { return u(j) / r; }       // unit-speed gamma-dot
  Vec unit_h(int j) const { return h[j] / r; }
  Vec accel(int j) const {
    const Vec w = model->weights(eps);
    return w.cwiseProduct(coadjoint_rate(*model, h[j], w)) / (r * r);
  }
};

inline GeodesicTrace trace_geodesic(const HTypeModel& M, double eps, const Vec& x, const Vec& lambda, int K,
                                    bool withPhi = true) {
  if (K < 2 || K % 2) throw Error(ErrorCode::BadParameter, "trace needs an even number of intervals");
  const int N = M.N();
  GeodesicTrace tr;
  tr.model = &M;
  tr.eps = eps;
  tr.K = K;
  tr.lambda = lambda;
  tr.r = covector_length(M, lambda, eps);
  if (!(tr.r > 0)) throw Error(ErrorCode::BadParameter, "zero-length geodesic");
  detail::FlowKernel ker(M, eps, withPhi ? 2 * N : 0);
  Vec h = lambda, p = x;
  Mat P = Mat::Identity(2 * N, 2 * N);
  const Vec id = chart::identity(M);
  const double dt = 1.0 / K;
  tr.h.push_back(h);
  tr.point.push_back(p);
  if (withPhi) tr.Phi.push_back(P);
  for (int s = 0; s < K; ++s) {
    Vec d = id;
    ker.step(dt, h, d, withPhi ? &P : nullptr);
    if (M.chart == ChartKind::UnitQuaternion) d /= d.norm();
    p = chart::compose(M, p, d);
    chart::normalize(M, p);
    tr.h.push_back(h);
    tr.point.push_back(p);
    if (withPhi) tr.Phi.push_back(P);
  }
  return tr;
}

inline GeodesicTrace trace_geodesic(const HTypeModel& M, const DistanceResult& R, int K = 1000, bool withPhi = true) {
  return trace_geodesic(M, R.epsilon, R.x, R.lambdaStar, K, withPhi);
}

// ---- Jacobi fields ------------------------------------------------------------

struct JacobiSample {
  double t;
  Vec W;      // frame components
  Vec Wd;     // dW/dt (frame components)
  Vec Wdd;
  Vec hatW;   // hat-nabla_{gamma-dot} W
};

struct JacobiField {
  std::vector<JacobiSample> samples;
  Vec dh0, eta0;             // initial data of the linearised flow
  double conditionRatio = 1; // smallest / largest singular value of the transfer map
  double equationResidual = 0;
  double boundaryResidual = 0;
};

namespace detail {

// frame-component derivatives of the Jacobi field carried by the linearised state (dh, eta)
inline JacobiSample jacobi_sample(const GeodesicTrace& tr, int j, const Vec& z, const ConnectionTable* hat) {
  const HTypeModel& M = *tr.model;
  const int N = M.N();
  const Vec w = M.weights(tr.eps);
  const Vec& h = tr.h[j];
  const Vec u = w.cwiseProduct(h);
  const Vec ud = w.cwiseProduct(coadjoint_rate(M, h, w));
  const Vec dh = z.head(N), eta = z.tail(N);
  Vec dhd = Vec::Zero(N);
  for (const auto& e : M.nz) dhd[e.a] -= e.v * (dh[e.k] * u[e.b] + h[e.k] * w[e.b] * dh[e.b]);
  const Vec etad = w.cwiseProduct(dh) - M.bracket(u, eta);
  const Vec etadd = w.cwiseProduct(dhd) - M.bracket(ud, eta) - M.bracket(u, etad);
  JacobiSample s;
  s.t = tr.t(j);
  s.W = eta;
  s.Wd = etad / tr.r;
  s.Wdd = etadd / (tr.r * tr.r);
  if (hat) s.hatW = s.Wd + hat->apply(tr.velocity(j), s.W);
  return s;
}

}  // namespace detail

// Jacobi field with V(0) = W0 and V(r) = Wr, from the transfer map of the linearised flow.
// Residual of hat-nabla nabla^eps V + hat-R(V, gamma-dot) gamma-dot checked at every sample.
inline JacobiField jacobi_bvp(const GeodesicTrace& tr, const Vec& W0, const Vec& Wr) {
  const HTypeModel& M = *tr.model;
  const int N = M.N();
  if (tr.Phi.empty()) throw Error(ErrorCode::BadParameter, "trace was built without the linearised flow");
  const Mat& P = tr.Phi.back();
  const Mat Meta = P.block(N, 0, N, N);
  const Mat Metaeta = P.block(N, N, N, N);
  JacobiField jf;
  jf.conditionRatio = detail::sigma_ratio(Meta);
  if (jf.conditionRatio <= 1e-6) throw Error(ErrorCode::ConjugateEndpoints, "transfer map is singular");
  jf.eta0 = W0;
  jf.dh0 = Meta.fullPivLu().solve(Wr - Metaeta * W0);
  Vec z0(2 * N);
  z0 << jf.dh0, jf.eta0;
  const bool metricOk = tr.eps > 0;
  std::optional<ConnectionTable> hat, adj;
  std::optional<CurvatureTensor> Rhat;
  if (metricOk) {
    hat = hat_eps_table(M, tr.eps);
    adj = adjoint_eps_table(M, tr.eps);
    Rhat = curvature_tensor(M, *hat);
  }
  double scale = 0;
  for (int j = 0; j <= tr.K; ++j) {
    const Vec z = tr.Phi[j] * z0;
    JacobiSample s = detail::jacobi_sample(tr, j, z, metricOk ? &*hat : nullptr);
    if (metricOk) {
      const Vec u = tr.velocity(j), ud = tr.accel(j);
      const Vec res = detail::second_cov(*hat, *adj, u, ud, s.W, s.Wd, s.Wdd) + (*Rhat)(s.W, u, u);
      jf.equationResidual = std::max(jf.equationResidual, res.norm());
      scale = std::max({scale, s.Wdd.norm(), s.W.norm() / (tr.r * tr.r)});
    }
    jf.samples.push_back(std::move(s));
  }
  if (scale > 0) jf.equationResidual /= scale;
  jf.boundaryResidual = std::max((jf.samples.front().W - W0).norm(), (jf.samples.back().W - Wr).norm());
  return jf;
}

// ---- frames -------------------------------------------------------------------

// hat-nabla^eps parallel transport of the columns of frame0 along the trace (RK4 over pairs of grid intervals).
// Returns frames at even grid indices.
inline std::vector<Mat> transport_frame(const GeodesicTrace& tr, const Mat& frame0,
                                        const std::function<Mat(int, const Mat&)>& extra = nullptr) {
  const HTypeModel& M = *tr.model;
  const ConnectionTable hat = hat_eps_table(M, tr.eps);
  auto rate = [&](int j, const Mat& F) -> Mat {
    Mat out = -hat.along(tr.velocity(j)) * F;
    if (extra) out += extra(j, F);
    return out;
  };
  std::vector<Mat> out{frame0};
  Mat F = frame0;
  const double dt = 2.0 * tr.r / tr.K;
  for (int j = 0; j + 2 <= tr.K; j += 2) {
    const Mat k1 = rate(j, F);
    const Mat k2 = rate(j + 1, F + 0.5 * dt * k1);
    const Mat k3 = rate(j + 1, F + 0.5 * dt * k2);
    const Mat k4 = rate(j + 2, F + dt * k3);
    F += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(F);
  }
  return out;
}

// Gram matrix in the g_eps inner product
inline Mat gram_eps(const HTypeModel& M, double eps, const Mat& F) {
  const Vec g = M.metric(eps);
  return F.transpose() * g.asDiagonal() * F;
}

struct FrameBlock {
  std::string label;  // HSAS, HRIEM, HDIR, VPAR, VPERP, HHTYPE, VHTYPE
  Mat basis;          // g-orthonormal columns, frame coordinates
};

struct SplittingFrame {
  Vec Y;
  std::vector<FrameBlock> blocks;
  std::vector<FrameBlock> finerBlocks;  // only when requested
  Mat vsasFine;                         // vertical complement of VHTYPE in the finer splitting
  double finerResidual = 0;             // projection residual of the finer classification

  const FrameBlock* find(const std::string& l, bool finer = false) const {
    for (const auto& b : finer ? finerBlocks : blocks)
      if (b.label == l) return &b;
    return nullptr;
  }
  int dim(const std::string& l, bool finer = false) const {
    const auto* b = find(l, finer);
    return b ? static_cast<int>(b->basis.cols()) : 0;
  }
};

namespace detail {

inline Mat horizontal_ambient(const HTypeModel& M) {
  Mat A = Mat::Zero(M.N(), M.n);
  A.topRows(M.n) = Mat::Identity(M.n, M.n);
  return A;
}
inline Mat vertical_ambient(const HTypeModel& M) {
  Mat A = Mat::Zero(M.N(), M.m);
  A.bottomRows(M.m) = Mat::Identity(M.m, M.m);
  return A;
}

}  // namespace detail

// Splitting of H and V adapted to Y; the finer variant classifies vertical Z by where J_Y J_Z Y lands.
inline SplittingFrame splitting_frame(const Geometry& G, const Vec& Y, bool useFiner) {
  const HTypeModel& M = G.model;
  const int n = M.n, m = M.m, N = M.N();
  const Vec YH = G.H(Y), YV = G.V(Y);
  if (YH.norm() < 1e-6) throw Error(ErrorCode::DegenerateGenerator, "horizontal part of the generator vanishes");
  SplittingFrame sf;
  sf.Y = Y;
  Mat JVY(N, m);
  for (int a = 0; a < m; ++a) JVY.col(a) = G.J(G.embed_v(Vec::Unit(m, a)), YH);
  const Mat hsas = orthonormalize(JVY);
  const Mat hdir = YH / YH.norm();
  Mat S(N, hsas.cols() + 1);
  S << hsas, hdir;
  const Mat hriem = complement_in(detail::horizontal_ambient(M), S);
  sf.blocks.push_back({"HSAS", hsas});
  sf.blocks.push_back({"HRIEM", hriem});
  sf.blocks.push_back({"HDIR", hdir});
  const double vn = YV.norm();
  if (vn > 1e-12) {
    const Mat vpar = YV / vn;
    sf.blocks.push_back({"VPAR", vpar});
    sf.blocks.push_back({"VPERP", complement_in(detail::vertical_ambient(M), vpar)});
  } else {
    sf.blocks.push_back({"VPAR", Mat(N, 0)});
    sf.blocks.push_back({"VPERP", orthonormalize(detail::vertical_ambient(M))});
  }
  (void)n;
  if (!useFiner) return sf;

  // Phi(Z) = J_Y J_Z Y projected off S = J_V(Y) + span(Y_H)
  const Mat Q = orthonormalize(S);
  Mat PhiP(N, m), PhiRaw(N, m);
  for (int a = 0; a < m; ++a) {
    const Vec JZY = JVY.col(a);
    const Vec img = G.J(YV, JZY);
    PhiRaw.col(a) = img;
    PhiP.col(a) = img - Q * (Q.transpose() * img);
  }
  Eigen::JacobiSVD<Mat> svd(PhiP, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = std::max(sv.size() ? sv[0] : 0.0, PhiRaw.norm());
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-9 * std::max(1.0, smax)) ++rank;
  const Mat Vr = svd.matrixV();
  Mat vhtype(N, rank), vsas(N, m - rank);
  for (int i = 0; i < rank; ++i) vhtype.col(i) = G.embed_v(Vr.col(i));
  for (int i = rank; i < m; ++i) vsas.col(i - rank) = G.embed_v(Vr.col(i));
  // residual: V_Htype images must lie in the complement of S
  double resid = 0;
  for (int i = 0; i < rank; ++i) {
    const Vec img = G.J(YV, G.J(vhtype.col(i), YH));
    resid = std::max(resid, (Q.transpose() * img).norm() / std::max(1e-300, img.norm()));
  }
  sf.finerResidual = resid;
  Mat hh(N, 2 * rank), hs(N, m - rank);
  for (int i = 0; i < rank; ++i) {
    hh.col(2 * i) = G.J(vhtype.col(i), YH);
    hh.col(2 * i + 1) = G.J(YV, G.J(vhtype.col(i), YH));
  }
  for (int i = 0; i < m - rank; ++i) hs.col(i) = G.J(vsas.col(i), YH);
  const Mat hhtype = orthonormalize(hh);
  const Mat hsasF = orthonormalize(hs);
  Mat S2(N, hhtype.cols() + hsasF.cols() + 1);
  S2 << hhtype, hsasF, hdir;
  sf.finerBlocks.push_back({"VHTYPE", vhtype});
  sf.finerBlocks.push_back({"HHTYPE", hhtype});
  sf.finerBlocks.push_back({"HSAS", hsasF});
  sf.finerBlocks.push_back({"HRIEM", complement_in(detail::horizontal_ambient(M), S2)});
  sf.finerBlocks.push_back({"HDIR", hdir});
  sf.vsasFine = vsas;
  return sf;
}

// Frame of L_J(gamma-dot) whose hat-nabla derivative has no component inside L_J; columns at even grid indices.
inline std::vector<Mat> almost_parallel_frame(const Geometry& G, const GeodesicTrace& tr, const Mat* initial = nullptr) {
  const HTypeModel& M = G.model;
  const int n = M.n, m = M.m, N = M.N();
  if (n - m - 1 <= 0) throw Error(ErrorCode::DimensionEmpty, "n - m - 1 = 0");
  const ConnectionTable hat = hat_eps_table(M, tr.eps);
  Mat X0;
  if (initial) {
    X0 = *initial;
  } else {
    X0 = G.h_riem_basis(tr.velocity(0));
  }
  if (X0.cols() != n - m - 1) throw Error(ErrorCode::BadParameter, "initial frame has wrong dimension");
  auto extra = [&](int j, const Mat& F) -> Mat {
    const Vec gd = tr.velocity(j), gdd = tr.accel(j);
    const Vec gH = G.H(gd);
    const double nh2 = gH.squaredNorm();
    Mat out = Mat::Zero(N, F.cols());
    for (int a = 0; a < m; ++a) {
      const Vec Z = G.embed_v(Vec::Unit(m, a));
      const Vec JZg = G.J(Z, gd);
      const Vec dJZg = G.J(Z, gdd) + hat.apply(gd, JZg);
      const Vec dZ = hat.apply(gd, Z);
      for (int i = 0; i < F.cols(); ++i) {
        const Vec X = F.col(i);
        out.col(i) -= (X.dot(dJZg) / nh2) * JZg + X.dot(dZ) * Z;
      }
    }
    return out;
  };
  return transport_frame(tr, X0, extra);
}

// ---- Hessian of the distance ------------------------------------------------

// Second derivatives of r = d(x, .) at y in the left-invariant frame, from the linearised endpoint map:
// D2(i, j) = e_i(e_j r)
struct DistanceDerivatives {
  double r = 0;
  Vec p;     // dr in frame components (unit-speed covector)
  Mat D2;
  Vec grad;  // g_eps gradient (frame components) = gamma-dot(r)
};

inline DistanceDerivatives distance_derivatives(const HTypeModel& M, const DistanceResult& R) {
  DistanceDerivatives dd;
  dd.r = R.distance;
  const Vec pT = R.endCovector;
  dd.p = pT / dd.r;
  if (R.sigmaRatio <= 1e-6) throw Error(ErrorCode::ConjugateEndpoints, "endpoint map is singular at the target");
  const Mat S = R.Mh * R.Meta.fullPivLu().inverse();  // column i: delta p for eta(1) = e_i
  dd.D2 = S.transpose() / dd.r - pT * pT.transpose() / (dd.r * dd.r * dd.r);
  dd.grad = M.weights(R.epsilon).cwiseProduct(dd.p);
  return dd;
}

// Hess^D(r)(e_i, e_j) = e_i e_j r - dr(D_{e_i} e_j)
inline Mat hessian_matrix(const DistanceDerivatives& dd, const ConnectionTable& D) {
  const int N = D.N;
  Mat Hs = dd.D2;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double s = 0;
      for (int k = 0; k < N; ++k) s += D.G(i, j, k) * dd.p[k];
      Hs(i, j) -= s;
    }
  return Hs;
}

inline double quad(const Mat& Hs, const Vec& X) { return X.dot(Hs * X); }

// Jacobi route: <X_perp, hat-nabla V(r)>_eps, V the Jacobi field from 0 to X_perp
inline double hessian_jacobi(const HTypeModel& M, const DistanceResult& R, const Vec& X) {
  const double eps = R.epsilon;
  if (!(eps > 0)) throw Error(ErrorCode::BadParameter, "Jacobi route needs eps > 0");
  if (R.sigmaRatio <= 1e-6) throw Error(ErrorCode::ConjugateEndpoints, "endpoint map is singular at the target");
  const Vec w = M.weights(eps);
  const double r = R.distance;
  const Vec gd = w.cwiseProduct(R.endCovector) / r;
  const Vec Xp = X - inner(M, eps, X, gd) * gd;
  const Vec dl = R.Meta.fullPivLu().solve(Xp);
  const Vec dh = R.Mh * dl;
  const Vec u = w.cwiseProduct(R.endCovector);
  const ConnectionTable hat = hat_eps_table(M, eps);
  const Vec hatV = (w.cwiseProduct(dh) - M.bracket(u, Xp) + hat.apply(u, Xp)) / r;
  return inner(M, eps, Xp, hatV);
}

struct HessianAtPoint {
  DistanceDerivatives dd;
  Mat hat;   // hat-nabla^eps Hessian (eps > 0) or Bott Hessian at eps = 0
  Mat bott;
};

inline HessianAtPoint hessian_at(const Geometry& G, const DistanceResult& R) {
  HessianAtPoint hp;
  hp.dd = distance_derivatives(G.model, R);
  hp.bott = hessian_matrix(hp.dd, G.bott);
  hp.hat = R.epsilon > 0 ? hessian_matrix(hp.dd, hat_eps_table(G.model, R.epsilon)) : hp.bott;
  return hp;
}

// Richardson extrapolation to eps = 0 from S(eps), S(eps/2), S(eps/4)
inline double richardson(double s1, double s2, double s4) { return (8.0 * s4 - 6.0 * s2 + s1) / 3.0; }

inline const std::vector<double>& richardson_ladder() {
  static const std::vector<double> l = {1e-2, 5e-3, 2.5e-3};
  return l;
}

struct SubLaplacian {
  double total = 0;
  double direction = 0;            // geodesic-direction term
  std::vector<std::pair<std::string, double>> blockTraces;
};

inline SubLaplacian sublaplacian_of_distance(const Geometry& G, const Mat& hessian, const Vec& Y, bool useFiner = false) {
  const SplittingFrame sf = splitting_frame(G, Y, useFiner);
  SubLaplacian sl;
  const auto& blocks = useFiner ? sf.finerBlocks : sf.blocks;
  for (const auto& b : blocks) {
    if (b.label[0] != 'H') continue;
    double s = 0;
    for (int i = 0; i < b.basis.cols(); ++i) s += quad(hessian, b.basis.col(i));
    if (b.label == "HDIR")
      sl.direction = s;
    else
      sl.blockTraces.push_back({b.label, s});
    sl.total += s;
  }
  return sl;
}

// ---- constant-coefficient systems -----------------------------------------------

// y'' = P y' + Q y on [0, r] with Dirichlet data y(0) = y0, y(r) = yr; the fundamental matrix of the first-order
// system is integrated by RK4 and the two boundary rows fix the missing initial slope. Returns y at K + 1 nodes.
struct LinearBvpSolution {
  std::vector<double> t;
  std::vector<Vec> y;
  double conditionRatio = 1;
};

inline LinearBvpSolution linear_bvp(const Mat& P, const Mat& Q, double r, const Vec& y0, const Vec& yr, int K = 2000) {
  const int d = static_cast<int>(P.rows());
  if (!(r > 0) || K < 1) throw Error(ErrorCode::BadParameter, "linear_bvp needs r > 0 and K >= 1");
  Mat A = Mat::Zero(2 * d, 2 * d);
  A.topRightCorner(d, d) = Mat::Identity(d, d);
  A.bottomLeftCorner(d, d) = Q;
  A.bottomRightCorner(d, d) = P;
  const double dt = r / K;
  // one-step propagator of RK4 for a linear system
  const Mat Adt = A * dt;
  const Mat A2 = Adt * Adt;
  const Mat step = Mat::Identity(2 * d, 2 * d) + Adt + A2 / 2.0 + A2 * Adt / 6.0 + A2 * A2 / 24.0;
  std::vector<Mat> F{Mat::Identity(2 * d, 2 * d)};
  for (int j = 0; j < K; ++j) F.push_back(step * F.back());
  const Mat& Fr = F.back();
  const Mat Byd = Fr.topRightCorner(d, d);
  LinearBvpSolution sol;
  // smallest singular value of the boundary block against the scale of the whole propagator
  Eigen::JacobiSVD<Mat> svd(Byd);
  sol.conditionRatio = svd.singularValues()[d - 1] / std::max(1.0, Eigen::JacobiSVD<Mat>(Fr).singularValues()[0]);
  if (sol.conditionRatio <= 1e-10) throw Error(ErrorCode::ConjugateEndpoints, "boundary rows are singular");
  const Vec yd0 = Byd.fullPivLu().solve(yr - Fr.topLeftCorner(d, d) * y0);
  Vec z0(2 * d);
  z0 << y0, yd0;
  for (int j = 0; j <= K; ++j) {
    sol.t.push_back(dt * j);
    sol.y.push_back((F[j] * z0).head(d));
  }
  return sol;
}

// ---- index form ------------------------------------------------------------------

// I(W, W) = int <D W, D^ W> - <R(W, g)g, W> dt on the trace grid (composite Simpson); W, Wd at every grid index
inline double index_form(const GeodesicTrace& tr, const ConnectionTable& D, const ConnectionTable& Dhat,
                         const CurvatureTensor& R, const std::vector<Vec>& W, const std::vector<Vec>& Wd) {
  const HTypeModel& M = *tr.model;
  const int K = tr.K;
  if (static_cast<int>(W.size()) != K + 1 || static_cast<int>(Wd.size()) != K + 1)
    throw Error(ErrorCode::BadParameter, "field must be sampled on the trace grid");
  std::vector<double> f(K + 1);
  for (int j = 0; j <= K; ++j) {
    const Vec g = tr.velocity(j);
    const Vec a = Wd[j] + D.apply(g, W[j]);
    const Vec b = Wd[j] + Dhat.apply(g, W[j]);
    f[j] = inner(M, tr.eps, a, b) - inner(M, tr.eps, R(W[j], g, g), W[j]);
  }
  const double hstep = tr.r / K;
  double s = f[0] + f[K];
  for (int j = 1; j < K; ++j) s += (j % 2 ? 4.0 : 2.0) * f[j];
  return s * hstep / 3.0;
}

}  // namespace htype
