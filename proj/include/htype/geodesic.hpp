#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "htype/core.hpp"
#include "htype/model.hpp"

namespace htype {

struct FrameState {
  Vec point;
  Vec h;
  double epsilon = 0.0;
};

inline double hamiltonian_energy(const HTypeModel& M, const Vec& h, double eps) {
  return 0.5 * (h.head(M.n).squaredNorm() + eps * h.tail(M.m).squaredNorm());
}
inline double hamiltonian_energy(const HTypeModel& M, const FrameState& s) {
  return hamiltonian_energy(M, s.h, s.epsilon);
}

// ---- charts -----------------------------------------------------------------

namespace chart {

inline int dim(const HTypeModel& M) { return M.chart == ChartKind::UnitQuaternion ? 4 : M.N(); }

inline Vec identity(const HTypeModel& M) {
  Vec p = Vec::Zero(dim(M));
  if (M.chart == ChartKind::UnitQuaternion) p[0] = 1.0;
  return p;
}

// B(x, y)_alpha = sum c_ij^{n+alpha} x_i y_j on horizontal arguments
inline Vec bracket_hh(const HTypeModel& M, const Vec& x, const Vec& y) {
  Vec out = Vec::Zero(M.m);
  for (const auto& e : M.nz)
    if (e.a < M.n && e.b < M.n && e.k >= M.n) out[e.k - M.n] += e.v * x[e.a] * y[e.b];
  return out;
}

inline Vec qmul(const Vec& a, const Vec& b) {
  Vec c(4);
  c[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  c[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  c[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  c[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
  return c;
}

inline Vec qconj(const Vec& a) {
  Vec c = -a;
  c[0] = a[0];
  return c;
}

// pure quaternion of the Lie algebra element with frame components u (SU2 frame)
inline Vec su2_quat(const HTypeModel& M, const Vec& u) {
  const double rs = std::sqrt(M.params.s);
  Vec q(4);
  q << 0.0, 0.5 * rs * u[0], 0.5 * rs * u[1], 0.5 * M.params.s * u[2];
  return q;
}

// group product p * d
inline Vec compose(const HTypeModel& M, const Vec& p, const Vec& d) {
  if (M.chart == ChartKind::UnitQuaternion) return qmul(p, d);
  Vec out = p + d;
  out.tail(M.m) += 0.5 * bracket_hh(M, p.head(M.n), d.head(M.n));
  return out;
}

inline Vec inverse(const HTypeModel& M, const Vec& p) {
  if (M.chart == ChartKind::UnitQuaternion) return qconj(p);
  return -p;
}

// chart velocity of the curve t -> d(t) with left-trivialised velocity u
inline Vec rate(const HTypeModel& M, const Vec& d, const Vec& u) {
  if (M.chart == ChartKind::UnitQuaternion) return qmul(d, su2_quat(M, u));
  Vec out = u;
  out.tail(M.m) += 0.5 * bracket_hh(M, d.head(M.n), u.head(M.n));
  return out;
}

// frame coordinates of log(p)
inline Vec log_frame(const HTypeModel& M, const Vec& p) {
  if (M.chart != ChartKind::UnitQuaternion) return p;
  const double vn = p.tail(3).norm();
  const double th = std::atan2(vn, p[0]);
  const double f = vn > 1e-300 ? th / vn : 1.0;
  const Vec im = f * p.tail(3);  // log q = im . (i, j, k); e_k = i_k / 2
  const double rs = std::sqrt(M.params.s);
  Vec out(3);
  out << 2.0 * im[0] / rs, 2.0 * im[1] / rs, 2.0 * im[2] / M.params.s;
  return out;
}

inline Vec exp_frame(const HTypeModel& M, const Vec& xi) {
  if (M.chart != ChartKind::UnitQuaternion) return xi;
  const Vec q = su2_quat(M, xi);
  const double th = q.tail(3).norm();
  Vec out(4);
  out[0] = std::cos(th);
  out.tail(3) = th > 1e-300 ? Vec(q.tail(3) * (std::sin(th) / th)) : Vec(q.tail(3));
  return out;
}

inline void normalize(const HTypeModel& M, Vec& p) {
  if (M.chart == ChartKind::UnitQuaternion) p /= p.norm();
}

}  // namespace chart

// ad_x as a matrix: (ad_x y)_k = sum c_ab^k x_a y_b
inline Mat ad_matrix(const HTypeModel& M, const Vec& x) {
  Mat A = Mat::Zero(M.N(), M.N());
  for (const auto& e : M.nz) A(e.k, e.b) += e.v * x[e.a];
  return A;
}

// derivative of log at exp(xi): delta xi = dlog(xi) (exp(xi)^{-1} delta exp(xi))
inline Mat dlog_matrix(const HTypeModel& M, const Vec& xi) {
  const Mat A = ad_matrix(M, xi);
  const Mat A2 = A * A;
  const int N = M.N();
  const double th2 = -0.5 * A2.trace();
  if (A2.cwiseAbs().maxCoeff() < 1e-300 || M.chart != ChartKind::UnitQuaternion)
    return Mat::Identity(N, N) + 0.5 * A + A2 / 12.0 - A2 * A2 / 720.0;
  // ad^3 = -th^2 ad on su(2)
  const double th = std::sqrt(std::max(th2, 0.0));
  double c;
  if (th < 1e-4)
    c = 1.0 / 12.0 + th2 / 720.0;
  else
    c = (1.0 - 0.5 * th / std::tan(0.5 * th)) / th2;
  return Mat::Identity(N, N) + 0.5 * A + c * A2;
}

// ---- flow ---------------------------------------------------------------------

struct GeodesicSample {
  double t;
  Vec point;
  Vec h;
};

struct GeodesicRecord {
  std::string modelId;
  double epsilon = 0;
  Vec x;
  Vec lambda0;
  double T = 0;
  double stepSize = 0;
  std::vector<GeodesicSample> samples;
  double energyDrift = 0;
  double hDrift = 0;
  double vDrift = 0;
  Vec endPoint;
  Vec endH;
};

struct FlowOptions {
  int storeEvery = 0;  // 0: no samples
  bool trackDrift = false;
};

struct FlowResult {
  Vec endPoint;
  Vec endH;
  Mat Phi;  // empty when not requested
  std::vector<GeodesicSample> samples;
  double energyDrift = 0, hDrift = 0, vDrift = 0;
};

namespace detail {

// Allocation-free right-hand side of the frame flow and its tangent-linear system.
// hdot_a = -sum c_ab^k h_k u_b ; dh'_a = -sum c_ab^k (dh_k u_b + h_k w_b dh_b) ; eta' = w dh - [u, eta]
class FlowKernel {
 public:
  FlowKernel(const HTypeModel& M, double eps, int cols) : M_(M), N_(M.N()), cols_(cols), w_(M.weights(eps)) {
    const int D = chart::dim(M);
    for (auto* v : {&u_, &hs_}) v->resize(N_);
    ds_.resize(D);
    for (int i = 0; i < 4; ++i) {
      kh_[i].resize(N_);
      kd_[i].resize(D);
      if (cols_) kP_[i].resize(2 * N_, cols_);
    }
    if (cols_) Ps_.resize(2 * N_, cols_);
    quat_ = M.chart == ChartKind::UnitQuaternion;
    rs_ = std::sqrt(M.params.s);
  }

  // one RK4 step; d must enter as the chart identity and leaves as the local displacement
  void step(double dt, Vec& h, Vec& d, Mat* P) {
    rates(h, d, P, 0);
    stage(h, d, P, 0, 0.5 * dt);
    rates(hs_, ds_, P ? &Ps_ : nullptr, 1);
    stage(h, d, P, 1, 0.5 * dt);
    rates(hs_, ds_, P ? &Ps_ : nullptr, 2);
    stage(h, d, P, 2, dt);
    rates(hs_, ds_, P ? &Ps_ : nullptr, 3);
    const double c = dt / 6.0;
    h.noalias() += c * (kh_[0] + 2.0 * kh_[1] + 2.0 * kh_[2] + kh_[3]);
    d.noalias() += c * (kd_[0] + 2.0 * kd_[1] + 2.0 * kd_[2] + kd_[3]);
    if (P) P->noalias() += c * (kP_[0] + 2.0 * kP_[1] + 2.0 * kP_[2] + kP_[3]);
  }

  double rotation_rate(const Vec& h) const {
    const double a = 0.5 * rs_ * h[0] * w_[0], b = 0.5 * rs_ * h[1] * w_[1], c = 0.5 * M_.params.s * h[2] * w_[2];
    return std::sqrt(a * a + b * b + c * c);
  }

 private:
  void stage(const Vec& h, const Vec& d, const Mat* P, int i, double a) {
    hs_ = h + a * kh_[i];
    ds_ = d + a * kd_[i];
    if (P) Ps_ = *P + a * kP_[i];
  }

  void rates(const Vec& h, const Vec& d, const Mat* P, int i) {
    const int n = M_.n;
    u_ = w_.cwiseProduct(h);
    Vec& hd = kh_[i];
    hd.setZero();
    for (const auto& e : M_.nz) hd[e.a] -= e.v * h[e.k] * u_[e.b];
    Vec& dd = kd_[i];
    if (quat_) {
      const double x = 0.5 * rs_ * u_[0], y = 0.5 * rs_ * u_[1], z = 0.5 * M_.params.s * u_[2];
      dd[0] = -d[1] * x - d[2] * y - d[3] * z;
      dd[1] = d[0] * x + d[2] * z - d[3] * y;
      dd[2] = d[0] * y - d[1] * z + d[3] * x;
      dd[3] = d[0] * z + d[1] * y - d[2] * x;
    } else {
      dd = u_;
      for (const auto& e : M_.nz)
        if (e.a < n && e.b < n && e.k >= n) dd[e.k] += 0.5 * e.v * d[e.a] * u_[e.b];
    }
    if (!P) return;
    Mat& Pd = kP_[i];
    Pd.setZero();
    for (int c = 0; c < cols_; ++c) {
      const double* dh = P->col(c).data();
      const double* eta = dh + N_;
      double* odh = Pd.col(c).data();
      double* oeta = odh + N_;
      for (const auto& e : M_.nz) {
        odh[e.a] -= e.v * (dh[e.k] * u_[e.b] + h[e.k] * w_[e.b] * dh[e.b]);
        oeta[e.k] -= e.v * u_[e.a] * eta[e.b];
      }
      for (int a = 0; a < N_; ++a) oeta[a] += w_[a] * dh[a];
    }
  }

  const HTypeModel& M_;
  int N_, cols_;
  Vec w_, u_, hs_, ds_;
  Vec kh_[4], kd_[4];
  Mat kP_[4], Ps_;
  bool quat_;
  double rs_;
};

}  // namespace detail

// Fixed-step RK4 on (h, local chart displacement, tangent columns); the point is advanced by exact composition.
inline FlowResult integrate_flow(const HTypeModel& M, double eps, const Vec& x, const Vec& lambda0, double T,
                                 double stepSize, const Mat* Phi0 = nullptr, const FlowOptions& opt = {}) {
  if (!(stepSize > 0.0) || !std::isfinite(stepSize)) throw Error(ErrorCode::BadParameter, "step size must be positive");
  if (!(eps >= 0.0)) throw Error(ErrorCode::BadParameter, "epsilon must be non-negative");
  if (!std::isfinite(T)) throw Error(ErrorCode::BadParameter, "flow time must be finite");
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(T) / stepSize - 1e-9)));
  const double dt = T / steps;
  FlowResult res;
  Vec p = x;
  Vec h = lambda0;
  Mat Phi;
  if (Phi0) Phi = *Phi0;
  detail::FlowKernel K(M, eps, Phi0 ? static_cast<int>(Phi0->cols()) : 0);
  const double E0 = hamiltonian_energy(M, h, eps);
  const double hn0 = h.head(M.n).norm(), vn0 = h.tail(M.m).norm();
  const Vec id = chart::identity(M);
  const bool quat = M.chart == ChartKind::UnitQuaternion;
  Vec d = id;
  if (opt.storeEvery > 0) res.samples.push_back({0.0, p, h});
  for (int s = 0; s < steps; ++s) {
    if (quat && !(K.rotation_rate(h) * std::abs(dt) <= 0.5))
      throw Error(ErrorCode::ChartOverflow, "rotation per step exceeds chart validity");
    d = id;
    K.step(dt, h, d, Phi0 ? &Phi : nullptr);
    if (quat) {
      d /= d.norm();
      p = chart::qmul(p, d);
      p /= p.norm();
    } else {
      p = chart::compose(M, p, d);
    }
    if (!std::isfinite(p.sum() + h.sum())) throw Error(ErrorCode::ChartOverflow, "non-finite state during flow");
    if (opt.trackDrift) {
      res.energyDrift = std::max(res.energyDrift, std::abs(hamiltonian_energy(M, h, eps) - E0));
      res.hDrift = std::max(res.hDrift, std::abs(h.head(M.n).norm() - hn0));
      res.vDrift = std::max(res.vDrift, std::abs(h.tail(M.m).norm() - vn0));
    }
    if (opt.storeEvery > 0 && ((s + 1) % opt.storeEvery == 0 || s + 1 == steps))
      res.samples.push_back({dt * (s + 1), p, h});
  }
  res.endPoint = p;
  res.endH = h;
  if (Phi0) res.Phi = Phi;
  return res;
}

inline GeodesicRecord flow_geodesic(const HTypeModel& M, double eps, const Vec& x, const Vec& lambda0, double T,
                                    double stepSize = 1e-3, int storeEvery = 1) {
  FlowOptions opt;
  opt.storeEvery = storeEvery;
  opt.trackDrift = true;
  const FlowResult fr = integrate_flow(M, eps, x, lambda0, T, stepSize, nullptr, opt);
  GeodesicRecord rec;
  rec.modelId = M.id();
  rec.epsilon = eps;
  rec.x = x;
  rec.lambda0 = lambda0;
  rec.T = T;
  rec.stepSize = stepSize;
  rec.samples = fr.samples;
  rec.energyDrift = fr.energyDrift;
  rec.hDrift = fr.hDrift;
  rec.vDrift = fr.vDrift;
  rec.endPoint = fr.endPoint;
  rec.endH = fr.endH;
  return rec;
}

inline std::string geodesic_columns(const GeodesicRecord& rec) {
  std::string out = "# geodesic " + rec.modelId + " eps=" + fmt17(rec.epsilon) + " T=" + fmt17(rec.T) +
                    " step=" + fmt17(rec.stepSize) + " energyDrift=" + fmt17(rec.energyDrift) + "\n# t";
  if (!rec.samples.empty()) {
    for (int i = 0; i < rec.samples[0].point.size(); ++i) out += " p" + std::to_string(i);
    for (int i = 0; i < rec.samples[0].h.size(); ++i) out += " h" + std::to_string(i);
  }
  out += "\n";
  for (const auto& s : rec.samples) {
    out += fmt17(s.t);
    for (int i = 0; i < s.point.size(); ++i) out += " " + fmt17(s.point[i]);
    for (int i = 0; i < s.h.size(); ++i) out += " " + fmt17(s.h[i]);
    out += "\n";
  }
  return out;
}

// ---- shooting -------------------------------------------------------------------

struct SearchOptions {
  int gridDensity = 8;       // horizontal start directions per vertical rung
  int maxNewtonIters = 40;
  double tol = 1e-11;        // endpoint residual after polishing
  double coarseStep = 1e-2;
  double fineStep = 1e-3;
  std::uint64_t seed = 42;
};

struct EndpointEval {
  Vec residual;   // log(y^{-1} x g(1))
  Mat jac;        // d residual / d lambda
  Vec endH;
  Mat Mh, Meta;   // d h(1) / d lambda, d eta(1) / d lambda
};

inline EndpointEval endpoint_eval(const HTypeModel& M, double eps, const Vec& x, const Vec& yinv, const Vec& lambda,
                                  double step) {
  const int N = M.N();
  Mat Phi0 = Mat::Zero(2 * N, N);
  Phi0.topRows(N) = Mat::Identity(N, N);
  const FlowResult fr = integrate_flow(M, eps, x, lambda, 1.0, step, &Phi0);
  EndpointEval ev;
  const Vec rel = chart::compose(M, yinv, fr.endPoint);
  ev.residual = chart::log_frame(M, rel);
  ev.Mh = fr.Phi.topRows(N);
  ev.Meta = fr.Phi.bottomRows(N);
  ev.jac = dlog_matrix(M, ev.residual) * ev.Meta;
  ev.endH = fr.endH;
  return ev;
}

struct DistanceResult {
  double distance = 0;
  Vec lambdaStar;
  int minimizerCount = 0;
  bool conjugateFlag = false;
  double residual = 0;
  double sigmaRatio = 1;  // smallest / largest singular value of d eta(1) / d lambda
  double epsilon = 0;
  Vec x, y;
  Vec endCovector;        // h(1) in the T = 1 parametrisation
  Mat Mh, Meta;
  std::vector<Vec> minimizers;
  int startsTried = 0;
  int startsConverged = 0;
};

inline double covector_length(const HTypeModel& M, const Vec& lambda, double eps) {
  return std::sqrt(2.0 * hamiltonian_energy(M, lambda, eps));
}

namespace detail {

// Levenberg-Marquardt on the endpoint map; returns converged lambda or nothing.
inline std::optional<Vec> newton_shoot(const HTypeModel& M, double eps, const Vec& x, const Vec& yinv, Vec lambda,
                                       double step, double tol, int maxIters, double* finalRes = nullptr) {
  const int N = M.N();
  double mu = 1e-6;
  EndpointEval ev;
  try {
    ev = endpoint_eval(M, eps, x, yinv, lambda, step);
  } catch (const Error&) {
    return std::nullopt;
  }
  double rn = ev.residual.norm();
  for (int it = 0; it < maxIters; ++it) {
    if (rn <= tol) break;
    const Mat JtJ = ev.jac.transpose() * ev.jac;
    const Vec g = ev.jac.transpose() * ev.residual;
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Mat A = JtJ;
      A.diagonal().array() += mu * (1.0 + JtJ.diagonal().array());
      Vec delta = -A.ldlt().solve(g);
      const double cap = 2.0 + 0.5 * lambda.norm();
      if (delta.norm() > cap) delta *= cap / delta.norm();
      const Vec cand = lambda + delta;
      EndpointEval ec;
      try {
        ec = endpoint_eval(M, eps, x, yinv, cand, step);
      } catch (const Error&) {
        mu *= 10.0;
        continue;
      }
      const double rc = ec.residual.norm();
      if (std::isfinite(rc) && rc < rn) {
        lambda = cand;
        ev = ec;
        rn = rc;
        mu = std::max(mu * 0.1, 1e-12);
        accepted = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) break;
  }
  (void)N;
  if (finalRes) *finalRes = rn;
  if (rn <= tol) return lambda;
  return std::nullopt;
}

inline double sigma_ratio(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  if (s[0] <= 0) return 0.0;
  return s[s.size() - 1] / s[0];
}

inline bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace detail

// Deterministic start covectors: straight-line guess plus horizontal directions x vertical magnitude ladder.
inline std::vector<Vec> shooting_starts(const HTypeModel& M, const Vec& xi, const SearchOptions& opt) {
  const int n = M.n, m = M.m, N = M.N();
  std::vector<Vec> starts;
  const Vec xiH = xi.head(n), xiV = xi.tail(m);
  const double L0 = std::max(1e-3, std::sqrt(xiH.squaredNorm() + 4.0 * M_PI * xiV.norm()));
  Vec zdir = xiV.norm() > 1e-14 ? Vec(xiV / xiV.norm()) : Vec(Vec::Unit(m, 0));
  {
    Vec s = Vec::Zero(N);
    s.head(n) = xiH;
    starts.push_back(s);
  }
  const std::vector<double> ladder = {0.0, 0.5, 1.5, 3.0, 5.0};
  const auto hdirs = sphere_directions(n, std::max(1, opt.gridDensity), opt.seed);
  Rng rng(opt.seed + 17);
  for (double vm : ladder) {
    for (int sgn = 1; sgn >= (vm > 0 ? -1 : 1); sgn -= 2) {
      Vec vd = zdir * sgn;
      for (const auto& hd : hdirs) {
        Vec s = Vec::Zero(N);
        Vec hdir = hd;
        if (xiH.norm() > 1e-12) hdir = (0.5 * hd + xiH / xiH.norm()).normalized();
        s.head(n) = L0 * hdir;
        s.tail(m) = vm * vd;
        starts.push_back(s);
      }
    }
    if (m > 1 && vm > 0) {
      for (int r = 0; r < opt.gridDensity; ++r) {
        Vec s = Vec::Zero(N);
        s.head(n) = L0 * hdirs[r % hdirs.size()];
        s.tail(m) = vm * rng.unit_vec(m);
        starts.push_back(s);
      }
    }
  }
  return starts;
}

inline void finish_result(const HTypeModel& M, double eps, const Vec& x, const Vec& yinv, DistanceResult& R,
                          const SearchOptions& opt) {
  const EndpointEval ev = endpoint_eval(M, eps, x, yinv, R.lambdaStar, opt.fineStep);
  R.residual = ev.residual.norm();
  R.endCovector = ev.endH;
  R.Mh = ev.Mh;
  R.Meta = ev.Meta;
  R.sigmaRatio = detail::sigma_ratio(ev.Meta);
  R.conjugateFlag = R.sigmaRatio <= 1e-6;
  R.distance = covector_length(M, R.lambdaStar, eps);
}

inline DistanceResult solve_distance(const HTypeModel& M, double eps, const Vec& x, const Vec& y,
                                     const SearchOptions& opt = {}) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::BadParameter, "epsilon must be non-negative");
  const Vec yinv = chart::inverse(M, y);
  const Vec xi = chart::log_frame(M, chart::compose(M, chart::inverse(M, x), y));
  if (xi.norm() < 1e-12) throw Error(ErrorCode::BadParameter, "endpoints coincide");
  const auto starts = shooting_starts(M, xi, opt);

  struct Cand {
    Vec lambda;
    double len;
  };
  std::vector<Cand> coarse;
  DistanceResult R;
  R.epsilon = eps;
  R.x = x;
  R.y = y;
  for (const auto& s : starts) {
    ++R.startsTried;
    auto lam = detail::newton_shoot(M, eps, x, yinv, s, opt.coarseStep, 1e-7, opt.maxNewtonIters);
    if (!lam) continue;
    coarse.push_back({*lam, covector_length(M, *lam, eps)});
  }
  if (coarse.empty()) throw Error(ErrorCode::NoConvergence, "no shooting start converged");
  std::sort(coarse.begin(), coarse.end(), [](const Cand& a, const Cand& b) { return a.len < b.len; });
  const double bestCoarse = coarse.front().len;

  std::vector<Cand> fine;
  for (const auto& c : coarse) {
    if (c.len > bestCoarse * (1.0 + 1e-4) + 1e-6) break;
    bool dup = false;
    for (const auto& f : fine)
      if ((f.lambda - c.lambda).norm() <= 1e-5 * std::max(1.0, c.lambda.norm())) dup = true;
    if (dup) continue;
    auto lam = detail::newton_shoot(M, eps, x, yinv, c.lambda, opt.fineStep, opt.tol, 12);
    if (!lam) continue;
    bool dup2 = false;
    for (const auto& f : fine)
      if ((f.lambda - *lam).norm() <= 1e-6 * std::max(1.0, lam->norm())) dup2 = true;
    if (!dup2) fine.push_back({*lam, covector_length(M, *lam, eps)});
  }
  R.startsConverged = static_cast<int>(coarse.size());
  if (fine.empty()) throw Error(ErrorCode::NoConvergence, "polishing failed for every candidate");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : fine) best = std::min(best, f.len);
  std::vector<Vec> mins;
  for (const auto& f : fine)
    if (f.len <= best + 1e-6) mins.push_back(f.lambda);
  std::sort(mins.begin(), mins.end(), detail::lex_less);
  R.minimizers = mins;
  R.minimizerCount = static_cast<int>(mins.size());
  R.lambdaStar = mins.front();
  finish_result(M, eps, x, yinv, R, opt);
  return R;
}

// Polish from a known covector (continuation along an epsilon ladder).
inline DistanceResult solve_distance_from(const HTypeModel& M, double eps, const Vec& x, const Vec& y,
                                          const Vec& guess, const SearchOptions& opt = {}) {
  const Vec yinv = chart::inverse(M, y);
  DistanceResult R;
  R.epsilon = eps;
  R.x = x;
  R.y = y;
  R.startsTried = 1;
  auto lam = detail::newton_shoot(M, eps, x, yinv, guess, opt.fineStep, opt.tol, opt.maxNewtonIters);
  if (!lam) throw Error(ErrorCode::NoConvergence, "continuation did not converge");
  R.startsConverged = 1;
  R.lambdaStar = *lam;
  R.minimizers = {*lam};
  R.minimizerCount = 1;
  finish_result(M, eps, x, yinv, R, opt);
  return R;
}

enum class CutClass { Interior, ProbableCut, ProbableConjugate };

inline const char* cut_name(CutClass c) {
  switch (c) {
    case CutClass::Interior: return "Interior";
    case CutClass::ProbableCut: return "ProbableCut";
    case CutClass::ProbableConjugate: return "ProbableConjugate";
  }
  return "?";
}

inline CutClass classify_cut(const DistanceResult& r) {
  if (r.sigmaRatio <= 1e-6) return CutClass::ProbableConjugate;
  if (r.minimizerCount > 1) return CutClass::ProbableCut;
  return CutClass::Interior;
}

// unit-speed gradient data at y: h = |grad_H r|, v = |grad_V r|
struct GradientData {
  double r = 0, h = 0, v = 0;
  Vec p;  // unit-speed covector (dr in frame components)
};

inline GradientData gradient_data(const HTypeModel& M, const DistanceResult& R) {
  GradientData g;
  g.r = R.distance;
  g.p = R.endCovector / R.distance;
  g.h = g.p.head(M.n).norm();
  g.v = g.p.tail(M.m).norm();
  return g;
}

struct SweepRow {
  double eps, distance, h, v;
  CutClass cls;
  Vec lambda;
};

// Descending epsilon ladder; each rung is searched globally and cross-checked against continuation.
inline std::vector<SweepRow> epsilon_sweep(const HTypeModel& M, const Vec& x, const Vec& y,
                                           const std::vector<double>& epsList, const SearchOptions& opt = {}) {
  std::vector<SweepRow> rows;
  std::optional<Vec> prev;
  for (double e : epsList) {
    DistanceResult R = solve_distance(M, e, x, y, opt);
    if (prev) {
      try {
        DistanceResult C = solve_distance_from(M, e, x, y, *prev, opt);
        if (C.distance < R.distance - 1e-12) R = C;
      } catch (const Error&) {
      }
    }
    const GradientData g = gradient_data(M, R);
    rows.push_back({e, R.distance, g.h, g.v, classify_cut(R), R.lambdaStar});
    prev = R.lambdaStar;
  }
  return rows;
}

inline nlohmann::json distance_to_json(const DistanceResult& R) {
  return nlohmann::json{{"epsilon", R.epsilon},
                        {"x", to_std(R.x)},
                        {"y", to_std(R.y)},
                        {"distance", R.distance},
                        {"lambdaStar", to_std(R.lambdaStar)},
                        {"minimizerCount", R.minimizerCount},
                        {"conjugateFlag", R.conjugateFlag},
                        {"sigmaRatio", R.sigmaRatio},
                        {"residual", R.residual},
                        {"classification", cut_name(classify_cut(R))}};
}

}  // namespace htype
