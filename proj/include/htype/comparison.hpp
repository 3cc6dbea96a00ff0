#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "htype/core.hpp"
#include "htype/curvature.hpp"
#include "htype/geodesic.hpp"
#include "htype/jacobi.hpp"
#include "htype/model.hpp"
#include "htype/report.hpp"

namespace htype {

// ---- comparison functions --------------------------------------------------------

enum class CompKind { Riem, Sas };

namespace detail {

// s cot s at x = s^2
inline double riem_phi(double x) {
  if (std::abs(x) < 1e-4) {
    static const double c[] = {1.0,           -1.0 / 3.0,    -1.0 / 45.0,          -2.0 / 945.0,
                               -1.0 / 4725.0, -2.0 / 93555.0, -1382.0 / 638512875.0, -4.0 / 18243225.0};
    double s = 0, p = 1;
    for (double ci : c) {
      s += ci * p;
      p *= x;
    }
    return s;
  }
  if (x > 0) {
    const double s = std::sqrt(x);
    return s * std::cos(s) / std::sin(s);
  }
  const double q = std::sqrt(-x);
  return q / std::tanh(q);
}

// A(x) = (sin s - s cos s) / s^3, B(x) = (2 - 2 cos s - s sin s) / s^4 as power series in x = s^2
inline void sas_series(double x, int terms, double& A, double& B) {
  A = 0;
  B = 0;
  double t = 1.0 / 6.0;  // x^{k-1} / (2k+1)!
  double u = 1.0 / 24.0; // x^{j-2} / (2j)!
  for (int i = 0; i < terms; ++i) {
    const int k = i + 1, j = i + 2;
    A += ((k % 2) ? 1.0 : -1.0) * 2.0 * k * t;
    B += ((j % 2) ? -1.0 : 1.0) * 2.0 * (j - 1) * u;
    t *= x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    u *= x / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
  }
}

// The closed form loses digits to cancellation for |x| < 1, where the series converges fast.
inline void sas_AB(double x, double& A, double& B) {
  if (std::abs(x) < 1e-4) {
    sas_series(x, 8, A, B);
  } else if (std::abs(x) < 1.0) {
    sas_series(x, 30, A, B);
  } else if (x > 0) {
    const double s = std::sqrt(x);
    A = (std::sin(s) - s * std::cos(s)) / (s * s * s);
    B = (2.0 - 2.0 * std::cos(s) - s * std::sin(s)) / (x * x);
  } else {
    const double q = std::sqrt(-x);
    A = (q * std::cosh(q) - std::sinh(q)) / (q * q * q);
    B = (2.0 - 2.0 * std::cosh(q) + q * std::sinh(q)) / (x * x);
  }
}

inline double cos_sqrt(double x) { return x >= 0 ? std::cos(std::sqrt(x)) : std::cosh(std::sqrt(-x)); }

inline double sinc_sqrt(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x / 6.0;
  if (x > 0) {
    const double s = std::sqrt(x);
    return std::sin(s) / s;
  }
  const double q = std::sqrt(-x);
  return std::sinh(q) / q;
}

}  // namespace detail

inline double comparison_function(CompKind kind, double r, double k) {
  if (!(r > 0) || !std::isfinite(r) || !std::isfinite(k)) throw Error(ErrorCode::BadParameter, "comparison function needs r > 0");
  const double x = k * r * r;
  if (kind == CompKind::Riem) {
    if (x >= M_PI * M_PI) throw Error(ErrorCode::DomainExceeded, "r sqrt(k) >= pi");
    return detail::riem_phi(x) / r;
  }
  if (x >= 4.0 * M_PI * M_PI) throw Error(ErrorCode::DomainExceeded, "r sqrt(k) >= 2 pi");
  double A, B;
  detail::sas_AB(x, A, B);
  return A / (B * r);
}

inline double sas_denominator(double s) { return 2.0 - 2.0 * std::cos(s) - s * std::sin(s); }

// first positive zero of the denominator in s = r sqrt(k): sin s (Riem) or sas_denominator (Sas)
inline double comparison_pole(CompKind kind) {
  auto f = [&](double s) { return kind == CompKind::Riem ? std::sin(s) : sas_denominator(s); };
  double a = 0.5, b = a;
  while (f(b + 0.01) > 0) b += 0.01;
  a = b;
  b += 0.01;
  for (int it = 0; it < 200 && b - a > 0; ++it) {
    const double c = 0.5 * (a + b);
    if (c <= a || c >= b) break;
    (f(c) > 0 ? a : b) = c;
  }
  return 0.5 * (a + b);
}

// Sasakian bound keeping the eps-dependent factor (1 - eps K / h^2); h = 1 for the parallel case
inline double rhs_sas_eps(double r, double K, double eps, double h = 1.0) {
  if (!(r > 0) || !(eps >= 0) || !(h > 0)) throw Error(ErrorCode::BadParameter, "rhs_sas_eps needs r > 0, eps >= 0, h > 0");
  const double x = K * r * r;
  const double mu = eps / (h * h * r * r);
  auto denom = [&](double xx) {
    double A, B;
    detail::sas_AB(xx, A, B);
    return B + mu * detail::sinc_sqrt(xx);
  };
  if (x > 0) {
    if (x >= 4.0 * M_PI * M_PI) throw Error(ErrorCode::DomainExceeded, "r sqrt(K) >= 2 pi");
    const double s = std::sqrt(x);
    for (double t = 0.01; t < s; t += 0.01)
      if (denom(t * t) <= 0) throw Error(ErrorCode::DomainExceeded, "beyond the first zero of the denominator");
  }
  const double D = denom(x);
  if (!(D > 0)) throw Error(ErrorCode::DomainExceeded, "beyond the first zero of the denominator");
  double A, B;
  detail::sas_AB(x, A, B);
  return (A + mu * detail::cos_sqrt(x)) / (D * r);
}

inline double sublaplacian_constant_C() {
  const double ct = 1.0 / std::tanh(M_PI);
  return M_PI * (ct + M_PI / (M_PI * ct - 1.0));
}

// ---- records ---------------------------------------------------------------------

enum class TheoremId {
  GEOD_DIR,
  RIEM_SECT,
  RIEM_AVG,
  SAS_PAR,
  SAS_PAR_EPS,
  SAS_PERP,
  VERT_GRAD,
  VERT_HESS_PAR,
  VERT_HESS_PERP,
  SUBLAP_EPS,
  SUBLAP_SR,
  SUBLAP_CORO,
  HTYPE_DIR,
  HTYPE_LCT,
  BM_TRACE,
  DIAM_A,
  DIAM_B,
  DIAM_C
};

inline const std::vector<TheoremId>& all_theorems() {
  static const std::vector<TheoremId> ids = {
      TheoremId::GEOD_DIR,      TheoremId::RIEM_SECT,      TheoremId::RIEM_AVG,   TheoremId::SAS_PAR,
      TheoremId::SAS_PAR_EPS,   TheoremId::SAS_PERP,       TheoremId::VERT_GRAD,  TheoremId::VERT_HESS_PAR,
      TheoremId::VERT_HESS_PERP, TheoremId::SUBLAP_EPS,    TheoremId::SUBLAP_SR,  TheoremId::SUBLAP_CORO,
      TheoremId::HTYPE_DIR,     TheoremId::HTYPE_LCT,      TheoremId::BM_TRACE,   TheoremId::DIAM_A,
      TheoremId::DIAM_B,        TheoremId::DIAM_C};
  return ids;
}

inline const char* theorem_name(TheoremId id) {
  switch (id) {
    case TheoremId::GEOD_DIR: return "GEOD_DIR";
    case TheoremId::RIEM_SECT: return "RIEM_SECT";
    case TheoremId::RIEM_AVG: return "RIEM_AVG";
    case TheoremId::SAS_PAR: return "SAS_PAR";
    case TheoremId::SAS_PAR_EPS: return "SAS_PAR_EPS";
    case TheoremId::SAS_PERP: return "SAS_PERP";
    case TheoremId::VERT_GRAD: return "VERT_GRAD";
    case TheoremId::VERT_HESS_PAR: return "VERT_HESS_PAR";
    case TheoremId::VERT_HESS_PERP: return "VERT_HESS_PERP";
    case TheoremId::SUBLAP_EPS: return "SUBLAP_EPS";
    case TheoremId::SUBLAP_SR: return "SUBLAP_SR";
    case TheoremId::SUBLAP_CORO: return "SUBLAP_CORO";
    case TheoremId::HTYPE_DIR: return "HTYPE_DIR";
    case TheoremId::HTYPE_LCT: return "HTYPE_LCT";
    case TheoremId::BM_TRACE: return "BM_TRACE";
    case TheoremId::DIAM_A: return "DIAM_A";
    case TheoremId::DIAM_B: return "DIAM_B";
    case TheoremId::DIAM_C: return "DIAM_C";
  }
  return "?";
}

inline std::optional<TheoremId> theorem_from_name(const std::string& s) {
  for (TheoremId id : all_theorems())
    if (s == theorem_name(id)) return id;
  return std::nullopt;
}

inline bool is_diameter(TheoremId id) {
  return id == TheoremId::DIAM_A || id == TheoremId::DIAM_B || id == TheoremId::DIAM_C;
}

// eps > 0 only, eps = 0 only, or both
inline bool theorem_at_eps(TheoremId id, double eps) {
  switch (id) {
    case TheoremId::SUBLAP_EPS: return eps > 0;
    case TheoremId::SUBLAP_SR:
    case TheoremId::SUBLAP_CORO:
    case TheoremId::BM_TRACE: return eps == 0;
    case TheoremId::DIAM_A:
    case TheoremId::DIAM_B:
    case TheoremId::DIAM_C: return false;
    default: return true;
  }
}

enum class Status { Pass, Fail, HypothesisSkipped };

inline const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "Pass";
    case Status::Fail: return "Fail";
    case Status::HypothesisSkipped: return "HypothesisSkipped";
  }
  return "?";
}

struct Hypothesis {
  double rho = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double K = std::numeric_limits<double>::quiet_NaN();
  double K1 = std::numeric_limits<double>::quiet_NaN();
  double K2 = std::numeric_limits<double>::quiet_NaN();
};

struct Tolerance {
  double abs = 1e-6;
  double rel = 1e-4;
  double at(double rhs) const { return abs + rel * std::abs(rhs); }
};

struct ComparisonRecord {
  TheoremId id = TheoremId::GEOD_DIR;
  std::string model;
  double eps = 0;
  Vec x, y;
  double r = std::numeric_limits<double>::quiet_NaN();
  double h = std::numeric_limits<double>::quiet_NaN();
  double v = std::numeric_limits<double>::quiet_NaN();
  Hypothesis hyp;
  double lhs = std::numeric_limits<double>::quiet_NaN();
  double rhs = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  Status status = Status::HypothesisSkipped;
  std::string note;
};

inline void settle(ComparisonRecord& rec, const Tolerance& tol) {
  rec.margin = rec.rhs - rec.lhs;
  rec.status = rec.margin >= -tol.at(rec.rhs) ? Status::Pass : Status::Fail;
}

inline std::string csv_header(int chartDim) {
  std::ostringstream os;
  os << "theorem_id,model,eps";
  for (int i = 0; i < chartDim; ++i) os << ",x" << i;
  for (int i = 0; i < chartDim; ++i) os << ",y" << i;
  os << ",r,h,v,rho,kappa,K,K1,K2,lhs,rhs,margin,status";
  return os.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_row(const ComparisonRecord& rec) {
  std::ostringstream os;
  os << theorem_name(rec.id) << ',' << csv_field(rec.model) << ',' << fmt17(rec.eps);
  for (int i = 0; i < rec.x.size(); ++i) os << ',' << fmt17(rec.x[i]);
  for (int i = 0; i < rec.y.size(); ++i) os << ',' << fmt17(rec.y[i]);
  for (double d : {rec.r, rec.h, rec.v, rec.hyp.rho, rec.hyp.kappa, rec.hyp.K, rec.hyp.K1, rec.hyp.K2, rec.lhs, rec.rhs,
                   rec.margin})
    os << ',' << fmt17(d);
  os << ',' << status_name(rec.status);
  return os.str();
}

inline nlohmann::json record_to_json(const ComparisonRecord& rec) {
  auto num = [](double d) { return std::isfinite(d) ? nlohmann::json(d) : nlohmann::json(nullptr); };
  return nlohmann::json{{"theorem_id", theorem_name(rec.id)},
                        {"model", rec.model},
                        {"eps", rec.eps},
                        {"x", to_std(rec.x)},
                        {"y", to_std(rec.y)},
                        {"r", num(rec.r)},
                        {"h", num(rec.h)},
                        {"v", num(rec.v)},
                        {"rho", num(rec.hyp.rho)},
                        {"kappa", num(rec.hyp.kappa)},
                        {"K", num(rec.hyp.K)},
                        {"K1", num(rec.hyp.K1)},
                        {"K2", num(rec.hyp.K2)},
                        {"lhs", num(rec.lhs)},
                        {"rhs", num(rec.rhs)},
                        {"margin", num(rec.margin)},
                        {"status", status_name(rec.status)},
                        {"note", rec.note}};
}

// ---- per-point data --------------------------------------------------------------

// Everything the checkers read at one (x, y, eps): the distance solution and its Hessians.
struct PointEval {
  double eps = 0;
  DistanceResult R;
  HessianAtPoint hp;
  Mat bsym, hsym;  // symmetric parts of the Bott and hat Hessians
  double r = 0, h = 0, v = 0;
  Vec p, pH, pV;   // unit-speed covector and its parts (frame components)
};

inline PointEval evaluate_point(const Geometry& G, const DistanceResult& R) {
  PointEval pe;
  pe.eps = R.epsilon;
  pe.R = R;
  pe.hp = hessian_at(G, R);
  pe.bsym = 0.5 * (pe.hp.bott + pe.hp.bott.transpose());
  pe.hsym = 0.5 * (pe.hp.hat + pe.hp.hat.transpose());
  pe.r = R.distance;
  pe.p = pe.hp.dd.p;
  pe.pH = G.H(pe.p);
  pe.pV = G.V(pe.p);
  pe.h = pe.pH.norm();
  pe.v = pe.pV.norm();
  return pe;
}

// A point solved at one eps; at eps = 0 the Richardson rungs are attached.
struct PointSolution {
  Vec x, y;
  double eps = 0;
  CutClass cls = CutClass::Interior;
  PointEval at;
  std::vector<PointEval> ladder;
};

inline DistanceResult solve_with_continuation(const HTypeModel& M, double eps, const Vec& x, const Vec& y,
                                              const SearchOptions& opt, const Vec* guess) {
  DistanceResult R = solve_distance(M, eps, x, y, opt);
  if (guess) {
    try {
      DistanceResult C = solve_distance_from(M, eps, x, y, *guess, opt);
      if (C.distance < R.distance - 1e-12) R = C;
    } catch (const Error&) {
    }
  }
  return R;
}

// Attaches the eps -> 0 Richardson rungs by continuation from the eps = 0 solution.
inline void attach_ladder(const Geometry& G, PointSolution& ps, const SearchOptions& opt) {
  const auto& lad = richardson_ladder();
  Vec guess = ps.at.R.lambdaStar;
  std::vector<PointEval> rungs(lad.size());
  for (int i = static_cast<int>(lad.size()) - 1; i >= 0; --i) {
    const DistanceResult R = solve_distance_from(G.model, lad[i], ps.x, ps.y, guess, opt);
    if (R.sigmaRatio <= 1e-6) ps.cls = CutClass::ProbableConjugate;
    rungs[i] = evaluate_point(G, R);
    guess = R.lambdaStar;
  }
  ps.ladder = rungs;
}

inline PointSolution solve_point(const Geometry& G, double eps, const Vec& x, const Vec& y,
                                 const SearchOptions& opt = {}, const Vec* guess = nullptr) {
  PointSolution ps;
  ps.x = x;
  ps.y = y;
  ps.eps = eps;
  const DistanceResult R = solve_with_continuation(G.model, eps, x, y, opt, guess);
  ps.cls = classify_cut(R);
  if (ps.cls != CutClass::Interior) {
    ps.at.R = R;
    ps.at.eps = eps;
    return ps;
  }
  ps.at = evaluate_point(G, R);
  if (eps == 0) attach_ladder(G, ps, opt);
  return ps;
}

// ---- theorem checks --------------------------------------------------------------

struct CheckContext {
  const Geometry* G = nullptr;
  CurvatureInvariants ci;
  Tolerance tol;
};

namespace detail {

struct Lhs {
  bool ok = true;
  double value = 0;
  std::string reason;
};

inline Lhs skip_lhs(const std::string& why) { return {false, 0, why}; }

inline double lam_max(const Mat& S, const Mat& B) {
  if (B.cols() == 0) return -std::numeric_limits<double>::infinity();
  const Mat Q = B.transpose() * S * B;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Q + Q.transpose()));
  return es.eigenvalues().maxCoeff();
}

inline double trace_on(const Mat& S, const Mat& B) { return (B.transpose() * S * B).trace(); }

inline Mat vertical_complement(const Geometry& G, const Mat& span, const Vec& pV) {
  if (span.cols() == 0) return span;
  if (pV.norm() <= 1e-9) return orthonormalize(span);
  return complement_in(span, pV / pV.norm());
}

inline Mat all_vertical(const Geometry& G) {
  Mat A = Mat::Zero(G.N(), G.m());
  A.bottomRows(G.m()) = Mat::Identity(G.m(), G.m());
  return A;
}

inline Mat j_images(const Geometry& G, const Mat& Zs, const Vec& pH, double h) {
  Mat X(G.N(), Zs.cols());
  for (int i = 0; i < Zs.cols(); ++i) X.col(i) = G.J(Zs.col(i), pH) / h;
  return X;
}

inline Lhs theorem_lhs(const Geometry& G, TheoremId id, const PointEval& pe) {
  const HTypeModel& M = G.model;
  const int n = M.n, m = M.m;
  if (pe.h < 1e-6) return skip_lhs("horizontal gradient vanishes");
  const bool j2 = M.flags.satisfiesJ2;
  switch (id) {
    case TheoremId::GEOD_DIR: {
      const Vec X = pe.pH / pe.h;
      return {true, quad(pe.bsym, X), ""};
    }
    case TheoremId::RIEM_SECT:
    case TheoremId::RIEM_AVG: {
      const SplittingFrame sf = splitting_frame(G, pe.p, !j2);
      const FrameBlock* b = sf.find("HRIEM", !j2);
      if (!b || b->basis.cols() == 0) return skip_lhs("H_Riem is empty");
      if (id == TheoremId::RIEM_SECT) return {true, lam_max(pe.bsym, b->basis), ""};
      return {true, trace_on(pe.bsym, b->basis), ""};
    }
    case TheoremId::SAS_PAR:
    case TheoremId::SAS_PAR_EPS: {
      const Mat Zs = pe.v > 1e-9 ? Mat(pe.pV / pe.v) : all_vertical(G);
      return {true, lam_max(pe.bsym, j_images(G, Zs, pe.pH, pe.h)), ""};
    }
    case TheoremId::SAS_PERP: {
      Mat span = all_vertical(G);
      if (!j2) span = splitting_frame(G, pe.p, true).vsasFine;
      const Mat Zs = vertical_complement(G, span, pe.pV);
      if (Zs.cols() == 0) return skip_lhs("no vertical Z orthogonal to grad_V r");
      return {true, lam_max(pe.bsym, j_images(G, Zs, pe.pH, pe.h)), ""};
    }
    case TheoremId::VERT_GRAD: return {true, pe.r * pe.v, ""};
    case TheoremId::VERT_HESS_PAR: {
      const Mat Zs = pe.v > 1e-9 ? Mat(pe.pV / pe.v) : all_vertical(G);
      return {true, lam_max(pe.bsym, Zs) / (pe.h * pe.h), ""};
    }
    case TheoremId::VERT_HESS_PERP: {
      const Mat Zs = vertical_complement(G, all_vertical(G), pe.pV);
      if (Zs.cols() == 0) return skip_lhs("no vertical Z orthogonal to grad_V r");
      return {true, lam_max(pe.bsym, Zs) * pe.h * pe.h, ""};
    }
    case TheoremId::SUBLAP_EPS:
    case TheoremId::SUBLAP_SR:
    case TheoremId::SUBLAP_CORO:
    case TheoremId::HTYPE_LCT: return {true, pe.hp.bott.topLeftCorner(n, n).trace(), ""};
    case TheoremId::HTYPE_DIR: {
      if (pe.v <= 1e-9) return skip_lhs("vertical gradient vanishes");
      const SplittingFrame sf = splitting_frame(G, pe.p, true);
      const FrameBlock* vb = sf.find("VHTYPE", true);
      if (!vb || vb->basis.cols() == 0) return skip_lhs("V_Htype is empty");
      const Mat X = j_images(G, vb->basis, pe.pH, pe.h);
      Mat Y(G.N(), X.cols());
      for (int i = 0; i < X.cols(); ++i) Y.col(i) = G.J(pe.pV, X.col(i)) / pe.v;
      Mat Q = X.transpose() * pe.bsym * X + Y.transpose() * pe.bsym * Y;
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Q + Q.transpose()));
      return {true, es.eigenvalues().maxCoeff(), ""};
    }
    case TheoremId::BM_TRACE: {
      if (n - m - 1 <= 0) return skip_lhs("n - m - 1 = 0");
      const Mat B = G.h_riem_basis(pe.p);
      return {true, trace_on(pe.hsym, B) / (n - m - 1), ""};
    }
    default: return skip_lhs("not a pointwise theorem");
  }
}

// Structural hypotheses of each theorem, read from model flags and curvature invariants.
inline std::optional<std::string> structural_skip(const CheckContext& ctx, TheoremId id) {
  const HTypeModel& M = ctx.G->model;
  const auto& f = M.flags;
  const auto& ci = ctx.ci;
  const int nm1 = M.n - M.m - 1;
  const bool clifford = M.kappa.has_value();
  switch (id) {
    case TheoremId::GEOD_DIR: return std::nullopt;
    case TheoremId::RIEM_SECT:
      if (!clifford) return "no parallel horizontal Clifford structure";
      if (f.satisfiesJ2 && nm1 <= 0) return "n - m - 1 = 0";
      return std::nullopt;
    case TheoremId::RIEM_AVG:
      if (!clifford) return "no parallel horizontal Clifford structure";
      if (!f.satisfiesJ2) return "J2 condition fails";
      if (nm1 <= 0) return "n - m - 1 = 0";
      return std::nullopt;
    case TheoremId::SAS_PAR:
    case TheoremId::SAS_PAR_EPS:
      if (!f.horizontallyParallelTorsion) return "torsion not horizontally parallel";
      return std::nullopt;
    case TheoremId::SAS_PERP:
      if (!clifford) return "no parallel horizontal Clifford structure";
      if (M.m < 2) return "m = 1";
      return std::nullopt;
    case TheoremId::VERT_GRAD:
    case TheoremId::VERT_HESS_PAR:
      if (!f.horizontallyParallelTorsion) return "torsion not horizontally parallel";
      if (ci.secMin_SasPlanes < 0) return "Sasakian sectional bound negative";
      return std::nullopt;
    case TheoremId::VERT_HESS_PERP:
      if (!clifford) return "no parallel horizontal Clifford structure";
      if (!f.satisfiesJ2) return "J2 condition fails";
      if (M.m < 2) return "m = 1";
      if (ci.secMin_SasPlanes < 0) return "Sasakian sectional bound negative";
      return std::nullopt;
    case TheoremId::SUBLAP_EPS:
    case TheoremId::SUBLAP_SR:
      if (!clifford) return "no parallel horizontal Clifford structure";
      if (!f.satisfiesJ2) return "J2 condition fails";
      return std::nullopt;
    case TheoremId::SUBLAP_CORO:
      if (!clifford) return "no parallel horizontal Clifford structure";
      if (!f.satisfiesJ2) return "J2 condition fails";
      if (ci.secMin_H < 0) return "horizontal Bott curvature negative";
      return std::nullopt;
    case TheoremId::HTYPE_DIR:
    case TheoremId::HTYPE_LCT:
      if (!f.completelyParallelTorsion) return "torsion not completely parallel";
      if (ci.secMin_H < 0) return "horizontal Bott curvature negative";
      return std::nullopt;
    case TheoremId::BM_TRACE:
      if (!f.satisfiesJ2) return "J2 condition fails";
      if (nm1 <= 0) return "n - m - 1 = 0";
      if (!f.horizontallyParallelTorsion) return "torsion not horizontally parallel";
      return std::nullopt;
    default: return "diameter bounds are not pointwise";
  }
}

// Right-hand side and hypothesis constants; throws DomainExceeded outside the comparison domain.
inline double theorem_rhs(const CheckContext& ctx, TheoremId id, double eps, double r, double h, double v,
                          Hypothesis& hyp) {
  const HTypeModel& M = ctx.G->model;
  const int n = M.n, m = M.m, nm1 = n - m - 1;
  const auto& ci = ctx.ci;
  const double kap = M.kappa.value_or(0.0);
  auto Fr = [&](double k) { return comparison_function(CompKind::Riem, r, k); };
  auto Fs = [&](double k) { return comparison_function(CompKind::Sas, r, k); };
  switch (id) {
    case TheoremId::GEOD_DIR: return (1.0 - h * h) / r;
    case TheoremId::RIEM_SECT:
      hyp.rho = ci.secMin_RiemPlanes;
      hyp.K = hyp.rho * h * h + 0.25 * v * v;
      return Fr(hyp.K);
    case TheoremId::RIEM_AVG:
      hyp.rho = ci.ricRiem_min / nm1;
      hyp.K = hyp.rho * h * h + 0.25 * v * v;
      return nm1 * Fr(hyp.K);
    case TheoremId::SAS_PAR:
    case TheoremId::SAS_PAR_EPS:
      hyp.rho = ci.secMin_SasPlanes;
      hyp.K1 = hyp.rho * h * h + v * v;
      return id == TheoremId::SAS_PAR ? Fs(hyp.K1) : rhs_sas_eps(r, hyp.K1, eps, 1.0);
    case TheoremId::SAS_PERP:
      hyp.rho = ci.secMin_SasPlanes;
      hyp.kappa = kap;
      hyp.K2 = hyp.rho * h * h + (2.0 - kap * eps) * (kap * eps - 1.0) * v * v;
      return Fs(hyp.K2);
    case TheoremId::VERT_GRAD:
      hyp.rho = ci.secMin_SasPlanes;
      return 2.0 * M_PI;
    case TheoremId::VERT_HESS_PAR:
    case TheoremId::VERT_HESS_PERP:
      hyp.rho = ci.secMin_SasPlanes;
      return 12.0 / (r * r * r);
    case TheoremId::SUBLAP_EPS:
    case TheoremId::SUBLAP_SR: {
      hyp.rho = ci.secMin_H;
      hyp.kappa = kap;
      hyp.K = hyp.rho * h * h + 0.25 * v * v;
      hyp.K1 = hyp.rho * h * h + v * v;
      hyp.K2 = hyp.rho * h * h + (2.0 - kap * eps) * (kap * eps - 1.0) * v * v;
      double s = (1.0 - h * h) / r + Fs(hyp.K1);
      if (nm1 > 0) s += nm1 * Fr(hyp.K);
      if (m > 1) s += (m - 1) * Fs(hyp.K2);
      return s;
    }
    case TheoremId::SUBLAP_CORO:
      hyp.rho = ci.secMin_H;
      return (n - m + 3 + sublaplacian_constant_C() * (m - 1)) / r;
    case TheoremId::HTYPE_DIR:
      hyp.rho = ci.secMin_H;
      return 5.0 / r;
    case TheoremId::HTYPE_LCT:
      hyp.rho = ci.secMin_H;
      return (n + 3.0 * m - h * h) / r;
    case TheoremId::BM_TRACE:
      hyp.rho = ci.bmii_min / nm1;
      hyp.K = hyp.rho;
      return Fr(hyp.rho);
    default: throw Error(ErrorCode::BadParameter, "diameter bounds are not pointwise");
  }
}

}  // namespace detail

// One theorem at one solved point.
inline ComparisonRecord check_point(const CheckContext& ctx, TheoremId id, const PointSolution& ps) {
  const Geometry& G = *ctx.G;
  ComparisonRecord rec;
  rec.id = id;
  rec.model = G.model.id();
  rec.eps = ps.eps;
  rec.x = ps.x;
  rec.y = ps.y;
  rec.r = ps.at.r;
  rec.h = ps.at.h;
  rec.v = ps.at.v;
  rec.status = Status::HypothesisSkipped;
  if (ps.cls != CutClass::Interior) {
    rec.note = std::string("endpoint classified ") + cut_name(ps.cls);
    return rec;
  }
  if (!theorem_at_eps(id, ps.eps)) {
    rec.note = ps.eps > 0 ? "stated for eps = 0 only" : "stated for eps > 0 only";
    return rec;
  }
  if (auto why = detail::structural_skip(ctx, id)) {
    rec.note = *why;
    return rec;
  }
  // At eps = 0 the left side is the Bott Hessian of r_0 from the eps = 0 endpoint map; the
  // Richardson limit of the ladder rungs is kept in the note as a cross-check.
  const detail::Lhs L = detail::theorem_lhs(G, id, ps.at);
  if (ps.eps == 0 && L.ok && ps.ladder.size() == 3) {
    detail::Lhs s[3];
    bool all = true;
    for (int i = 0; i < 3; ++i) {
      s[i] = detail::theorem_lhs(G, id, ps.ladder[i]);
      all = all && s[i].ok;
    }
    if (all) {
      const auto& lad = richardson_ladder();
      rec.note = "richardson(" + fmt17(lad[0]) + "," + fmt17(lad[1]) + "," + fmt17(lad[2]) +
                 ") = " + fmt17(richardson(s[0].value, s[1].value, s[2].value));
    }
  }
  if (!L.ok) {
    rec.note = L.reason;
    return rec;
  }
  rec.lhs = L.value;
  try {
    rec.rhs = detail::theorem_rhs(ctx, id, ps.eps, rec.r, rec.h, rec.v, rec.hyp);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DomainExceeded) throw;
    rec.note = std::string("K outside the comparison domain: ") + e.what();
    return rec;
  }
  auto append = [&](const std::string& s) { rec.note += (rec.note.empty() ? "" : "; ") + s; };
  if (id != TheoremId::VERT_GRAD) append("hessian=bott");
  if (id == TheoremId::BM_TRACE) append("dimension n-m-1 used where the statement prints m-n-1");
  settle(rec, ctx.tol);
  return rec;
}

inline ComparisonRecord check_inequality(const Geometry& G, const CurvatureInvariants& ci, TheoremId id, double eps,
                                         const Vec& x, const Vec& y, const Tolerance& tol = {},
                                         const SearchOptions& opt = {}) {
  CheckContext ctx{&G, ci, tol};
  const PointSolution ps = solve_point(G, eps, x, y, opt);
  return check_point(ctx, id, ps);
}

// ---- diameter ----------------------------------------------------------------------

struct DiameterCertificate {
  std::optional<double> bound_a, bound_b, bound_c, bmii_bound;
  std::optional<double> empiricalDiameterLowerBound;
  Vec farthest;  // sample point realising the empirical bound
  int samplesSolved = 0;
};

inline std::vector<Vec> diameter_samples(const HTypeModel& M, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  if (M.chart == ChartKind::UnitQuaternion) {
    Vec minus1 = Vec::Zero(4);
    minus1[0] = -1;
    out.push_back(minus1);
    Rng rng(seed);
    for (int i = 1; i < count; ++i) out.push_back(rng.unit_vec(4));
  }
  return out;
}

inline DiameterCertificate diameter_certificate(const Geometry& G, const CurvatureInvariants& ci, int samples = 48,
                                                std::uint64_t seed = 42, const SearchOptions& opt = {}) {
  const HTypeModel& M = G.model;
  const auto& f = M.flags;
  const int n = M.n, m = M.m, nm1 = n - m - 1;
  const bool clifford = M.kappa.has_value();
  DiameterCertificate dc;
  if (clifford && f.satisfiesJ2 && nm1 > 0 && ci.ricRiem_min / nm1 > 0) dc.bound_a = M_PI / std::sqrt(ci.ricRiem_min / nm1);
  if (f.horizontallyParallelTorsion && ci.secMin_SasPlanes > 0) dc.bound_b = 2.0 * M_PI / std::sqrt(ci.secMin_SasPlanes);
  const double rhoC = ci.ricSas_min / m;
  const bool ci_ok = ci.secMin_SasPlanes >= 0 || (nm1 > 0 && ci.ricRiem_min >= 0);
  if (clifford && f.satisfiesJ2 && rhoC > 0 && ci_ok) dc.bound_c = 2.0 * M_PI * std::sqrt(3.0) / std::sqrt(rhoC);
  if (f.satisfiesJ2 && nm1 > 0 && f.horizontallyParallelTorsion && ci.bmii_min / nm1 > 0)
    dc.bmii_bound = M_PI / std::sqrt(ci.bmii_min / nm1);
  if (!f.isCompact) return dc;
  const Vec x = chart::identity(M);
  double best = 0;
  for (const Vec& y : diameter_samples(M, samples, seed)) {
    try {
      const DistanceResult R = solve_distance(M, 0.0, x, y, opt);
      ++dc.samplesSolved;
      if (R.distance > best) {
        best = R.distance;
        dc.farthest = y;
      }
    } catch (const Error&) {
    }
  }
  if (dc.samplesSolved > 0) dc.empiricalDiameterLowerBound = best;
  return dc;
}

// DIAM_A/B/C rows: lhs = empirical lower bound on the diameter, rhs = the certified bound
inline std::vector<ComparisonRecord> diameter_records(const Geometry& G, const CurvatureInvariants& ci,
                                                      const DiameterCertificate& dc, const Tolerance& tol) {
  std::vector<ComparisonRecord> out;
  const Vec id = chart::identity(G.model);
  const std::pair<TheoremId, std::optional<double>> rows[] = {
      {TheoremId::DIAM_A, dc.bound_a}, {TheoremId::DIAM_B, dc.bound_b}, {TheoremId::DIAM_C, dc.bound_c}};
  for (const auto& [tid, bound] : rows) {
    ComparisonRecord rec;
    rec.id = tid;
    rec.model = G.model.id();
    rec.eps = 0;
    rec.x = id;
    rec.y = dc.empiricalDiameterLowerBound ? dc.farthest : id;
    rec.hyp.rho = tid == TheoremId::DIAM_A   ? (G.model.n - G.model.m - 1 > 0 ? ci.ricRiem_min / (G.model.n - G.model.m - 1)
                                                                              : std::numeric_limits<double>::quiet_NaN())
                  : tid == TheoremId::DIAM_B ? ci.secMin_SasPlanes
                                             : ci.ricSas_min / G.model.m;
    if (!bound) {
      rec.note = "bound absent: hypotheses fail or rho <= 0";
    } else if (!dc.empiricalDiameterLowerBound) {
      rec.rhs = *bound;
      rec.note = "model not compact or no sample solved";
    } else {
      rec.r = *dc.empiricalDiameterLowerBound;
      rec.lhs = *dc.empiricalDiameterLowerBound;
      rec.rhs = *bound;
      settle(rec, tol);
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace htype
