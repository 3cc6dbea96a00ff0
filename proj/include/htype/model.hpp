#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "htype/core.hpp"
#include "htype/report.hpp"

namespace htype {

struct CliffordModule {
  int n = 0;
  int m = 0;
  std::vector<Mat> J;
};

namespace detail {

// Cayley-Dickson product on R^{2^k}: (a,b)(c,d) = (ac - d*b, da + bc*)
inline Vec cd_conj(const Vec& x) {
  Vec y = -x;
  y[0] = x[0];
  return y;
}

inline Vec cd_mul(const Vec& x, const Vec& y) {
  const int d = static_cast<int>(x.size());
  if (d == 1) return Vec::Constant(1, x[0] * y[0]);
  const int h = d / 2;
  const Vec a = x.head(h), b = x.tail(h), c = y.head(h), e = y.tail(h);
  Vec out(d);
  out.head(h) = cd_mul(a, c) - cd_mul(cd_conj(e), b);
  out.tail(h) = cd_mul(e, a) + cd_mul(b, cd_conj(c));
  return out;
}

// left multiplication by the imaginary unit e_idx in the 2^k-dim Cayley-Dickson algebra
inline Mat cd_left(int dim, int idx) {
  Mat L(dim, dim);
  const Vec u = Vec::Unit(dim, idx);
  for (int j = 0; j < dim; ++j) L.col(j) = cd_mul(u, Vec::Unit(dim, j));
  return L;
}

inline Mat kron(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

// irreducible generators of Cl_{0,m}
inline std::vector<Mat> irreducible_generators(int m) {
  std::vector<Mat> g;
  if (m <= 7) {
    const int dim = m == 1 ? 2 : (m <= 3 ? 4 : 8);
    for (int a = 1; a <= m; ++a) g.push_back(cd_left(dim, a));
    return g;
  }
  if (m == 8) {
    auto base = irreducible_generators(7);
    const Mat I8 = Mat::Identity(8, 8);
    Mat s3(2, 2), e(2, 2);
    s3 << 1, 0, 0, -1;
    e << 0, -1, 1, 0;
    for (const auto& b : base) g.push_back(kron(s3, b));
    g.push_back(kron(e, I8));
    return g;
  }
  // period 8: e_k (x) omega, 1 (x) f_j with omega the volume element of Cl_{0,8}
  auto low = irreducible_generators(m - 8);
  auto f = irreducible_generators(8);
  Mat omega = Mat::Identity(16, 16);
  for (const auto& fj : f) omega = omega * fj;
  const int dl = static_cast<int>(low.empty() ? 1 : low[0].rows());
  for (const auto& e : low) g.push_back(kron(e, omega));
  for (const auto& fj : f) g.push_back(kron(Mat::Identity(dl, dl), fj));
  return g;
}

}  // namespace detail

// dimension of the irreducible real Cl_{0,m} module (Radon-Hurwitz)
inline int clifford_min_dim(int m) {
  static const int base[9] = {1, 2, 4, 4, 8, 8, 8, 8, 16};
  int mult = 1;
  while (m > 8) {
    m -= 8;
    mult *= 16;
  }
  return base[m] * mult;
}

inline CliffordModule clifford_generators(int n, int m) {
  if (m < 1 || n < 1) throw Error(ErrorCode::InadmissibleDimensions, "ranks must be positive");
  const int d = clifford_min_dim(m);
  if (n % d != 0)
    throw Error(ErrorCode::InadmissibleDimensions,
                "no Clifford module of rank " + std::to_string(n) + " for corank " + std::to_string(m) +
                    " (needs a multiple of " + std::to_string(d) + ")");
  auto irr = detail::irreducible_generators(m);
  const int copies = n / d;
  CliffordModule cm{n, m, {}};
  for (const auto& g : irr) cm.J.push_back(detail::kron(Mat::Identity(copies, copies), g));
  return cm;
}

inline Mat j_combination(const std::vector<Mat>& J, const Vec& z) {
  Mat out = Mat::Zero(J[0].rows(), J[0].cols());
  for (int a = 0; a < static_cast<int>(J.size()); ++a) out += z[a] * J[a];
  return out;
}

enum class ModelKind { Heisenberg, QuaternionicHeisenberg, OctonionicHeisenberg, HTypeCarnot, SU2 };
enum class ChartKind { ExponentialCoordinatesStep2, UnitQuaternion };

inline const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Heisenberg: return "heisenberg";
    case ModelKind::QuaternionicHeisenberg: return "quaternionic";
    case ModelKind::OctonionicHeisenberg: return "octonionic";
    case ModelKind::HTypeCarnot: return "carnot";
    case ModelKind::SU2: return "su2";
  }
  return "?";
}

struct ModelParams {
  int d = 1;      // Heisenberg(d)
  int k = 1;      // QuaternionicHeisenberg(k)
  int n = 0;      // HTypeCarnot
  int m = 0;
  double s = 1.0; // SU2 vertical scale
};

struct ModelFlags {
  bool isCarnot = false;
  bool isCompact = false;
  bool satisfiesJ2 = false;
  bool horizontallyParallelTorsion = false;
  bool completelyParallelTorsion = false;
};

struct HTypeModel {
  struct Entry {
    int a, b, k;
    double v;
  };

  ModelKind kind = ModelKind::Heisenberg;
  ModelParams params;
  int n = 0;
  int m = 0;
  std::vector<double> c;  // dense c_{ab}^k at (a*N + b)*N + k
  std::vector<Entry> nz;  // nonzero entries of c
  std::vector<Mat> J;     // J_alpha on H, one per vertical frame vector
  std::optional<double> kappa;
  ChartKind chart = ChartKind::ExponentialCoordinatesStep2;
  ModelFlags flags;

  int N() const { return n + m; }
  double C(int a, int b, int k) const { return c[(a * N() + b) * N() + k]; }
  bool horizontal(int a) const { return a < n; }

  // diag of g_eps in the frame
  Vec metric(double eps) const {
    Vec g = Vec::Ones(N());
    for (int a = n; a < N(); ++a) g[a] = 1.0 / eps;
    return g;
  }
  // H_eps weights: dH/dh_a = w_a h_a
  Vec weights(double eps) const {
    Vec w = Vec::Ones(N());
    for (int a = n; a < N(); ++a) w[a] = eps;
    return w;
  }

  Vec bracket(const Vec& x, const Vec& y) const {
    Vec out = Vec::Zero(N());
    for (const auto& e : nz) out[e.k] += e.v * x[e.a] * y[e.b];
    return out;
  }

  std::string id() const {
    switch (kind) {
      case ModelKind::Heisenberg: return "heisenberg:d=" + std::to_string(params.d);
      case ModelKind::QuaternionicHeisenberg: return "quaternionic:k=" + std::to_string(params.k);
      case ModelKind::OctonionicHeisenberg: return "octonionic";
      case ModelKind::HTypeCarnot: return "carnot:n=" + std::to_string(params.n) + ",m=" + std::to_string(params.m);
      case ModelKind::SU2: {
        std::string s = fmt17(params.s);
        return "su2:s=" + s;
      }
    }
    return "?";
  }
};

namespace detail {

inline void finish_constants(HTypeModel& M) {
  const int N = M.N();
  M.nz.clear();
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int k = 0; k < N; ++k) {
        const double v = M.c[(a * N + b) * N + k];
        if (v != 0.0) M.nz.push_back({a, b, k, v});
      }
  // <J_alpha e_i, e_j> = <Z_alpha, T(e_i, e_j)> = -c_{ij}^{n+alpha}
  M.J.assign(M.m, Mat::Zero(M.n, M.n));
  for (int al = 0; al < M.m; ++al)
    for (int i = 0; i < M.n; ++i)
      for (int j = 0; j < M.n; ++j) M.J[al](j, i) = -M.C(i, j, M.n + al);
}

}  // namespace detail

// structure constants of the step-2 algebra attached to a Clifford module
inline HTypeModel carnot_from_module(const CliffordModule& cm, ModelKind kind, const ModelParams& p) {
  HTypeModel M;
  M.kind = kind;
  M.params = p;
  M.n = cm.n;
  M.m = cm.m;
  M.chart = ChartKind::ExponentialCoordinatesStep2;
  const int N = M.N();
  M.c.assign(static_cast<size_t>(N) * N * N, 0.0);
  for (int al = 0; al < cm.m; ++al)
    for (int i = 0; i < cm.n; ++i)
      for (int j = 0; j < cm.n; ++j) M.c[(i * N + j) * N + cm.n + al] = -cm.J[al](j, i);
  detail::finish_constants(M);
  return M;
}

inline HTypeModel su2_constants(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::BadParameter, "su2 scale must be positive");
  HTypeModel M;
  M.kind = ModelKind::SU2;
  M.params.s = s;
  M.n = 2;
  M.m = 1;
  M.chart = ChartKind::UnitQuaternion;
  M.c.assign(27, 0.0);
  auto set = [&](int a, int b, int k, double v) {
    M.c[(a * 3 + b) * 3 + k] = v;
    M.c[(b * 3 + a) * 3 + k] = -v;
  };
  set(0, 1, 2, 1.0);  // [X1,X2] = Z
  set(1, 2, 0, s);    // [X2,Z] = s X1
  set(2, 0, 1, s);    // [Z,X1] = s X2
  detail::finish_constants(M);
  return M;
}

// ---- validations ---------------------------------------------------------

inline ValidationReport validate_clifford(const CliffordModule& cm) {
  ValidationReport r;
  double skew = 0, cliff = 0, orth = 0;
  const Mat I = Mat::Identity(cm.n, cm.n);
  for (int a = 0; a < cm.m; ++a) {
    skew = std::max(skew, (cm.J[a] + cm.J[a].transpose()).cwiseAbs().maxCoeff());
    orth = std::max(orth, (cm.J[a].transpose() * cm.J[a] - I).cwiseAbs().maxCoeff());
    for (int b = 0; b < cm.m; ++b) {
      Mat anti = cm.J[a] * cm.J[b] + cm.J[b] * cm.J[a] + (a == b ? 2.0 : 0.0) * I;
      cliff = std::max(cliff, anti.cwiseAbs().maxCoeff());
    }
  }
  r.add("skew", skew, 1e-12);
  r.add("clifford_relations", cliff, 1e-12);
  r.add("orthogonal", orth, 1e-12);
  return r;
}

inline ValidationReport validate_htype(const std::vector<Mat>& J, std::uint64_t seed = 7) {
  ValidationReport r;
  const int m = static_cast<int>(J.size());
  const int n = static_cast<int>(J[0].rows());
  const Mat I = Mat::Identity(n, n);
  double worst = 0;
  std::optional<std::vector<double>> wit;
  for (const auto& z : unit_samples(m, 20, seed)) {
    const Mat Jz = j_combination(J, z);
    const double res = (Jz * Jz + z.squaredNorm() * I).norm();
    if (!wit || res > worst) {
      worst = std::max(worst, res);
      wit = to_std(z);
    }
  }
  r.add("htype_condition", worst, 1e-12, wit);
  return r;
}

inline ValidationReport validate_htype(const HTypeModel& M, std::uint64_t seed = 7) { return validate_htype(M.J, seed); }

inline ValidationReport validate_j2(const std::vector<Mat>& J, std::uint64_t seed = 11) {
  ValidationReport r;
  const int m = static_cast<int>(J.size());
  const int n = static_cast<int>(J[0].rows());
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) pairs.emplace_back(Vec::Unit(m, a), Vec::Unit(m, b));
  if (m >= 2) {
    Rng rng(seed);
    for (int i = 0; i < 20; ++i) {
      Vec z = rng.unit_vec(m);
      Vec w = rng.unit_vec(m);
      w -= w.dot(z) * z;
      if (w.norm() < 1e-6) continue;
      pairs.emplace_back(z, w / w.norm());
    }
  }
  double worst = 0;
  std::optional<std::vector<double>> wit;
  const auto xs = unit_samples(n, 20, seed + 1);
  for (const auto& [z, w] : pairs) {
    const Mat Jz = j_combination(J, z), Jw = j_combination(J, w);
    for (const auto& x : xs) {
      Mat S(n, m);
      for (int a = 0; a < m; ++a) S.col(a) = J[a] * x;
      const Mat Q = orthonormalize(S);
      const Vec v = Jz * (Jw * x);
      const double res = (v - Q * (Q.transpose() * v)).norm();
      if (res > worst) {
        worst = res;
        wit = to_std(x);
      }
    }
  }
  r.add("j2_condition", worst, 1e-10, wit);
  return r;
}

inline ValidationReport validate_j2(const HTypeModel& M, std::uint64_t seed = 11) { return validate_j2(M.J, seed); }

// bracket antisymmetry, Jacobi identity, frame orthonormality (by construction)
inline ValidationReport validate_structure(const HTypeModel& M) {
  ValidationReport r;
  const int N = M.N();
  double anti = 0, jac = 0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int k = 0; k < N; ++k) anti = std::max(anti, std::abs(M.C(a, b, k) + M.C(b, a, k)));
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int cc = 0; cc < N; ++cc) {
        const Vec ea = Vec::Unit(N, a), eb = Vec::Unit(N, b), ec = Vec::Unit(N, cc);
        const Vec s = M.bracket(ea, M.bracket(eb, ec)) + M.bracket(eb, M.bracket(ec, ea)) +
                      M.bracket(ec, M.bracket(ea, eb));
        jac = std::max(jac, s.cwiseAbs().maxCoeff());
      }
  r.add("bracket_antisymmetry", anti, 0.0);
  r.add("jacobi_identity", jac, 1e-12);
  if (M.kind != ModelKind::SU2) {
    double leak = 0;
    for (int i = 0; i < M.n; ++i)
      for (int j = 0; j < M.n; ++j)
        for (int k = 0; k < M.n; ++k) leak = std::max(leak, std::abs(M.C(i, j, k)));
    r.add("horizontal_brackets_vertical", leak, 0.0);
  }
  return r;
}

}  // namespace htype
