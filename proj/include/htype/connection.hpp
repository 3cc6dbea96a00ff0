#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "htype/core.hpp"
#include "htype/model.hpp"
#include "htype/report.hpp"

namespace htype {

enum class TableLabel { Bott, HatEps, AdjointEps, LeviCivitaEps, Custom };

inline const char* table_name(TableLabel l) {
  switch (l) {
    case TableLabel::Bott: return "Bott";
    case TableLabel::HatEps: return "HatEps";
    case TableLabel::AdjointEps: return "AdjointEps";
    case TableLabel::LeviCivitaEps: return "LeviCivitaEps";
    case TableLabel::Custom: return "Custom";
  }
  return "?";
}

// frame-constant connection: (nabla_{e_a} e_b)^c at (a*N + b)*N + c
struct ConnectionTable {
  int N = 0;
  std::vector<double> gamma;
  std::optional<double> epsilon;
  TableLabel label = TableLabel::Custom;

  double G(int a, int b, int c) const { return gamma[(a * N + b) * N + c]; }
  double& G(int a, int b, int c) { return gamma[(a * N + b) * N + c]; }

  // nabla_X Y for frame-constant X, Y
  Vec apply(const Vec& X, const Vec& Y) const {
    Vec out = Vec::Zero(N);
    for (int a = 0; a < N; ++a) {
      if (X[a] == 0.0) continue;
      for (int b = 0; b < N; ++b) {
        const double xy = X[a] * Y[b];
        if (xy == 0.0) continue;
        const double* g = &gamma[(a * N + b) * N];
        for (int c = 0; c < N; ++c) out[c] += xy * g[c];
      }
    }
    return out;
  }

  // matrix of Y -> nabla_X Y
  Mat along(const Vec& X) const {
    Mat A = Mat::Zero(N, N);
    for (int a = 0; a < N; ++a) {
      if (X[a] == 0.0) continue;
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < N; ++c) A(c, b) += X[a] * G(a, b, c);
    }
    return A;
  }
};

// dense bilinear map S(e_a, e_b) = sum_c S[(a*N+b)*N+c] e_c
struct Bilinear {
  int N = 0;
  std::vector<double> s;

  Vec operator()(const Vec& X, const Vec& Y) const {
    Vec out = Vec::Zero(N);
    for (int a = 0; a < N; ++a) {
      if (X[a] == 0.0) continue;
      for (int b = 0; b < N; ++b) {
        const double xy = X[a] * Y[b];
        if (xy == 0.0) continue;
        const double* p = &s[(a * N + b) * N];
        for (int c = 0; c < N; ++c) out[c] += xy * p[c];
      }
    }
    return out;
  }
};

inline Vec lie_bracket(const HTypeModel& M, const Vec& X, const Vec& Y) { return M.bracket(X, Y); }

inline Vec proj_h(const HTypeModel& M, const Vec& X) {
  Vec Y = X;
  Y.tail(M.m).setZero();
  return Y;
}
inline Vec proj_v(const HTypeModel& M, const Vec& X) {
  Vec Y = X;
  Y.head(M.n).setZero();
  return Y;
}

// <X, Y>_eps
inline double inner(const HTypeModel& M, double eps, const Vec& X, const Vec& Y) {
  return X.head(M.n).dot(Y.head(M.n)) + X.tail(M.m).dot(Y.tail(M.m)) / eps;
}
inline double inner_g(const Vec& X, const Vec& Y) { return X.dot(Y); }

// A tensor of the splitting: <A_X Y, W> = 1/2 (L_{X_V} g)(Y_H, W_H) + 1/2 (L_{X_H} g)(Y_V, W_V)
// returned as (A_{e_a} e_b)^c
inline std::vector<double> a_tensor(const HTypeModel& M) {
  const int N = M.N();
  std::vector<double> A(static_cast<size_t>(N) * N * N, 0.0);
  auto lie_g = [&](int x, int y, int w) { return -M.C(x, y, w) - M.C(x, w, y); };
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        double v = 0;
        if (!M.horizontal(a) && M.horizontal(b) && M.horizontal(c)) v = 0.5 * lie_g(a, b, c);
        if (M.horizontal(a) && !M.horizontal(b) && !M.horizontal(c)) v = 0.5 * lie_g(a, b, c);
        A[(a * N + b) * N + c] = v;
      }
  return A;
}

// Koszul formula for a frame orthonormal w.r.t. diag(g) scaled into an orthonormal one
inline std::vector<double> levi_civita_gamma(const HTypeModel& M, const Vec& g) {
  const int N = M.N();
  // orthonormal frame f_a = e_a / sqrt(g_a); [f_a, f_b] = sum_k c_ab^k sqrt(g_k)/sqrt(g_a g_b) f_k
  Vec sg = g.cwiseSqrt();
  auto cf = [&](int a, int b, int k) { return M.C(a, b, k) * sg[k] / (sg[a] * sg[b]); };
  std::vector<double> out(static_cast<size_t>(N) * N * N, 0.0);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        // <nabla_{f_a} f_b, f_c> = 1/2 (c_ab^c - c_bc^a + c_ca^b)
        const double v = 0.5 * (cf(a, b, c) - cf(b, c, a) + cf(c, a, b));
        // back to the e-frame: nabla_{e_a} e_b = sg_a sg_b nabla_{f_a} f_b, f_c = e_c / sg_c
        out[(a * N + b) * N + c] = v * sg[a] * sg[b] / sg[c];
      }
  return out;
}

inline ConnectionTable bott_table(const HTypeModel& M) {
  const int N = M.N();
  ConnectionTable T;
  T.N = N;
  T.label = TableLabel::Bott;
  T.gamma.assign(static_cast<size_t>(N) * N * N, 0.0);
  const auto lc = levi_civita_gamma(M, Vec::Ones(N));
  const auto A = a_tensor(M);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        const bool ha = M.horizontal(a), hb = M.horizontal(b), hc = M.horizontal(c);
        const size_t i = (a * N + b) * N + c;
        double v = 0;
        if (ha && hb) v = hc ? lc[i] : 0.0;
        else if (!ha && hb) v = hc ? M.C(a, b, c) + A[i] : 0.0;
        else if (ha && !hb) v = hc ? 0.0 : M.C(a, b, c) + A[i];
        else v = hc ? 0.0 : lc[i];
        T.gamma[i] = v;
      }
  return T;
}

inline double a_tensor_max(const HTypeModel& M) {
  double mx = 0;
  for (double v : a_tensor(M)) mx = std::max(mx, std::abs(v));
  return mx;
}

// torsion tensor of a frame-constant connection
inline Bilinear torsion_tensor(const HTypeModel& M, const ConnectionTable& T) {
  const int N = M.N();
  Bilinear B{N, std::vector<double>(static_cast<size_t>(N) * N * N)};
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) B.s[(a * N + b) * N + c] = T.G(a, b, c) - T.G(b, a, c) - M.C(a, b, c);
  return B;
}

inline Vec torsion(const HTypeModel& M, const Vec& X, const Vec& Y) {
  return torsion_tensor(M, bott_table(M))(X, Y);
}

// J_Z X with <J_Z X, Y>_{g_eps} = <Z, T(X,Y)>_{g_eps}; eps = 1 gives J
inline Bilinear j_eps_tensor(const HTypeModel& M, const Bilinear& Tor, double eps) {
  const int N = M.N();
  const Vec g = M.metric(eps);
  Bilinear B{N, std::vector<double>(static_cast<size_t>(N) * N * N, 0.0)};
  // (J_{e_z} e_x)^c = g_z / g_c * T(e_x, e_c)^z
  for (int z = 0; z < N; ++z)
    for (int x = 0; x < N; ++x)
      for (int c = 0; c < N; ++c) B.s[(z * N + x) * N + c] = g[z] / g[c] * Tor.s[(x * N + c) * N + z];
  return B;
}

inline ConnectionTable hat_eps_table(const HTypeModel& M, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::BadParameter, "hat_eps_table needs eps > 0");
  ConnectionTable T = bott_table(M);
  const Bilinear Je = j_eps_tensor(M, torsion_tensor(M, T), eps);
  for (size_t i = 0; i < T.gamma.size(); ++i) T.gamma[i] += Je.s[i];
  T.epsilon = eps;
  T.label = TableLabel::HatEps;
  return T;
}

inline ConnectionTable adjoint_eps_table(const HTypeModel& M, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::BadParameter, "adjoint_eps_table needs eps > 0");
  const ConnectionTable B = bott_table(M);
  const Bilinear Tor = torsion_tensor(M, B);
  const Bilinear Je = j_eps_tensor(M, Tor, eps);
  const int N = M.N();
  ConnectionTable T = B;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        T.G(a, b, c) = B.G(a, b, c) - Tor.s[(a * N + b) * N + c] + Je.s[(b * N + a) * N + c];
  T.epsilon = eps;
  T.label = TableLabel::AdjointEps;
  return T;
}

// D^_X Y = D_X Y - Tor(X,Y) = D_Y X + [X,Y]
inline ConnectionTable adjoint_of(const HTypeModel& M, const ConnectionTable& D) {
  ConnectionTable T = D;
  const int N = M.N();
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) T.G(a, b, c) = D.G(b, a, c) + M.C(a, b, c);
  T.label = TableLabel::Custom;
  return T;
}

inline ConnectionTable levi_civita_table(const HTypeModel& M, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::BadParameter, "levi_civita_table needs eps > 0");
  ConnectionTable T;
  T.N = M.N();
  T.gamma = levi_civita_gamma(M, M.metric(eps));
  T.epsilon = eps;
  T.label = TableLabel::LeviCivitaEps;
  return T;
}

// Riemann tensor R(e_a,e_b)e_c = sum_d R[((a*N+b)*N+c)*N+d] e_d
struct CurvatureTensor {
  int N = 0;
  std::vector<double> r;

  Vec operator()(const Vec& X, const Vec& Y, const Vec& Z) const {
    Vec out = Vec::Zero(N);
    for (int a = 0; a < N; ++a) {
      if (X[a] == 0.0) continue;
      for (int b = 0; b < N; ++b) {
        const double xy = X[a] * Y[b];
        if (xy == 0.0) continue;
        for (int c = 0; c < N; ++c) {
          const double xyz = xy * Z[c];
          if (xyz == 0.0) continue;
          const double* p = &r[((static_cast<size_t>(a) * N + b) * N + c) * N];
          for (int d = 0; d < N; ++d) out[d] += xyz * p[d];
        }
      }
    }
    return out;
  }
};

inline CurvatureTensor curvature_tensor(const HTypeModel& M, const ConnectionTable& T) {
  const int N = M.N();
  CurvatureTensor R{N, std::vector<double>(static_cast<size_t>(N) * N * N * N, 0.0)};
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        for (int f = 0; f < N; ++f) {
          double v = 0;
          for (int d = 0; d < N; ++d) {
            v += T.G(b, c, d) * T.G(a, d, f) - T.G(a, c, d) * T.G(b, d, f);
            v -= M.C(a, b, d) * T.G(d, c, f);
          }
          R.r[((static_cast<size_t>(a) * N + b) * N + c) * N + f] = v;
        }
  return R;
}

inline Vec curvature(const HTypeModel& M, const ConnectionTable& T, const Vec& X, const Vec& Y, const Vec& Z) {
  return curvature_tensor(M, T)(X, Y, Z);
}

// (nabla_X S)(Y, Z) for frame-constant arguments
inline Vec cov_deriv(const ConnectionTable& D, const Bilinear& S, const Vec& X, const Vec& Y, const Vec& Z) {
  return D.apply(X, S(Y, Z)) - S(D.apply(X, Y), Z) - S(Y, D.apply(X, Z));
}

// metric compatibility residual w.r.t. diag(g)
inline double metric_residual(const ConnectionTable& T, const Vec& g) {
  const int N = T.N;
  double mx = 0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) mx = std::max(mx, std::abs(g[c] * T.G(a, b, c) + g[b] * T.G(a, c, b)));
  return mx;
}

// max |<Tor(a,b), c>_g + <Tor(a,c), b>_g|
inline double skew_torsion_residual(const HTypeModel& M, const ConnectionTable& T, const Vec& g) {
  const Bilinear Tor = torsion_tensor(M, T);
  const int N = M.N();
  double mx = 0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        const double abc = g[c] * Tor.s[(a * N + b) * N + c];
        const double acb = g[b] * Tor.s[(a * N + c) * N + b];
        mx = std::max(mx, std::abs(abc + acb));
      }
  return mx;
}

// the J of the model as a tensor (eps = 1)
inline Bilinear j_tensor(const HTypeModel& M) { return j_eps_tensor(M, torsion_tensor(M, bott_table(M)), 1.0); }

inline Vec jmap(const HTypeModel& M, const Vec& Z, const Vec& X) { return j_tensor(M)(Z, X); }

}  // namespace htype
