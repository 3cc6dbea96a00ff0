#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace htype {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorCode {
  InadmissibleDimensions,
  BadParameter,
  ChartOverflow,
  NoConvergence,
  ConjugateEndpoints,
  DegenerateGenerator,
  DimensionEmpty,
  DomainExceeded,
  ConfigError,
  ModelError,
  IoError
};

inline const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InadmissibleDimensions: return "InadmissibleDimensions";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::ChartOverflow: return "ChartOverflow";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ConjugateEndpoints: return "ConjugateEndpoints";
    case ErrorCode::DegenerateGenerator: return "DegenerateGenerator";
    case ErrorCode::DimensionEmpty: return "DimensionEmpty";
    case ErrorCode::DomainExceeded: return "DomainExceeded";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ModelError: return "ModelError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// splitmix64-seeded xoshiro256**; fixed algorithm so samples do not depend on the
// standard library's distribution implementations
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& s : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      std::uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      s = x ^ (x >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec normal_vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  Vec unit_vec(int d) {
    Vec v = normal_vec(d);
    double nv = v.norm();
    while (nv < 1e-12) {
      v = normal_vec(d);
      nv = v.norm();
    }
    return v / nv;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// basis vectors followed by `extra` fixed-seed random unit vectors
inline std::vector<Vec> unit_samples(int d, int extra, std::uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(d + extra);
  for (int i = 0; i < d; ++i) out.push_back(Vec::Unit(d, i));
  Rng rng(seed);
  for (int i = 0; i < extra; ++i) out.push_back(rng.unit_vec(d));
  return out;
}

// Low-discrepancy directions on S^{d-1}: equispaced circle for d = 2, the
// Fibonacci lattice for d = 3, seeded normal deviates otherwise.
inline std::vector<Vec> sphere_directions(int d, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  if (d <= 0 || count <= 0) return out;
  out.reserve(count);
  if (d == 1) {
    for (int i = 0; i < count; ++i) out.push_back(Vec::Constant(1, (i % 2 == 0) ? 1.0 : -1.0));
    return out;
  }
  if (d == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = 2.0 * M_PI * (i + 0.5) / count;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
    return out;
  }
  if (d == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * i;
      Vec v(3);
      v << rr * std::cos(a), rr * std::sin(a), z;
      out.push_back(v);
    }
    return out;
  }
  Rng rng(seed);
  for (int i = 0; i < count; ++i) out.push_back(rng.unit_vec(d));
  return out;
}

// Gram-Schmidt on columns, dropping those whose residual norm falls below tol
inline Mat orthonormalize(const Mat& cols, double tol = 1e-9) {
  std::vector<Vec> kept;
  for (int j = 0; j < cols.cols(); ++j) {
    Vec v = cols.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : kept) v -= q.dot(v) * q;
    const double nv = v.norm();
    if (nv > tol) kept.push_back(v / nv);
  }
  Mat out(cols.rows(), static_cast<int>(kept.size()));
  for (int j = 0; j < static_cast<int>(kept.size()); ++j) out.col(j) = kept[j];
  return out;
}

// orthonormal basis of the orthogonal complement of span(cols) inside span(ambient)
inline Mat complement_in(const Mat& ambient, const Mat& cols, double tol = 1e-9) {
  Mat both(ambient.rows(), cols.cols() + ambient.cols());
  both << cols, ambient;
  Mat q = orthonormalize(both, tol);
  const int k = orthonormalize(cols, tol).cols();
  return q.rightCols(q.cols() - k);
}

}  // namespace htype
