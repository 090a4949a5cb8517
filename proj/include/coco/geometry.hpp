#pragma once

// Exterior conformal maps Psi(w) = w + a_0 + a_1/w + ... + a_K/w^K, their
// Faber polynomials and Grunsky coefficients, plus a small library of shapes.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "coco/errors.hpp"

namespace coco {

using cplx = std::complex<double>;
using Vec2 = std::array<double, 2>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Relative depth below the conformal circle at which evaluation is still
/// accepted (boundary offsets for the interior side).
inline constexpr double inner_annulus = 1e-3;

class ConformalMap {
public:
  ConformalMap() = default;

  /// coeffs[k] is a_k, k = 0..K.
  ConformalMap(double gamma, std::vector<cplx> coeffs)
      : gamma_(gamma), coeffs_(std::move(coeffs)) {
    if (!(gamma_ > 0.0) || !std::isfinite(gamma_))
      throw DegenerateMapError("conformal radius must be positive and finite");
    for (const auto &a : coeffs_)
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
        throw DegenerateMapError("non-finite map coefficient");
    while (!coeffs_.empty() && coeffs_.back() == cplx{})
      coeffs_.pop_back();
  }

  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] double rho0() const { return std::log(gamma_); }
  [[nodiscard]] const std::vector<cplx> &coeffs() const { return coeffs_; }

  /// Highest k with a_k != 0 (0 for the pure translation/identity map).
  [[nodiscard]] int degree() const {
    return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1;
  }

  [[nodiscard]] cplx a(int k) const {
    return (k >= 0 && k < static_cast<int>(coeffs_.size())) ? coeffs_[k]
                                                            : cplx{};
  }

  [[nodiscard]] cplx operator()(cplx w) const {
    check_domain(w);
    return psi_unchecked(w);
  }

  [[nodiscard]] cplx derivative(cplx w) const {
    check_domain(w);
    return psi_prime_unchecked(w);
  }

  /// Boundary point Psi(gamma e^{i theta}).
  [[nodiscard]] cplx boundary(double theta) const {
    return psi_unchecked(std::polar(gamma_, theta));
  }

  [[nodiscard]] cplx psi_unchecked(cplx w) const {
    // Horner in 1/w over a_K..a_1, then the a_0 and identity terms.
    const cplx t = 1.0 / w;
    cplx acc{};
    for (int k = degree(); k >= 1; --k)
      acc = (acc + coeffs_[k]) * t;
    return w + a(0) + acc;
  }

  [[nodiscard]] cplx psi_prime_unchecked(cplx w) const {
    const cplx t = 1.0 / w;
    cplx acc{};
    for (int k = degree(); k >= 1; --k)
      acc = (acc + static_cast<double>(k) * coeffs_[k]) * t;
    return 1.0 - acc * t;
  }

  void check_domain(cplx w) const {
    if (!(std::abs(w) >= gamma_ * (1.0 - inner_annulus)))
      throw DomainError("|w| below the conformal radius annulus");
  }

private:
  double gamma_ = 1.0;
  std::vector<cplx> coeffs_;
};

inline cplx psi_eval(const ConformalMap &map, cplx w) { return map(w); }

inline cplx psi_prime(const ConformalMap &map, cplx w) {
  return map.derivative(w);
}

/// h(rho, theta) = e^rho |Psi'(e^{rho + i theta})|.
inline double scale_factor(const ConformalMap &map, double rho, double theta) {
  const cplx w = std::polar(std::exp(rho), theta);
  const double d = std::abs(map.derivative(w));
  if (!(d > 1e-14))
    throw DegenerateMapError("vanishing Psi' in scale factor");
  return std::exp(rho) * d;
}

/// Unit exterior normal at Psi(gamma e^{i theta}): direction of dPsi/drho.
inline Vec2 boundary_normal(const ConformalMap &map, double theta) {
  const cplx w = std::polar(map.gamma(), theta);
  const cplx v = w * map.psi_prime_unchecked(w);
  const double len = std::abs(v);
  if (!(len > 1e-14))
    throw DegenerateMapError("vanishing Psi' at boundary normal");
  return {v.real() / len, v.imag() / len};
}

namespace detail {

inline double cross(cplx a, cplx b) {
  return a.real() * b.imag() - a.imag() * b.real();
}

inline bool segments_intersect(cplx p1, cplx p2, cplx q1, cplx q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 &&
         d2 != 0 && d3 != 0 && d4 != 0;
}

} // namespace detail

/// Polygonal self-intersection test of the sampled boundary curve.
inline bool is_simple_curve(const ConformalMap &map, int samples = 2048) {
  std::vector<cplx> pts(samples);
  for (int j = 0; j < samples; ++j)
    pts[j] = map.boundary(two_pi * j / samples);
  for (int i = 0; i < samples; ++i) {
    const cplx p1 = pts[i], p2 = pts[(i + 1) % samples];
    // Adjacent segments share an endpoint; skip them.
    for (int j = i + 2; j < samples; ++j) {
      if (i == 0 && j == samples - 1)
        continue;
      if (detail::segments_intersect(p1, p2, pts[j], pts[(j + 1) % samples]))
        return false;
    }
  }
  return true;
}

/// Throws DegenerateMapError unless the map is conformal on the sampled
/// boundary and the boundary curve is simple.
inline void validate_map(const ConformalMap &map, int samples = 2048) {
  for (int j = 0; j < samples; ++j) {
    const cplx w = std::polar(map.gamma(), two_pi * j / samples);
    if (!(std::abs(map.psi_prime_unchecked(w)) > 1e-12))
      throw DegenerateMapError("Psi' vanishes on |w| = gamma");
  }
  if (!is_simple_curve(map, samples))
    throw DegenerateMapError("boundary curve self-intersects");
}

/// Winding number of the sampled boundary curve around z (nonzero = inside).
inline int winding_number(const ConformalMap &map, cplx z,
                          int samples = 2048) {
  double total = 0.0;
  cplx prev = map.boundary(0.0) - z;
  for (int j = 1; j <= samples; ++j) {
    const cplx cur = map.boundary(two_pi * j / samples) - z;
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / two_pi));
}

// ---------------------------------------------------------------------------
// Faber polynomials and Grunsky coefficients

struct FaberTable {
  int order = 0;
  /// Row m-1 holds the coefficients of F_m in powers z^0..z^M.
  std::vector<std::vector<cplx>> faber_coeffs;
  /// grunsky[m-1][n-1] = c_mn, m, n = 1..M.
  std::vector<std::vector<cplx>> grunsky;
  /// max |c_mn| over n in (M, M+K] relative to max |c_mn| over n <= M.
  double tail_ratio = 0.0;

  [[nodiscard]] cplx c(int m, int n) const { return grunsky[m - 1][n - 1]; }

  /// F_m(z) by Horner; F_0 = 1.
  [[nodiscard]] cplx eval(int m, cplx z) const {
    if (m == 0)
      return 1.0;
    const auto &f = faber_coeffs[m - 1];
    cplx acc{};
    for (int k = m; k >= 0; --k)
      acc = acc * z + f[k];
    return acc;
  }

  [[nodiscard]] cplx eval_derivative(int m, cplx z) const {
    if (m == 0)
      return 0.0;
    const auto &f = faber_coeffs[m - 1];
    cplx acc{};
    for (int k = m; k >= 1; --k)
      acc = acc * z + static_cast<double>(k) * f[k];
    return acc;
  }
};

namespace detail {

/// Power series in t truncated to `len` terms: s[j] is the t^j coefficient.
using Series = std::vector<cplx>;

inline Series series_mul(const Series &a, const Series &b, std::size_t len) {
  Series out(len);
  for (std::size_t i = 0; i < std::min(a.size(), len); ++i) {
    if (a[i] == cplx{})
      continue;
    for (std::size_t j = 0; j < b.size() && i + j < len; ++j)
      out[i + j] += a[i] * b[j];
  }
  return out;
}

inline Series series_inverse(const Series &a, std::size_t len) {
  Series out(len);
  out[0] = 1.0 / a[0];
  for (std::size_t j = 1; j < len; ++j) {
    cplx acc{};
    for (std::size_t i = 1; i <= j && i < a.size(); ++i)
      acc += a[i] * out[j - i];
    out[j] = -acc / a[0];
  }
  return out;
}

} // namespace detail

/// Faber coefficients from the generating function
/// Psi'(w)/(Psi(w) - z) = sum_m F_m(z) w^{-m-1}.
/// Expanding 1/(Psi - z) = sum_k z^k Psi^{-k-1} gives
/// [z^k] F_m = [t^{m-k}] Psi'(1/t) U(t)^{-(k+1)} with Psi(w) = w U(1/w).
inline std::vector<std::vector<cplx>> faber_generating(const ConformalMap &map,
                                                       int M) {
  const auto len = static_cast<std::size_t>(M + 1);
  const int K = map.degree();
  detail::Series U(len), V(len);
  U[0] = 1.0;
  for (int k = 0; k <= K && k + 1 < M + 1; ++k)
    U[k + 1] = map.a(k);
  V[0] = 1.0;
  for (int k = 1; k <= K && k + 1 < M + 1; ++k)
    V[k + 1] = -static_cast<double>(k) * map.a(k);

  const detail::Series Uinv = detail::series_inverse(U, len);
  std::vector<std::vector<cplx>> rows(M, std::vector<cplx>(M + 1));
  // power = U^{-(k+1)} times V, updated incrementally in k.
  detail::Series power = detail::series_mul(V, Uinv, len);
  for (int k = 0; k <= M; ++k) {
    for (int m = std::max(k, 1); m <= M; ++m)
      rows[m - 1][k] = power[m - k];
    power = detail::series_mul(power, Uinv, len);
  }
  return rows;
}

/// Classical three-term-type recursion
/// F_{m+1} = (z - a_0) F_m - sum_{k=1}^m a_k F_{m-k} - m a_m, F_0 = 1.
inline std::vector<std::vector<cplx>> faber_recursion(const ConformalMap &map,
                                                      int M) {
  std::vector<std::vector<cplx>> F(M + 1, std::vector<cplx>(M + 1));
  F[0][0] = 1.0;
  for (int m = 0; m < M; ++m) {
    auto &next = F[m + 1];
    for (int j = 0; j <= m; ++j) {
      next[j + 1] += F[m][j];
      next[j] -= map.a(0) * F[m][j];
    }
    for (int k = 1; k <= m; ++k) {
      const cplx ak = map.a(k);
      if (ak == cplx{})
        continue;
      for (int j = 0; j <= m - k; ++j)
        next[j] -= ak * F[m - k][j];
    }
    next[0] -= static_cast<double>(m) * map.a(m);
  }
  F.erase(F.begin());
  return F;
}

namespace detail {

/// Laurent series sum_{p = top}^{top - size + 1} x_p w^p stored highest first.
struct Laurent {
  int top = 0;
  std::vector<cplx> c;

  [[nodiscard]] cplx at(int p) const {
    const int idx = top - p;
    return (idx >= 0 && idx < static_cast<int>(c.size())) ? c[idx] : cplx{};
  }
  cplx &ref(int p) { return c[top - p]; }
};

} // namespace detail

/// Grunsky coefficients c_mn, 1 <= m, n <= M, obtained by composing the
/// Faber recursion with the Laurent series of Psi (working depth 2M + K).
inline void grunsky_build(const ConformalMap &map, FaberTable &table) {
  const int M = table.order;
  const int K = map.degree();
  const int depth = 2 * M + K;
  const int top = M;
  const std::size_t size = static_cast<std::size_t>(top + depth + 1);

  auto zero = [&] { return detail::Laurent{top, std::vector<cplx>(size)}; };
  std::vector<detail::Laurent> G;
  G.reserve(M + 1);
  G.push_back(zero());
  G[0].ref(0) = 1.0;

  for (int m = 0; m < M; ++m) {
    detail::Laurent next = zero();
    const auto &cur = G[m];
    // (Psi(w) - a_0) * cur: shift by w plus sum_k a_k w^{-k}.
    for (int p = top - 1; p >= -depth; --p) {
      const cplx x = cur.at(p);
      if (x == cplx{})
        continue;
      next.ref(p + 1) += x;
      for (int k = 1; k <= K && p - k >= -depth; ++k)
        next.ref(p - k) += map.a(k) * x;
    }
    for (int k = 1; k <= m; ++k) {
      const cplx ak = map.a(k);
      if (ak == cplx{})
        continue;
      for (std::size_t i = 0; i < size; ++i)
        next.c[i] -= ak * G[m - k].c[i];
    }
    next.ref(0) -= static_cast<double>(m) * map.a(m);
    G.push_back(std::move(next));
  }

  table.grunsky.assign(M, std::vector<cplx>(M));
  double lead = 0.0, tail = 0.0;
  for (int m = 1; m <= M; ++m) {
    for (int n = 1; n <= M; ++n) {
      table.grunsky[m - 1][n - 1] = G[m].at(-n);
      lead = std::max(lead, std::abs(G[m].at(-n)));
    }
    for (int n = M + 1; n <= M + K; ++n)
      tail = std::max(tail, std::abs(G[m].at(-n)));
  }
  table.tail_ratio = lead > 0.0 ? tail / lead : 0.0;
}

/// Builds F_1..F_M (generating-function expansion, cross-checked against the
/// recursion) and the Grunsky matrix.
inline FaberTable faber_build(const ConformalMap &map, int M,
                              double tol = 1e-10) {
  if (M < 1)
    throw ConstructionError("Faber order must be >= 1");
  FaberTable table;
  table.order = M;
  table.faber_coeffs = faber_generating(map, M);

  const auto rec = faber_recursion(map, M);
  for (int m = 0; m < M; ++m) {
    double scale = 1.0;
    for (const auto &v : table.faber_coeffs[m])
      scale = std::max(scale, std::abs(v));
    for (int k = 0; k <= M; ++k) {
      if (std::abs(rec[m][k] - table.faber_coeffs[m][k]) > tol * scale) {
        std::ostringstream os;
        os << "Faber recursion disagrees with generating function at F_"
           << m + 1 << ", z^" << k;
        throw ConstructionError(os.str());
      }
    }
  }
  grunsky_build(map, table);
  return table;
}

/// Throws when the Grunsky tail beyond the truncation is not negligible.
inline void require_grunsky_tail(const FaberTable &table, double tol = 1e-12) {
  if (table.tail_ratio > tol) {
    std::ostringstream os;
    os << "Grunsky tail ratio " << table.tail_ratio
       << " exceeds tolerance; increase the truncation order (M = "
       << table.order << ")";
    throw ConstructionError(os.str());
  }
}

// ---------------------------------------------------------------------------
// Shape library

inline ConformalMap make_map(double gamma,
                             const std::vector<std::pair<int, cplx>> &terms) {
  int K = 0;
  for (const auto &[k, v] : terms) {
    if (k < 0)
      throw ConfigError("map coefficient index must be >= 0");
    K = std::max(K, k);
  }
  std::vector<cplx> coeffs(K + 1);
  for (const auto &[k, v] : terms)
    coeffs[k] += v;
  return ConformalMap(gamma, std::move(coeffs));
}

inline const std::vector<std::string> &library_shape_names() {
  static const std::vector<std::string> names{"disk",   "ellipse", "square",
                                              "fish",   "kite",    "spike"};
  return names;
}

/// Accepts "disk", "square", "fish", "kite", "spike", and "ellipse" or
/// "ellipse(q)" (default q = 0.3, |q| < 1).
inline ConformalMap shape_library(std::string_view name) {
  if (name == "disk")
    return ConformalMap(1.0, {});
  if (name == "square")
    return make_map(1.0, {{3, 0.1}});
  if (name == "fish")
    return make_map(1.0, {{1, 0.25}, {2, 0.125}, {3, 0.1}});
  if (name == "kite")
    return make_map(1.0, {{1, 0.1},
                          {2, 0.25},
                          {3, -0.05},
                          {4, 0.05},
                          {5, -0.04},
                          {6, 0.02}});
  if (name == "spike")
    return make_map(1.0, {{9, -0.1}});
  if (name.starts_with("ellipse")) {
    double q = 0.3;
    if (name.size() > 7) {
      if (name[7] != '(' || name.back() != ')')
        throw ConfigError("expected ellipse(q)");
      const std::string arg(name.substr(8, name.size() - 9));
      try {
        std::size_t used = 0;
        q = std::stod(arg, &used);
        if (used != arg.size())
          throw ConfigError("bad ellipse parameter");
      } catch (const std::logic_error &) {
        throw ConfigError("bad ellipse parameter '" + arg + "'");
      }
    }
    if (!(std::abs(q) < 1.0))
      throw ConfigError("ellipse requires |q| < 1");
    return make_map(1.0, {{1, q}});
  }
  throw ConfigError("unknown shape '" + std::string(name) + "'");
}

} // namespace coco
