#pragma once

// Series solution of the imperfect-interface transmission problem: the
// interface density expansion, the block matrix system relating the
// scattering coefficients s to the background field, exterior field
// evaluation and neutrality metrics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coco/errors.hpp"
#include "coco/geometry.hpp"

namespace coco {

using CMat = Eigen::MatrixXcd;
using CRow = Eigen::RowVectorXcd;

// ---------------------------------------------------------------------------
// Interface density

/// Coefficients of the scale-factor weighted interface function
///   h(rho0, theta) p(Psi(w)) = p0 + sum_k (p_k w^k + conj(p_k) gamma^{2k} w^-k)
/// on |w| = gamma.
struct InterfaceDensity {
  double gamma = 1.0;
  double p0 = 0.0;
  std::vector<cplx> pk; // pk[k-1] = p_k

  InterfaceDensity() = default;
  InterfaceDensity(double gamma_, double p0_, std::vector<cplx> pk_ = {})
      : gamma(gamma_), p0(p0_), pk(std::move(pk_)) {}

  [[nodiscard]] int order() const { return static_cast<int>(pk.size()); }

  /// p_k for any integer k, using p_{-k} = conj(p_k) gamma^{2k}.
  [[nodiscard]] cplx coefficient(int k) const {
    if (k == 0)
      return p0;
    const int a = std::abs(k);
    if (a > order())
      return 0.0;
    return k > 0 ? pk[a - 1] : std::conj(pk[a - 1]) * std::pow(gamma, 2 * a);
  }

  /// Fourier coefficient p_k gamma^k (Hermitian in k).
  [[nodiscard]] cplx fourier(int k) const {
    if (k == 0)
      return p0;
    const int a = std::abs(k);
    if (a > order())
      return 0.0;
    const cplx v = pk[a - 1] * std::pow(gamma, a);
    return k > 0 ? v : std::conj(v);
  }

  /// v(theta) = h(rho0, theta) p(theta).
  [[nodiscard]] double weighted(double theta) const {
    double v = p0;
    double gk = 1.0;
    for (int k = 1; k <= order(); ++k) {
      gk *= gamma;
      v += 2.0 * (pk[k - 1] * gk * std::polar(1.0, k * theta)).real();
    }
    return v;
  }

  /// Pointwise interface function p(theta) = v(theta) / h(rho0, theta).
  [[nodiscard]] double pointwise(const ConformalMap &map, double theta) const {
    return weighted(theta) / scale_factor(map, map.rho0(), theta);
  }

  [[nodiscard]] double min_pointwise(const ConformalMap &map,
                                     int samples = 1024) const {
    double lo = INFINITY;
    for (int j = 0; j < samples; ++j)
      lo = std::min(lo, pointwise(map, two_pi * j / samples));
    return lo;
  }

  [[nodiscard]] bool admissible(const ConformalMap &map, double tol = 1e-8,
                                int samples = 1024) const {
    return min_pointwise(map, samples) >= -tol;
  }

  /// Flat real parameters (p0, Re p1, Im p1, ..., Re pn, Im pn).
  [[nodiscard]] std::vector<double> to_params() const {
    std::vector<double> x;
    x.reserve(1 + 2 * pk.size());
    x.push_back(p0);
    for (const auto &c : pk) {
      x.push_back(c.real());
      x.push_back(c.imag());
    }
    return x;
  }

  static InterfaceDensity from_params(double gamma, std::span<const double> x) {
    InterfaceDensity d;
    d.gamma = gamma;
    d.p0 = x[0];
    const std::size_t n = (x.size() - 1) / 2;
    d.pk.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      d.pk[k] = {x[1 + 2 * k], x[2 + 2 * k]};
    return d;
  }
};

/// Regularizer 2 pi gamma^2 |p0|^2 + 4 pi gamma^2 sum (1 + k^2) |p_k|^2.
inline double density_regularizer(const InterfaceDensity &d) {
  const double g2 = d.gamma * d.gamma;
  double acc = 0.0;
  for (int k = 1; k <= d.order(); ++k)
    acc += (1.0 + double(k) * k) * std::norm(d.pk[k - 1]);
  return two_pi * g2 * d.p0 * d.p0 + 2.0 * two_pi * g2 * acc;
}

struct DensityFit {
  InterfaceDensity density;
  /// ||p - p_fit|| / ||p|| in arc-length weighted L2 over the samples.
  double relative_error = 0.0;
};

/// Fits an order-n density to pointwise samples (theta_j, p_j) taken on a
/// uniform theta grid. The samples are weighted by h before the transform.
inline DensityFit density_from_pointwise(
    const ConformalMap &map, std::span<const std::pair<double, double>> samples,
    int n) {
  const int J = static_cast<int>(samples.size());
  if (n < 0)
    throw DomainError("density order must be >= 0");
  if (J < 2 * n + 1)
    throw DomainError("aliasing: need at least 2n+1 samples for order " +
                      std::to_string(n));
  const double dtheta = two_pi / J;
  for (int j = 1; j < J; ++j)
    if (std::abs(samples[j].first - samples[j - 1].first - dtheta) > 1e-9)
      throw DomainError("density samples must be uniformly spaced in theta");

  std::vector<double> h(J), v(J);
  for (int j = 0; j < J; ++j) {
    h[j] = scale_factor(map, map.rho0(), samples[j].first);
    v[j] = h[j] * samples[j].second;
  }
  InterfaceDensity d;
  d.gamma = map.gamma();
  d.pk.resize(n);
  for (int k = 0; k <= n; ++k) {
    cplx acc{};
    for (int j = 0; j < J; ++j)
      acc += v[j] * std::polar(1.0, -k * samples[j].first);
    acc /= double(J);
    if (k == 0)
      d.p0 = acc.real();
    else
      d.pk[k - 1] = acc / std::pow(map.gamma(), k);
  }

  double num = 0.0, den = 0.0;
  for (int j = 0; j < J; ++j) {
    const double fit = d.weighted(samples[j].first) / h[j];
    num += h[j] * (samples[j].second - fit) * (samples[j].second - fit);
    den += h[j] * samples[j].second * samples[j].second;
  }
  return {std::move(d), den > 0.0 ? std::sqrt(num / den) : std::sqrt(num)};
}

/// Density whose pointwise interface function is the constant c (to order n).
inline InterfaceDensity constant_density(const ConformalMap &map, double c,
                                         int n, int samples = 0) {
  const int J = samples > 0 ? samples : std::max(64, 8 * n + 8);
  std::vector<std::pair<double, double>> pts(J);
  for (int j = 0; j < J; ++j)
    pts[j] = {two_pi * j / J, c};
  return density_from_pointwise(map, pts, n).density;
}

// ---------------------------------------------------------------------------
// Background field

/// H(z) = Re sum_m alpha_m F_m(z); alpha[m-1] = alpha_m.
struct BackgroundField {
  std::vector<cplx> alpha;

  /// H(x) = a x1 + b x2, i.e. alpha_1 = a - i b.
  static BackgroundField linear(double a, double b) {
    return BackgroundField{{cplx(a, -b)}};
  }

  [[nodiscard]] double value(const FaberTable &faber, cplx z) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < alpha.size(); ++m)
      if (alpha[m] != cplx{})
        acc += (alpha[m] * faber.eval(static_cast<int>(m) + 1, z)).real();
    return acc;
  }

  /// Gradient of H at z as a 2-vector.
  [[nodiscard]] Vec2 gradient(const FaberTable &faber, cplx z) const {
    cplx d{};
    for (std::size_t m = 0; m < alpha.size(); ++m)
      if (alpha[m] != cplx{})
        d += alpha[m] * faber.eval_derivative(static_cast<int>(m) + 1, z);
    // grad Re f = (Re f', -Im f') for analytic f.
    return {d.real(), -d.imag()};
  }
};

// ---------------------------------------------------------------------------
// Matrix system

/// Default matrix truncation: max(40, 2n), raised to 12K for maps of degree K
/// whose Grunsky rows decay slowly.
inline int default_truncation(const ConformalMap &map, int n) {
  return std::max({40, 2 * n, 12 * map.degree()});
}

/// Density-independent blocks for a fixed map and truncation.
struct ShapeOperators {
  int N = 0;
  double gamma = 1.0;
  CMat C;
  /// (I - g^{-2N} conj(C) g^{-2N} C)^{-1}
  CMat Q;
  /// Q g^{-2N} conj(C)
  CMat QCbar;
  Eigen::VectorXd gpow; // gamma^n, n = 1..N
};

inline ShapeOperators shape_operators(const FaberTable &faber, double gamma,
                                      int N) {
  if (faber.order < N)
    throw AssemblyError("Faber order " + std::to_string(faber.order) +
                        " below truncation " + std::to_string(N));
  ShapeOperators ops;
  ops.N = N;
  ops.gamma = gamma;
  ops.C.resize(N, N);
  for (int m = 0; m < N; ++m)
    for (int n = 0; n < N; ++n)
      ops.C(m, n) = faber.c(m + 1, n + 1);
  ops.gpow.resize(N);
  for (int n = 0; n < N; ++n)
    ops.gpow(n) = std::pow(gamma, n + 1);

  const Eigen::VectorXd gm2 = ops.gpow.cwiseInverse().cwiseAbs2();
  const CMat Cbar = ops.C.conjugate();
  const CMat g2Cbar = gm2.asDiagonal() * Cbar;
  const CMat T = CMat::Identity(N, N) - g2Cbar * (gm2.asDiagonal() * ops.C);
  Eigen::PartialPivLU<CMat> lu(T);
  const double rc = lu.rcond();
  if (!(rc > 1e-15))
    throw AssemblyError("I - g^-2N conj(C) g^-2N C is singular",
                        rc > 0 ? 1.0 / rc : INFINITY);
  ops.Q = lu.inverse();
  ops.QCbar = ops.Q * g2Cbar;
  return ops;
}

struct MatrixSystem {
  int N = 0;
  double sigma_c = 1.0, sigma_m = 1.0, gamma = 1.0;
  CMat A1, A2, B1, B2, Atilde1, Atilde2;
  CMat C, P_plus, P_minus;
  double cond_B2bar = 0.0, cond_schur = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

/// P+ = {q_{m+n}}, P- = {q_{m-n}} with q_k = p_k gamma^k (1-based m, n).
inline std::pair<CMat, CMat> density_blocks(const InterfaceDensity &d, int N) {
  CMat Pp(N, N), Pm(N, N);
  for (int m = 1; m <= N; ++m)
    for (int n = 1; n <= N; ++n) {
      Pp(m - 1, n - 1) = d.fourier(m + n);
      Pm(m - 1, n - 1) = d.fourier(m - n);
    }
  return {std::move(Pp), std::move(Pm)};
}

/// g^{-N} X g^{N}: entry (m, n) scaled by gamma^{n - m}.
inline CMat conj_scale(const CMat &X, const Eigen::VectorXd &g) {
  return g.cwiseInverse().asDiagonal() * X * g.asDiagonal();
}

inline void check_conductivities(double sc, double sm) {
  if (!(sc > 0.0) || !(sm > 0.0) || !std::isfinite(sc) || !std::isfinite(sm))
    throw ConfigError("conductivities must be positive and finite");
}

struct Blocks {
  CMat A1, A2, B1, B2;
};

inline Blocks build_blocks(const ShapeOperators &ops, const CMat &Pp,
                           const CMat &Pm, double sc, double sm) {
  const int N = ops.N;
  const auto &g = ops.gpow;
  const double dsig = sc - sm;
  Eigen::VectorXd nvec(N);
  for (int n = 0; n < N; ++n)
    nvec(n) = n + 1;

  const CMat Ppg = conj_scale(Pp, g); // g^-N P+ g^N
  const CMat Pmg = conj_scale(Pm, g);
  const CMat PpBar_g = conj_scale(CMat(Pp.conjugate()), g);
  const CMat PmBar_g = conj_scale(CMat(Pm.conjugate()), g);

  Blocks b;
  b.A1 = dsig * (g.asDiagonal() * Pp.conjugate() * g.asDiagonal()) +
         dsig * (ops.C * Pmg) + sc * sm * (ops.C * nvec.asDiagonal());
  b.A2 = dsig * (g.asDiagonal() * Pm.conjugate() * g.asDiagonal()) +
         dsig * (ops.C * Ppg);
  b.A2.diagonal() -= (sc * sm * g.cwiseAbs2().cwiseProduct(nvec)).cast<cplx>();

  const CMat twoQ = 2.0 * sm * ops.Q;
  const CMat twoQC = 2.0 * sm * ops.QCbar;
  b.B1 = dsig * Ppg + twoQ * Ppg + twoQC * PmBar_g;
  b.B2 = dsig * Pmg + twoQ * Pmg + twoQC * PpBar_g;
  b.B2.diagonal() += (sc * sm * nvec).cast<cplx>();
  return b;
}

} // namespace detail

/// Assembles A1, A2, B1, B2 and the reduced operators
///   At1 = (A1 - A2 conj(B2)^-1 conj(B1)) S^-1,
///   At2 = (conj(A2) - conj(A1) conj(B2)^-1 conj(B1)) S^-1,
///   S   = B2 - B1 conj(B2)^-1 conj(B1).
inline MatrixSystem assemble_system(const ShapeOperators &ops,
                                    const InterfaceDensity &density,
                                    double sigma_c, double sigma_m) {
  detail::check_conductivities(sigma_c, sigma_m);
  const int N = ops.N;
  if (density.order() > N)
    throw AssemblyError("density order exceeds matrix truncation");

  MatrixSystem sys;
  sys.N = N;
  sys.sigma_c = sigma_c;
  sys.sigma_m = sigma_m;
  sys.gamma = ops.gamma;
  sys.C = ops.C;
  std::tie(sys.P_plus, sys.P_minus) = detail::density_blocks(density, N);
  auto blocks =
      detail::build_blocks(ops, sys.P_plus, sys.P_minus, sigma_c, sigma_m);
  sys.A1 = std::move(blocks.A1);
  sys.A2 = std::move(blocks.A2);
  sys.B1 = std::move(blocks.B1);
  sys.B2 = std::move(blocks.B2);

  Eigen::PartialPivLU<CMat> luB(sys.B2.conjugate());
  const double rcB = luB.rcond();
  sys.cond_B2bar = rcB > 0 ? 1.0 / rcB : INFINITY;
  if (!(rcB > 1e-16) || !std::isfinite(rcB))
    throw AssemblyError("conj(B2) is singular", sys.cond_B2bar);
  const CMat X = luB.solve(CMat(sys.B1.conjugate()));
  const CMat S = sys.B2 - sys.B1 * X;
  Eigen::PartialPivLU<CMat> luS(S.transpose());
  const double rcS = luS.rcond();
  sys.cond_schur = rcS > 0 ? 1.0 / rcS : INFINITY;
  if (!(rcS > 1e-16) || !std::isfinite(rcS))
    throw AssemblyError("B2 - B1 conj(B2)^-1 conj(B1) is singular",
                        sys.cond_schur);
  if (sys.cond_B2bar >= 1e12)
    sys.warnings.push_back("ill-conditioned conj(B2): cond ~ " +
                           std::to_string(sys.cond_B2bar));
  if (sys.cond_schur >= 1e12)
    sys.warnings.push_back("ill-conditioned Schur factor: cond ~ " +
                           std::to_string(sys.cond_schur));

  // Y S^-1 = (S^T \ Y^T)^T; luS factors S^T
  const auto right_solve = [&](const CMat &Y) -> CMat {
    return luS.solve(Y.transpose()).transpose();
  };
  sys.Atilde1 = right_solve(sys.A1 - sys.A2 * X);
  sys.Atilde2 = right_solve(CMat(sys.A2.conjugate()) - sys.A1.conjugate() * X);
  return sys;
}

inline MatrixSystem assemble_system(const ConformalMap &map,
                                    const FaberTable &faber,
                                    const InterfaceDensity &density,
                                    double sigma_c, double sigma_m, int N) {
  return assemble_system(shape_operators(faber, map.gamma(), N), density,
                         sigma_c, sigma_m);
}

/// First rows of At1 and At2 only; cheaper than the full assembly.
struct FirstRows {
  CRow r1, r2;
};

inline FirstRows first_rows(const ShapeOperators &ops,
                            const InterfaceDensity &density, double sigma_c,
                            double sigma_m) {
  detail::check_conductivities(sigma_c, sigma_m);
  const int N = ops.N;
  if (density.order() > N)
    throw AssemblyError("density order exceeds matrix truncation");
  const auto &g = ops.gpow;
  const double dsig = sigma_c - sigma_m;
  auto [Pp, Pm] = detail::density_blocks(density, N);

  const CMat Ppg = detail::conj_scale(Pp, g);
  const CMat Pmg = detail::conj_scale(Pm, g);
  const CMat PpBar_g = detail::conj_scale(CMat(Pp.conjugate()), g);
  const CMat PmBar_g = detail::conj_scale(CMat(Pm.conjugate()), g);

  const CMat twoQ = 2.0 * sigma_m * ops.Q;
  const CMat twoQC = 2.0 * sigma_m * ops.QCbar;
  const CMat B1 = dsig * Ppg + twoQ * Ppg + twoQC * PmBar_g;
  CMat B2 = dsig * Pmg + twoQ * Pmg + twoQC * PpBar_g;
  for (int n = 0; n < N; ++n)
    B2(n, n) += sigma_c * sigma_m * (n + 1);

  // Row 1 of A1 and A2 (m = 1).
  const CRow c1 = ops.C.row(0);
  CRow a1 = dsig * g(0) * (Pp.row(0).conjugate().cwiseProduct(g.transpose().cast<cplx>())) +
            dsig * (c1 * Pmg);
  CRow a2 = dsig * g(0) * (Pm.row(0).conjugate().cwiseProduct(g.transpose().cast<cplx>())) +
            dsig * (c1 * Ppg);
  for (int n = 0; n < N; ++n)
    a1(n) += sigma_c * sigma_m * c1(n) * double(n + 1);
  a2(0) -= sigma_c * sigma_m * g(0) * g(0);

  Eigen::PartialPivLU<CMat> luB(B2.conjugate());
  const double rcB = luB.rcond();
  if (!(rcB > 1e-16) || !std::isfinite(rcB))
    throw AssemblyError("conj(B2) is singular", rcB > 0 ? 1 / rcB : INFINITY);
  const CMat X = luB.solve(CMat(B1.conjugate()));
  const CMat S = B2 - B1 * X;
  Eigen::PartialPivLU<CMat> luS(S.transpose());
  const double rcS = luS.rcond();
  if (!(rcS > 1e-16) || !std::isfinite(rcS))
    throw AssemblyError("Schur factor is singular", rcS > 0 ? 1 / rcS : INFINITY);

  const auto right_solve = [&](const CRow &y) -> CRow {
    return luS.solve(y.transpose()).transpose();
  };
  FirstRows out;
  out.r1 = right_solve(a1 - a2 * X);
  out.r2 = right_solve(CRow(a2.conjugate()) - a1.conjugate() * X);
  return out;
}

// ---------------------------------------------------------------------------
// Scattering coefficients

struct SeriesSolution {
  CMat s; // s(m-1, n-1) = s_mn
  std::vector<cplx> alpha;
};

inline SeriesSolution solve_scattering(const MatrixSystem &sys,
                                       const BackgroundField &field) {
  if (static_cast<int>(field.alpha.size()) > sys.N)
    throw DomainError("background field has more Faber modes than the "
                      "matrix truncation");
  SeriesSolution sol;
  sol.alpha = field.alpha;
  sol.s = CMat::Zero(sys.N, sys.N);
  for (std::size_t m = 0; m < field.alpha.size(); ++m) {
    const cplx a = field.alpha[m];
    const auto i = static_cast<Eigen::Index>(m);
    sol.s.row(i) = -a * sys.Atilde1.row(i) - std::conj(a) * sys.Atilde2.row(i);
  }
  return sol;
}

/// First row of s for a linear field with coefficient alpha_1.
inline CRow first_row_scattering(const FirstRows &rows, cplx alpha1) {
  return -alpha1 * rows.r1 - std::conj(alpha1) * rows.r2;
}

/// Relative max-norm of alpha A1 + conj(alpha) conj(A2) + conj(s) conj(B1) + s B2.
inline double residual_check(const MatrixSystem &sys,
                             const SeriesSolution &sol) {
  const int N = sys.N;
  if (sol.s.rows() != N || sol.s.cols() != N)
    throw DomainError("scattering matrix dimension mismatch");
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(N);
  for (std::size_t m = 0; m < sol.alpha.size() && m < std::size_t(N); ++m)
    a(static_cast<Eigen::Index>(m)) = sol.alpha[m];
  const CMat t1 = a.asDiagonal() * sys.A1;
  const CMat t2 = a.conjugate().asDiagonal() * sys.A2.conjugate();
  const CMat t3 = sol.s.conjugate() * sys.B1.conjugate();
  const CMat t4 = sol.s * sys.B2;
  const double scale =
      std::max({t1.cwiseAbs().maxCoeff(), t2.cwiseAbs().maxCoeff(),
                t3.cwiseAbs().maxCoeff(), t4.cwiseAbs().maxCoeff()});
  const double r = (t1 + t2 + t3 + t4).cwiseAbs().maxCoeff();
  return scale > 0.0 ? r / scale : r;
}

// ---------------------------------------------------------------------------
// Exterior field

struct FieldSample {
  double rho = 0.0, theta = 0.0, x1 = 0.0, x2 = 0.0, u = 0.0, H = 0.0;
};

struct PolarPoint {
  double rho = 0.0, theta = 0.0;
};

/// u = H + Re sum_{m,n} s_mn w^{-n} at w = e^{rho + i theta}, rho > rho0.
inline std::vector<FieldSample>
eval_exterior(const ConformalMap &map, const FaberTable &faber,
              const BackgroundField &field, const SeriesSolution &sol,
              std::span<const PolarPoint> points) {
  const auto N = sol.s.cols();
  // Summed rows: only rows with nonzero alpha contribute.
  Eigen::RowVectorXcd srow = Eigen::RowVectorXcd::Zero(N);
  for (Eigen::Index m = 0; m < sol.s.rows(); ++m)
    srow += sol.s.row(m);

  std::vector<FieldSample> out;
  out.reserve(points.size());
  for (const auto &pt : points) {
    if (!(pt.rho > map.rho0()))
      throw DomainError("exterior evaluation requires rho > rho0");
    const cplx w = std::polar(std::exp(pt.rho), pt.theta);
    const cplx z = map.psi_unchecked(w);
    const cplx t = 1.0 / w;
    cplx acc{};
    for (Eigen::Index n = N - 1; n >= 0; --n)
      acc = (acc + srow(n)) * t;
    FieldSample fs;
    fs.rho = pt.rho;
    fs.theta = pt.theta;
    fs.x1 = z.real();
    fs.x2 = z.imag();
    fs.H = field.value(faber, z);
    fs.u = fs.H + acc.real();
    out.push_back(fs);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  double cred = 0.0;      // mean |u_NN - u_p|^2
  double sup = 0.0;       // max |u_NN - u_p|
  double p_neutral = 0.0; // mean |u_p - H|^2
};

inline std::pair<double, double> mean_square_and_sup(std::span<const double> a,
                                                     std::span<const double> b) {
  if (a.empty())
    throw DomainError("metrics require a nonempty point set");
  if (a.size() != b.size())
    throw DomainError("metric inputs have mismatched lengths");
  double ms = 0.0, sup = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ms += d * d;
    sup = std::max(sup, std::abs(d));
  }
  return {ms / double(a.size()), sup};
}

inline Metrics neutrality_metrics(std::span<const double> u_nn,
                                  std::span<const double> u_p,
                                  std::span<const double> H) {
  Metrics m;
  std::tie(m.cred, m.sup) = mean_square_and_sup(u_nn, u_p);
  m.p_neutral = mean_square_and_sup(u_p, H).first;
  return m;
}

inline double p_neutral(std::span<const FieldSample> samples) {
  if (samples.empty())
    throw DomainError("metrics require a nonempty point set");
  double acc = 0.0;
  for (const auto &s : samples)
    acc += (s.u - s.H) * (s.u - s.H);
  return acc / double(samples.size());
}

// ---------------------------------------------------------------------------
// Linear-field neutrality diagnostics

/// ||row_1(s)||_2 for H = x1 (alpha_1 = 1) and H = x2 (alpha_1 = -i).
inline std::pair<double, double> neutrality_all_linear(const MatrixSystem &sys) {
  const CRow r1 = sys.Atilde1.row(0), r2 = sys.Atilde2.row(0);
  const CRow sx = -r1 - r2;
  const CRow sy = -cplx(0, -1) * r1 - cplx(0, 1) * r2;
  return {sx.norm(), sy.norm()};
}

/// Ratio of the smaller to the larger singular value of [r1; r2].
inline double first_row_singular_ratio(const CRow &r1, const CRow &r2) {
  CMat M(2, r1.size());
  M.row(0) = r1;
  M.row(1) = r2;
  Eigen::JacobiSVD<CMat> svd(M);
  const auto sv = svd.singularValues();
  return sv(0) > 0.0 ? sv(1) / sv(0) : 0.0;
}

inline bool first_row_independence(const CRow &r1, const CRow &r2,
                                   double threshold = 1e-8) {
  return first_row_singular_ratio(r1, r2) > threshold;
}

inline bool first_row_independence(const MatrixSystem &sys,
                                   double threshold = 1e-8) {
  return first_row_independence(sys.Atilde1.row(0), sys.Atilde2.row(0),
                                threshold);
}

/// Smallest singular value of [r1; r2]. For any alpha_1,
/// ||row_1(s)|| >= sqrt(2) |alpha_1| sigma_min, so a field that is neutral
/// to within eps forces sigma_min <= eps / (sqrt(2) |alpha_1|).
inline double first_row_sigma_min(const CRow &r1, const CRow &r2) {
  CMat M(2, r1.size());
  M.row(0) = r1;
  M.row(1) = r2;
  Eigen::JacobiSVD<CMat> svd(M);
  return svd.singularValues()(1);
}

} // namespace coco
