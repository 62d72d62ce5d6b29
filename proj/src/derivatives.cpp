#include "lyaplab/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lyaplab/calculus.hpp"
#include "lyaplab/errors.hpp"
#include "lyaplab/kernels.hpp"
#include "lyaplab/parallel.hpp"

namespace lyaplab {

namespace {

// Σ w_i f(node_i), evaluated in parallel and summed in node order.
template <class Fn>
double integrate(const Quadrature& quad, const Fn& fn) {
  std::vector<double> values(quad.size());
  parallel_for(quad.size(), [&](std::size_t i) { values[i] = quad.weights[i] * fn(quad.nodes[i]); });
  return kernels::pairwise_sum(values);
}

Quadrature default_quadrature(const FramedSplitting& split, int resolution) {
  if (!split.is_constant()) {
    if (resolution != 0 && resolution != split.resolution())
      fail(ErrorCode::InvalidArgument, "lattice splitting integrates on its own lattice");
    return lattice_quadrature(split.dim(), split.resolution());
  }
  return lattice_quadrature(split.dim(), resolution > 0 ? resolution : 64);
}

// Keeps the coordinates of a k-vector (in the wedge basis of the frame columns)
// whose index sets hold exactly one index of `bundle` and k−1 indices of E².
WVec bundle_mask(const Mat& frame, const BundleDims& dims, int bundle, const WVec& w) {
  const int d = static_cast<int>(frame.rows());
  const WedgeBasis& basis = wedge_basis(d, dims.k);
  const WVec coords = compound(frame.inverse(), dims.k) * w;
  WVec kept = WVec::Zero(coords.size());
  const int lo = dims.offset(bundle), hi = lo + dims.size(bundle);
  const int mid_lo = dims.offset(1), mid_hi = mid_lo + dims.k;
  for (int i = 0; i < basis.size(); ++i) {
    const IndexSet& set = basis.set(i);
    int in_bundle = 0, in_mid = 0;
    for (int a = 0; a < set.size; ++a) {
      if (set[a] >= lo && set[a] < hi) ++in_bundle;
      if (set[a] >= mid_lo && set[a] < mid_hi) ++in_mid;
    }
    if (in_bundle == 1 && in_mid == dims.k - 1) kept(i) = coords(i);
  }
  return compound(frame, dims.k) * kept;
}

double frobenius_max(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

}  // namespace

// ---------------------------------------------------------------- quadrature

Quadrature lattice_quadrature(int dim, int resolution) {
  const GridField lattice(dim, resolution, ValueRank::scalar, 0, 1);
  Quadrature q;
  q.nodes.reserve(lattice.num_points());
  for (std::size_t i = 0; i < lattice.num_points(); ++i) q.nodes.push_back(lattice.point(i));
  q.weights.assign(q.nodes.size(), 1.0 / static_cast<double>(q.nodes.size()));
  return q;
}

Quadrature support_quadrature(const BumpField& field, int per_radius) {
  if (per_radius < 2) fail(ErrorCode::InvalidArgument, "support quadrature needs at least 2 nodes per radius");
  const BumpSpec& spec = field.spec();
  const int d = spec.dim;
  const int n = 2 * per_radius;
  const double r = spec.radius;
  const double step = 2.0 * r / n;
  const double weight = std::abs(spec.chart.determinant()) * std::pow(step / (2.0 * std::numbers::pi), d);
  Quadrature q;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (;;) {
    Vec z(d);
    for (int a = 0; a < d; ++a) z(a) = -r + (idx[static_cast<std::size_t>(a)] + 0.5) * step;
    if (z.norm() < r) {
      q.nodes.push_back(wrap_point(spec.center + spec.chart * z));
      q.weights.push_back(weight);
    }
    int a = 0;
    while (a < d && ++idx[static_cast<std::size_t>(a)] == n) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == d) break;
  }
  return q;
}

// ---------------------------------------------------------------- first derivative

double lambda_prime_via_F(const FramedSplitting& split, const VectorField& x, const Quadrature& quad) {
  const SourcePtr omega = split.omega_source();
  const SourcePtr v = split.v_source();
  return integrate(quad, [&](const Vec& p) { return lie_derivative_at(x, *omega, p).dot(v->value(p)); });
}

double lambda_prime_via_E(const FramedSplitting& split, const VectorField& x, const Quadrature& quad) {
  const SourcePtr omega = split.omega_source();
  const SourcePtr v = split.v_source();
  return -integrate(quad, [&](const Vec& p) { return omega->value(p).dot(lie_derivative_at(x, *v, p)); });
}

double lambda_prime_via_F(const FramedSplitting& split, const VectorField& x, int resolution) {
  return lambda_prime_via_F(split, x, default_quadrature(split, resolution));
}

double lambda_prime_via_E(const FramedSplitting& split, const VectorField& x, int resolution) {
  return lambda_prime_via_E(split, x, default_quadrature(split, resolution));
}

double lambda_prime_via_F(const GridField& omega, const GridField& v, const VectorField& x) {
  if (omega.interp_order() < 3) fail(ErrorCode::NeedsSmoothOmega, "ω_F is only available as non-differentiable grid data");
  return torus_integrate(pair(lie_derivative(x, omega), v));
}

double lambda_prime_via_E(const GridField& omega, const GridField& v, const VectorField& x) {
  if (v.interp_order() < 3) fail(ErrorCode::NeedsSmoothV, "V_E is only available as non-differentiable grid data");
  return -torus_integrate(pair(omega, lie_derivative(x, v)));
}

// ---------------------------------------------------------------- Hölder route

HolderDerivative lambda_prime_holder(const FramedSplitting& split, FieldPtr x, std::vector<double> steps, int resolution,
                                     const FlowOptions& flow_options) {
  if (steps.empty()) fail(ErrorCode::InvalidArgument, "lambda_prime_holder needs at least one step");
  std::sort(steps.begin(), steps.end(), std::greater<>());
  const Quadrature quad = default_quadrature(split, resolution);
  const int k = split.dims().k;
  const SourcePtr omega_src = split.omega_source();
  const SourcePtr v_src = split.v_source();
  const Flow flow(x, flow_options);

  const auto g = [&](double t) {
    return integrate(quad, [&](const Vec& p) {
      Mat jac;
      const Vec q = flow.map(p, t, &jac);
      const WVec omega = split.is_constant() ? split.omega_at(0) : split.sample(q).omega;
      return omega.dot(compound(jac, k) * v_src->value(p));
    });
  };

  HolderDerivative out;
  out.g0 = g(0.0);
  out.steps = steps;
  for (double h : steps) out.slopes.push_back((g(h) - g(-h)) / (2.0 * h));
  out.value = out.slopes.back();
  if (steps.size() >= 2) {
    const std::size_t n = steps.size();
    const double ratio = steps[n - 2] / steps[n - 1];
    out.value = (ratio * ratio * out.slopes[n - 1] - out.slopes[n - 2]) / (ratio * ratio - 1.0);
  }

  // Measured norms on the quadrature lattice.
  const int n = resolution > 0 ? resolution : (split.is_constant() ? 64 : split.resolution());
  const double spacing = 2.0 * std::numbers::pi / n;
  const GridField lattice(split.dim(), n, ValueRank::scalar, 0, 1);
  const std::size_t np = lattice.num_points();
  std::vector<double> xs(np), dxs(np), os(np), dos(np), vs(np), dvs(np);
  std::vector<std::array<double, 4>> diffs(np);  // ω and V increments at one and two spacings
  parallel_for(np, [&](std::size_t i) {
    const Vec p = lattice.point(i);
    Vec xv;
    Mat dx;
    x->value_and_jacobian(p, xv, dx);
    xs[i] = xv.norm();
    dxs[i] = dx.norm();
    WVec val;
    Gradient grad;
    omega_src->value_and_gradient(p, val, grad);
    os[i] = val.norm();
    dos[i] = grad.norm();
    const WVec omega0 = val;
    v_src->value_and_gradient(p, val, grad);
    vs[i] = val.norm();
    dvs[i] = grad.norm();
    const WVec v0 = val;
    std::array<double, 4> dd{};
    for (int a = 0; a < split.dim(); ++a) {
      Vec e = Vec::Zero(split.dim());
      e(a) = spacing;
      dd[0] = std::max(dd[0], (omega_src->value(wrap_point(p + e)) - omega0).norm());
      dd[1] = std::max(dd[1], (omega_src->value(wrap_point(p + 2.0 * e)) - omega0).norm());
      dd[2] = std::max(dd[2], (v_src->value(wrap_point(p + e)) - v0).norm());
      dd[3] = std::max(dd[3], (v_src->value(wrap_point(p + 2.0 * e)) - v0).norm());
    }
    diffs[i] = dd;
  });
  out.x_c0 = frobenius_max(xs);
  out.x_c1 = out.x_c0 + frobenius_max(dxs);
  out.omega_c0 = frobenius_max(os);
  out.v_c0 = frobenius_max(vs);
  out.omega_holder_norm = out.omega_c0 + frobenius_max(dos);
  out.v_holder_norm = out.v_c0 + frobenius_max(dvs);
  std::array<double, 4> worst{};
  for (const auto& dd : diffs)
    for (std::size_t j = 0; j < 4; ++j) worst[j] = std::max(worst[j], dd[j]);
  const auto exponent = [](double one, double two) { return one > 1e-14 ? std::log2(two / one) : 1.0; };
  out.omega_exponent = exponent(worst[0], worst[1]);
  out.v_exponent = exponent(worst[2], worst[3]);
  out.bound = out.x_c0 * out.omega_holder_norm * out.v_holder_norm + out.x_c1 * out.omega_c0 * out.v_c0;
  out.bound_ratio = out.bound > 0.0 ? std::abs(out.value) / out.bound : 0.0;
  return out;
}

// ---------------------------------------------------------------- V′

struct VPrime::Local {
  Mat frame;
  WVec omega;
  WVec v;
  WVec w;  // 𝒫 L_X V
};

VPrime::VPrime(TorusMap f, FramedSplitting split, FieldPtr x, const Quadrature& probes, VPrimeOptions options)
    : f_(std::move(f)), split_(std::move(split)), x_(std::move(x)), options_(options) {
  if (!x_ || x_->dim() != split_.dim() || f_.dim() != split_.dim())
    fail(ErrorCode::RankMismatch, "v_prime_series: dimension mismatch");
  v_src_ = split_.v_source();
  nu_ = split_.nu();
  if (!(nu_ < 1.0)) fail(ErrorCode::SeriesTooLong, "v_prime_series: splitting is not dominated (ν ≥ 1)");
  nu_ = std::max(nu_, 1e-3);
  std::vector<double> norms(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) { norms[i] = source(probes.nodes[i]).norm(); });
  source_norm_ = frobenius_max(norms);
  if (source_norm_ <= options_.tail_tolerance) {
    terms_ = 1;
  } else {
    const double n = std::ceil(std::log(options_.tail_tolerance / source_norm_) / std::log(nu_));
    if (n > options_.max_terms)
      fail(ErrorCode::SeriesTooLong, "v_prime_series needs " + std::to_string(static_cast<long long>(n)) + " terms (ν = " +
                                         std::to_string(nu_) + ")");
    terms_ = std::max(1, static_cast<int>(n));
  }
}

VPrime::Local VPrime::local(const Vec& p) const {
  Local l;
  const PointFrame pf = split_.sample(p);
  l.frame = pf.frame;
  l.omega = pf.omega;
  l.v = pf.v;
  const WVec lv = lie_derivative_at(*x_, *v_src_, p);
  l.w = lv - l.omega.dot(lv) * l.v;
  return l;
}

WVec VPrime::source(const Vec& p) const { return local(p).w; }

double VPrime::eta_tilde(const Vec& p) const {
  Mat jac;
  const Vec q = f_.inverse(p, &jac);
  return split_.sample(p).omega.dot(compound(jac, split_.dims().k) * split_.sample(q).v);
}

WVec VPrime::value(const Vec& p) const {
  const BundleDims& dims = split_.dims();
  const int k = dims.k;
  const int n = terms_;
  WVec out = WVec::Zero(binomial(split_.dim(), k));

  if (dims.lower > 0) {
    // q_j = f^{-j}(p); jac[j] = Df(q_{j+1}).
    std::vector<Vec> q{p};
    std::vector<WMat> push;
    for (int j = 0; j < n; ++j) {
      Mat jac;
      q.push_back(f_.inverse(q.back(), &jac));
      push.push_back(compound(jac, k));
    }
    Local next = local(q[static_cast<std::size_t>(n)]);
    WVec u = bundle_mask(next.frame, dims, 0, next.w);
    for (int j = n - 1; j >= 0; --j) {
      const Local here = local(q[static_cast<std::size_t>(j)]);
      const WVec pushed = push[static_cast<std::size_t>(j)] * u;
      const double eta = here.omega.dot(push[static_cast<std::size_t>(j)] * next.v);
      u = bundle_mask(here.frame, dims, 0, here.w + pushed / eta);
      next = here;
    }
    out += u;
  }

  if (dims.upper > 0) {
    // r_j = f^{j}(p); inv[j] = (∧Df(r_j))⁻¹, eta[j] = η̃(r_{j+1}).
    std::vector<Vec> r{p};
    std::vector<Mat> jacs;
    for (int j = 0; j < n; ++j) {
      Mat jac;
      r.push_back(f_.apply(r.back(), &jac));
      jacs.push_back(jac);
    }
    std::vector<Local> locs;
    locs.reserve(static_cast<std::size_t>(n + 1));
    for (int j = 0; j <= n; ++j) locs.push_back(local(r[static_cast<std::size_t>(j)]));
    const auto eta_after = [&](int j) {
      return locs[static_cast<std::size_t>(j + 1)].omega.dot(compound(jacs[static_cast<std::size_t>(j)], k) *
                                                             locs[static_cast<std::size_t>(j)].v);
    };
    const auto pull = [&](int j, const WVec& g) {
      return WVec(compound(jacs[static_cast<std::size_t>(j)].inverse(), k) * g);
    };
    WVec g = bundle_mask(locs.back().frame, dims, 2, locs.back().w);
    for (int j = n - 1; j >= 1; --j) {
      const Local& here = locs[static_cast<std::size_t>(j)];
      g = bundle_mask(here.frame, dims, 2, here.w + eta_after(j) * pull(j, g));
    }
    out -= eta_after(0) * pull(0, g);
  }
  // d/dt V_t solves (Id − f_*/η̃)V′ = −𝒫L_XV.
  return -out;
}

WVec VPrime::pushed(const Vec& p) const {
  Mat jac;
  const Vec q = f_.inverse(p, &jac);
  return compound(jac, split_.dims().k) * value(q);
}

GridField VPrime::grid(int resolution) const {
  GridField g(split_.dim(), resolution, ValueRank::multivector, split_.dims().k, 3);
  parallel_for(g.num_points(), [&](std::size_t i) { g.set(i, value(g.point(i))); });
  return g;
}

double VPrime::residual(int resolution) const {
  const Quadrature quad = lattice_quadrature(split_.dim(), resolution);
  std::vector<double> res(quad.size());
  parallel_for(quad.size(), [&](std::size_t i) {
    const Vec& p = quad.nodes[i];
    res[i] = (value(p) - pushed(p) / eta_tilde(p) + source(p)).norm();
  });
  return frobenius_max(res);
}

double VPrime::kernel_residual(int resolution) const {
  const Quadrature quad = lattice_quadrature(split_.dim(), resolution);
  std::vector<double> res(quad.size());
  parallel_for(quad.size(), [&](std::size_t i) {
    const Vec& p = quad.nodes[i];
    res[i] = std::abs(split_.sample(p).omega.dot(value(p)));
  });
  return frobenius_max(res);
}

// ---------------------------------------------------------------- λ″

SecondDerivative lambda_second(const TorusMap& f, const FramedSplitting& split, FieldPtr x, FieldPtr y, const Quadrature& quad,
                               VPrimeOptions options) {
  if (!x) fail(ErrorCode::InvalidArgument, "lambda_second needs X");
  const VPrime vp(f, split, x, quad, options);
  const SourcePtr omega_src = split.omega_source();
  const SourcePtr v_src = split.v_source();
  std::vector<std::array<double, 4>> values(quad.size());
  parallel_for(quad.size(), [&](std::size_t i) {
    const Vec& p = quad.nodes[i];
    const double w = quad.weights[i];
    const WVec v = v_src->value(p);
    const WVec l_omega = lie_derivative_at(*x, *omega_src, p);
    std::array<double, 4> t{};
    if (l_omega.squaredNorm() > 0.0) {
      const WVec l_v = lie_derivative_at(*x, *v_src, p);
      const double lov = l_omega.dot(v);
      t[0] = -l_omega.dot(l_v);
      t[2] = -lov * lov;
      t[3] = 2.0 / vp.eta_tilde(p) * l_omega.dot(vp.pushed(p));
    }
    if (y) t[1] = lie_derivative_at(*y, *omega_src, p).dot(v);
    for (double& term : t) term *= w;
    values[i] = t;
  });
  SecondDerivative out;
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> column(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) column[i] = values[i][j];
    out.terms[j] = kernels::pairwise_sum(column);
  }
  out.value = out.terms[0] + out.terms[1] + out.terms[2] + out.terms[3];
  out.series_terms = vp.terms();
  out.tail_bound = vp.tail_bound();
  return out;
}

// ---------------------------------------------------------------- FD oracles

double ExponentCurve::lambda_at(double t) const {
  for (const ExponentSample& s : samples)
    if (std::abs(s.t - t) <= 1e-14 * std::max(1.0, std::abs(t))) return s.lambda;
  fail(ErrorCode::InvalidArgument, "exponent curve has no sample at t = " + std::to_string(t));
}

ExponentCurve exponent_curve(const FamilySpec& fam, const Grouping& grouping, std::span<const double> ts, int resolution,
                             const SplittingOptions& options) {
  fam.validate();
  const FramedSplitting seed = exact_splitting(TorusMap(fam.base.linear()), grouping);
  ExponentCurve curve;
  for (double t : ts) {
    const FramedSplitting split = power_splitting(family_map(fam, t), seed, resolution, options);
    ExponentSample s;
    s.t = t;
    s.exponents = lyapunov_exponents(split);
    s.lambda = s.exponents[1];
    s.diagnostics = split.diagnostics();
    curve.samples.push_back(s);
  }
  return curve;
}

FdSlope fd_slope(const ExponentCurve& curve) {
  std::vector<double> hs;
  for (const ExponentSample& s : curve.samples)
    if (s.t > 0.0)
      for (const ExponentSample& o : curve.samples)
        if (std::abs(o.t + s.t) <= 1e-14 * s.t) hs.push_back(s.t);
  std::sort(hs.begin(), hs.end());
  if (hs.empty()) fail(ErrorCode::InvalidArgument, "fd_slope needs samples at ±h");
  FdSlope out;
  for (double h : hs) {
    out.steps.push_back(h);
    out.slopes.push_back((curve.lambda_at(h) - curve.lambda_at(-h)) / (2.0 * h));
  }
  out.extrapolated = out.slopes[0];
  if (hs.size() >= 2) {
    const double ratio = hs[1] / hs[0];
    out.extrapolated = (ratio * ratio * out.slopes[0] - out.slopes[1]) / (ratio * ratio - 1.0);
  }
  return out;
}

FdSecond fd_second(const ExponentCurve& curve) {
  FdSecond out;
  const auto has = [&](double t) {
    return std::any_of(curve.samples.begin(), curve.samples.end(),
                       [&](const ExponentSample& s) { return std::abs(s.t - t) <= 1e-14 * std::max(1.0, std::abs(t)); });
  };
  std::vector<double> hs;
  for (const ExponentSample& s : curve.samples)
    if (s.t > 0.0 && has(-s.t) && has(2.0 * s.t) && has(-2.0 * s.t) && has(0.0)) hs.push_back(s.t);
  if (hs.empty()) fail(ErrorCode::InvalidArgument, "fd_second needs samples at 0, ±h, ±2h");
  const double h = *std::min_element(hs.begin(), hs.end());
  out.step = h;
  out.stencil = (-curve.lambda_at(2 * h) + 16.0 * curve.lambda_at(h) - 30.0 * curve.lambda_at(0.0) + 16.0 * curve.lambda_at(-h) -
                 curve.lambda_at(-2 * h)) /
                (12.0 * h * h);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(curve.samples.size()), 3);
  Eigen::VectorXd b(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double t = curve.samples[static_cast<std::size_t>(i)].t;
    a.row(i) << 1.0, t, t * t;
    b(i) = curve.samples[static_cast<std::size_t>(i)].lambda;
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  out.parabola = 2.0 * c(2);
  out.linear = c(1);
  const Eigen::VectorXd misfit = b - a * c;
  out.fit_residual = misfit.cwiseAbs().maxCoeff();
  out.residuals.assign(misfit.begin(), misfit.end());
  return out;
}

}  // namespace lyaplab
