#include "lyaplab/families.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lyaplab/calculus.hpp"
#include "lyaplab/errors.hpp"
#include "lyaplab/kernels.hpp"

namespace lyaplab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double coefficient_l1(const TrigPoly& f) {
  double s = 0.0;
  for (const auto& [k, h] : f.terms()) s += std::abs(h.c) + std::abs(h.s);
  return s;
}

// Flows of X and Y built once and reused across many points.
struct FamilyFlows {
  explicit FamilyFlows(const FamilySpec& fam)
      : fam(fam), x(make_trig_field(fam.x), fam.flow), y(make_trig_field(fam.y_or_zero()), fam.flow) {}

  Vec point(const Vec& p, double t) const {
    if (fam.custom_rule) return fam.custom_rule(p, t);
    return x.lift(y.lift(p, 0.5 * t * t), t);
  }

  const FamilySpec& fam;
  Flow x;
  Flow y;
};

}  // namespace

// ---- divergence-free fields

TrigField make_divfree(int dim, const StreamTable& streams) {
  if (dim < 1 || dim > kMaxDim) fail(ErrorCode::InvalidArgument, "make_divfree: dimension out of range");
  std::vector<TrigPoly> comp(static_cast<std::size_t>(dim), TrigPoly(dim));
  for (const auto& [ij, h] : streams) {
    const auto [i, j] = ij;
    if (i < 0 || j >= dim || i >= j) fail(ErrorCode::InvalidArgument, "make_divfree: stream index pair must satisfy 0 ≤ i < j < dim");
    if (h.dim() != dim) fail(ErrorCode::RankMismatch, "make_divfree: stream dimension mismatch");
    comp[static_cast<std::size_t>(i)] -= h.partial(j);
    comp[static_cast<std::size_t>(j)] += h.partial(i);
  }
  return TrigField::vector(std::move(comp));
}

TrigField random_divfree(int dim, std::uint64_t seed, const RandomFieldOptions& options) {
  if (options.max_mode < 1 || options.terms_per_stream < 1 || !(options.amplitude >= 0.0))
    fail(ErrorCode::InvalidArgument, "random_divfree: bad options");
  std::mt19937_64 rng(seed);
  const auto modes = static_cast<std::uint64_t>(2 * options.max_mode + 1);
  StreamTable streams;
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      TrigPoly h(dim);
      for (int t = 0; t < options.terms_per_stream; ++t) {
        Freq k{};
        bool nonzero = false;
        while (!nonzero) {
          for (int a = 0; a < dim; ++a) {
            k[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(rng() % modes) - options.max_mode;
            nonzero = nonzero || k[static_cast<std::size_t>(a)] != 0;
          }
        }
        const double c = 2.0 * unit_uniform(rng) - 1.0;
        const double s = 2.0 * unit_uniform(rng) - 1.0;
        h.add(k, c, s);
      }
      streams.emplace(std::make_pair(i, j), std::move(h));
    }
  }
  TrigField x = make_divfree(dim, streams);
  double largest = 0.0;
  for (int c = 0; c < x.num_components(); ++c) largest = std::max(largest, coefficient_l1(x[c]));
  if (largest > 0.0) x *= options.amplitude / largest;
  return x;
}

double divergence_residual(const TrigField& x) { return divergence(x)[0].max_abs_coefficient(); }

// ---- families

TrigField FamilySpec::y_or_zero() const { return y ? *y : TrigField(x.dim(), ValueRank::multivector, 1); }

void FamilySpec::validate() const {
  if (!x.is_vector() || x.dim() != dim()) fail(ErrorCode::RankMismatch, "family: X must be a vector field of the map's dimension");
  if (y && (!y->is_vector() || y->dim() != dim())) fail(ErrorCode::RankMismatch, "family: Y must be a vector field of the map's dimension");
  const auto check = [](const TrigField& f, const char* name) {
    double scale = 0.0;
    for (int c = 0; c < f.num_components(); ++c)
      scale = std::max(scale, f[c].max_abs_coefficient() * static_cast<double>(std::max<std::int64_t>(1, f.max_frequency())));
    if (divergence_residual(f) > 1e-12 * std::max(1.0, scale))
      fail(ErrorCode::InvalidArgument, std::string("family: ") + name + " is not divergence-free");
  };
  check(x, "X");
  if (y) check(*y, "Y");
}

Vec family_point(const FamilySpec& fam, const Vec& p, double t) { return FamilyFlows(fam).point(p, t); }

TorusMap family_map(const FamilySpec& fam, double t) {
  if (fam.custom_rule) fail(ErrorCode::InvalidArgument, "family_map: custom composition rules have no map form");
  fam.validate();
  TorusMap f = fam.base;
  if (fam.y) f = f.then_flow(make_trig_field(*fam.y), 0.5 * t * t, fam.flow);
  return f.then_flow(make_trig_field(fam.x), t, fam.flow);
}

TangentFields tangent_fields(const FamilySpec& fam, double t, double tolerance, int probe_resolution) {
  fam.validate();
  if (!(t > 0.0) || probe_resolution < 1) fail(ErrorCode::InvalidArgument, "tangent_fields: bad step or probe lattice");
  const FamilyFlows flows(fam);
  const TrigField y = fam.y_or_zero();
  const TrigVectorField xv(fam.x);
  const TrigEvaluator yv(y);
  const int d = fam.dim();

  TangentCheck check;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(probe_resolution);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec p(d);
    std::size_t rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      // Offset keeps probes off the symmetry lines of low-mode fields.
      p(a) = kTwoPi * (static_cast<double>(rest % static_cast<std::size_t>(probe_resolution)) + 0.37) / probe_resolution;
      rest /= static_cast<std::size_t>(probe_resolution);
    }
    const auto slope = [&](double h, Vec& first, Vec& second) {
      const Vec plus = flows.point(p, h);
      const Vec minus = flows.point(p, -h);
      first = (plus - minus) / (2.0 * h);
      second = (plus + minus - 2.0 * p) / (h * h);
    };
    Vec x1, z1, x2, z2;
    slope(t, x1, z1);
    slope(0.5 * t, x2, z2);
    const Vec x_fd = (4.0 * x2 - x1) / 3.0;
    const Vec z_fd = (4.0 * z2 - z1) / 3.0;
    Vec xval;
    Mat dx;
    xv.value_and_jacobian(p, xval, dx);
    const Vec y_fd = z_fd - dx * xval;
    const WVec ydecl = yv.value(p);
    check.x_residual = std::max(check.x_residual, (x_fd - xval).cwiseAbs().maxCoeff());
    check.y_residual = std::max(check.y_residual, (y_fd - ydecl.head(d)).cwiseAbs().maxCoeff());
    ++check.probes;
  }
  if (!(check.x_residual <= tolerance) || !(check.y_residual <= tolerance))
    fail(ErrorCode::TangentMismatch, "tangent_fields: finite-difference extraction disagrees with the declared generators (X residual " +
                                         std::to_string(check.x_residual) + ", Y residual " + std::to_string(check.y_residual) + ")");
  return {fam.x, y, check};
}

double measure_residual(const FamilySpec& fam, const TrigPoly& g, double t, int resolution) {
  if (g.dim() != fam.dim()) fail(ErrorCode::RankMismatch, "measure_residual: dimension mismatch");
  const FamilyFlows flows(fam);
  const GridField lattice(fam.dim(), resolution, ValueRank::scalar, 0, 1);
  std::vector<double> values(lattice.num_points());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = g(flows.point(lattice.point(i), t));
  const double mean = kernels::pairwise_sum(values) / static_cast<double>(values.size());
  return std::abs(mean - g.mean());
}

// ---- bumps

PolynomialBump::PolynomialBump(int power, double amplitude) : power_(power), amplitude_(amplitude) {
  if (power < 3) fail(ErrorCode::InvalidArgument, "PolynomialBump: power must be at least 3 for a C² profile");
}

void PolynomialBump::evaluate(const Vec& y, double& value, Vec& gradient, Mat& hessian) const {
  const int d = static_cast<int>(y.size());
  const double s = y.squaredNorm();
  gradient = Vec::Zero(d);
  hessian = Mat::Zero(d, d);
  value = 0.0;
  if (s >= 1.0) return;
  const double w = 1.0 - s;
  const double m = power_;
  const double w2 = std::pow(w, m - 2);
  const double w1 = w2 * w;
  value = amplitude_ * w1 * w;
  gradient = -2.0 * m * amplitude_ * w1 * y;
  hessian = (4.0 * m * (m - 1.0) * amplitude_ * w2) * (y * y.transpose());
  hessian.diagonal().array() -= 2.0 * m * amplitude_ * w1;
}

BumpSpec BumpSpec::resolved() const {
  BumpSpec s = *this;
  if (s.dim < 2 || s.dim > kMaxDim) fail(ErrorCode::InvalidArgument, "bump: dimension must be in [2, 4]");
  if (s.center.size() == 0) s.center = Vec::Constant(s.dim, std::numbers::pi);
  if (s.chart.size() == 0) s.chart = Mat::Identity(s.dim, s.dim);
  if (!s.profile) s.profile = std::make_shared<PolynomialBump>();
  if (s.center.size() != s.dim || s.chart.rows() != s.dim || s.chart.cols() != s.dim)
    fail(ErrorCode::InvalidArgument, "bump: center/chart dimension mismatch");
  if (s.axis_i < 0 || s.axis_j < 0 || s.axis_i >= s.dim || s.axis_j >= s.dim || s.axis_i == s.axis_j)
    fail(ErrorCode::InvalidArgument, "bump: mixing axes must be distinct chart axes");
  if (!(s.radius > 0.0)) fail(ErrorCode::InvalidArgument, "bump: radius must be positive");
  if (!(std::abs(s.chart.determinant()) > 1e-12)) fail(ErrorCode::InvalidArgument, "bump: chart is singular");
  const double reach = s.radius * s.chart.rowwise().norm().maxCoeff();
  if (!(reach < 0.25 * kTwoPi)) fail(ErrorCode::InvalidArgument, "bump: support exceeds a quarter period");
  return s;
}

BumpField::BumpField(BumpSpec spec) : spec_(spec.resolved()) {
  chart_inv_ = spec_.chart.inverse();
  half_width_ = spec_.radius * spec_.chart.rowwise().norm();
}

Vec BumpField::support_half_width() const { return half_width_; }

bool BumpField::outside(const Vec& p) const {
  const Vec delta = torus_delta(p, spec_.center);
  if ((delta.cwiseAbs() - half_width_).maxCoeff() >= 0.0) return true;
  return (chart_inv_ * delta).squaredNorm() >= spec_.radius * spec_.radius;
}

Vec BumpField::chart_coords(const Vec& p) const { return chart_inv_ * torus_delta(p, spec_.center); }

Vec BumpField::value(const Vec& p) const {
  Vec v;
  Mat j;
  value_and_jacobian(p, v, j);
  return v;
}

void BumpField::value_and_jacobian(const Vec& p, Vec& value, Mat& jacobian) const {
  const int d = spec_.dim;
  value = Vec::Zero(d);
  jacobian = Mat::Zero(d, d);
  if (outside(p)) return;
  const double r = spec_.radius;
  const Vec y = chart_coords(p) / r;
  double h = 0.0;
  Vec grad;
  Mat hess;
  spec_.profile->evaluate(y, h, grad, hess);
  const int i = spec_.axis_i, j = spec_.axis_j;
  Vec local = Vec::Zero(d);
  local(i) = -r * grad(j);
  local(j) = r * grad(i);
  Mat dlocal = Mat::Zero(d, d);
  dlocal.row(i) = -hess.row(j);
  dlocal.row(j) = hess.row(i);
  value = spec_.chart * local;
  jacobian = spec_.chart * dlocal * chart_inv_;
}

GridField bump_grid(const BumpField& field, int resolution) {
  return GridField::from_function(field.dim(), resolution, ValueRank::multivector, 1, [&](const Vec& p) {
    WVec w = WVec::Zero(field.dim());
    w.head(field.dim()) = field.value(p);
    return w;
  });
}

double bump_ball_integral(const BumpSpec& spec_in, int resolution) {
  const BumpSpec spec = spec_in.resolved();
  if (resolution < 2) fail(ErrorCode::InvalidArgument, "bump_K: resolution too small");
  const int d = spec.dim;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(resolution);
  const double h = 2.0 / resolution;
  std::vector<double> values(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec y(d);
    std::size_t rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      y(a) = -1.0 + h * (static_cast<double>(rest % static_cast<std::size_t>(resolution)) + 0.5);
      rest /= static_cast<std::size_t>(resolution);
    }
    double value = 0.0;
    Vec grad;
    Mat hess;
    spec.profile->evaluate(y, value, grad, hess);
    const double mixed = hess(spec.axis_i, spec.axis_j);
    values[idx] = mixed * mixed;
  }
  return kernels::pairwise_sum(values) * std::pow(h, d);
}

double bump_K(const BumpSpec& spec_in, int resolution) {
  const BumpSpec spec = spec_in.resolved();
  return std::abs(spec.chart.determinant()) * std::pow(kTwoPi, -spec.dim) * bump_ball_integral(spec, resolution);
}

BumpScaling bump_scaling(const BumpSpec& spec_in, int samples) {
  const BumpSpec spec = spec_in.resolved();
  const auto sweep = [&](double r, double& field_max, double& jac_max) {
    BumpSpec s = spec;
    s.radius = r;
    const BumpField field(s);
    field_max = jac_max = 0.0;
    const int d = spec.dim;
    // A local lattice around the center, in chart units of r, spanning a bit beyond the support.
    const int per_axis = d == 2 ? samples : std::max(9, samples / 4);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(per_axis);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Vec u(d);
      std::size_t rest = idx;
      for (int a = d - 1; a >= 0; --a) {
        u(a) = -1.2 + 2.4 * static_cast<double>(rest % static_cast<std::size_t>(per_axis)) / (per_axis - 1);
        rest /= static_cast<std::size_t>(per_axis);
      }
      const Vec p = wrap_point(spec.center + spec.chart * (r * u));
      Vec v;
      Mat j;
      field.value_and_jacobian(p, v, j);
      field_max = std::max(field_max, v.norm());
      jac_max = std::max(jac_max, j.norm());
    }
  };
  double f1, j1, f2, j2;
  sweep(spec.radius, f1, j1);
  sweep(0.5 * spec.radius, f2, j2);
  BumpScaling out;
  out.field_ratio = f1 > 0.0 ? f2 / f1 : 0.0;
  out.derivative_ratio = j1 > 0.0 ? j2 / j1 : 0.0;
  out.ok = out.field_ratio >= 0.4 && out.field_ratio <= 0.6 && out.derivative_ratio >= 0.8 && out.derivative_ratio <= 1.2;
  return out;
}

ReturnInfo return_time(const TorusMap& f, const BumpSpec& spec_in, int iterates) {
  const BumpSpec spec = spec_in.resolved();
  if (f.dim() != spec.dim) fail(ErrorCode::RankMismatch, "return_time: dimension mismatch");
  const double ball = spec.radius * spec.chart.norm();
  ReturnInfo info;
  info.min_distance = std::numeric_limits<double>::infinity();
  Vec q = spec.center;
  Mat acc = Mat::Identity(spec.dim, spec.dim);
  for (int k = 1; k <= iterates; ++k) {
    Mat step;
    q = f.apply(q, &step);
    acc = step * acc;
    const double dist = torus_delta(q, spec.center).norm();
    info.min_distance = std::min(info.min_distance, dist);
    if (!info.periodic && dist < 1e-9) {
      info.periodic = true;
      info.period = k;
    }
    // f^k(B_r) lies within ‖Df^k‖·r of f^k(c) to first order.
    const double reach = ball * (1.0 + Eigen::JacobiSVD<Mat>(acc).singularValues()(0));
    if (info.return_time == 0 && dist <= reach) info.return_time = k;
  }
  return info;
}

// ---- flow-family tangent

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "gauss_legendre: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = jacobi(k - 1, k) = b;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
    const double v0 = eig.eigenvectors()(0, k);
    weights[static_cast<std::size_t>(k)] = 2.0 * v0 * v0;
  }
  // Symmetrize to remove eigensolver asymmetry.
  for (int k = 0; k < n / 2; ++k) {
    const auto a = static_cast<std::size_t>(k), b = static_cast<std::size_t>(n - 1 - k);
    const double x = 0.5 * (nodes[b] - nodes[a]);
    const double w = 0.5 * (weights[a] + weights[b]);
    nodes[a] = -x;
    nodes[b] = x;
    weights[a] = weights[b] = w;
  }
  if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
}

FlowTangent::FlowTangent(const TrigField& x, const TrigField& x_prime, int panels, FlowOptions options)
    : flow_(make_trig_field(x), options), x_prime_(x_prime), x_prime_eval_(x_prime) {
  if (!x.is_vector() || !x_prime.is_vector() || x.dim() != x_prime.dim())
    fail(ErrorCode::RankMismatch, "flow tangent: X and X' must be vector fields of one dimension");
  if (panels < 1) fail(ErrorCode::InvalidArgument, "flow tangent: need at least one panel");
  std::vector<double> gl_nodes, gl_weights;
  gauss_legendre(8, gl_nodes, gl_weights);
  const double width = 1.0 / panels;
  for (int k = 0; k < panels; ++k) {
    for (std::size_t m = 0; m < gl_nodes.size(); ++m) {
      sigma_.push_back(width * (k + 0.5 * (gl_nodes[m] + 1.0)));
      weight_.push_back(0.5 * width * gl_weights[m]);
    }
  }
}

Vec FlowTangent::value(const Vec& p) const {
  // X̄(p) = ∫₀¹ (Dφ_{−σ}(p))⁻¹ X′(φ_{−σ}(p)) dσ, walking the backward orbit once.
  const int d = dim();
  Vec q = p;
  Mat back = Mat::Identity(d, d);
  Vec total = Vec::Zero(d);
  double at = 0.0;
  for (std::size_t k = 0; k < sigma_.size(); ++k) {
    Mat step;
    q = flow_.lift(q, -(sigma_[k] - at), &step);
    back = step * back;
    at = sigma_[k];
    const Vec xp = x_prime_eval_.value(q).head(d);
    total += weight_[k] * back.partialPivLu().solve(xp);
  }
  return total;
}

Vec flow_tangent_fd(const TrigField& x, const TrigField& x_prime, const Vec& p, double h, const FlowOptions& options) {
  const Vec q = Flow(make_trig_field(x), options).lift(p, -1.0);
  const Vec plus = Flow(make_trig_field(x + h * x_prime), options).lift(q, 1.0);
  const Vec minus = Flow(make_trig_field(x + (-h) * x_prime), options).lift(q, 1.0);
  return (plus - minus) / (2.0 * h);
}

}  // namespace lyaplab
