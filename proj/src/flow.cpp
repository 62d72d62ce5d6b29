#include "lyaplab/flow.hpp"

#include <cmath>
#include <limits>

#include "lyaplab/errors.hpp"

namespace lyaplab {
namespace {

// Low-discrepancy probe points (additive recurrence on the generalized golden ratio).
std::vector<Vec> probe_points(int dim, int count) {
  double phi = 2.0;
  for (int i = 0; i < 30; ++i) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
  std::vector<Vec> pts;
  for (int i = 1; i <= count; ++i) {
    Vec p(dim);
    double a = 1.0;
    for (int j = 0; j < dim; ++j) {
      a /= phi;
      const double u = std::fmod(0.5 + a * i, 1.0);
      p(j) = 2.0 * M_PI * u;
    }
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

Flow::Flow(FieldPtr field, FlowOptions options) : field_(std::move(field)), options_(options) {
  if (!field_) fail(ErrorCode::InvalidArgument, "flow needs a field");
  if (field_->is_zero()) {
    step_ = std::numeric_limits<double>::infinity();
    return;
  }
  double h = options_.max_step;
  for (int iter = 0; iter < 80; ++iter) {
    const double err = local_error(h);
    if (err <= options_.tol_per_unit_time * h || h <= options_.min_step) break;
    const double ratio = std::pow(options_.tol_per_unit_time * h / err, 0.25);
    h = std::max(options_.min_step, h * std::min(0.5, 0.9 * ratio));
  }
  step_ = h;
}

// Richardson estimate on displacements from each probe, so rounding scales with h.
double Flow::local_error(double h) const {
  double worst = 0.0;
  for (const Vec& p : probe_points(field_->dim(), 16)) {
    auto step = [&](Vec& z, double dt) {
      const Vec k1 = field_->value(p + z);
      const Vec k2 = field_->value(p + (z + 0.5 * dt * k1));
      const Vec k3 = field_->value(p + (z + 0.5 * dt * k2));
      const Vec k4 = field_->value(p + (z + dt * k3));
      z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    Vec one = Vec::Zero(p.size()), two = Vec::Zero(p.size());
    step(one, h);
    step(two, h / 2);
    step(two, h / 2);
    worst = std::max(worst, (one - two).cwiseAbs().maxCoeff());
  }
  return worst;
}

int Flow::steps_for(double t) const {
  if (t == 0.0 || std::isinf(step_)) return 0;
  return std::max(1, static_cast<int>(std::ceil(std::abs(t) / step_ - 1e-9)));
}

void Flow::rk4_step(Vec& x, Mat* jac, double h) const {
  if (!jac) {
    const Vec k1 = field_->value(x);
    const Vec k2 = field_->value(x + 0.5 * h * k1);
    const Vec k3 = field_->value(x + 0.5 * h * k2);
    const Vec k4 = field_->value(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return;
  }
  Vec k1, k2, k3, k4;
  Mat a1, a2, a3, a4;
  Mat& j = *jac;
  field_->value_and_jacobian(x, k1, a1);
  const Mat m1 = a1 * j;
  field_->value_and_jacobian(x + 0.5 * h * k1, k2, a2);
  const Mat m2 = a2 * (j + 0.5 * h * m1);
  field_->value_and_jacobian(x + 0.5 * h * k2, k3, a3);
  const Mat m3 = a3 * (j + 0.5 * h * m2);
  field_->value_and_jacobian(x + h * k3, k4, a4);
  const Mat m4 = a4 * (j + h * m3);
  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  j += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
}

Vec Flow::lift(const Vec& p, double t, Mat* jacobian) const {
  Vec x = p;
  if (jacobian) *jacobian = Mat::Identity(p.size(), p.size());
  const int n = steps_for(t);
  if (n == 0) return x;
  const double h = t / n;
  for (int i = 0; i < n; ++i) rk4_step(x, jacobian, h);
  return x;
}

Vec Flow::map(const Vec& p, double t, Mat* jacobian) const { return wrap_point(lift(p, t, jacobian)); }

Vec flow_integrate(const TrigField& x, double t, const Vec& p, const FlowOptions& options) {
  return Flow(make_trig_field(x), options).map(p, t);
}

}  // namespace lyaplab
