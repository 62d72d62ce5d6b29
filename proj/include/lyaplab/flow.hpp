#pragma once
// Time-t flow maps of vector fields by classical fourth-order Runge-Kutta with
// a fixed step chosen per field from a Richardson estimate of the local error.
#include "lyaplab/vector_field.hpp"

namespace lyaplab {

struct FlowOptions {
  double tol_per_unit_time = 1e-12;
  double max_step = 0.25;
  double min_step = 1e-6;
};

class Flow {
 public:
  explicit Flow(FieldPtr field, FlowOptions options = {});

  const VectorField& field() const { return *field_; }
  const FieldPtr& field_ptr() const { return field_; }
  double step() const { return step_; }
  int steps_for(double t) const;

  // φ_t(p) wrapped into [0, 2π)^d; fills Dφ_t(p) if requested.
  Vec map(const Vec& p, double t, Mat* jacobian = nullptr) const;
  // Same, without wrapping (continuous lift).
  Vec lift(const Vec& p, double t, Mat* jacobian = nullptr) const;

 private:
  void rk4_step(Vec& x, Mat* jac, double h) const;
  double local_error(double h) const;

  FieldPtr field_;
  FlowOptions options_;
  double step_ = 0.0;
};

Vec flow_integrate(const TrigField& x, double t, const Vec& p, const FlowOptions& options = {});

}  // namespace lyaplab
