#pragma once
// One-parameter families h_t = φ_t^X ∘ φ_{t²/2}^Y of volume-preserving maps,
// localized Hamiltonian bumps, and the tangent of a family of flows.
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <utility>

#include "lyaplab/flow.hpp"
#include "lyaplab/grid_field.hpp"
#include "lyaplab/torus_map.hpp"
#include "lyaplab/trig_field.hpp"
#include "lyaplab/vector_field.hpp"

namespace lyaplab {

// ---- divergence-free trig fields
using StreamTable = std::map<std::pair<int, int>, TrigPoly>;

// X = Σ_{i<j} −∂_j H_ij e_i + ∂_i H_ij e_j.
TrigField make_divfree(int dim, const StreamTable& streams);

struct RandomFieldOptions {
  int max_mode = 2;
  int terms_per_stream = 4;
  // Target for Σ |coefficients| of the largest component, a bound on sup |X^i|.
  double amplitude = 0.2;
};
TrigField random_divfree(int dim, std::uint64_t seed, const RandomFieldOptions& options = {});

// Largest coefficient of div X, zero for fields built by make_divfree.
double divergence_residual(const TrigField& x);

// ---- families
struct FamilySpec {
  TorusMap base = TorusMap::cat_map();
  TrigField x = TrigField(2, ValueRank::multivector, 1);
  std::optional<TrigField> y;
  FlowOptions flow;
  // Replaces the standard rule p ↦ φ_t^X(φ_{t²/2}^Y(p)); used to probe the self-check.
  std::function<Vec(const Vec&, double)> custom_rule;

  int dim() const { return base.dim(); }
  TrigField y_or_zero() const;
  void validate() const;
};

// h_t(p) as a continuous lift (no wrapping).
Vec family_point(const FamilySpec& fam, const Vec& p, double t);
// f_t = h_t ∘ f.
TorusMap family_map(const FamilySpec& fam, double t);

struct TangentCheck {
  double x_residual = 0.0;  // sup |X_fd − X|
  double y_residual = 0.0;  // sup |(Z_fd − DX·X) − Y|
  int probes = 0;
};

struct TangentFields {
  TrigField x;
  TrigField y;
  TangentCheck check;
};

// Returns the declared generators after verifying them by finite differences of
// h_t at step t on a probe lattice; throws TangentMismatch above tolerance.
TangentFields tangent_fields(const FamilySpec& fam, double t = 1e-3, double tolerance = 1e-6, int probe_resolution = 8);

// sup over the lattice of |∫ g∘h_t dμ − ∫ g dμ| for the given trig scalar g.
double measure_residual(const FamilySpec& fam, const TrigPoly& g, double t, int resolution = 64);

// ---- bumps
class BumpProfile {
 public:
  virtual ~BumpProfile() = default;
  // H, ∇H and ∇²H at y in the unit ball; zero outside.
  virtual void evaluate(const Vec& y, double& value, Vec& gradient, Mat& hessian) const = 0;
};
using ProfilePtr = std::shared_ptr<const BumpProfile>;

// amplitude · (1 − |y|²)^power inside the unit ball.
class PolynomialBump final : public BumpProfile {
 public:
  explicit PolynomialBump(int power = 4, double amplitude = 1.0);
  void evaluate(const Vec& y, double& value, Vec& gradient, Mat& hessian) const override;

 private:
  int power_;
  double amplitude_;
};

struct BumpSpec {
  int dim = 2;
  double radius = 0.1;
  Vec center;  // defaults to (π, …, π)
  // Chart p = center + chart·z; columns are the directions of the chart axes.
  Mat chart;   // defaults to the identity
  int axis_i = 0;  // along the dominating bundle
  int axis_j = 1;  // along the dominated bundle
  ProfilePtr profile;  // defaults to PolynomialBump()

  // Fills defaults and checks the support fits in a quarter period.
  BumpSpec resolved() const;
};

// X_r = chart · (−∂_j H_r e_i + ∂_i H_r e_j)(chart⁻¹(p − center)), H_r(z) = r² H(z/r).
class BumpField final : public VectorField {
 public:
  explicit BumpField(BumpSpec spec);
  int dim() const override { return spec_.dim; }
  Vec value(const Vec& p) const override;
  void value_and_jacobian(const Vec& p, Vec& value, Mat& jacobian) const override;
  const BumpSpec& spec() const { return spec_; }
  // True if p is outside the support (fast rejection for integrands).
  bool outside(const Vec& p) const;
  // Axis-aligned half widths of the support around the center.
  Vec support_half_width() const;

 private:
  Vec chart_coords(const Vec& p) const;

  BumpSpec spec_;
  Mat chart_inv_;
  Vec half_width_;
};

GridField bump_grid(const BumpField& field, int resolution);

// K = |det chart| (2π)^{-d} ∫_{unit ball} (∂_i∂_j H)² dy: the unit-ball integral
// expressed in the normalized torus measure, by a lattice quadrature.
double bump_K(const BumpSpec& spec, int resolution = 256);
// The unit-ball integral alone.
double bump_ball_integral(const BumpSpec& spec, int resolution = 256);

struct BumpScaling {
  double field_ratio = 0.0;       // max|X_{r/2}| / max|X_r|
  double derivative_ratio = 0.0;  // max|DX_{r/2}| / max|DX_r|
  bool ok = false;
};
BumpScaling bump_scaling(const BumpSpec& spec, int samples = 101);

struct ReturnInfo {
  bool periodic = false;
  int period = 0;           // smallest k ≤ iterates with f^k(c) = c, else 0
  int return_time = 0;      // first k ≥ 1 at which B_r may meet f^k(B_r), 0 if none
  double min_distance = 0.0;  // min over k of |f^k(c) − c|
};
ReturnInfo return_time(const TorusMap& f, const BumpSpec& spec, int iterates = 20);

// ---- flow-family tangent X̄ = ∫₀¹ φ_{s*} X′ ds
class FlowTangent {
 public:
  FlowTangent(const TrigField& x, const TrigField& x_prime, int panels = 8, FlowOptions options = {});
  int dim() const { return x_prime_.dim(); }
  Vec value(const Vec& p) const;
  int nodes() const { return static_cast<int>(sigma_.size()); }

 private:
  Flow flow_;
  TrigField x_prime_;
  TrigEvaluator x_prime_eval_;
  std::vector<double> sigma_;   // increasing nodes in [0, 1]
  std::vector<double> weight_;
};

// Central-difference oracle (φ₁^{X+hX′}∘φ₋₁^X(p) − φ₁^{X−hX′}∘φ₋₁^X(p)) / 2h.
Vec flow_tangent_fd(const TrigField& x, const TrigField& x_prime, const Vec& p, double h = 1e-4,
                    const FlowOptions& options = {});

// Gauss–Legendre nodes and weights on [−1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace lyaplab
