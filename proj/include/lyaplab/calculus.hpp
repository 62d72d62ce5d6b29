#pragma once
// Exterior calculus on T^d for exact (trig) and sampled (grid) fields.
//
// Lie derivative conventions: L_X g = X·∇g, L_X V = [X, V] = X·∇V − D(DX) V,
// L_X ω = X·∇ω + D(DX)ᵀ ω, where D(A) is the derivation extension of A to the
// exterior power. These satisfy L_X(ω(V)) = (L_X ω)(V) + ω(L_X V).
#include <memory>

#include "lyaplab/grid_field.hpp"
#include "lyaplab/torus_map.hpp"
#include "lyaplab/trig_field.hpp"
#include "lyaplab/vector_field.hpp"

namespace lyaplab {

using Gradient = Eigen::Matrix<double, -1, -1, 0, kMaxWedge, kMaxDim>;

// ---- exact calculus
TrigField exterior_derivative(const TrigField& form);
TrigField interior_product(const TrigField& x, const TrigField& form);
TrigField wedge(const TrigField& a, const TrigField& b);
TrigField lie_derivative(const TrigField& x, const TrigField& field);
TrigField pair(const TrigField& form, const TrigField& multivector);
TrigField divergence(const TrigField& x);
// Entry (i, j) is ∂_j X^i.
std::vector<std::vector<TrigPoly>> jacobian(const TrigField& x);

// ---- pointwise sources: a field that can be evaluated with its gradient anywhere
class TensorSource {
 public:
  virtual ~TensorSource() = default;
  virtual int dim() const = 0;
  virtual ValueRank rank() const = 0;
  virtual int degree() const = 0;
  virtual WVec value(const Vec& p) const = 0;
  virtual void value_and_gradient(const Vec& p, WVec& value, Gradient& grad) const = 0;
  // Constant sources skip all derivative work.
  virtual bool is_constant() const { return false; }
};
using SourcePtr = std::shared_ptr<const TensorSource>;

SourcePtr make_source(const TrigField& f);
// Requires interpolation order 3; throws NeedsSmoothOmega / NeedsSmoothV otherwise.
SourcePtr make_source(const GridField& g);
SourcePtr make_constant_source(int dim, ValueRank rank, int degree, const WVec& value);

// Lie derivative of a source along X at one point.
WVec lie_derivative_at(const VectorField& x, const TensorSource& field, const Vec& p);

// ---- sampled calculus
GridField lie_derivative(const VectorField& x, const GridField& field);
GridField pullback_form(const TorusMap& phi, const GridField& form);
GridField pullback_form(const TorusMap& phi, const TrigField& form, int resolution);
GridField pushforward_multivector(const TorusMap& phi, const GridField& v);
GridField pushforward_multivector(const TorusMap& phi, const TrigField& v, int resolution);
GridField pair(const GridField& form, const GridField& multivector);
// Scalar composition g ∘ φ on the lattice.
GridField compose(const GridField& g, const TorusMap& phi);
GridField compose(const TrigField& g, const TorusMap& phi, int resolution);

}  // namespace lyaplab
