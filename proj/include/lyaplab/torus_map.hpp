#pragma once
// Diffeomorphisms of T^d of the form f = S_m ∘ … ∘ S_1 ∘ L, with L an integer
// matrix of determinant ±1 and each stage S_i a flow, an explicit displacement
// p ↦ p + δ(p), or a tabulated displacement.
#include <memory>
#include <vector>

#include "lyaplab/flow.hpp"
#include "lyaplab/grid_field.hpp"
#include "lyaplab/trig_field.hpp"
#include "lyaplab/vector_field.hpp"

namespace lyaplab {

using IntMat = Eigen::Matrix<std::int64_t, -1, -1>;

class MapStage {
 public:
  virtual ~MapStage() = default;
  virtual Vec apply(const Vec& p, Mat* jacobian) const = 0;
  // Preimage of q; fills the forward Jacobian at the preimage if requested.
  virtual Vec invert(const Vec& q, Mat* forward_jacobian) const = 0;
};

class TorusMap {
 public:
  explicit TorusMap(IntMat linear);
  static TorusMap identity(int dim);
  static TorusMap cat_map();

  int dim() const { return static_cast<int>(linear_.rows()); }
  const IntMat& linear() const { return linear_; }
  Mat linear_real() const { return linear_.cast<double>(); }
  const IntMat& linear_inverse() const { return linear_inv_; }
  bool is_linear() const { return stages_.empty(); }
  std::size_t num_stages() const { return stages_.size(); }

  // Return a copy with one more stage applied after the current map.
  TorusMap then_flow(FieldPtr field, double time, FlowOptions options = {}) const;
  TorusMap then_flow(const Flow& flow, double time) const;
  TorusMap then_displacement(const TrigField& delta) const;
  TorusMap then_grid_displacement(GridField delta) const;

  Vec apply(const Vec& p, Mat* jacobian = nullptr) const;
  // Preimage; throws InverseIterationDiverged if a displacement solve fails.
  Vec inverse(const Vec& q, Mat* forward_jacobian = nullptr) const;

 private:
  IntMat linear_;
  IntMat linear_inv_;
  std::vector<std::shared_ptr<const MapStage>> stages_;
};

// φ_t of X tabulated on the lattice as a displacement with cubic interpolation.
TorusMap flow_map(const TrigField& x, double t, int resolution, FlowOptions options = {});

}  // namespace lyaplab
