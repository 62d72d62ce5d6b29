#pragma once
// Fields sampled on the uniform lattice {2π i / n}^d of [0, 2π)^d.
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lyaplab/exterior.hpp"
#include "lyaplab/trig_field.hpp"

namespace lyaplab {

class GridField {
 public:
  GridField(int dim, int n, ValueRank rank, int degree, int interp_order = 3);

  static GridField sample(const TrigField& f, int n, int interp_order = 3);
  static GridField from_function(int dim, int n, ValueRank rank, int degree,
                                 const std::function<WVec(const Vec&)>& f, int interp_order = 3);

  int dim() const { return dim_; }
  int resolution() const { return n_; }
  ValueRank rank() const { return rank_; }
  int degree() const { return degree_; }
  int num_components() const { return ncomp_; }
  int interp_order() const { return order_; }
  std::size_t num_points() const { return npoints_; }
  double spacing() const;

  Vec point(std::size_t i) const;
  WVec at(std::size_t i) const;
  void set(std::size_t i, const WVec& v);
  double& value(std::size_t i, int comp) { return data_[i * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(comp)]; }
  double value(std::size_t i, int comp) const { return data_[i * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(comp)]; }
  std::span<const double> data() const { return data_; }

  // Tensor-product Lagrange interpolation (order 1 or 3) at any point.
  WVec interpolate(const Vec& p) const;
  // Fourth-order central difference along an axis, at every node.
  GridField partial(int axis) const;
  // Component c as a scalar field.
  GridField component(int c) const;

  // Throws InvalidArgument on NaN/Inf.
  void validate() const;

  // Binary layout, little-endian: 8-byte magic "LYAPGRD1", six int32
  // (dim, n, rank, degree, interp_order, components), then n^d × components
  // float64 values, lattice index row-major with the last axis fastest.
  void save(const std::string& path) const;
  static GridField load(const std::string& path);

 private:
  int dim_, n_;
  ValueRank rank_;
  int degree_, ncomp_, order_;
  std::size_t npoints_;
  std::vector<double> data_;
};

double torus_integrate(const GridField& g);
double torus_integrate(const TrigField& g);
double grid_max_abs(const GridField& g);

}  // namespace lyaplab
