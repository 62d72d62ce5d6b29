#pragma once
// Dominated splittings TM = E¹ ⊕ E² ⊕ E³ of torus maps, the normalized pair
// (ω_F, V_E) for E = E², F = E¹ ⊕ E³, the expansion factors η, η̃ and the
// integrated exponents.
//
// Frames are stored with columns [E¹ | E² | E³], orthonormal within each
// bundle. E¹ is the most contracted bundle, E³ the most expanded.
#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "lyaplab/calculus.hpp"
#include "lyaplab/grid_field.hpp"
#include "lyaplab/torus_map.hpp"

namespace lyaplab {

struct BundleDims {
  int lower = 0;  // dim E¹
  int k = 1;      // dim E² = dim E
  int upper = 0;  // dim E³
  int total() const { return lower + k + upper; }
  int offset(int bundle) const { return bundle == 0 ? 0 : bundle == 1 ? lower : lower + k; }
  int size(int bundle) const { return bundle == 0 ? lower : bundle == 1 ? k : upper; }
};

// Block sizes of the spectrum in increasing modulus, and which block is E.
struct Grouping {
  std::vector<int> blocks;
  int target = 0;
  BundleDims dims() const;
  void validate(int dim) const;
};

// Scale of V_E: volume makes the frame [E¹|E²|E³] unimodular (so exponents of
// the three bundles sum to log|det Df| pointwise); reference fixes ω_F and
// normalizes V_E against it.
enum class Normalization { volume, reference };

struct SplittingOptions {
  double tolerance = 1e-10;  // successive-direction change that stops the iteration
  int min_depth = 3;
  int max_depth = 200;  // n_iter
  Normalization normalization = Normalization::volume;
  SourcePtr reference_omega;  // required for Normalization::reference
  double invariance_tolerance = 1e-8;
  bool check_domination = true;
};

struct BundleBounds {
  double lo = 0.0;  // min over points of the smallest singular value of Df|E
  double hi = 0.0;  // max of the largest
};

struct SplittingDiagnostics {
  int min_iterations = 0;
  int max_iterations = 0;
  double mean_iterations = 0.0;
  double contraction_ratio = 0.0;   // geometric mean over points of the per-step decay of successive changes
  double pair_residual = 0.0;       // max |ω(V) − 1|
  double orthonormality_residual = 0.0;
  double invariance_residual = 0.0; // max ‖f_*V − η̃V‖ / ‖η̃V‖
  double domination_ratio = 0.0;    // max ‖Df|Eⁱ‖·‖Df⁻¹|Eⁱ⁺¹‖
  bool orientation_preserved = true;
};

// Splitting data at one point.
struct PointFrame {
  Mat frame;
  WVec omega;
  WVec v;
};

class PointSplitter;

class FramedSplitting {
 public:
  // Constant splitting of a linear map.
  static FramedSplitting constant(const IntMat& linear, BundleDims dims, const Mat& frame);

  int dim() const { return dim_; }
  const BundleDims& dims() const { return dims_; }
  bool is_constant() const { return constant_; }
  int resolution() const { return resolution_; }
  std::size_t num_points() const { return frames_.size(); }

  const Mat& frame(std::size_t node) const { return frames_[constant_ ? 0 : node]; }
  WVec omega_at(std::size_t node) const;
  WVec v_at(std::size_t node) const;
  // Expansion factor of bundle b ∈ {0, 1, 2} at the node: η̃_b(p) with f_*V_b = η̃_b V_b.
  double eta_tilde_at(std::size_t node, int bundle = 1) const;
  double eta_at(std::size_t node) const;

  // Lattice grids (cubic interpolation); constant splittings are sampled at the requested resolution.
  GridField omega_grid(int resolution = 0) const;
  GridField v_grid(int resolution = 0) const;
  GridField eta_tilde_grid(int resolution = 0, int bundle = 1) const;
  GridField eta_grid(int resolution = 0) const;
  SourcePtr omega_source() const;
  SourcePtr v_source() const;

  // Frame, ω and V at any point: exact for constant splittings, recomputed by
  // orbit iteration for lattice splittings.
  PointFrame sample(const Vec& p) const;

  const std::array<BundleBounds, 3>& bounds() const { return bounds_; }
  double nu() const { return diag_.domination_ratio; }
  const SplittingDiagnostics& diagnostics() const { return diag_; }

  friend FramedSplitting power_splitting(const TorusMap&, const FramedSplitting&, int, const SplittingOptions&, int);
  friend FramedSplitting exact_splitting(const TorusMap&, const Grouping&);

 private:
  FramedSplitting() = default;

  int dim_ = 0;
  BundleDims dims_;
  bool constant_ = true;
  int resolution_ = 0;
  std::vector<Mat> frames_;
  std::vector<WVec> omega_;
  std::vector<WVec> v_;
  std::vector<std::array<double, 3>> eta_tilde_;
  std::vector<double> eta_;
  std::array<BundleBounds, 3> bounds_{};
  SplittingDiagnostics diag_;
  std::shared_ptr<const PointSplitter> splitter_;
  // Grids are built once for lattice splittings.
  std::shared_ptr<const GridField> omega_grid_, v_grid_;
  std::shared_ptr<const TensorSource> omega_src_, v_src_;
};

// Constant eigenspace splitting of a linear map; throws NoDomination if the
// moduli of consecutive blocks are not separated by a factor 1.01.
FramedSplitting exact_splitting(const TorusMap& linear, const Grouping& grouping);

// Pointwise pushforward iteration along orbits through every lattice point,
// seeded with the frames of `seed`.
FramedSplitting power_splitting(const TorusMap& f, const FramedSplitting& seed, int resolution,
                                const SplittingOptions& options = {}, int n_iter = 0);

struct EtaFields {
  GridField eta_tilde;
  GridField eta;
};
// η̃_t(p) = ω_F(f_*V)(p) and η_t = η̃_t ∘ f on the lattice. For constant splittings
// f must be the linear map itself; lattice splittings carry the values they
// were built with.
EtaFields eta_field(const TorusMap& f, const FramedSplitting& split, int resolution = 0);

// λ = ∫ log η̃ dμ for bundle b (1 = E).
double lyapunov_exponent(const FramedSplitting& split, int bundle = 1);
std::array<double, 3> lyapunov_exponents(const FramedSplitting& split);

// Time average of log‖∧^k Df^n W‖ with per-step QR renormalization, averaged
// over an n_points^d lattice of start points. `seed` is a frame [E¹ | E² | E³];
// the E³ and E² columns are iterated and the exponents of the E² columns summed.
double birkhoff_oracle(const TorusMap& f, const BundleDims& dims, const Mat& seed, int n_orbit, int n_points,
                       int burn_in = 50);

// Largest principal-angle sine between the spans of two column sets.
double subspace_distance(const Mat& a, const Mat& b);

}  // namespace lyaplab
