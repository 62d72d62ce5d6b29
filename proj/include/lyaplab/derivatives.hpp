#pragma once
// Closed-form derivatives of λ(t) at t = 0 for families f_t = h_t ∘ f, and the
// finite-difference oracles that check them.
//
// Lie derivatives follow calculus.hpp. The four integrand terms of λ″(0) are
//   −L_Xω(L_XV),  L_Yω(V),  −(L_Xω(V))²,  (2/η̃)·L_Xω(f_*V′).
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "lyaplab/families.hpp"
#include "lyaplab/splitting.hpp"

namespace lyaplab {

// Nodes and weights for ∫ · dμ in the normalized torus measure.
struct Quadrature {
  std::vector<Vec> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

Quadrature lattice_quadrature(int dim, int resolution);
// Midpoint lattice over the chart box of the bump support, `per_radius` nodes
// per chart radius; exact zero outside the support is not sampled.
Quadrature support_quadrature(const BumpField& field, int per_radius);

// ---- first derivative
// λ′(0) = ∫ L_Xω_F(V_E) dμ.
double lambda_prime_via_F(const FramedSplitting& split, const VectorField& x, const Quadrature& quad);
// λ′(0) = −∫ ω_F(L_XV_E) dμ.
double lambda_prime_via_E(const FramedSplitting& split, const VectorField& x, const Quadrature& quad);
// Lattice splittings integrate on their own lattice; constant ones at `resolution` (default 64).
double lambda_prime_via_F(const FramedSplitting& split, const VectorField& x, int resolution = 0);
double lambda_prime_via_E(const FramedSplitting& split, const VectorField& x, int resolution = 0);
// Sampled data: throw NeedsSmoothOmega / NeedsSmoothV without cubic interpolation.
double lambda_prime_via_F(const GridField& omega, const GridField& v, const VectorField& x);
double lambda_prime_via_E(const GridField& omega, const GridField& v, const VectorField& x);

struct HolderDerivative {
  double value = 0.0;               // Richardson extrapolate of the central slopes
  std::vector<double> steps;        // h
  std::vector<double> slopes;       // (g(h) − g(−h)) / 2h
  double g0 = 0.0;                  // ∫ ω(V), 1 by normalization
  // |λ′| ≤ C·‖X‖_C0‖ω‖_Cα‖V‖_Cβ + C_M·‖X‖_C1‖ω‖_C0‖V‖_C0 with measured norms, C = C_M = 1.
  double bound = 0.0;
  double bound_ratio = 0.0;         // |value| / bound
  double x_c0 = 0.0, x_c1 = 0.0;
  double omega_c0 = 0.0, v_c0 = 0.0;
  double omega_holder_norm = 0.0, v_holder_norm = 0.0;
  double omega_exponent = 0.0, v_exponent = 0.0;  // empirical Hölder exponents on the lattice
};
// g(t) = ∫ (φ_t^X)^*ω_F(V_E) dμ differentiated at 0. Needs only continuous data.
HolderDerivative lambda_prime_holder(const FramedSplitting& split, FieldPtr x, std::vector<double> steps = {0.02, 0.01},
                                     int resolution = 0, const FlowOptions& flow = {});

// ---- V′ = lim (V_t − V)/t with ω_F(V_t) = 1. With the Lie convention above it solves
// (Id − f_*/η̃)V′ = −𝒫L_XV, so
//   V′ = −Σ_{n≥0} (f_*/η̃)ⁿ 𝒫₁(L_XV) + Σ_{n≥1} (f_*/η̃)^{−n} 𝒫₃(L_XV).
struct VPrimeOptions {
  double tail_tolerance = 1e-10;  // ν^N·‖𝒫L_XV‖ target
  int max_terms = 10000;
};

class VPrime {
 public:
  // `probes` estimate sup ‖𝒫L_XV‖ for the truncation rule.
  VPrime(TorusMap f, FramedSplitting split, FieldPtr x, const Quadrature& probes, VPrimeOptions options = {});

  int terms() const { return terms_; }
  double nu() const { return nu_; }
  double source_norm() const { return source_norm_; }
  double tail_bound() const { return std::pow(nu_, terms_) * source_norm_; }

  WVec value(const Vec& p) const;
  // f_*V′ at p, i.e. ∧Df(f⁻¹p)·V′(f⁻¹p).
  WVec pushed(const Vec& p) const;
  // 𝒫 L_X V at p.
  WVec source(const Vec& p) const;
  // η̃ at p.
  double eta_tilde(const Vec& p) const;

  GridField grid(int resolution) const;
  // max over the lattice of ‖(Id − f_*/η̃)V′ + 𝒫L_XV‖, and of |ω(V′)|.
  double residual(int resolution) const;
  double kernel_residual(int resolution) const;

 private:
  struct Local;
  Local local(const Vec& p) const;

  TorusMap f_;
  FramedSplitting split_;
  FieldPtr x_;
  SourcePtr v_src_;
  VPrimeOptions options_;
  double nu_ = 0.0;
  double source_norm_ = 0.0;
  int terms_ = 0;
};

// ---- second derivative
struct SecondDerivative {
  double value = 0.0;
  std::array<double, 4> terms{};
  int series_terms = 0;
  double tail_bound = 0.0;
};
SecondDerivative lambda_second(const TorusMap& f, const FramedSplitting& split, FieldPtr x, FieldPtr y, const Quadrature& quad,
                               VPrimeOptions options = {});

// ---- finite-difference oracles on λ(t)
struct ExponentSample {
  double t = 0.0;
  double lambda = 0.0;
  std::array<double, 3> exponents{};
  SplittingDiagnostics diagnostics;
};

struct ExponentCurve {
  std::vector<ExponentSample> samples;
  double lambda_at(double t) const;
};

// λ(t) for the bundle grouping of the linear part of fam.base, each t from a
// fresh power iteration seeded by the constant eigenspace splitting.
ExponentCurve exponent_curve(const FamilySpec& fam, const Grouping& grouping, std::span<const double> ts, int resolution,
                             const SplittingOptions& options = {});

struct FdSlope {
  std::vector<double> steps;
  std::vector<double> slopes;
  double extrapolated = 0.0;  // Richardson on the two smallest steps
};
// Central slopes at every h with ±h in the curve.
FdSlope fd_slope(const ExponentCurve& curve);

struct FdSecond {
  double step = 0.0;
  double stencil = 0.0;    // five-point second difference at {0, ±h, ±2h}
  double parabola = 0.0;   // 2c of the least-squares fit a + bt + ct²
  double linear = 0.0;     // b of the same fit
  double fit_residual = 0.0;
  std::vector<double> residuals;  // λ(t) − fit, in curve order
};
FdSecond fd_second(const ExponentCurve& curve);

}  // namespace lyaplab
