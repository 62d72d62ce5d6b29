#pragma once
// Real functions on the circle as Fourier coefficient tables, their
// convolutions, dyadic-block Hölder estimates, and flow averages on the torus.
//
// Convention: f(x) = Σ_n f̂(n) e^{inx}, f̂(n) = (1/2π) ∫₀^{2π} f(x) e^{−inx} dx,
// so (f ★ g)(t) = ∫₀^{2π} f(x) g(t − x) dx has coefficients 2π f̂(n) ĝ(n).
#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyaplab/flow.hpp"
#include "lyaplab/grid_field.hpp"
#include "lyaplab/trig_field.hpp"

namespace lyaplab {

using Complex = std::complex<double>;

class SpectralSeries {
 public:
  static constexpr int kDefaultMax = 1 << 20;

  explicit SpectralSeries(int n_max = kDefaultMax);
  static SpectralSeries sine(int m, double amplitude = 1.0, int n_max = kDefaultMax);
  static SpectralSeries cosine(int m, double amplitude = 1.0, int n_max = kDefaultMax);

  int n_max() const { return static_cast<int>(coef_.size()) - 1; }
  // Any sign; â(−n) = conj(â(n)) and zero beyond n_max.
  Complex operator[](int n) const;
  // n ≥ 0; â(0) must be real.
  void set(int n, Complex value);
  std::span<const Complex> coefficients() const { return coef_; }
  // Nonzero n ≥ 0 in increasing order.
  std::vector<int> support() const;
  int max_frequency() const;

  // Cosine-sine amplitude at n: 2|â(n)| for n > 0, |â(0)| at 0.
  double amplitude(int n) const;

  double value(double x) const;
  std::vector<double> values(std::span<const double> xs) const;
  // ĥ′(n) = i n ĥ(n).
  SpectralSeries derivative() const;
  // x ↦ f(−x).
  SpectralSeries reflected() const;

  SpectralSeries& operator+=(const SpectralSeries& o);
  SpectralSeries& operator*=(double s);
  friend SpectralSeries operator+(SpectralSeries a, const SpectralSeries& b) { return a += b; }
  friend SpectralSeries operator*(double s, SpectralSeries a) { return a *= s; }

  // Text format: one line per nonzero n ≥ 0, "n re im"; "# n_max N" header optional.
  void write(std::ostream& os) const;
  static SpectralSeries read(std::istream& is, int n_max = kDefaultMax);
  static SpectralSeries load(const std::string& path, int n_max = kDefaultMax);

  std::optional<double> declared_regularity;

 private:
  std::vector<Complex> coef_;
};

// ĥ(n) = 2π f̂(n) ĝ(n). Debug builds verify small inputs against direct quadrature.
SpectralSeries convolve(const SpectralSeries& f, const SpectralSeries& g);
// Max deviation of convolve(f, g) from ∫₀^{2π} f(x) g(t − x) dx by trapezoid
// quadrature (exact for these degrees) at `probes` equispaced t.
double convolution_quadrature_error(const SpectralSeries& f, const SpectralSeries& g, int probes = 32);

// Σ_{j<terms} L^{−αj} sin(L^j x); throws BudgetExceeded if L^{terms−1} > n_max.
SpectralSeries weierstrass(double alpha, int lacunarity = 4, int terms = 7, int n_max = SpectralSeries::kDefaultMax);
// Largest term count that fits n_max.
int weierstrass_terms(int lacunarity, int n_max = SpectralSeries::kDefaultMax);

struct DyadicBlock {
  int k = 0;                   // 2^k ≤ |n| < 2^{k+1}
  double energy = 0.0;         // S_k = (Σ |ĥ(n)|²)^{1/2} over ±n
  double derivative_mass = 0.0;  // Σ |n ĥ(n)| over ±n
};

struct RegularityEstimate {
  std::vector<DyadicBlock> blocks;  // blocks with S_k above the noise floor
  double alpha = 0.0;               // −slope of log₂ S_k against k
  double alpha_stderr = 0.0;
  double band = 0.0;                // 2·stderr
  double intercept = 0.0;           // log₂ S_k ≈ intercept − alpha·k
  double derivative_slope = 0.0;    // slope of log₂ of the derivative masses
  bool zygmund_tested = false;      // alpha within [0.95, 1.05]
  bool zygmund = false;             // derivative masses flat: partial sums grow like constant·k
  bool lipschitz = false;           // derivative masses summable
};

// Needs n_max ≥ 2^10 and five occupied blocks (TooFewBlocks otherwise).
RegularityEstimate estimate_holder(const SpectralSeries& f, double noise_floor = 1e-13);

// Mean-square increments ‖g(· + δ) − g‖_{L²} / δ^γ at dyadic δ, from the
// coefficients. Bounded quotients (growth at most `tolerance`) pass.
struct QuotientTest {
  double exponent = 0.0;
  std::vector<double> steps;
  std::vector<double> quotients;
  double growth = 0.0;  // least-squares slope of log₂ quotient against −log₂ δ
  bool passed = false;
};
QuotientTest holder_quotient_test(const SpectralSeries& g, double exponent, double tolerance = 0.05);

// ---- flow averages h(t) = ∫ f · g∘φ_t^X dμ on T^d
using ScalarFunction = std::function<double(const Vec&)>;

struct FlowCurve {
  std::vector<double> t;
  std::vector<double> h;
};

// p ↦ s(k·p) for an integer direction k: a circle function lifted to the torus.
ScalarFunction circle_pullback(const SpectralSeries& s, std::vector<int> direction);

// Integrates on the lattice of f; g is interpolated. X must be divergence-free.
FlowCurve flow_average(const GridField& f, const GridField& g, const TrigField& x, std::span<const double> ts,
                       const FlowOptions& options = {});
FlowCurve flow_average(const ScalarFunction& f, const ScalarFunction& g, const TrigField& x, std::span<const double> ts,
                       int resolution, const FlowOptions& options = {});

// Centered difference quotients of a sampled curve at t₀ for the sample
// offsets ±δ, smallest δ last; converging quotients indicate a C¹ curve.
struct DifferenceQuotients {
  std::vector<double> steps;
  std::vector<double> quotients;
  std::vector<double> increments;  // |q_j − q_{j−1}|
  double decay = 0.0;              // −slope of log₂ increments against log₂(1/δ)
  bool converging = false;         // decay ≥ min_rate
};
DifferenceQuotients difference_quotients(const FlowCurve& curve, double t0, double min_rate = 0.1);

}  // namespace lyaplab
