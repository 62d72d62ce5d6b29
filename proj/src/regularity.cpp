#include "lyaplab/regularity.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lyaplab/errors.hpp"
#include "lyaplab/families.hpp"
#include "lyaplab/kernels.hpp"
#include "lyaplab/parallel.hpp"

namespace lyaplab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  if (xs.size() > 2 && sxx > 0.0) {
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - fit.intercept - fit.slope * xs[i];
      ss += r * r;
    }
    fit.stderr_slope = std::sqrt(ss / (n - 2.0) / sxx);
  }
  return fit;
}

void require_same_size(const SpectralSeries& f, const SpectralSeries& g) {
  if (f.n_max() != g.n_max()) fail(ErrorCode::InvalidArgument, "spectral series with different n_max");
}

}  // namespace

// ---------------------------------------------------------------- SpectralSeries

SpectralSeries::SpectralSeries(int n_max) {
  if (n_max < 1) fail(ErrorCode::InvalidArgument, "spectral series needs n_max ≥ 1");
  coef_.assign(static_cast<std::size_t>(n_max) + 1, Complex(0.0, 0.0));
}

SpectralSeries SpectralSeries::sine(int m, double amplitude, int n_max) {
  SpectralSeries s(n_max);
  s.set(m, Complex(0.0, -0.5 * amplitude));
  return s;
}

SpectralSeries SpectralSeries::cosine(int m, double amplitude, int n_max) {
  SpectralSeries s(n_max);
  s.set(m, m == 0 ? Complex(amplitude, 0.0) : Complex(0.5 * amplitude, 0.0));
  return s;
}

Complex SpectralSeries::operator[](int n) const {
  const int a = std::abs(n);
  if (a > n_max()) return {0.0, 0.0};
  const Complex c = coef_[static_cast<std::size_t>(a)];
  return n < 0 ? std::conj(c) : c;
}

void SpectralSeries::set(int n, Complex value) {
  if (n < 0 || n > n_max()) fail(ErrorCode::InvalidArgument, "frequency outside [0, n_max]");
  if (n == 0 && value.imag() != 0.0) fail(ErrorCode::InvalidArgument, "mean of a real function must be real");
  coef_[static_cast<std::size_t>(n)] = value;
}

std::vector<int> SpectralSeries::support() const {
  std::vector<int> out;
  for (std::size_t n = 0; n < coef_.size(); ++n)
    if (coef_[n] != Complex(0.0, 0.0)) out.push_back(static_cast<int>(n));
  return out;
}

int SpectralSeries::max_frequency() const {
  for (std::size_t n = coef_.size(); n-- > 0;)
    if (coef_[n] != Complex(0.0, 0.0)) return static_cast<int>(n);
  return 0;
}

double SpectralSeries::amplitude(int n) const {
  const double a = std::abs((*this)[n]);
  return n == 0 ? a : 2.0 * a;
}

double SpectralSeries::value(double x) const {
  double sum = coef_[0].real();
  for (std::size_t n = 1; n < coef_.size(); ++n) {
    const Complex c = coef_[n];
    if (c == Complex(0.0, 0.0)) continue;
    const double phase = static_cast<double>(n) * x;
    sum += 2.0 * (c.real() * std::cos(phase) - c.imag() * std::sin(phase));
  }
  return sum;
}

std::vector<double> SpectralSeries::values(std::span<const double> xs) const {
  const std::vector<int> sup = support();
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) {
    double sum = 0.0;
    for (int n : sup) {
      const Complex c = coef_[static_cast<std::size_t>(n)];
      if (n == 0) {
        sum += c.real();
        continue;
      }
      const double phase = static_cast<double>(n) * xs[i];
      sum += 2.0 * (c.real() * std::cos(phase) - c.imag() * std::sin(phase));
    }
    out[i] = sum;
  });
  return out;
}

SpectralSeries SpectralSeries::derivative() const {
  SpectralSeries d(n_max());
  for (std::size_t n = 1; n < coef_.size(); ++n) d.coef_[n] = Complex(0.0, static_cast<double>(n)) * coef_[n];
  return d;
}

SpectralSeries SpectralSeries::reflected() const {
  SpectralSeries r(n_max());
  for (std::size_t n = 0; n < coef_.size(); ++n) r.coef_[n] = std::conj(coef_[n]);
  r.declared_regularity = declared_regularity;
  return r;
}

SpectralSeries& SpectralSeries::operator+=(const SpectralSeries& o) {
  require_same_size(*this, o);
  for (std::size_t n = 0; n < coef_.size(); ++n) coef_[n] += o.coef_[n];
  declared_regularity.reset();
  return *this;
}

SpectralSeries& SpectralSeries::operator*=(double s) {
  for (Complex& c : coef_) c *= s;
  return *this;
}

void SpectralSeries::write(std::ostream& os) const {
  std::ostringstream buf;
  buf.precision(17);
  buf << "# n_max " << n_max() << "\n";
  for (int n : support()) {
    const Complex c = coef_[static_cast<std::size_t>(n)];
    buf << n << " " << c.real() << " " << c.imag() << "\n";
  }
  os << buf.str();
}

SpectralSeries SpectralSeries::read(std::istream& is, int n_max) {
  std::vector<std::pair<int, Complex>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') {
      std::string key;
      int value = 0;
      std::istringstream hs(line.substr(line.find('#') + 1));
      if (hs >> key >> value && key == "n_max") n_max = value;
      continue;
    }
    int n = 0;
    double re = 0.0, im = 0.0;
    try {
      n = std::stoi(first);
    } catch (const std::exception&) {
      fail(ErrorCode::SpecInvalid, "coefficient line " + std::to_string(line_no) + ": bad frequency");
    }
    if (!(ls >> re >> im)) fail(ErrorCode::SpecInvalid, "coefficient line " + std::to_string(line_no) + ": expected 'n re im'");
    if (n < 0) {
      n = -n;
      im = -im;
    }
    entries.emplace_back(n, Complex(re, im));
  }
  SpectralSeries s(n_max);
  for (const auto& [n, c] : entries) {
    if (n > n_max) fail(ErrorCode::SpecInvalid, "frequency " + std::to_string(n) + " exceeds n_max");
    if (n == 0 && c.imag() != 0.0) fail(ErrorCode::SpecInvalid, "imaginary mean");
    s.coef_[static_cast<std::size_t>(n)] = c;
  }
  return s;
}

SpectralSeries SpectralSeries::load(const std::string& path, int n_max) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  return read(in, n_max);
}

// ---------------------------------------------------------------- convolution

SpectralSeries convolve(const SpectralSeries& f, const SpectralSeries& g) {
  require_same_size(f, g);
  SpectralSeries h(f.n_max());
  std::vector<Complex> out(f.coefficients().size());
  kernels::complex_mul_scaled(f.coefficients(), g.coefficients(), kTwoPi, out);
  for (std::size_t n = 0; n < out.size(); ++n)
    if (out[n] != Complex(0.0, 0.0)) h.set(static_cast<int>(n), n == 0 ? Complex(out[n].real(), 0.0) : out[n]);
  if (f.declared_regularity && g.declared_regularity) h.declared_regularity = *f.declared_regularity + *g.declared_regularity;
#ifndef NDEBUG
  if (std::max(f.max_frequency(), g.max_frequency()) <= 4096) {
    double scale = 0.0;
    for (int n : h.support()) scale += h.amplitude(n);
    assert(convolution_quadrature_error(f, g) <= 1e-8 * std::max(1.0, scale));
  }
#endif
  return h;
}

double convolution_quadrature_error(const SpectralSeries& f, const SpectralSeries& g, int probes) {
  if (probes < 1) fail(ErrorCode::InvalidArgument, "need at least one probe");
  const int top = std::max(f.max_frequency(), g.max_frequency());
  // Trapezoid on M nodes integrates frequencies below M exactly; the integrand reaches 2·top.
  const int m = probes * ((2 * top + 1) / probes + 1);
  std::vector<double> grid(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) grid[static_cast<std::size_t>(j)] = kTwoPi * j / m;
  const std::vector<double> fv = f.values(grid);
  const std::vector<double> gv = g.values(grid);
  const SpectralSeries h = convolve(f, g);
  std::vector<double> errors(static_cast<std::size_t>(probes));
  parallel_for(errors.size(), [&](std::size_t p) {
    const int shift = static_cast<int>(p) * (m / probes);
    std::vector<double> terms(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
      terms[static_cast<std::size_t>(j)] = fv[static_cast<std::size_t>(j)] * gv[static_cast<std::size_t>(((shift - j) % m + m) % m)];
    const double quad = kTwoPi / m * kernels::pairwise_sum(terms);
    errors[p] = std::abs(quad - h.value(grid[static_cast<std::size_t>(shift)]));
  });
  return *std::max_element(errors.begin(), errors.end());
}

// ---------------------------------------------------------------- generators

int weierstrass_terms(int lacunarity, int n_max) {
  if (lacunarity < 2) fail(ErrorCode::InvalidArgument, "lacunarity must be at least 2");
  int terms = 0;
  for (long long freq = 1; freq <= n_max; freq *= lacunarity) ++terms;
  return terms;
}

SpectralSeries weierstrass(double alpha, int lacunarity, int terms, int n_max) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "weierstrass exponent must lie in (0, 1)");
  if (terms < 1) fail(ErrorCode::InvalidArgument, "weierstrass needs at least one term");
  if (terms > weierstrass_terms(lacunarity, n_max))
    fail(ErrorCode::BudgetExceeded, "weierstrass: " + std::to_string(lacunarity) + "^" + std::to_string(terms - 1) +
                                        " exceeds n_max " + std::to_string(n_max));
  SpectralSeries s(n_max);
  long long freq = 1;
  for (int j = 0; j < terms; ++j, freq *= lacunarity)
    s.set(static_cast<int>(freq), Complex(0.0, -0.5 * std::pow(static_cast<double>(lacunarity), -alpha * j)));
  s.declared_regularity = alpha;
  return s;
}

// ---------------------------------------------------------------- estimation

RegularityEstimate estimate_holder(const SpectralSeries& f, double noise_floor) {
  if (f.n_max() < 1024) fail(ErrorCode::InvalidArgument, "estimator inputs need n_max ≥ 2^10");
  const std::span<const Complex> coef = f.coefficients();
  std::vector<double> mags(coef.size());
  kernels::complex_abs(coef, mags);

  RegularityEstimate est;
  for (int k = 0; (1LL << k) <= f.n_max(); ++k) {
    const std::size_t lo = std::size_t{1} << k;
    const std::size_t hi = std::min(std::size_t{1} << (k + 1), coef.size());
    const std::span<const double> block(mags.data() + lo, hi - lo);
    const double energy = std::sqrt(2.0 * kernels::pairwise_sum_squares(block));
    if (!(energy > noise_floor)) continue;
    std::vector<double> weighted(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) weighted[i] = static_cast<double>(lo + i) * block[i];
    est.blocks.push_back({k, energy, 2.0 * kernels::pairwise_sum(weighted)});
  }
  if (est.blocks.size() < 5)
    fail(ErrorCode::TooFewBlocks, std::to_string(est.blocks.size()) + " occupied dyadic blocks, need 5");

  std::vector<double> ks, log_energy, log_mass;
  for (const DyadicBlock& b : est.blocks) {
    ks.push_back(b.k);
    log_energy.push_back(std::log2(b.energy));
    log_mass.push_back(std::log2(b.derivative_mass));
  }
  const LineFit energy_fit = fit_line(ks, log_energy);
  est.alpha = -energy_fit.slope;
  est.intercept = energy_fit.intercept;
  est.alpha_stderr = energy_fit.stderr_slope;
  est.band = 2.0 * energy_fit.stderr_slope;
  est.derivative_slope = fit_line(ks, log_mass).slope;
  est.zygmund_tested = est.alpha >= 0.95 && est.alpha <= 1.05;
  est.zygmund = est.zygmund_tested && std::abs(est.derivative_slope) <= 0.1;
  est.lipschitz = est.derivative_slope < -0.1;
  return est;
}

QuotientTest holder_quotient_test(const SpectralSeries& g, double exponent, double tolerance) {
  QuotientTest out;
  out.exponent = exponent;
  const std::vector<int> sup = g.support();
  const int top = std::max(g.max_frequency(), 1);
  std::vector<double> xs, ys;
  // Steps 2^{-j} are incommensurate with 2π; the finest scales keep 2^6 of
  // frequency range above them so the truncated tail does not bias the slope.
  for (int j = 1; (1LL << (j + 6)) <= top; ++j) {
    const double step = std::ldexp(1.0, -j);
    std::vector<double> terms;
    terms.reserve(sup.size());
    for (int n : sup) {
      if (n == 0) continue;
      const double s = std::sin(0.5 * static_cast<double>(n) * step);
      terms.push_back(8.0 * std::norm(g[n]) * s * s);
    }
    const double q = std::sqrt(kernels::pairwise_sum(terms)) / std::pow(step, exponent);
    out.steps.push_back(step);
    out.quotients.push_back(q);
    xs.push_back(static_cast<double>(j));
    ys.push_back(std::log2(std::max(q, 1e-300)));
  }
  if (out.steps.size() < 3) fail(ErrorCode::TooFewBlocks, "quotient test needs at least three scales");
  out.growth = fit_line(xs, ys).slope;
  out.passed = out.growth <= tolerance;
  return out;
}

// ---------------------------------------------------------------- flow averages

namespace {

FlowCurve average_on_lattice(const GridField& lattice, const std::function<double(std::size_t)>& f_at,
                             const ScalarFunction& g, const TrigField& x, std::span<const double> ts,
                             const FlowOptions& options) {
  if (x.dim() != lattice.dim()) fail(ErrorCode::InvalidArgument, "flow_average: dimension mismatch");
  if (divergence_residual(x) > 1e-10) fail(ErrorCode::InvalidArgument, "flow_average needs a divergence-free field");
  const Flow flow(make_trig_field(x), options);
  const std::size_t np = lattice.num_points();
  std::vector<double> fv(np);
  parallel_for(np, [&](std::size_t i) { fv[i] = f_at(i); });
  FlowCurve curve;
  std::vector<double> terms(np);
  for (double t : ts) {
    parallel_for(np, [&](std::size_t i) { terms[i] = fv[i] * g(flow.map(lattice.point(i), t)); });
    curve.t.push_back(t);
    curve.h.push_back(kernels::pairwise_sum(terms) / static_cast<double>(np));
  }
  return curve;
}

}  // namespace

ScalarFunction circle_pullback(const SpectralSeries& s, std::vector<int> direction) {
  struct Term {
    double n, re, im;
  };
  std::vector<Term> terms;
  double mean = s[0].real();
  for (int n : s.support())
    if (n > 0) terms.push_back({static_cast<double>(n), s[n].real(), s[n].imag()});
  return [terms = std::move(terms), mean, direction = std::move(direction)](const Vec& p) {
    double x = 0.0;
    for (std::size_t i = 0; i < direction.size(); ++i) x += direction[i] * p(static_cast<Eigen::Index>(i));
    double sum = mean;
    for (const Term& t : terms) sum += 2.0 * (t.re * std::cos(t.n * x) - t.im * std::sin(t.n * x));
    return sum;
  };
}

FlowCurve flow_average(const GridField& f, const GridField& g, const TrigField& x, std::span<const double> ts,
                       const FlowOptions& options) {
  if (f.num_components() != 1 || g.num_components() != 1) fail(ErrorCode::InvalidArgument, "flow_average takes scalars");
  if (f.dim() != g.dim()) fail(ErrorCode::InvalidArgument, "flow_average: dimension mismatch");
  return average_on_lattice(
      f, [&](std::size_t i) { return f.value(i, 0); }, [&](const Vec& p) { return g.interpolate(p)(0); }, x, ts,
      options);
}

FlowCurve flow_average(const ScalarFunction& f, const ScalarFunction& g, const TrigField& x, std::span<const double> ts,
                       int resolution, const FlowOptions& options) {
  if (resolution < 2) fail(ErrorCode::InvalidArgument, "flow_average needs a lattice resolution ≥ 2");
  const GridField lattice(x.dim(), resolution, ValueRank::scalar, 0, 1);
  return average_on_lattice(
      lattice, [&](std::size_t i) { return f(lattice.point(i)); }, g, x, ts, options);
}

DifferenceQuotients difference_quotients(const FlowCurve& curve, double t0, double min_rate) {
  const auto lookup = [&](double t) -> std::optional<double> {
    for (std::size_t i = 0; i < curve.t.size(); ++i)
      if (std::abs(curve.t[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return curve.h[i];
    return std::nullopt;
  };
  std::vector<double> steps;
  for (double t : curve.t)
    if (t > t0 && lookup(2.0 * t0 - t)) steps.push_back(t - t0);
  std::sort(steps.begin(), steps.end(), std::greater<>());
  if (steps.size() < 3) fail(ErrorCode::InvalidArgument, "difference quotients need three symmetric offsets");
  DifferenceQuotients out;
  std::vector<double> xs, ys;
  for (double d : steps) {
    out.steps.push_back(d);
    out.quotients.push_back((*lookup(t0 + d) - *lookup(t0 - d)) / (2.0 * d));
    if (out.quotients.size() >= 2) {
      const double inc = std::abs(out.quotients.back() - out.quotients[out.quotients.size() - 2]);
      out.increments.push_back(inc);
      xs.push_back(-std::log2(d));
      ys.push_back(std::log2(std::max(inc, 1e-300)));
    }
  }
  out.decay = xs.size() >= 2 ? -fit_line(xs, ys).slope : 0.0;
  out.converging = out.decay >= min_rate;
  return out;
}

}  // namespace lyaplab
