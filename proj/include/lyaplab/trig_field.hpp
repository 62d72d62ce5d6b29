#pragma once
// Exact trigonometric-polynomial fields on [0, 2π)^d.
//
// A scalar polynomial is a finite sum of c·cos(k·x) + s·sin(k·x) over integer
// frequency vectors k. Frequencies are stored canonically (first nonzero entry
// positive), so each harmonic has exactly one representative.
#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lyaplab/exterior.hpp"

namespace lyaplab {

using Freq = std::array<std::int64_t, kMaxDim>;

struct Harmonic {
  double c = 0.0;
  double s = 0.0;
};

class TrigPoly {
 public:
  explicit TrigPoly(int dim = 2) : dim_(dim) {}
  static TrigPoly constant(int dim, double value);

  int dim() const { return dim_; }
  const std::map<Freq, Harmonic>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  // Adds c·cos(k·x) + s·sin(k·x) for any (not necessarily canonical) k.
  void add(Freq k, double c, double s);

  double operator()(const Vec& p) const;
  double mean() const;
  double max_abs_coefficient() const;
  std::int64_t max_frequency() const;

  TrigPoly partial(int axis) const;
  // x ↦ f(M x) for an integer matrix M (frequencies transform by Mᵀ).
  TrigPoly compose_linear(const Eigen::Matrix<std::int64_t, -1, -1>& m) const;
  TrigPoly pruned(double tol) const;

  TrigPoly& operator+=(const TrigPoly& o);
  TrigPoly& operator-=(const TrigPoly& o);
  TrigPoly& operator*=(double a);
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }
  friend TrigPoly operator*(TrigPoly a, double s) { return a *= s; }
  friend TrigPoly operator*(double s, TrigPoly a) { return a *= s; }
  friend TrigPoly operator*(const TrigPoly& a, const TrigPoly& b);

 private:
  int dim_;
  std::map<Freq, Harmonic> terms_;
};

// ∫ f g dμ, computed from coefficients without forming the product.
double mean_of_product(const TrigPoly& f, const TrigPoly& g);

enum class ValueRank { scalar, form, multivector };

class TrigField {
 public:
  TrigField(int dim, ValueRank rank, int degree);
  static TrigField scalar(TrigPoly f);
  static TrigField vector(std::vector<TrigPoly> components);
  static TrigField constant(int dim, ValueRank rank, int degree, const WVec& value);

  int dim() const { return dim_; }
  ValueRank rank() const { return rank_; }
  int degree() const { return degree_; }
  int num_components() const { return static_cast<int>(comp_.size()); }
  bool is_vector() const { return rank_ == ValueRank::multivector && degree_ == 1; }

  TrigPoly& operator[](int i) { return comp_[static_cast<std::size_t>(i)]; }
  const TrigPoly& operator[](int i) const { return comp_[static_cast<std::size_t>(i)]; }

  WVec operator()(const Vec& p) const;
  std::size_t total_terms() const;
  std::int64_t max_frequency() const;

  TrigField partial(int axis) const;
  TrigField compose_linear(const Eigen::Matrix<std::int64_t, -1, -1>& m) const;
  // Constant matrix acting on the component vector.
  TrigField mix(const WMat& m) const;
  TrigField pruned(double tol) const;
  TrigField times(const TrigPoly& f) const;

  TrigField& operator+=(const TrigField& o);
  TrigField& operator-=(const TrigField& o);
  TrigField& operator*=(double a);
  friend TrigField operator+(TrigField a, const TrigField& b) { return a += b; }
  friend TrigField operator-(TrigField a, const TrigField& b) { return a -= b; }
  friend TrigField operator*(double s, TrigField a) { return a *= s; }

  // Text format: header "# trigfield <dim> <rank> <degree>", then one line per
  // term "component k1 ... kd cos_amp sin_amp".
  void write(std::ostream& os) const;
  static TrigField read(std::istream& is);
  void save(const std::string& path) const;
  static TrigField load(const std::string& path);

 private:
  void check_compatible(const TrigField& o) const;

  int dim_;
  ValueRank rank_;
  int degree_;
  std::vector<TrigPoly> comp_;
};

std::string_view rank_name(ValueRank r);
ValueRank parse_rank(std::string_view name);

// Evaluator with shared phases: each distinct frequency costs one sincos,
// yielding values and first derivatives of every component.
class TrigEvaluator {
 public:
  TrigEvaluator() = default;
  explicit TrigEvaluator(const TrigField& f);

  int dim() const { return dim_; }
  int num_components() const { return ncomp_; }
  WVec value(const Vec& p) const;
  // values (ncomp) and gradient rows: grad(c, j) = ∂_j component c.
  void value_and_gradient(const Vec& p, WVec& value, Eigen::Matrix<double, -1, -1, 0, kMaxWedge, kMaxDim>& grad) const;

 private:
  // cos and sin of k·p for every stored frequency.
  void phases(const Vec& p, double* ca, double* sa) const;

  int dim_ = 0;
  int ncomp_ = 0;
  int max_freq_ = 0;
  std::vector<double> freqs_;  // nfreq × dim
  std::vector<int> ifreqs_;
  std::vector<double> cos_;    // nfreq × ncomp
  std::vector<double> sin_;
  double constant_[kMaxWedge] = {};
};

}  // namespace lyaplab
