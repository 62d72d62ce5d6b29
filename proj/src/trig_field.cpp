#include "lyaplab/trig_field.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "lyaplab/errors.hpp"

namespace lyaplab {
namespace {

bool is_zero(const Freq& k) {
  for (auto v : k)
    if (v != 0) return false;
  return true;
}

// Returns +1 if k is canonical, -1 if -k is.
int orientation(const Freq& k) {
  for (auto v : k) {
    if (v > 0) return 1;
    if (v < 0) return -1;
  }
  return 1;
}

double phase(const Freq& k, const Vec& p) {
  double a = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) a += static_cast<double>(k[static_cast<std::size_t>(j)]) * p(j);
  return a;
}

}  // namespace

TrigPoly TrigPoly::constant(int dim, double value) {
  TrigPoly f(dim);
  f.add(Freq{}, value, 0.0);
  return f;
}

void TrigPoly::add(Freq k, double c, double s) {
  for (int j = dim_; j < kMaxDim; ++j)
    if (k[static_cast<std::size_t>(j)] != 0) fail(ErrorCode::RankMismatch, "frequency exceeds field dimension");
  if (orientation(k) < 0) {
    for (auto& v : k) v = -v;
    s = -s;
  }
  if (is_zero(k)) s = 0.0;
  if (c == 0.0 && s == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(k, Harmonic{c, s});
  if (!inserted) {
    it->second.c += c;
    it->second.s += s;
    if (it->second.c == 0.0 && it->second.s == 0.0) terms_.erase(it);
  }
}

double TrigPoly::operator()(const Vec& p) const {
  double v = 0.0;
  for (const auto& [k, h] : terms_) {
    const double a = phase(k, p);
    v += h.c * std::cos(a) + h.s * std::sin(a);
  }
  return v;
}

double TrigPoly::mean() const {
  const auto it = terms_.find(Freq{});
  return it == terms_.end() ? 0.0 : it->second.c;
}

double TrigPoly::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& [k, h] : terms_) m = std::max({m, std::abs(h.c), std::abs(h.s)});
  return m;
}

std::int64_t TrigPoly::max_frequency() const {
  std::int64_t m = 0;
  for (const auto& [k, h] : terms_)
    for (auto v : k) m = std::max(m, v < 0 ? -v : v);
  return m;
}

TrigPoly TrigPoly::partial(int axis) const {
  TrigPoly out(dim_);
  for (const auto& [k, h] : terms_) {
    const double kj = static_cast<double>(k[static_cast<std::size_t>(axis)]);
    if (kj == 0.0) continue;
    out.terms_.emplace(k, Harmonic{kj * h.s, -kj * h.c});
  }
  return out;
}

TrigPoly TrigPoly::compose_linear(const Eigen::Matrix<std::int64_t, -1, -1>& m) const {
  TrigPoly out(dim_);
  for (const auto& [k, h] : terms_) {
    Freq nk{};
    for (int i = 0; i < dim_; ++i) {
      std::int64_t acc = 0;
      for (int j = 0; j < dim_; ++j) acc += m(j, i) * k[static_cast<std::size_t>(j)];
      nk[static_cast<std::size_t>(i)] = acc;
    }
    out.add(nk, h.c, h.s);
  }
  return out;
}

TrigPoly TrigPoly::pruned(double tol) const {
  TrigPoly out(dim_);
  for (const auto& [k, h] : terms_)
    if (std::abs(h.c) > tol || std::abs(h.s) > tol) out.terms_.emplace(k, h);
  return out;
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& o) {
  for (const auto& [k, h] : o.terms_) add(k, h.c, h.s);
  return *this;
}

TrigPoly& TrigPoly::operator-=(const TrigPoly& o) {
  for (const auto& [k, h] : o.terms_) add(k, -h.c, -h.s);
  return *this;
}

TrigPoly& TrigPoly::operator*=(double a) {
  if (a == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, h] : terms_) {
    h.c *= a;
    h.s *= a;
  }
  return *this;
}

TrigPoly operator*(const TrigPoly& a, const TrigPoly& b) {
  TrigPoly out(a.dim());
  for (const auto& [k1, h1] : a.terms()) {
    for (const auto& [k2, h2] : b.terms()) {
      Freq sum{}, diff{};
      for (std::size_t j = 0; j < sum.size(); ++j) {
        sum[j] = k1[j] + k2[j];
        diff[j] = k1[j] - k2[j];
      }
      out.add(sum, 0.5 * (h1.c * h2.c - h1.s * h2.s), 0.5 * (h1.c * h2.s + h1.s * h2.c));
      out.add(diff, 0.5 * (h1.c * h2.c + h1.s * h2.s), 0.5 * (h1.s * h2.c - h1.c * h2.s));
    }
  }
  return out;
}

double mean_of_product(const TrigPoly& f, const TrigPoly& g) {
  const TrigPoly& small = f.size() <= g.size() ? f : g;
  const TrigPoly& large = f.size() <= g.size() ? g : f;
  double acc = 0.0;
  for (const auto& [k, h] : small.terms()) {
    const auto it = large.terms().find(k);
    if (it == large.terms().end()) continue;
    if (is_zero(k))
      acc += h.c * it->second.c;
    else
      acc += 0.5 * (h.c * it->second.c + h.s * it->second.s);
  }
  return acc;
}

// ---------------------------------------------------------------- TrigField

std::string_view rank_name(ValueRank r) {
  switch (r) {
    case ValueRank::scalar: return "scalar";
    case ValueRank::form: return "form";
    case ValueRank::multivector: return "multivector";
  }
  return "scalar";
}

ValueRank parse_rank(std::string_view name) {
  if (name == "scalar") return ValueRank::scalar;
  if (name == "form" || name == "covector") return ValueRank::form;
  if (name == "multivector" || name == "vector") return ValueRank::multivector;
  fail(ErrorCode::InvalidArgument, "unknown value rank: " + std::string(name));
}

TrigField::TrigField(int dim, ValueRank rank, int degree) : dim_(dim), rank_(rank), degree_(degree) {
  if (rank == ValueRank::scalar && degree != 0) fail(ErrorCode::RankMismatch, "scalar field has degree 0");
  if (dim < 1 || dim > kMaxDim || degree < 0 || degree > dim)
    fail(ErrorCode::RankMismatch, "field degree out of range");
  comp_.assign(static_cast<std::size_t>(binomial(dim, degree)), TrigPoly(dim));
}

TrigField TrigField::scalar(TrigPoly f) {
  TrigField out(f.dim(), ValueRank::scalar, 0);
  out.comp_[0] = std::move(f);
  return out;
}

TrigField TrigField::vector(std::vector<TrigPoly> components) {
  const int d = static_cast<int>(components.size());
  TrigField out(d, ValueRank::multivector, 1);
  for (int i = 0; i < d; ++i) {
    if (components[static_cast<std::size_t>(i)].dim() != d)
      fail(ErrorCode::RankMismatch, "vector component dimension mismatch");
    out.comp_[static_cast<std::size_t>(i)] = std::move(components[static_cast<std::size_t>(i)]);
  }
  return out;
}

TrigField TrigField::constant(int dim, ValueRank rank, int degree, const WVec& value) {
  TrigField out(dim, rank, degree);
  if (value.size() != out.num_components()) fail(ErrorCode::RankMismatch, "constant value size");
  for (int i = 0; i < out.num_components(); ++i) out[i].add(Freq{}, value(i), 0.0);
  return out;
}

WVec TrigField::operator()(const Vec& p) const {
  WVec v(num_components());
  for (int i = 0; i < num_components(); ++i) v(i) = comp_[static_cast<std::size_t>(i)](p);
  return v;
}

std::size_t TrigField::total_terms() const {
  std::size_t n = 0;
  for (const auto& c : comp_) n += c.size();
  return n;
}

std::int64_t TrigField::max_frequency() const {
  std::int64_t m = 0;
  for (const auto& c : comp_) m = std::max(m, c.max_frequency());
  return m;
}

TrigField TrigField::partial(int axis) const {
  TrigField out(dim_, rank_, degree_);
  for (std::size_t i = 0; i < comp_.size(); ++i) out.comp_[i] = comp_[i].partial(axis);
  return out;
}

TrigField TrigField::compose_linear(const Eigen::Matrix<std::int64_t, -1, -1>& m) const {
  TrigField out(dim_, rank_, degree_);
  for (std::size_t i = 0; i < comp_.size(); ++i) out.comp_[i] = comp_[i].compose_linear(m);
  return out;
}

TrigField TrigField::mix(const WMat& m) const {
  if (m.cols() != num_components() || m.rows() != num_components())
    fail(ErrorCode::RankMismatch, "component matrix size");
  TrigField out(dim_, rank_, degree_);
  for (int i = 0; i < num_components(); ++i)
    for (int j = 0; j < num_components(); ++j)
      if (m(i, j) != 0.0) out[i] += m(i, j) * comp_[static_cast<std::size_t>(j)];
  return out;
}

TrigField TrigField::pruned(double tol) const {
  TrigField out(dim_, rank_, degree_);
  for (std::size_t i = 0; i < comp_.size(); ++i) out.comp_[i] = comp_[i].pruned(tol);
  return out;
}

TrigField TrigField::times(const TrigPoly& f) const {
  TrigField out(dim_, rank_, degree_);
  for (std::size_t i = 0; i < comp_.size(); ++i) out.comp_[i] = comp_[i] * f;
  return out;
}

void TrigField::check_compatible(const TrigField& o) const {
  if (o.dim_ != dim_ || o.rank_ != rank_ || o.degree_ != degree_)
    fail(ErrorCode::RankMismatch, "trig fields of different rank");
}

TrigField& TrigField::operator+=(const TrigField& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < comp_.size(); ++i) comp_[i] += o.comp_[i];
  return *this;
}

TrigField& TrigField::operator-=(const TrigField& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < comp_.size(); ++i) comp_[i] -= o.comp_[i];
  return *this;
}

TrigField& TrigField::operator*=(double a) {
  for (auto& c : comp_) c *= a;
  return *this;
}

void TrigField::write(std::ostream& os) const {
  os << "# trigfield " << dim_ << ' ' << rank_name(rank_) << ' ' << degree_ << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < comp_.size(); ++i)
    for (const auto& [k, h] : comp_[i].terms()) {
      os << i;
      for (int j = 0; j < dim_; ++j) os << ' ' << k[static_cast<std::size_t>(j)];
      os << ' ' << h.c << ' ' << h.s << '\n';
    }
}

TrigField TrigField::read(std::istream& is) {
  std::string line;
  int dim = -1, degree = -1;
  ValueRank rank = ValueRank::scalar;
  std::vector<std::string> body;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tag, rank_s;
      hs >> tag;
      if (tag == "trigfield") {
        hs >> dim >> rank_s >> degree;
        if (!hs) fail(ErrorCode::SpecInvalid, "malformed trigfield header");
        rank = parse_rank(rank_s);
      }
      continue;
    }
    body.push_back(line);
  }
  if (dim < 0) fail(ErrorCode::SpecInvalid, "trigfield header missing");
  TrigField out(dim, rank, degree);
  for (const auto& l : body) {
    std::istringstream ls(l);
    int comp = -1;
    Freq k{};
    double c = 0, s = 0;
    ls >> comp;
    for (int j = 0; j < dim; ++j) ls >> k[static_cast<std::size_t>(j)];
    ls >> c >> s;
    if (!ls || comp < 0 || comp >= out.num_components())
      fail(ErrorCode::SpecInvalid, "malformed trigfield term: " + l);
    out[comp].add(k, c, s);
  }
  return out;
}

void TrigField::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::IoError, "cannot write " + path);
  write(os);
}

TrigField TrigField::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::IoError, "cannot read " + path);
  return read(is);
}

// ------------------------------------------------------------ TrigEvaluator

TrigEvaluator::TrigEvaluator(const TrigField& f) : dim_(f.dim()), ncomp_(f.num_components()) {
  std::map<Freq, std::size_t> index;
  for (int c = 0; c < ncomp_; ++c)
    for (const auto& [k, h] : f[c].terms()) {
      if (is_zero(k)) continue;
      index.try_emplace(k, index.size());
    }
  const std::size_t nf = index.size();
  freqs_.assign(nf * static_cast<std::size_t>(dim_), 0.0);
  cos_.assign(nf * static_cast<std::size_t>(ncomp_), 0.0);
  sin_.assign(nf * static_cast<std::size_t>(ncomp_), 0.0);
  ifreqs_.assign(nf * static_cast<std::size_t>(dim_), 0);
  for (const auto& [k, i] : index)
    for (int j = 0; j < dim_; ++j) {
      const auto kj = k[static_cast<std::size_t>(j)];
      freqs_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(j)] = static_cast<double>(kj);
      ifreqs_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(j)] = static_cast<int>(kj);
      max_freq_ = static_cast<int>(std::max<std::int64_t>(max_freq_, kj < 0 ? -kj : kj));
    }
  for (int c = 0; c < ncomp_; ++c)
    for (const auto& [k, h] : f[c].terms()) {
      if (is_zero(k)) {
        constant_[c] = h.c;
        continue;
      }
      const std::size_t i = index.at(k);
      cos_[i * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(c)] = h.c;
      sin_[i * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(c)] = h.s;
    }
}

namespace {
constexpr int kPhaseTableMax = 16;
}

// Small frequencies: products of per-axis powers of e^{ip_j}, one sincos per axis.
void TrigEvaluator::phases(const Vec& p, double* ca, double* sa) const {
  const std::size_t nf = freqs_.size() / static_cast<std::size_t>(dim_ > 0 ? dim_ : 1);
  if (max_freq_ > kPhaseTableMax || nf < static_cast<std::size_t>(2 * dim_)) {
    for (std::size_t i = 0; i < nf; ++i) {
      const double* k = &freqs_[i * static_cast<std::size_t>(dim_)];
      double a = 0.0;
      for (int j = 0; j < dim_; ++j) a += k[j] * p(j);
      ca[i] = std::cos(a);
      sa[i] = std::sin(a);
    }
    return;
  }
  double pr[kMaxDim][kPhaseTableMax + 1];
  double pi[kMaxDim][kPhaseTableMax + 1];
  for (int j = 0; j < dim_; ++j) {
    pr[j][0] = 1.0;
    pi[j][0] = 0.0;
    if (max_freq_ >= 1) {
      pr[j][1] = std::cos(p(j));
      pi[j][1] = std::sin(p(j));
    }
    for (int m = 2; m <= max_freq_; ++m) {
      const int a = m / 2, b = m - m / 2;
      pr[j][m] = pr[j][a] * pr[j][b] - pi[j][a] * pi[j][b];
      pi[j][m] = pr[j][a] * pi[j][b] + pi[j][a] * pr[j][b];
    }
  }
  for (std::size_t i = 0; i < nf; ++i) {
    const int* k = &ifreqs_[i * static_cast<std::size_t>(dim_)];
    double zr = 1.0, zi = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const int m = k[j] < 0 ? -k[j] : k[j];
      const double er = pr[j][m], ei = k[j] < 0 ? -pi[j][m] : pi[j][m];
      const double r = zr * er - zi * ei;
      zi = zr * ei + zi * er;
      zr = r;
    }
    ca[i] = zr;
    sa[i] = zi;
  }
}

namespace {
// Phase storage on the stack for small series.
class PhaseBuffer {
 public:
  explicit PhaseBuffer(std::size_t n) {
    if (n <= kInline) {
      cs_ = inline_cs_.data();
      sn_ = inline_sn_.data();
      return;
    }
    thread_local std::vector<double> cs, sn;
    cs.resize(n);
    sn.resize(n);
    cs_ = cs.data();
    sn_ = sn.data();
  }
  double* cs() { return cs_; }
  double* sn() { return sn_; }

 private:
  static constexpr std::size_t kInline = 64;
  std::array<double, kInline> inline_cs_, inline_sn_;
  double* cs_;
  double* sn_;
};
}  // namespace

WVec TrigEvaluator::value(const Vec& p) const {
  double acc[kMaxWedge];
  for (int c = 0; c < ncomp_; ++c) acc[c] = constant_[c];
  const std::size_t nf = freqs_.size() / static_cast<std::size_t>(dim_ > 0 ? dim_ : 1);
  PhaseBuffer buf(nf);
  phases(p, buf.cs(), buf.sn());
  for (std::size_t i = 0; i < nf; ++i) {
    const double ca = buf.cs()[i], sa = buf.sn()[i];
    const double* cc = &cos_[i * static_cast<std::size_t>(ncomp_)];
    const double* ss = &sin_[i * static_cast<std::size_t>(ncomp_)];
    for (int c = 0; c < ncomp_; ++c) acc[c] += cc[c] * ca + ss[c] * sa;
  }
  WVec v(ncomp_);
  for (int c = 0; c < ncomp_; ++c) v(c) = acc[c];
  return v;
}

void TrigEvaluator::value_and_gradient(const Vec& p, WVec& value,
                                       Eigen::Matrix<double, -1, -1, 0, kMaxWedge, kMaxDim>& grad) const {
  double acc[kMaxWedge];
  double g[kMaxWedge][kMaxDim] = {};
  for (int c = 0; c < ncomp_; ++c) acc[c] = constant_[c];
  const std::size_t nf = freqs_.size() / static_cast<std::size_t>(dim_ > 0 ? dim_ : 1);
  PhaseBuffer buf(nf);
  phases(p, buf.cs(), buf.sn());
  for (std::size_t i = 0; i < nf; ++i) {
    const double* k = &freqs_[i * static_cast<std::size_t>(dim_)];
    const double ca = buf.cs()[i], sa = buf.sn()[i];
    const double* cc = &cos_[i * static_cast<std::size_t>(ncomp_)];
    const double* ss = &sin_[i * static_cast<std::size_t>(ncomp_)];
    for (int c = 0; c < ncomp_; ++c) {
      acc[c] += cc[c] * ca + ss[c] * sa;
      const double w = ss[c] * ca - cc[c] * sa;
      for (int j = 0; j < dim_; ++j) g[c][j] += k[j] * w;
    }
  }
  value.resize(ncomp_);
  grad.resize(ncomp_, dim_);
  for (int c = 0; c < ncomp_; ++c) {
    value(c) = acc[c];
    for (int j = 0; j < dim_; ++j) grad(c, j) = g[c][j];
  }
}

}  // namespace lyaplab
