#include "lyaplab/grid_field.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "lyaplab/errors.hpp"
#include "lyaplab/kernels.hpp"

namespace lyaplab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr char kMagic[8] = {'L', 'Y', 'A', 'P', 'G', 'R', 'D', '1'};

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

int rank_code(ValueRank r) { return static_cast<int>(r); }

// Lagrange weights for nodes at offsets -1, 0, 1, 2 around fractional position f.
std::array<double, 4> cubic_weights(double f) {
  return {-f * (f - 1) * (f - 2) / 6.0, (f + 1) * (f - 1) * (f - 2) / 2.0,
          -(f + 1) * f * (f - 2) / 2.0, (f + 1) * f * (f - 1) / 6.0};
}

}  // namespace

GridField::GridField(int dim, int n, ValueRank rank, int degree, int interp_order)
    : dim_(dim), n_(n), rank_(rank), degree_(degree), order_(interp_order) {
  if (dim < 1 || dim > kMaxDim) fail(ErrorCode::RankMismatch, "grid dimension out of range");
  if (n < 16) fail(ErrorCode::InvalidArgument, "grid resolution must be at least 16 per axis");
  if (interp_order != 1 && interp_order != 3) fail(ErrorCode::InvalidArgument, "interpolation order must be 1 or 3");
  if (rank == ValueRank::scalar && degree != 0) fail(ErrorCode::RankMismatch, "scalar field has degree 0");
  ncomp_ = binomial(dim, degree);
  if (ncomp_ == 0) fail(ErrorCode::RankMismatch, "degree out of range");
  npoints_ = 1;
  for (int j = 0; j < dim; ++j) npoints_ *= static_cast<std::size_t>(n);
  data_.assign(npoints_ * static_cast<std::size_t>(ncomp_), 0.0);
}

GridField GridField::sample(const TrigField& f, int n, int interp_order) {
  const TrigEvaluator ev(f);
  GridField g(f.dim(), n, f.rank(), f.degree(), interp_order);
  for (std::size_t i = 0; i < g.num_points(); ++i) g.set(i, ev.value(g.point(i)));
  g.validate();
  return g;
}

GridField GridField::from_function(int dim, int n, ValueRank rank, int degree,
                                   const std::function<WVec(const Vec&)>& f, int interp_order) {
  GridField g(dim, n, rank, degree, interp_order);
  for (std::size_t i = 0; i < g.num_points(); ++i) g.set(i, f(g.point(i)));
  g.validate();
  return g;
}

double GridField::spacing() const { return kTwoPi / n_; }

Vec GridField::point(std::size_t i) const {
  Vec p(dim_);
  for (int j = dim_ - 1; j >= 0; --j) {
    p(j) = spacing() * static_cast<double>(i % static_cast<std::size_t>(n_));
    i /= static_cast<std::size_t>(n_);
  }
  return p;
}

WVec GridField::at(std::size_t i) const {
  WVec v(ncomp_);
  for (int c = 0; c < ncomp_; ++c) v(c) = value(i, c);
  return v;
}

void GridField::set(std::size_t i, const WVec& v) {
  if (v.size() != ncomp_) fail(ErrorCode::RankMismatch, "grid value has wrong component count");
  for (int c = 0; c < ncomp_; ++c) value(i, c) = v(c);
}

WVec GridField::interpolate(const Vec& p) const {
  const int taps = order_ == 1 ? 2 : 4;
  const int lo = order_ == 1 ? 0 : -1;
  std::array<std::array<double, 4>, kMaxDim> w{};
  std::array<std::array<std::size_t, 4>, kMaxDim> node{};
  for (int j = 0; j < dim_; ++j) {
    const double u = p(j) / spacing();
    const double base = std::floor(u);
    const double f = u - base;
    const auto ib = static_cast<std::int64_t>(base);
    if (order_ == 1) {
      w[static_cast<std::size_t>(j)] = {1.0 - f, f, 0.0, 0.0};
    } else {
      w[static_cast<std::size_t>(j)] = cubic_weights(f);
    }
    for (int t = 0; t < taps; ++t) {
      std::int64_t idx = (ib + lo + t) % n_;
      if (idx < 0) idx += n_;
      node[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)] = static_cast<std::size_t>(idx);
    }
  }
  WVec out = WVec::Zero(ncomp_);
  std::array<int, kMaxDim> t{};
  while (true) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (int j = 0; j < dim_; ++j) {
      weight *= w[static_cast<std::size_t>(j)][static_cast<std::size_t>(t[static_cast<std::size_t>(j)])];
      flat = flat * static_cast<std::size_t>(n_) +
             node[static_cast<std::size_t>(j)][static_cast<std::size_t>(t[static_cast<std::size_t>(j)])];
    }
    for (int c = 0; c < ncomp_; ++c) out(c) += weight * value(flat, c);
    int j = dim_ - 1;
    while (j >= 0 && ++t[static_cast<std::size_t>(j)] == taps) t[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }
  return out;
}

GridField GridField::partial(int axis) const {
  if (axis < 0 || axis >= dim_) fail(ErrorCode::InvalidArgument, "axis out of range");
  GridField out(dim_, n_, rank_, degree_, order_);
  std::size_t stride = 1;
  for (int j = dim_ - 1; j > axis; --j) stride *= static_cast<std::size_t>(n_);
  const double scale = 1.0 / (12.0 * spacing());
  for (std::size_t i = 0; i < npoints_; ++i) {
    const std::size_t coord = (i / stride) % static_cast<std::size_t>(n_);
    const std::size_t base = i - coord * stride;
    auto at_offset = [&](int off) {
      const auto c = static_cast<std::size_t>((static_cast<int>(coord) + off + n_) % n_);
      return base + c * stride;
    };
    const std::size_t m2 = at_offset(-2), m1 = at_offset(-1), p1 = at_offset(1), p2 = at_offset(2);
    for (int c = 0; c < ncomp_; ++c)
      out.value(i, c) =
          scale * ((value(m2, c) - value(p2, c)) + 8.0 * (value(p1, c) - value(m1, c)));
  }
  return out;
}

GridField GridField::component(int c) const {
  GridField out(dim_, n_, ValueRank::scalar, 0, order_);
  for (std::size_t i = 0; i < npoints_; ++i) out.value(i, 0) = value(i, c);
  return out;
}

void GridField::validate() const {
  for (double v : data_)
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "grid field contains non-finite values");
}

void GridField::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot write " + path);
  os.write(kMagic, sizeof kMagic);
  for (int v : {dim_, n_, rank_code(rank_), degree_, order_, ncomp_}) {
    const auto le = to_little(static_cast<std::int32_t>(v));
    os.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
  for (double v : data_) {
    const double le = to_little(v);
    os.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
  if (!os) fail(ErrorCode::IoError, "write failed for " + path);
}

GridField GridField::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot read " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorCode::IoError, "not a grid field file: " + path);
  std::int32_t h[6];
  for (auto& v : h) {
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    v = to_little(v);
  }
  if (!is || h[2] < 0 || h[2] > 2) fail(ErrorCode::IoError, "corrupt grid field header: " + path);
  GridField g(h[0], h[1], static_cast<ValueRank>(h[2]), h[3], h[4]);
  if (g.ncomp_ != h[5]) fail(ErrorCode::IoError, "component count mismatch: " + path);
  for (double& v : g.data_) {
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    v = to_little(v);
  }
  if (!is) fail(ErrorCode::IoError, "truncated grid field: " + path);
  g.validate();
  return g;
}

double torus_integrate(const GridField& g) {
  if (g.rank() != ValueRank::scalar && g.num_components() != 1)
    fail(ErrorCode::RankMismatch, "torus_integrate needs a scalar field");
  return kernels::pairwise_sum(g.data()) / static_cast<double>(g.num_points());
}

double torus_integrate(const TrigField& g) {
  if (g.num_components() != 1) fail(ErrorCode::RankMismatch, "torus_integrate needs a scalar field");
  return g[0].mean();
}

double grid_max_abs(const GridField& g) {
  double m = 0.0;
  for (double v : g.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace lyaplab
