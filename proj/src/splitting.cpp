#include "lyaplab/splitting.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "lyaplab/errors.hpp"
#include "lyaplab/kernels.hpp"
#include "lyaplab/parallel.hpp"

namespace lyaplab {

namespace {

// Gram–Schmidt with reorthogonalization: the thin QR factor with positive
// diagonal, so spans and orientations of every column prefix are preserved.
Mat orthonormalize(const Mat& z) {
  Mat q = z;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    const double norm = q.col(j).norm();
    if (!(norm > 0.0)) fail(ErrorCode::NormalizationSingular, "bundle frame collapsed during iteration");
    q.col(j) /= norm;
  }
  return q;
}

// sin of the largest principal angle between orthonormal column sets.
double orthonormal_distance(const Mat& a, const Mat& b) { return (b - a * (a.transpose() * b)).norm(); }

// Distance between nested orthonormal flags: largest prefix distance over the given prefix sizes.
double flag_distance(const Mat& a, const Mat& b, std::initializer_list<int> prefixes) {
  double d = 0.0;
  for (int n : prefixes) {
    if (n <= 0 || n > a.cols()) continue;
    d = std::max(d, orthonormal_distance(a.leftCols(n), b.leftCols(n)));
  }
  return d;
}

double spectral_norm(const Mat& m) {
  if (m.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

WVec wedge_of(const Mat& frame, int offset, int count) { return wedge_columns(frame.middleCols(offset, count)); }

// ω dual to V = wedge of the E² columns of `frame`: row I₂ of (∧^k frame)⁻¹.
WVec dual_form(const Mat& frame, const BundleDims& dims) {
  const WedgeBasis& basis = wedge_basis(static_cast<int>(frame.rows()), dims.k);
  IndexSet set;
  set.size = dims.k;
  for (int i = 0; i < dims.k; ++i) set.idx[static_cast<std::size_t>(i)] = dims.lower + i;
  const int row = basis.index_of(set);
  const WMat inv = compound(small_inverse(frame), dims.k);
  return inv.row(row).transpose();
}

Mat volume_scaled(const Mat& frame) {
  const double det = std::abs(small_determinant(frame));
  if (!(det > 1e-14)) fail(ErrorCode::NormalizationSingular, "splitting frame is degenerate (bundles not transverse)");
  return frame * std::pow(det, -1.0 / static_cast<double>(frame.rows()));
}

double block_det(const Mat& m, int offset, int size) {
  if (size == 0) return 1.0;
  return small_determinant(m.block(offset, offset, size, size));
}

struct Normalized {
  Mat scaled;  // frame used for the wedge (volume mode) or the unit frame
  WVec omega;
  WVec v;
};

Normalized normalize(const Mat& frame, const BundleDims& dims, const SplittingOptions& opt, const Vec& p) {
  Normalized n;
  if (opt.normalization == Normalization::volume) {
    n.scaled = volume_scaled(frame);
    n.v = wedge_of(n.scaled, dims.lower, dims.k);
    n.omega = dual_form(n.scaled, dims);
    return n;
  }
  n.scaled = frame;
  const WVec w = wedge_of(frame, dims.lower, dims.k);
  n.omega = opt.reference_omega->value(p);
  const double pairing = n.omega.dot(w);
  if (!(std::abs(pairing) >= 1e-8))
    fail(ErrorCode::NormalizationSingular, "reference form nearly annihilates the bundle (transversality lost)");
  n.v = w / pairing;
  return n;
}

}  // namespace

// ---------------------------------------------------------------- groupings

BundleDims Grouping::dims() const {
  BundleDims d;
  d.lower = d.upper = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (static_cast<int>(b) < target) d.lower += blocks[b];
    else if (static_cast<int>(b) > target) d.upper += blocks[b];
    else d.k = blocks[b];
  }
  return d;
}

void Grouping::validate(int dim) const {
  int total = 0;
  for (int b : blocks) {
    if (b < 1) fail(ErrorCode::SpecInvalid, "grouping: every block needs a positive size");
    total += b;
  }
  if (total != dim) fail(ErrorCode::RankMismatch, "grouping: block sizes must add up to the dimension");
  if (target < 0 || target >= static_cast<int>(blocks.size())) fail(ErrorCode::SpecInvalid, "grouping: target block out of range");
  if (blocks.size() < 2) fail(ErrorCode::SpecInvalid, "grouping: F = E¹ ⊕ E³ must be nontrivial");
}

double subspace_distance(const Mat& a, const Mat& b) {
  return orthonormal_distance(orthonormalize(a), orthonormalize(b));
}

// ---------------------------------------------------------------- pointwise engine

struct PointResult {
  Mat frame, frame_pre, frame_post;  // at p, f⁻¹(p), f(p)
  Normalized at, pre, post;
  Mat df_pre;  // Df(f⁻¹p)
  Mat df;      // Df(p)
  int depth = 0;
  double ratio = 0.0;
};

class PointSplitter {
 public:
  PointSplitter(TorusMap f, std::shared_ptr<const FramedSplitting> seed, SplittingOptions options, int max_depth)
      : f_(std::move(f)), seed_(std::move(seed)), opt_(std::move(options)), max_depth_(max_depth) {
    dims_ = seed_->dims();
    d_ = f_.dim();
    n_upper_ = dims_.lower > 0 ? dims_.k + dims_.upper : dims_.upper;
    n_lower_ = dims_.upper > 0 ? dims_.lower + dims_.k : dims_.lower;
  }

  const BundleDims& dims() const { return dims_; }
  const SplittingOptions& options() const { return opt_; }
  const TorusMap& map() const { return f_; }

  PointResult compute(const Vec& p, bool neighbours) const;

 private:
  struct Orbits {
    std::vector<Vec> back_pts{}, fwd_pts{};
    std::vector<Mat> back_jac{}, fwd_jac{};  // Df at the corresponding points
    std::vector<Mat> fwd_inv{};              // inverses of fwd_jac
  };

  void extend(Orbits& o, int depth) const;
  Mat seed_upper(const Vec& q) const;
  Mat seed_lower(const Vec& q) const;
  Mat upper(const Orbits& o, int s, int m) const;
  Mat lower(const Orbits& o, int s, int m) const;
  Mat assemble(const Mat& up, const Mat& low) const;

  TorusMap f_;
  std::shared_ptr<const FramedSplitting> seed_;
  SplittingOptions opt_;
  int max_depth_;
  BundleDims dims_;
  int d_ = 0;
  int n_upper_ = 0;
  int n_lower_ = 0;
};

void PointSplitter::extend(Orbits& o, int depth) const {
  while (static_cast<int>(o.back_pts.size()) <= depth) {
    Mat j;
    const Vec q = f_.inverse(o.back_pts.back(), &j);
    o.back_pts.push_back(q);
    o.back_jac.push_back(j);
  }
  while (static_cast<int>(o.fwd_pts.size()) <= depth) {
    Mat j;
    const Vec q = f_.apply(o.fwd_pts.back(), &j);
    o.fwd_jac.push_back(j);  // Df at fwd_pts[size−1]
    o.fwd_inv.push_back(small_inverse(j));
    o.fwd_pts.push_back(q);
  }
}

Mat PointSplitter::seed_upper(const Vec& q) const {
  const Mat s = seed_->sample(q).frame;
  Mat z(d_, n_upper_);
  z.leftCols(dims_.upper) = s.middleCols(dims_.offset(2), dims_.upper);
  if (n_upper_ > dims_.upper) z.rightCols(dims_.k) = s.middleCols(dims_.offset(1), dims_.k);
  return z;
}

Mat PointSplitter::seed_lower(const Vec& q) const {
  const Mat s = seed_->sample(q).frame;
  Mat z(d_, n_lower_);
  z.leftCols(dims_.lower) = s.middleCols(0, dims_.lower);
  if (n_lower_ > dims_.lower) z.rightCols(dims_.k) = s.middleCols(dims_.offset(1), dims_.k);
  return z;
}

// Most expanded flag at f^{-s}(p), pushed forward from f^{-(s+m)}(p).
Mat PointSplitter::upper(const Orbits& o, int s, int m) const {
  if (n_upper_ == 0) return Mat(d_, 0);
  Mat z = seed_upper(o.back_pts[static_cast<std::size_t>(s + m)]);
  for (int i = s + m; i > s; --i) z = orthonormalize(o.back_jac[static_cast<std::size_t>(i)] * z);
  return z;
}

// Most contracted flag at f^{s}(p), pulled back from f^{s+m}(p).
Mat PointSplitter::lower(const Orbits& o, int s, int m) const {
  if (n_lower_ == 0) return Mat(d_, 0);
  Mat z = seed_lower(o.fwd_pts[static_cast<std::size_t>(s + m)]);
  for (int i = s + m; i > s; --i) z = orthonormalize(o.fwd_inv[static_cast<std::size_t>(i - 1)] * z);
  return z;
}

Mat PointSplitter::assemble(const Mat& up, const Mat& low) const {
  const int k1 = dims_.lower, k = dims_.k, k3 = dims_.upper;
  Mat frame(d_, d_);
  if (k1 > 0) frame.leftCols(k1) = low.leftCols(k1);
  if (k3 > 0) frame.rightCols(k3) = up.leftCols(k3);
  if (k1 == 0) {
    frame.middleCols(0, k) = low.rightCols(k);
  } else if (k3 == 0) {
    frame.middleCols(k1, k) = up.rightCols(k);
  } else {
    // E² = (E²⊕E³) ∩ (E¹⊕E²): null space of [U, −L].
    Eigen::MatrixXd stacked(d_, up.cols() + low.cols());
    stacked << up, -low;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
    const Eigen::MatrixXd null = svd.matrixV().rightCols(k);
    Mat x = up * null.topRows(up.cols());
    // Orient along the E² columns of the upper flag.
    const Mat coords = up.rightCols(k).transpose() * x;
    if (coords.determinant() < 0.0) x.col(k - 1) *= -1.0;
    frame.middleCols(k1, k) = orthonormalize(x);
  }
  return frame;
}

PointResult PointSplitter::compute(const Vec& p, bool neighbours) const {
  Orbits o;
  o.back_pts.push_back(p);
  {
    Mat j;
    o.fwd_pts.push_back(p);
    o.fwd_pts.push_back(f_.apply(p, &j));
    o.fwd_jac.push_back(j);
    o.fwd_inv.push_back(small_inverse(j));
    o.back_jac.push_back(j);
  }
  int m = std::max(2, opt_.min_depth);
  double ratio = 0.0;
  // First change above rounding level, for the mean contraction per step.
  int first_depth = 0;
  double first_diff = 0.0;
  for (;;) {
    if (m > max_depth_)
      fail(ErrorCode::PowerIterationStalled, "power iteration did not converge within " + std::to_string(max_depth_) +
                                                 " steps (measured contraction ratio " + std::to_string(ratio) + ")");
    extend(o, m);
    const Mat u1 = upper(o, 0, m), u0 = upper(o, 0, m - 1), u00 = upper(o, 0, m - 2);
    const Mat l1 = lower(o, 0, m), l0 = lower(o, 0, m - 1), l00 = lower(o, 0, m - 2);
    const double diff = std::max(flag_distance(u1, u0, {dims_.upper, n_upper_}), flag_distance(l1, l0, {dims_.lower, n_lower_}));
    const double prev = std::max(flag_distance(u0, u00, {dims_.upper, n_upper_}), flag_distance(l0, l00, {dims_.lower, n_lower_}));
    if (first_depth == 0 && prev > 1e-12) {
      first_depth = m - 1;
      first_diff = prev;
    }
    if (first_depth > 0 && diff > 1e-13) ratio = std::pow(diff / first_diff, 1.0 / (m - first_depth));
    if (diff <= opt_.tolerance) break;
    // Extrapolate the geometric decay, never more than doubling the depth.
    const double rho = std::clamp(prev > 0.0 ? diff / prev : 0.5, 0.01, 0.99);
    const double extra = std::ceil(std::log(opt_.tolerance / diff) / std::log(rho));
    m += static_cast<int>(std::clamp(extra, 1.0, static_cast<double>(m)));
  }

  PointResult r;
  r.depth = m;
  r.ratio = ratio;
  const Mat up = upper(o, 0, m), low = lower(o, 0, m);
  r.frame = assemble(up, low);
  r.df = o.fwd_jac[0];
  r.at = normalize(r.frame, dims_, opt_, p);
  if (!neighbours) return r;

  const Mat up_pre = upper(o, 1, m - 1);
  const Mat low_pre = n_lower_ > 0 ? orthonormalize(small_inverse(o.back_jac[1]) * low) : Mat(d_, 0);
  r.frame_pre = assemble(up_pre, low_pre);
  r.df_pre = o.back_jac[1];
  r.pre = normalize(r.frame_pre, dims_, opt_, o.back_pts[1]);

  const Mat up_post = n_upper_ > 0 ? orthonormalize(o.fwd_jac[0] * up) : Mat(d_, 0);
  const Mat low_post = lower(o, 1, m - 1);
  r.frame_post = assemble(up_post, low_post);
  r.post = normalize(r.frame_post, dims_, opt_, o.fwd_pts[1]);
  return r;
}

// ---------------------------------------------------------------- FramedSplitting

FramedSplitting FramedSplitting::constant(const IntMat& linear, BundleDims dims, const Mat& frame) {
  FramedSplitting s;
  s.dim_ = static_cast<int>(frame.rows());
  s.dims_ = dims;
  s.constant_ = true;
  const Mat a = linear.cast<double>();
  SplittingOptions opt;
  const Normalized n = normalize(frame, dims, opt, Vec::Zero(s.dim_));
  s.frames_ = {frame};
  s.omega_ = {n.omega};
  s.v_ = {n.v};
  const Mat m = n.scaled.inverse() * a * n.scaled;
  std::array<double, 3> eta{};
  for (int b = 0; b < 3; ++b) eta[static_cast<std::size_t>(b)] = block_det(m, dims.offset(b), dims.size(b));
  s.eta_tilde_ = {eta};
  s.eta_ = {eta[1]};
  s.diag_.orientation_preserved = eta[1] > 0.0;
  const WVec pushed = compound(a, dims.k) * n.v;
  s.diag_.invariance_residual = (pushed - eta[1] * n.v).norm() / std::abs(eta[1] * n.v.norm());
  s.diag_.pair_residual = std::abs(n.omega.dot(n.v) - 1.0);
  const Mat ainv = a.inverse();
  int prev = -1;
  for (int b = 0; b < 3; ++b) {
    if (dims.size(b) == 0) continue;
    const Mat q = frame.middleCols(dims.offset(b), dims.size(b));
    const auto sv = Eigen::JacobiSVD<Mat>(a * q).singularValues();
    s.bounds_[static_cast<std::size_t>(b)] = {sv(sv.size() - 1), sv(0)};
    s.diag_.orthonormality_residual =
        std::max(s.diag_.orthonormality_residual, (q.transpose() * q - Mat::Identity(q.cols(), q.cols())).norm());
    if (prev >= 0) {
      const Mat qp = frame.middleCols(dims.offset(prev), dims.size(prev));
      s.diag_.domination_ratio = std::max(s.diag_.domination_ratio, spectral_norm(a * qp) * spectral_norm(ainv * q));
    }
    prev = b;
  }
  return s;
}

WVec FramedSplitting::omega_at(std::size_t node) const { return omega_[constant_ ? 0 : node]; }
WVec FramedSplitting::v_at(std::size_t node) const { return v_[constant_ ? 0 : node]; }
double FramedSplitting::eta_tilde_at(std::size_t node, int bundle) const {
  return eta_tilde_[constant_ ? 0 : node][static_cast<std::size_t>(bundle)];
}
double FramedSplitting::eta_at(std::size_t node) const { return eta_[constant_ ? 0 : node]; }

namespace {

int pick_resolution(int requested, int own) {
  const int n = requested > 0 ? requested : own;
  if (n <= 0) fail(ErrorCode::InvalidArgument, "constant splitting needs an explicit lattice resolution");
  return n;
}

}  // namespace

GridField FramedSplitting::omega_grid(int resolution) const {
  if (!constant_ && (resolution == 0 || resolution == resolution_) && omega_grid_) return *omega_grid_;
  const int n = pick_resolution(resolution, resolution_);
  if (!constant_ && n != resolution_) fail(ErrorCode::InvalidArgument, "lattice splitting sampled at a different resolution");
  GridField g(dim_, n, ValueRank::form, dims_.k, 3);
  for (std::size_t i = 0; i < g.num_points(); ++i) g.set(i, omega_at(i));
  return g;
}

GridField FramedSplitting::v_grid(int resolution) const {
  if (!constant_ && (resolution == 0 || resolution == resolution_) && v_grid_) return *v_grid_;
  const int n = pick_resolution(resolution, resolution_);
  if (!constant_ && n != resolution_) fail(ErrorCode::InvalidArgument, "lattice splitting sampled at a different resolution");
  GridField g(dim_, n, ValueRank::multivector, dims_.k, 3);
  for (std::size_t i = 0; i < g.num_points(); ++i) g.set(i, v_at(i));
  return g;
}

GridField FramedSplitting::eta_tilde_grid(int resolution, int bundle) const {
  const int n = pick_resolution(resolution, resolution_);
  if (!constant_ && n != resolution_) fail(ErrorCode::InvalidArgument, "lattice splitting sampled at a different resolution");
  GridField g(dim_, n, ValueRank::scalar, 0, 3);
  for (std::size_t i = 0; i < g.num_points(); ++i) g.value(i, 0) = eta_tilde_at(i, bundle);
  return g;
}

GridField FramedSplitting::eta_grid(int resolution) const {
  const int n = pick_resolution(resolution, resolution_);
  if (!constant_ && n != resolution_) fail(ErrorCode::InvalidArgument, "lattice splitting sampled at a different resolution");
  GridField g(dim_, n, ValueRank::scalar, 0, 3);
  for (std::size_t i = 0; i < g.num_points(); ++i) g.value(i, 0) = eta_at(i);
  return g;
}

SourcePtr FramedSplitting::omega_source() const {
  if (constant_) return make_constant_source(dim_, ValueRank::form, dims_.k, omega_[0]);
  return omega_src_;
}

SourcePtr FramedSplitting::v_source() const {
  if (constant_) return make_constant_source(dim_, ValueRank::multivector, dims_.k, v_[0]);
  return v_src_;
}

PointFrame FramedSplitting::sample(const Vec& p) const {
  if (constant_) return {frames_[0], omega_[0], v_[0]};
  const PointResult r = splitter_->compute(wrap_point(p), false);
  return {r.frame, r.at.omega, r.at.v};
}

// ---------------------------------------------------------------- construction

FramedSplitting exact_splitting(const TorusMap& linear, const Grouping& grouping) {
  if (!linear.is_linear()) fail(ErrorCode::InvalidArgument, "exact_splitting needs a linear map");
  const int d = linear.dim();
  grouping.validate(d);
  const Eigen::MatrixXd a = linear.linear().cast<double>();
  const Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXcd lam = es.eigenvalues();
  const Eigen::MatrixXcd vec = es.eigenvectors();
  const Eigen::MatrixXcd dual = vec.inverse();
  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return std::abs(lam(x)) < std::abs(lam(y)); });

  // Spectral projector of each block, and the moduli gaps between blocks.
  std::vector<Mat> bases;
  int pos = 0;
  double prev_max = 0.0;
  for (std::size_t b = 0; b < grouping.blocks.size(); ++b) {
    const int size = grouping.blocks[b];
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(d, d);
    for (int i = pos; i < pos + size; ++i) {
      const int e = order[static_cast<std::size_t>(i)];
      lo = std::min(lo, std::abs(lam(e)));
      hi = std::max(hi, std::abs(lam(e)));
      proj += vec.col(e) * dual.row(e);
    }
    if (b > 0 && !(lo >= 1.01 * prev_max))
      fail(ErrorCode::NoDomination, "grouping: eigenvalue moduli of consecutive blocks are not separated (ratio " +
                                        std::to_string(lo / prev_max) + " < 1.01)");
    if (proj.imag().norm() > 1e-8 * std::max(1.0, proj.norm()))
      fail(ErrorCode::NoDomination, "grouping splits a complex-conjugate eigenvalue pair");
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(proj.real());
    Mat basis = Eigen::MatrixXd(qr.householderQ()).leftCols(size);
    for (int j = 0; j < size; ++j) {
      Eigen::Index at;
      basis.col(j).cwiseAbs().maxCoeff(&at);
      if (basis(at, j) < 0.0) basis.col(j) *= -1.0;
    }
    bases.push_back(basis);
    prev_max = hi;
    pos += size;
  }
  const BundleDims dims = grouping.dims();
  Mat frame(d, d);
  int col = 0;
  const auto append = [&](std::size_t from, std::size_t to) {
    if (from >= to) return;
    int width = 0;
    for (std::size_t b = from; b < to; ++b) width += static_cast<int>(bases[b].cols());
    Mat joined(d, width);
    int c = 0;
    for (std::size_t b = from; b < to; ++b) {
      joined.middleCols(c, bases[b].cols()) = bases[b];
      c += static_cast<int>(bases[b].cols());
    }
    frame.middleCols(col, width) = to - from > 1 ? orthonormalize(joined) : joined;
    col += width;
  };
  const auto t = static_cast<std::size_t>(grouping.target);
  append(0, t);
  append(t, t + 1);
  append(t + 1, grouping.blocks.size());
  return FramedSplitting::constant(linear.linear(), dims, frame);
}

FramedSplitting power_splitting(const TorusMap& f, const FramedSplitting& seed, int resolution, const SplittingOptions& options,
                                int n_iter) {
  if (seed.dim() != f.dim()) fail(ErrorCode::RankMismatch, "power_splitting: seed dimension mismatch");
  if (resolution < 16) fail(ErrorCode::InvalidArgument, "power_splitting: lattice resolution must be at least 16");
  if (options.normalization == Normalization::reference &&
      (!options.reference_omega || options.reference_omega->rank() != ValueRank::form ||
       options.reference_omega->degree() != seed.dims().k))
    fail(ErrorCode::RankMismatch, "power_splitting: reference normalization needs a k-form");
  const int max_depth = n_iter > 0 ? n_iter : options.max_depth;
  auto splitter = std::make_shared<const PointSplitter>(f, std::make_shared<const FramedSplitting>(seed), options, max_depth);

  FramedSplitting s;
  s.dim_ = f.dim();
  s.dims_ = seed.dims();
  s.constant_ = false;
  s.resolution_ = resolution;
  s.splitter_ = splitter;
  const BundleDims& dims = s.dims_;
  const int d = s.dim_;

  GridField lattice(d, resolution, ValueRank::scalar, 0, 1);
  const std::size_t n = lattice.num_points();
  s.frames_.resize(n);
  s.omega_.resize(n);
  s.v_.resize(n);
  s.eta_tilde_.resize(n);
  s.eta_.resize(n);

  struct NodeStats {
    int depth = 0;
    double ratio = 0.0, pair = 0.0, ortho = 0.0, invariance = 0.0, domination = 0.0;
    bool orientation = true;
    std::array<BundleBounds, 3> bounds{};
  };
  std::vector<NodeStats> stats(n);

  parallel_for(n, [&](std::size_t i) {
    const Vec p = lattice.point(i);
    const PointResult r = splitter->compute(p, true);
    NodeStats& st = stats[i];
    st.depth = r.depth;
    st.ratio = r.ratio;
    s.frames_[i] = r.frame;
    s.omega_[i] = r.at.omega;
    s.v_[i] = r.at.v;

    // η̃ for each bundle from the block-diagonal of B(p)⁻¹ Df(f⁻¹p) B(f⁻¹p).
    const Mat m = small_inverse(r.at.scaled) * r.df_pre * r.pre.scaled;
    std::array<double, 3> eta{};
    for (int b = 0; b < 3; ++b) eta[static_cast<std::size_t>(b)] = block_det(m, dims.offset(b), dims.size(b));
    const WVec pushed = compound(r.df_pre, dims.k) * r.pre.v;
    eta[1] = r.at.omega.dot(pushed);
    s.eta_tilde_[i] = eta;
    s.eta_[i] = r.post.omega.dot(compound(r.df, dims.k) * r.at.v);

    st.orientation = eta[1] > 0.0;
    st.invariance = (pushed - eta[1] * r.at.v).norm() / std::abs(eta[1] * r.at.v.norm());
    st.pair = std::abs(r.at.omega.dot(r.at.v) - 1.0);
    const Mat dfinv = small_inverse(r.df);
    int prev = -1;
    for (int b = 0; b < 3; ++b) {
      if (dims.size(b) == 0) continue;
      const Mat q = r.frame.middleCols(dims.offset(b), dims.size(b));
      st.ortho = std::max(st.ortho, (q.transpose() * q - Mat::Identity(q.cols(), q.cols())).norm());
      const auto sv = Eigen::JacobiSVD<Mat>(r.df * q).singularValues();
      st.bounds[static_cast<std::size_t>(b)] = {sv(sv.size() - 1), sv(0)};
      if (prev >= 0) {
        const Mat qp = r.frame.middleCols(dims.offset(prev), dims.size(prev));
        const Mat qn = r.frame_post.middleCols(dims.offset(b), dims.size(b));
        st.domination = std::max(st.domination, spectral_norm(r.df * qp) * spectral_norm(dfinv * qn));
      }
      prev = b;
    }
  });

  // Deterministic reduction in lattice order.
  SplittingDiagnostics& diag = s.diag_;
  diag.min_iterations = std::numeric_limits<int>::max();
  double depth_sum = 0.0;
  double log_ratio_sum = 0.0;
  int ratio_count = 0;
  for (int b = 0; b < 3; ++b) s.bounds_[static_cast<std::size_t>(b)] = {std::numeric_limits<double>::infinity(), 0.0};
  for (const NodeStats& st : stats) {
    diag.min_iterations = std::min(diag.min_iterations, st.depth);
    diag.max_iterations = std::max(diag.max_iterations, st.depth);
    depth_sum += st.depth;
    if (st.ratio > 0.0) {
      log_ratio_sum += std::log(st.ratio);
      ++ratio_count;
    }
    diag.pair_residual = std::max(diag.pair_residual, st.pair);
    diag.orthonormality_residual = std::max(diag.orthonormality_residual, st.ortho);
    diag.invariance_residual = std::max(diag.invariance_residual, st.invariance);
    diag.domination_ratio = std::max(diag.domination_ratio, st.domination);
    diag.orientation_preserved = diag.orientation_preserved && st.orientation;
    for (int b = 0; b < 3; ++b) {
      auto& bb = s.bounds_[static_cast<std::size_t>(b)];
      if (dims.size(b) == 0) {
        bb = {};
        continue;
      }
      bb.lo = std::min(bb.lo, st.bounds[static_cast<std::size_t>(b)].lo);
      bb.hi = std::max(bb.hi, st.bounds[static_cast<std::size_t>(b)].hi);
    }
  }
  diag.mean_iterations = depth_sum / static_cast<double>(n);
  diag.contraction_ratio = ratio_count > 0 ? std::exp(log_ratio_sum / ratio_count) : 0.0;

  if (diag.invariance_residual > options.invariance_tolerance)
    fail(ErrorCode::InvarianceResidualHigh,
         "power_splitting: invariance residual " + std::to_string(diag.invariance_residual) + " above tolerance");
  if (options.check_domination && !(diag.domination_ratio < 1.0))
    fail(ErrorCode::NoDomination, "power_splitting: measured domination ratio " + std::to_string(diag.domination_ratio) + " ≥ 1");

  auto og = std::make_shared<GridField>(d, resolution, ValueRank::form, dims.k, 3);
  auto vg = std::make_shared<GridField>(d, resolution, ValueRank::multivector, dims.k, 3);
  for (std::size_t i = 0; i < n; ++i) {
    og->set(i, s.omega_[i]);
    vg->set(i, s.v_[i]);
  }
  s.omega_grid_ = og;
  s.v_grid_ = vg;
  s.omega_src_ = make_source(*og);
  s.v_src_ = make_source(*vg);
  return s;
}

EtaFields eta_field(const TorusMap& f, const FramedSplitting& split, int resolution) {
  if (!split.is_constant()) return {split.eta_tilde_grid(resolution), split.eta_grid(resolution)};
  const int d = split.dim();
  const int k = split.dims().k;
  if (f.dim() != d) fail(ErrorCode::RankMismatch, "eta_field: dimension mismatch");
  const int n = resolution > 0 ? resolution : 64;
  EtaFields out{GridField(d, n, ValueRank::scalar, 0, 3), GridField(d, n, ValueRank::scalar, 0, 3)};
  const WVec v = split.v_at(0), omega = split.omega_at(0);
  std::vector<double> residual(out.eta.num_points());
  parallel_for(out.eta.num_points(), [&](std::size_t i) {
    const Vec p = out.eta.point(i);
    Mat jpre, j;
    f.inverse(p, &jpre);
    f.apply(p, &j);
    const WVec pushed = compound(jpre, k) * v;
    const double et = omega.dot(pushed);
    out.eta_tilde.value(i, 0) = et;
    out.eta.value(i, 0) = omega.dot(compound(j, k) * v);
    residual[i] = (pushed - et * v).norm() / std::abs(et * v.norm());
  });
  const double worst = *std::max_element(residual.begin(), residual.end());
  if (!(worst <= 1e-8))
    fail(ErrorCode::InvarianceResidualHigh, "eta_field: splitting is not invariant under the map (residual " + std::to_string(worst) + ")");
  return out;
}

double lyapunov_exponent(const FramedSplitting& split, int bundle) {
  if (split.dims().size(bundle) == 0) return 0.0;
  if (split.is_constant()) return std::log(std::abs(split.eta_tilde_at(0, bundle)));
  std::vector<double> logs(split.num_points());
  for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log(std::abs(split.eta_tilde_at(i, bundle)));
  return kernels::pairwise_sum(logs) / static_cast<double>(logs.size());
}

std::array<double, 3> lyapunov_exponents(const FramedSplitting& split) {
  return {lyapunov_exponent(split, 0), lyapunov_exponent(split, 1), lyapunov_exponent(split, 2)};
}

double birkhoff_oracle(const TorusMap& f, const BundleDims& dims, const Mat& seed, int n_orbit, int n_points, int burn_in) {
  const int d = f.dim();
  if (seed.rows() != d || seed.cols() != d || dims.total() != d) fail(ErrorCode::RankMismatch, "birkhoff_oracle: seed frame shape");
  if (n_orbit < 1 || n_points < 1 || burn_in < 0) fail(ErrorCode::InvalidArgument, "birkhoff_oracle: bad sample sizes");
  const int cols = dims.upper + dims.k;
  Mat start(d, cols);
  start.leftCols(dims.upper) = seed.rightCols(dims.upper);
  start.rightCols(dims.k) = seed.middleCols(dims.lower, dims.k);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n_points);
  std::vector<double> averages(total);
  parallel_for(total, [&](std::size_t idx) {
    Vec x(d);
    std::size_t rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      x(a) = 2.0 * std::numbers::pi * (static_cast<double>(rest % static_cast<std::size_t>(n_points)) + 0.5) / n_points;
      rest /= static_cast<std::size_t>(n_points);
    }
    Mat z = start;
    std::vector<double> logs;
    logs.reserve(static_cast<std::size_t>(n_orbit));
    for (int s = 0; s < burn_in + n_orbit; ++s) {
      Mat j;
      const Vec next = f.apply(x, &j);
      const Eigen::HouseholderQR<Mat> qr(j * z);
      const Mat& r = qr.matrixQR();
      if (s >= burn_in) {
        double acc = 0.0;
        for (int c = dims.upper; c < cols; ++c) acc += std::log(std::abs(r(c, c)));
        logs.push_back(acc);
      }
      z = orthonormalize(j * z);
      x = next;
    }
    averages[idx] = kernels::pairwise_sum(logs) / n_orbit;
  });
  return kernels::pairwise_sum(averages) / static_cast<double>(total);
}

}  // namespace lyaplab
