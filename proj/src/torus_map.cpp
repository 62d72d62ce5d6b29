#include "lyaplab/torus_map.hpp"

#include <cmath>
#include <sstream>

#include "lyaplab/errors.hpp"

namespace lyaplab {
namespace {

constexpr int kNewtonIterations = 100;
constexpr double kNewtonTol = 1e-12;

class FlowStage final : public MapStage {
 public:
  FlowStage(Flow flow, double time) : flow_(std::move(flow)), time_(time) {}
  Vec apply(const Vec& p, Mat* jacobian) const override { return flow_.map(p, time_, jacobian); }
  Vec invert(const Vec& q, Mat* forward_jacobian) const override {
    Mat back;
    const Vec p = flow_.map(q, -time_, forward_jacobian ? &back : nullptr);
    if (forward_jacobian) *forward_jacobian = small_inverse(back);
    return p;
  }

 private:
  Flow flow_;
  double time_;
};

// p ↦ p + δ(p), inverted by Newton iteration started at q.
class DisplacementStage : public MapStage {
 public:
  Vec apply(const Vec& p, Mat* jacobian) const override {
    Vec delta;
    Mat jd;
    eval(p, delta, jd);
    if (jacobian) *jacobian = Mat::Identity(p.size(), p.size()) + jd;
    return wrap_point(p + delta);
  }
  Vec invert(const Vec& q, Mat* forward_jacobian) const override {
    const int d = static_cast<int>(q.size());
    Vec p = q;
    for (int it = 0; it < kNewtonIterations; ++it) {
      Vec delta;
      Mat jd;
      eval(wrap_point(p), delta, jd);
      const Vec residual = p + delta - q;
      const Mat jac = Mat::Identity(d, d) + jd;
      const Vec step = jac.partialPivLu().solve(residual);
      p -= step;
      if (step.cwiseAbs().maxCoeff() <= kNewtonTol) {
        if (forward_jacobian) {
          eval(wrap_point(p), delta, jd);
          *forward_jacobian = Mat::Identity(d, d) + jd;
        }
        return wrap_point(p);
      }
    }
    std::ostringstream os;
    os << "preimage solve did not converge in " << kNewtonIterations << " iterations";
    fail(ErrorCode::InverseIterationDiverged, os.str());
  }

 protected:
  virtual void eval(const Vec& p, Vec& delta, Mat& jacobian) const = 0;

  // Sufficient condition for a diffeomorphism: sup |Dδ| < 1 on a probe lattice.
  void check_diffeomorphism(int dim) const {
    const int n = dim <= 2 ? 32 : 12;
    std::size_t total = 1;
    for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(n);
    double worst = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      Vec p(dim);
      std::size_t r = i;
      for (int j = dim - 1; j >= 0; --j) {
        p(j) = 2.0 * M_PI * static_cast<double>(r % static_cast<std::size_t>(n)) / n;
        r /= static_cast<std::size_t>(n);
      }
      Vec delta;
      Mat jd;
      eval(p, delta, jd);
      worst = std::max(worst, Eigen::JacobiSVD<Mat>(jd).singularValues()(0));
    }
    if (!(worst < 1.0)) {
      std::ostringstream os;
      os << "displacement derivative norm " << worst << " >= 1; not a certified diffeomorphism";
      fail(ErrorCode::InvalidArgument, os.str());
    }
  }
};

class TrigDisplacementStage final : public DisplacementStage {
 public:
  explicit TrigDisplacementStage(const TrigField& delta) : eval_(delta), dim_(delta.dim()) {
    if (!delta.is_vector()) fail(ErrorCode::RankMismatch, "displacement must be a vector field");
    check_diffeomorphism(dim_);
  }

 protected:
  void eval(const Vec& p, Vec& delta, Mat& jacobian) const override {
    WVec v;
    Eigen::Matrix<double, -1, -1, 0, kMaxWedge, kMaxDim> g;
    eval_.value_and_gradient(p, v, g);
    delta = v;
    jacobian = g;
  }

 private:
  TrigEvaluator eval_;
  int dim_;
};

class GridDisplacementStage final : public DisplacementStage {
 public:
  explicit GridDisplacementStage(GridField delta) : delta_(std::move(delta)) {
    if (delta_.rank() != ValueRank::multivector || delta_.degree() != 1)
      fail(ErrorCode::RankMismatch, "displacement must be a vector field");
    for (int j = 0; j < delta_.dim(); ++j) partials_.push_back(delta_.partial(j));
    check_diffeomorphism(delta_.dim());
  }

 protected:
  void eval(const Vec& p, Vec& delta, Mat& jacobian) const override {
    delta = delta_.interpolate(p);
    const int d = delta_.dim();
    jacobian.resize(d, d);
    for (int j = 0; j < d; ++j) jacobian.col(j) = partials_[static_cast<std::size_t>(j)].interpolate(p);
  }

 private:
  GridField delta_;
  std::vector<GridField> partials_;
};

IntMat integer_inverse(const IntMat& l) {
  const Eigen::MatrixXd ld = l.cast<double>();
  const double det = ld.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-9)
    fail(ErrorCode::InvalidArgument, "linear part must have determinant ±1");
  const Eigen::MatrixXd inv = ld.inverse();
  IntMat out(l.rows(), l.cols());
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    for (Eigen::Index j = 0; j < l.cols(); ++j) out(i, j) = std::llround(inv(i, j));
  if ((l * out - IntMat::Identity(l.rows(), l.cols())).cwiseAbs().maxCoeff() != 0)
    fail(ErrorCode::InvalidArgument, "linear part inverse is not integral");
  return out;
}

}  // namespace

TorusMap::TorusMap(IntMat linear) : linear_(std::move(linear)) {
  if (linear_.rows() != linear_.cols() || linear_.rows() < 1 || linear_.rows() > kMaxDim)
    fail(ErrorCode::InvalidArgument, "linear part must be square of size 1..4");
  linear_inv_ = integer_inverse(linear_);
}

TorusMap TorusMap::identity(int dim) { return TorusMap(IntMat::Identity(dim, dim)); }

TorusMap TorusMap::cat_map() {
  IntMat l(2, 2);
  l << 2, 1, 1, 1;
  return TorusMap(l);
}

TorusMap TorusMap::then_flow(FieldPtr field, double time, FlowOptions options) const {
  return then_flow(Flow(std::move(field), options), time);
}

TorusMap TorusMap::then_flow(const Flow& flow, double time) const {
  if (flow.field().dim() != dim()) fail(ErrorCode::RankMismatch, "flow dimension mismatch");
  TorusMap out = *this;
  if (time != 0.0 && !flow.field().is_zero()) out.stages_.push_back(std::make_shared<FlowStage>(flow, time));
  return out;
}

TorusMap TorusMap::then_displacement(const TrigField& delta) const {
  if (delta.dim() != dim()) fail(ErrorCode::RankMismatch, "displacement dimension mismatch");
  TorusMap out = *this;
  out.stages_.push_back(std::make_shared<TrigDisplacementStage>(delta));
  return out;
}

TorusMap TorusMap::then_grid_displacement(GridField delta) const {
  if (delta.dim() != dim()) fail(ErrorCode::RankMismatch, "displacement dimension mismatch");
  TorusMap out = *this;
  out.stages_.push_back(std::make_shared<GridDisplacementStage>(std::move(delta)));
  return out;
}

Vec TorusMap::apply(const Vec& p, Mat* jacobian) const {
  const Mat l = linear_real();
  Vec q = wrap_point(l * p);
  if (jacobian) *jacobian = l;
  Mat js;
  for (const auto& s : stages_) {
    q = s->apply(q, jacobian ? &js : nullptr);
    if (jacobian) *jacobian = js * *jacobian;
  }
  return q;
}

Vec TorusMap::inverse(const Vec& q, Mat* forward_jacobian) const {
  Vec p = q;
  Mat acc = Mat::Identity(dim(), dim()), js;
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
    p = (*it)->invert(p, forward_jacobian ? &js : nullptr);
    if (forward_jacobian) acc = acc * js;
  }
  if (forward_jacobian) *forward_jacobian = acc * linear_real();
  return wrap_point(linear_inv_.cast<double>() * p);
}

TorusMap flow_map(const TrigField& x, double t, int resolution, FlowOptions options) {
  const Flow flow(make_trig_field(x), options);
  GridField delta = GridField::from_function(
      x.dim(), resolution, ValueRank::multivector, 1,
      [&](const Vec& p) -> WVec { return flow.lift(p, t) - p; }, 3);
  return TorusMap::identity(x.dim()).then_grid_displacement(std::move(delta));
}

}  // namespace lyaplab
