#include "lyaplab/vector_field.hpp"

#include "lyaplab/errors.hpp"

namespace lyaplab {

TrigVectorField::TrigVectorField(TrigField field) : field_(std::move(field)), eval_(field_) {
  if (!field_.is_vector()) fail(ErrorCode::RankMismatch, "expected a vector field");
}

Vec TrigVectorField::value(const Vec& p) const { return eval_.value(p); }

void TrigVectorField::value_and_jacobian(const Vec& p, Vec& value, Mat& jacobian) const {
  WVec v;
  Eigen::Matrix<double, -1, -1, 0, kMaxWedge, kMaxDim> g;
  eval_.value_and_gradient(p, v, g);
  value = v;
  jacobian = g;
}

CombinedField::CombinedField(double a, FieldPtr x, double b, FieldPtr y)
    : a_(a), b_(b), x_(std::move(x)), y_(std::move(y)) {
  if (x_->dim() != y_->dim()) fail(ErrorCode::RankMismatch, "combined fields differ in dimension");
}

Vec CombinedField::value(const Vec& p) const { return a_ * x_->value(p) + b_ * y_->value(p); }

void CombinedField::value_and_jacobian(const Vec& p, Vec& value, Mat& jacobian) const {
  Vec vx, vy;
  Mat jx, jy;
  x_->value_and_jacobian(p, vx, jx);
  y_->value_and_jacobian(p, vy, jy);
  value = a_ * vx + b_ * vy;
  jacobian = a_ * jx + b_ * jy;
}

FieldPtr make_trig_field(const TrigField& f) { return std::make_shared<TrigVectorField>(f); }

}  // namespace lyaplab
