#pragma once
// Vector fields on T^d evaluated pointwise with their Jacobian DX (rows = components).
#include <memory>

#include "lyaplab/exterior.hpp"
#include "lyaplab/trig_field.hpp"

namespace lyaplab {

class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual int dim() const = 0;
  virtual Vec value(const Vec& p) const = 0;
  virtual void value_and_jacobian(const Vec& p, Vec& value, Mat& jacobian) const = 0;
  // True if the field vanishes identically (lets flows short-circuit).
  virtual bool is_zero() const { return false; }
};

using FieldPtr = std::shared_ptr<const VectorField>;

class TrigVectorField final : public VectorField {
 public:
  explicit TrigVectorField(TrigField field);
  int dim() const override { return field_.dim(); }
  Vec value(const Vec& p) const override;
  void value_and_jacobian(const Vec& p, Vec& value, Mat& jacobian) const override;
  bool is_zero() const override { return field_.total_terms() == 0; }
  const TrigField& field() const { return field_; }

 private:
  TrigField field_;
  TrigEvaluator eval_;
};

// a·X + b·Y
class CombinedField final : public VectorField {
 public:
  CombinedField(double a, FieldPtr x, double b, FieldPtr y);
  int dim() const override { return x_->dim(); }
  Vec value(const Vec& p) const override;
  void value_and_jacobian(const Vec& p, Vec& value, Mat& jacobian) const override;
  bool is_zero() const override { return (a_ == 0 || x_->is_zero()) && (b_ == 0 || y_->is_zero()); }

 private:
  double a_, b_;
  FieldPtr x_, y_;
};

class ZeroField final : public VectorField {
 public:
  explicit ZeroField(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  Vec value(const Vec&) const override { return Vec::Zero(dim_); }
  void value_and_jacobian(const Vec&, Vec& value, Mat& jacobian) const override {
    value = Vec::Zero(dim_);
    jacobian = Mat::Zero(dim_, dim_);
  }
  bool is_zero() const override { return true; }

 private:
  int dim_;
};

FieldPtr make_trig_field(const TrigField& f);

}  // namespace lyaplab
