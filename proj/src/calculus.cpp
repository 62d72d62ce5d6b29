#include "lyaplab/calculus.hpp"

#include "lyaplab/errors.hpp"

namespace lyaplab {
namespace {

void require_vector(const TrigField& x, int dim) {
  if (!x.is_vector()) fail(ErrorCode::RankMismatch, "expected a vector field");
  if (x.dim() != dim) fail(ErrorCode::RankMismatch, "dimension mismatch");
}

bool is_form_like(ValueRank r) { return r == ValueRank::form || r == ValueRank::scalar; }

// Adds the tensorial part of the Lie derivative: +D(A)ᵀω for forms, −D(A)V for multivectors.
template <class Entry, class Acc>
void add_derivation_part(ValueRank rank, int dim, int degree, const Entry& a, Acc&& acc) {
  if (rank == ValueRank::scalar || degree == 0) return;
  const WedgeBasis& b = wedge_basis(dim, degree);
  for (const DerivationTerm& t : b.derivation_terms()) {
    if (rank == ValueRank::form)
      acc(t.from, t.to, static_cast<double>(t.sign), a(t.row, t.col));
    else
      acc(t.to, t.from, -static_cast<double>(t.sign), a(t.row, t.col));
  }
}

class TrigSource final : public TensorSource {
 public:
  explicit TrigSource(const TrigField& f)
      : dim_(f.dim()), rank_(f.rank()), degree_(f.degree()), eval_(f), constant_(true) {
    for (int c = 0; c < f.num_components(); ++c)
      for (const auto& [k, h] : f[c].terms())
        for (auto v : k)
          if (v != 0) constant_ = false;
  }
  int dim() const override { return dim_; }
  ValueRank rank() const override { return rank_; }
  int degree() const override { return degree_; }
  WVec value(const Vec& p) const override { return eval_.value(p); }
  void value_and_gradient(const Vec& p, WVec& value, Gradient& grad) const override {
    eval_.value_and_gradient(p, value, grad);
  }
  bool is_constant() const override { return constant_; }

 private:
  int dim_;
  ValueRank rank_;
  int degree_;
  TrigEvaluator eval_;
  bool constant_;
};

class GridSource final : public TensorSource {
 public:
  explicit GridSource(const GridField& g) : grid_(g) {
    for (int j = 0; j < g.dim(); ++j) partials_.push_back(g.partial(j));
  }
  int dim() const override { return grid_.dim(); }
  ValueRank rank() const override { return grid_.rank(); }
  int degree() const override { return grid_.degree(); }
  WVec value(const Vec& p) const override { return grid_.interpolate(p); }
  void value_and_gradient(const Vec& p, WVec& value, Gradient& grad) const override {
    value = grid_.interpolate(p);
    grad.resize(grid_.num_components(), grid_.dim());
    for (int j = 0; j < grid_.dim(); ++j) grad.col(j) = partials_[static_cast<std::size_t>(j)].interpolate(p);
  }

 private:
  GridField grid_;
  std::vector<GridField> partials_;
};

class ConstantSource final : public TensorSource {
 public:
  ConstantSource(int dim, ValueRank rank, int degree, WVec v) : dim_(dim), rank_(rank), degree_(degree), v_(std::move(v)) {}
  int dim() const override { return dim_; }
  ValueRank rank() const override { return rank_; }
  int degree() const override { return degree_; }
  WVec value(const Vec&) const override { return v_; }
  void value_and_gradient(const Vec&, WVec& value, Gradient& grad) const override {
    value = v_;
    grad = Gradient::Zero(v_.size(), dim_);
  }
  bool is_constant() const override { return true; }

 private:
  int dim_;
  ValueRank rank_;
  int degree_;
  WVec v_;
};

}  // namespace

// ---------------------------------------------------------------- exact

TrigField exterior_derivative(const TrigField& form) {
  if (!is_form_like(form.rank())) fail(ErrorCode::RankMismatch, "exterior derivative needs a form");
  const int d = form.dim(), k = form.degree();
  if (k == d) return TrigField(d, ValueRank::form, d);
  TrigField out(d, ValueRank::form, k + 1);
  const WedgeBasis& hi = wedge_basis(d, k + 1);
  const WedgeBasis& lo = wedge_basis(d, k);
  for (int i = 0; i < hi.size(); ++i)
    for (int m = 0; m <= k; ++m) {
      const auto [rest, sign] = remove_at(hi.set(i), m);
      out[i] += static_cast<double>(sign) * form[lo.index_of(rest)].partial(hi.set(i)[m]);
    }
  return out;
}

TrigField interior_product(const TrigField& x, const TrigField& form) {
  require_vector(x, form.dim());
  if (form.rank() != ValueRank::form || form.degree() < 1)
    fail(ErrorCode::RankMismatch, "interior product needs a form of degree >= 1");
  const int d = form.dim(), k = form.degree();
  TrigField out = k == 1 ? TrigField(d, ValueRank::scalar, 0) : TrigField(d, ValueRank::form, k - 1);
  const WedgeBasis& lo = wedge_basis(d, k - 1);
  const WedgeBasis& hi = wedge_basis(d, k);
  for (int i = 0; i < lo.size(); ++i)
    for (int j = 0; j < d; ++j) {
      const auto ins = insert_index(lo.set(i), j);
      if (!ins) continue;
      out[i] += static_cast<double>(ins->second) * (x[j] * form[hi.index_of(ins->first)]);
    }
  return out;
}

TrigField wedge(const TrigField& a, const TrigField& b) {
  if (!is_form_like(a.rank()) || !is_form_like(b.rank()) || a.dim() != b.dim())
    fail(ErrorCode::RankMismatch, "wedge needs two forms of equal dimension");
  const int d = a.dim(), p = a.degree(), q = b.degree();
  if (p + q > d) return TrigField(d, ValueRank::form, d);
  TrigField out = (p + q == 0) ? TrigField(d, ValueRank::scalar, 0) : TrigField(d, ValueRank::form, p + q);
  const WedgeBasis& ba = wedge_basis(d, p);
  const WedgeBasis& bb = wedge_basis(d, q);
  const WedgeBasis& bo = wedge_basis(d, p + q);
  for (int i = 0; i < ba.size(); ++i)
    for (int j = 0; j < bb.size(); ++j) {
      std::array<int, kMaxDim> cat{};
      for (int m = 0; m < p; ++m) cat[static_cast<std::size_t>(m)] = ba.set(i)[m];
      for (int m = 0; m < q; ++m) cat[static_cast<std::size_t>(p + m)] = bb.set(j)[m];
      const int sign = sort_sign(std::span<int>(cat.data(), static_cast<std::size_t>(p + q)));
      if (sign == 0) continue;
      IndexSet s;
      s.size = p + q;
      s.idx = cat;
      out[bo.index_of(s)] += static_cast<double>(sign) * (a[i] * b[j]);
    }
  return out;
}

std::vector<std::vector<TrigPoly>> jacobian(const TrigField& x) {
  require_vector(x, x.dim());
  const int d = x.dim();
  std::vector<std::vector<TrigPoly>> j(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < d; ++c) j[static_cast<std::size_t>(i)].push_back(x[i].partial(c));
  return j;
}

TrigField lie_derivative(const TrigField& x, const TrigField& field) {
  require_vector(x, field.dim());
  const int d = field.dim();
  TrigField out(d, field.rank(), field.degree());
  for (int c = 0; c < field.num_components(); ++c)
    for (int j = 0; j < d; ++j) {
      if (x[j].empty()) continue;
      out[c] += x[j] * field[c].partial(j);
    }
  const auto dx = jacobian(x);
  auto entry = [&](int r, int c) -> const TrigPoly& { return dx[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; };
  add_derivation_part(field.rank(), d, field.degree(), entry,
                      [&](int dst, int src, double sign, const TrigPoly& a) {
                        if (a.empty() || field[src].empty()) return;
                        out[dst] += sign * (a * field[src]);
                      });
  return out;
}

TrigField pair(const TrigField& form, const TrigField& multivector) {
  if (!is_form_like(form.rank()) || multivector.rank() == ValueRank::form ||
      form.degree() != multivector.degree() || form.dim() != multivector.dim())
    fail(ErrorCode::RankMismatch, "pair needs a k-form and a k-multivector");
  TrigPoly acc(form.dim());
  for (int c = 0; c < form.num_components(); ++c) acc += form[c] * multivector[c];
  return TrigField::scalar(std::move(acc));
}

TrigField divergence(const TrigField& x) {
  require_vector(x, x.dim());
  TrigPoly acc(x.dim());
  for (int j = 0; j < x.dim(); ++j) acc += x[j].partial(j);
  return TrigField::scalar(std::move(acc));
}

// ---------------------------------------------------------------- sources

SourcePtr make_source(const TrigField& f) { return std::make_shared<TrigSource>(f); }

SourcePtr make_source(const GridField& g) {
  if (g.interp_order() < 3) {
    if (g.rank() == ValueRank::multivector)
      fail(ErrorCode::NeedsSmoothV, "multivector grid data must use cubic interpolation to be differentiated");
    fail(ErrorCode::NeedsSmoothOmega, "form grid data must use cubic interpolation to be differentiated");
  }
  return std::make_shared<GridSource>(g);
}

SourcePtr make_constant_source(int dim, ValueRank rank, int degree, const WVec& value) {
  return std::make_shared<ConstantSource>(dim, rank, degree, value);
}

WVec lie_derivative_at(const VectorField& x, const TensorSource& field, const Vec& p) {
  Vec xv;
  Mat a;
  x.value_and_jacobian(p, xv, a);
  WVec v;
  Gradient g;
  field.value_and_gradient(p, v, g);
  WVec out = g * xv;
  add_derivation_part(field.rank(), field.dim(), field.degree(), a,
                      [&](int dst, int src, double sign, double aij) { out(dst) += sign * aij * v(src); });
  return out;
}

// ---------------------------------------------------------------- sampled

GridField lie_derivative(const VectorField& x, const GridField& field) {
  const SourcePtr src = make_source(field);
  GridField out(field.dim(), field.resolution(), field.rank(), field.degree(), field.interp_order());
  for (std::size_t i = 0; i < out.num_points(); ++i) out.set(i, lie_derivative_at(x, *src, out.point(i)));
  return out;
}

namespace {

template <class Eval>
GridField pullback_impl(const TorusMap& phi, int dim, int degree, int n, int order, const Eval& omega_at) {
  GridField out(dim, n, ValueRank::form, degree, order);
  Mat jac;
  for (std::size_t i = 0; i < out.num_points(); ++i) {
    const Vec q = phi.apply(out.point(i), &jac);
    out.set(i, compound(jac, degree).transpose() * omega_at(q));
  }
  return out;
}

template <class Eval>
GridField pushforward_impl(const TorusMap& phi, int dim, int degree, int n, int order, const Eval& v_at) {
  GridField out(dim, n, ValueRank::multivector, degree, order);
  Mat jac;
  for (std::size_t i = 0; i < out.num_points(); ++i) {
    const Vec q = phi.inverse(out.point(i), &jac);
    out.set(i, compound(jac, degree) * v_at(q));
  }
  return out;
}

}  // namespace

GridField pullback_form(const TorusMap& phi, const GridField& form) {
  if (form.rank() != ValueRank::form || form.dim() != phi.dim()) fail(ErrorCode::RankMismatch, "pullback needs a form");
  return pullback_impl(phi, form.dim(), form.degree(), form.resolution(), form.interp_order(),
                       [&](const Vec& q) { return form.interpolate(q); });
}

GridField pullback_form(const TorusMap& phi, const TrigField& form, int resolution) {
  if (form.rank() != ValueRank::form || form.dim() != phi.dim()) fail(ErrorCode::RankMismatch, "pullback needs a form");
  const TrigEvaluator ev(form);
  return pullback_impl(phi, form.dim(), form.degree(), resolution, 3, [&](const Vec& q) { return ev.value(q); });
}

GridField pushforward_multivector(const TorusMap& phi, const GridField& v) {
  if (v.rank() != ValueRank::multivector || v.dim() != phi.dim())
    fail(ErrorCode::RankMismatch, "pushforward needs a multivector field");
  return pushforward_impl(phi, v.dim(), v.degree(), v.resolution(), v.interp_order(),
                          [&](const Vec& q) { return v.interpolate(q); });
}

GridField pushforward_multivector(const TorusMap& phi, const TrigField& v, int resolution) {
  if (v.rank() != ValueRank::multivector || v.dim() != phi.dim())
    fail(ErrorCode::RankMismatch, "pushforward needs a multivector field");
  const TrigEvaluator ev(v);
  return pushforward_impl(phi, v.dim(), v.degree(), resolution, 3, [&](const Vec& q) { return ev.value(q); });
}

GridField pair(const GridField& form, const GridField& multivector) {
  if (!is_form_like(form.rank()) || multivector.rank() == ValueRank::form || form.degree() != multivector.degree() ||
      form.dim() != multivector.dim() || form.resolution() != multivector.resolution())
    fail(ErrorCode::RankMismatch, "pair needs a k-form and a k-multivector on the same lattice");
  GridField out(form.dim(), form.resolution(), ValueRank::scalar, 0,
                std::min(form.interp_order(), multivector.interp_order()));
  for (std::size_t i = 0; i < out.num_points(); ++i) {
    double acc = 0.0;
    for (int c = 0; c < form.num_components(); ++c) acc += form.value(i, c) * multivector.value(i, c);
    out.value(i, 0) = acc;
  }
  return out;
}

GridField compose(const GridField& g, const TorusMap& phi) {
  GridField out(g.dim(), g.resolution(), g.rank(), g.degree(), g.interp_order());
  for (std::size_t i = 0; i < out.num_points(); ++i) out.set(i, g.interpolate(phi.apply(out.point(i))));
  return out;
}

GridField compose(const TrigField& g, const TorusMap& phi, int resolution) {
  const TrigEvaluator ev(g);
  GridField out(g.dim(), resolution, g.rank(), g.degree(), 3);
  for (std::size_t i = 0; i < out.num_points(); ++i) out.set(i, ev.value(phi.apply(out.point(i))));
  return out;
}

}  // namespace lyaplab
