#include "lyaplab/exterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "lyaplab/errors.hpp"

namespace lyaplab {

bool IndexSet::contains(int v) const {
  for (int i = 0; i < size; ++i)
    if (idx[static_cast<std::size_t>(i)] == v) return true;
  return false;
}

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int sort_sign(std::span<int> values) {
  int sign = 1;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (values[i] == values[j]) return 0;
      if (values[i] > values[j]) {
        std::swap(values[i], values[j]);
        sign = -sign;
      }
    }
  return sign;
}

WedgeBasis::WedgeBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > kMaxDim || degree < 0 || degree > dim)
    fail(ErrorCode::RankMismatch, "wedge basis needs 1 <= dim <= 4 and 0 <= degree <= dim");
  IndexSet cur;
  cur.size = degree;
  for (int i = 0; i < degree; ++i) cur.idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    sets_.push_back(cur);
    int pos = degree - 1;
    while (pos >= 0 && cur.idx[static_cast<std::size_t>(pos)] == dim - degree + pos) --pos;
    if (pos < 0) break;
    ++cur.idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < degree; ++j)
      cur.idx[static_cast<std::size_t>(j)] = cur.idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  for (int from = 0; from < size(); ++from) {
    const IndexSet& s = sets_[static_cast<std::size_t>(from)];
    for (int m = 0; m < degree; ++m)
      for (int row = 0; row < dim; ++row) {
        std::array<int, kMaxDim> v = s.idx;
        v[static_cast<std::size_t>(m)] = row;
        const int sign = sort_sign(std::span<int>(v.data(), static_cast<std::size_t>(degree)));
        if (sign == 0) continue;
        IndexSet t;
        t.size = degree;
        t.idx = v;
        terms_.push_back({from, index_of(t), row, s[m], sign});
      }
  }
}

int WedgeBasis::index_of(const IndexSet& s) const {
  for (std::size_t i = 0; i < sets_.size(); ++i)
    if (sets_[i] == s) return static_cast<int>(i);
  return -1;
}

const WedgeBasis& wedge_basis(int dim, int degree) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<WedgeBasis>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{dim, degree}];
  if (!slot) slot = std::make_unique<WedgeBasis>(dim, degree);
  return *slot;
}

std::optional<std::pair<IndexSet, int>> insert_index(const IndexSet& s, int i) {
  if (s.contains(i)) return std::nullopt;
  IndexSet r;
  r.size = s.size + 1;
  int pos = 0;
  while (pos < s.size && s[pos] < i) ++pos;
  for (int a = 0, b = 0; a < r.size; ++a)
    r.idx[static_cast<std::size_t>(a)] = (a == pos) ? i : s[b++];
  return std::make_pair(r, (pos % 2 == 0) ? 1 : -1);
}

std::pair<IndexSet, int> remove_at(const IndexSet& s, int m) {
  IndexSet r;
  r.size = s.size - 1;
  for (int a = 0, b = 0; a < s.size; ++a)
    if (a != m) r.idx[static_cast<std::size_t>(b++)] = s[a];
  return {r, (m % 2 == 0) ? 1 : -1};
}

namespace {

double minor_det(const Mat& a, const IndexSet& rows, const IndexSet& cols) {
  const int k = rows.size;
  Mat sub(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) sub(i, j) = a(rows[i], cols[j]);
  return k == 0 ? 1.0 : sub.determinant();
}

}  // namespace

WMat compound(const Mat& a, int degree) {
  const WedgeBasis& b = wedge_basis(static_cast<int>(a.rows()), degree);
  WMat c(b.size(), b.size());
  for (int i = 0; i < b.size(); ++i)
    for (int j = 0; j < b.size(); ++j) c(i, j) = minor_det(a, b.set(i), b.set(j));
  return c;
}

WMat derivation(const Mat& a, int degree) {
  const WedgeBasis& b = wedge_basis(static_cast<int>(a.rows()), degree);
  WMat c = WMat::Zero(b.size(), b.size());
  for (const DerivationTerm& t : b.derivation_terms()) c(t.to, t.from) += t.sign * a(t.row, t.col);
  return c;
}

WVec wedge_columns(const Mat& m) {
  const int k = static_cast<int>(m.cols());
  const WedgeBasis& b = wedge_basis(static_cast<int>(m.rows()), k);
  WVec w(b.size());
  IndexSet all;
  all.size = k;
  for (int j = 0; j < k; ++j) all.idx[static_cast<std::size_t>(j)] = j;
  for (int i = 0; i < b.size(); ++i) w(i) = minor_det(m, b.set(i), all);
  return w;
}

Vec wrap_point(const Vec& p) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Vec q(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double x = std::fmod(p(i), two_pi);
    if (x < 0.0) x += two_pi;
    if (x >= two_pi) x -= two_pi;
    q(i) = x;
  }
  return q;
}

Vec torus_delta(const Vec& p, const Vec& q) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Vec d(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) d(i) = std::remainder(p(i) - q(i), two_pi);
  return d;
}

Mat small_inverse(const Mat& a) {
  switch (a.rows()) {
    case 1:
      return Mat::Constant(1, 1, 1.0 / a(0, 0));
    case 2:
      return Eigen::Matrix2d(a).inverse();
    case 3:
      return Eigen::Matrix3d(a).inverse();
    case 4:
      return Eigen::Matrix4d(a).inverse();
    default:
      return a.inverse();
  }
}

double small_determinant(const Mat& a) {
  switch (a.rows()) {
    case 0:
      return 1.0;
    case 1:
      return a(0, 0);
    case 2:
      return Eigen::Matrix2d(a).determinant();
    case 3:
      return Eigen::Matrix3d(a).determinant();
    case 4:
      return Eigen::Matrix4d(a).determinant();
    default:
      return a.determinant();
  }
}

}  // namespace lyaplab
