#pragma once
// Small dense types for points on T^d (d <= 4) and the exterior powers of the
// tangent space. k-vectors and k-forms are stored in the basis of sorted index
// sets in lexicographic order; forms pair with multivectors by dx_I(e_J) = δ_IJ.
#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <vector>

namespace lyaplab {

inline constexpr int kMaxDim = 4;
inline constexpr int kMaxWedge = 6;  // C(4, 2)

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using WVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxWedge, 1>;
using WMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxWedge, kMaxWedge>;

struct IndexSet {
  int size = 0;
  std::array<int, kMaxDim> idx{};
  int operator[](int i) const { return idx[static_cast<std::size_t>(i)]; }
  bool contains(int v) const;
  bool operator==(const IndexSet&) const = default;
};

int binomial(int n, int k);

// One term of the derivation extension of a matrix A to the k-th exterior power:
// (D A) e_from += sign * A(row, col) e_to.
struct DerivationTerm {
  int from;
  int to;
  int row;
  int col;
  int sign;
};

class WedgeBasis {
 public:
  WedgeBasis(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(sets_.size()); }
  const IndexSet& set(int i) const { return sets_[static_cast<std::size_t>(i)]; }
  // Index of a sorted set, or -1.
  int index_of(const IndexSet& s) const;
  std::span<const DerivationTerm> derivation_terms() const { return terms_; }

 private:
  int dim_;
  int degree_;
  std::vector<IndexSet> sets_;
  std::vector<DerivationTerm> terms_;
};

// Cached basis for (dim, degree).
const WedgeBasis& wedge_basis(int dim, int degree);

// Sorts `values` in place and returns the permutation sign, or 0 on a repeat.
int sort_sign(std::span<int> values);

// Insert index i into sorted set s: the result and (-1)^(position of i), or nullopt.
std::optional<std::pair<IndexSet, int>> insert_index(const IndexSet& s, int i);
// Remove the element at position m: the result and (-1)^m.
std::pair<IndexSet, int> remove_at(const IndexSet& s, int m);

// k-th compound matrix: entries are the k×k minors det A[I, J].
WMat compound(const Mat& a, int degree);
// Derivation extension: D(A)(v1∧…∧vk) = Σ v1∧…∧A v_m∧…∧vk.
WMat derivation(const Mat& a, int degree);
// Coordinates of the wedge of the columns of m.
WVec wedge_columns(const Mat& m);

// Point reduced into [0, 2π)^d.
Vec wrap_point(const Vec& p);
// Representative of p - q in (-π, π]^d.
Vec torus_delta(const Vec& p, const Vec& q);
// Inverse of a d ≤ 4 square matrix through the fixed-size closed forms.
Mat small_inverse(const Mat& a);
double small_determinant(const Mat& a);

}  // namespace lyaplab
