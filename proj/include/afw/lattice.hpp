// Exact integer and rational linear algebra over lattices Z^n: matrices,
// Smith normal form, integral affine maps, rational cones with duality,
// and the unique integral identification of tangent wedges.
//
// Everything here is arbitrary precision; no floating point is used
// anywhere in the library.
#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace afw {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

using Vec = std::vector<Int>;
using QVec = std::vector<Rat>;

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline Vec vec_add(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec vec_sub(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec vec_neg(const Vec& a) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

inline Vec vec_scale(const Int& c, const Vec& a) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

inline Int dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  Int s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Rat dotq(const QVec& a, const QVec& b) {
  assert(a.size() == b.size());
  Rat s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool is_zero(const Vec& a) {
  for (const auto& x : a)
    if (x != 0) return false;
  return true;
}

inline QVec to_q(const Vec& a) {
  QVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = Rat(a[i]);
  return r;
}

inline Int vgcd(const Vec& a) {
  Int g = 0;
  for (const auto& x : a) g = boost::multiprecision::gcd(g, x);
  return g;
}

// Canonical primitive representative: divide by gcd, then flip the sign so the
// first nonzero entry is positive.  Zero vector stays zero.
inline Vec primitive(Vec a) {
  Int g = vgcd(a);
  if (g == 0) return a;
  for (auto& x : a) x /= g;
  for (const auto& x : a) {
    if (x != 0) {
      if (x < 0)
        for (auto& y : a) y = -y;
      break;
    }
  }
  return a;
}

// Primitive direction of a without the sign normalization (keeps orientation).
inline Vec primitive_directed(Vec a) {
  Int g = vgcd(a);
  if (g == 0) return a;
  for (auto& x : a) x /= g;
  return a;
}

// Clear denominators: the primitive integer vector on the ray of a rational one.
inline Vec primitive_of_rational(const QVec& a) {
  Int lcm = 1;
  for (const auto& x : a)
    lcm = boost::multiprecision::lcm(lcm, boost::multiprecision::denominator(x));
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    Rat y = a[i] * lcm;
    r[i] = boost::multiprecision::numerator(y);
  }
  return primitive_directed(r);
}

inline bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// ---------------------------------------------------------------------------
// IntMat: dense arbitrary-precision integer matrix
// ---------------------------------------------------------------------------

struct IntMat {
  size_t rows = 0, cols = 0;
  std::vector<Int> a;  // row-major

  IntMat() = default;
  IntMat(size_t r, size_t c) : rows(r), cols(c), a(r * c, Int(0)) {}
  IntMat(size_t r, size_t c, std::vector<Int> data)
      : rows(r), cols(c), a(std::move(data)) {
    assert(a.size() == rows * cols);
  }

  static IntMat identity(size_t n) {
    IntMat m(n, n);
    for (size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  // Matrix whose columns are the given vectors.
  static IntMat from_columns(const std::vector<Vec>& cols_) {
    if (cols_.empty()) return IntMat(0, 0);
    IntMat m(cols_[0].size(), cols_.size());
    for (size_t j = 0; j < cols_.size(); ++j) {
      assert(cols_[j].size() == m.rows);
      for (size_t i = 0; i < m.rows; ++i) m(i, j) = cols_[j][i];
    }
    return m;
  }

  static IntMat from_rows(const std::vector<Vec>& rows_) {
    if (rows_.empty()) return IntMat(0, 0);
    IntMat m(rows_.size(), rows_[0].size());
    for (size_t i = 0; i < rows_.size(); ++i) {
      assert(rows_[i].size() == m.cols);
      for (size_t j = 0; j < m.cols; ++j) m(i, j) = rows_[i][j];
    }
    return m;
  }

  Int& operator()(size_t i, size_t j) { return a[i * cols + j]; }
  const Int& operator()(size_t i, size_t j) const { return a[i * cols + j]; }

  Vec row(size_t i) const {
    Vec r(cols);
    for (size_t j = 0; j < cols; ++j) r[j] = (*this)(i, j);
    return r;
  }
  Vec col(size_t j) const {
    Vec c(rows);
    for (size_t i = 0; i < rows; ++i) c[i] = (*this)(i, j);
    return c;
  }

  IntMat transpose() const {
    IntMat t(cols, rows);
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool operator==(const IntMat& o) const {
    return rows == o.rows && cols == o.cols && a == o.a;
  }
  bool operator!=(const IntMat& o) const { return !(*this == o); }

  bool is_identity() const {
    if (rows != cols) return false;
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < cols; ++j)
        if ((*this)(i, j) != Int(i == j ? 1 : 0)) return false;
    return true;
  }
};

inline IntMat mat_mul(const IntMat& A, const IntMat& B) {
  assert(A.cols == B.rows);
  IntMat C(A.rows, B.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t k = 0; k < A.cols; ++k) {
      if (A(i, k) == 0) continue;
      for (size_t j = 0; j < B.cols; ++j) C(i, j) += A(i, k) * B(k, j);
    }
  return C;
}

inline Vec mat_apply(const IntMat& A, const Vec& x) {
  assert(A.cols == x.size());
  Vec y(A.rows, Int(0));
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < A.cols; ++j) y[i] += A(i, j) * x[j];
  return y;
}

// Covector pulled back through A: returns f . A (row vector times matrix).
inline Vec mat_apply_left(const Vec& f, const IntMat& A) {
  assert(A.rows == f.size());
  Vec y(A.cols, Int(0));
  for (size_t j = 0; j < A.cols; ++j)
    for (size_t i = 0; i < A.rows; ++i) y[j] += f[i] * A(i, j);
  return y;
}

// Determinant by fraction-free (Bareiss) elimination.
inline Int det(const IntMat& M) {
  assert(M.rows == M.cols);
  size_t n = M.rows;
  if (n == 0) return 1;
  IntMat A = M;
  Int prev = 1;
  int sign = 1;
  for (size_t k = 0; k + 1 < n; ++k) {
    if (A(k, k) == 0) {
      size_t p = k + 1;
      while (p < n && A(p, k) == 0) ++p;
      if (p == n) return 0;
      for (size_t j = 0; j < n; ++j) std::swap(A(k, j), A(p, j));
      sign = -sign;
    }
    for (size_t i = k + 1; i < n; ++i)
      for (size_t j = k + 1; j < n; ++j)
        A(i, j) = (A(i, j) * A(k, k) - A(i, k) * A(k, j)) / prev;
    prev = A(k, k);
  }
  return sign > 0 ? A(n - 1, n - 1) : -A(n - 1, n - 1);
}

// ---------------------------------------------------------------------------
// Rational Gaussian elimination: rank, solving, kernels
// ---------------------------------------------------------------------------

struct QMat {
  size_t rows = 0, cols = 0;
  std::vector<Rat> a;
  QMat() = default;
  QMat(size_t r, size_t c) : rows(r), cols(c), a(r * c, Rat(0)) {}
  Rat& operator()(size_t i, size_t j) { return a[i * cols + j]; }
  const Rat& operator()(size_t i, size_t j) const { return a[i * cols + j]; }
  static QMat from(const IntMat& m) {
    QMat q(m.rows, m.cols);
    for (size_t i = 0; i < m.rows * m.cols; ++i) q.a[i] = Rat(m.a[i]);
    return q;
  }
};

// Row echelon form in place; returns pivot columns.
inline std::vector<size_t> row_reduce(QMat& M) {
  std::vector<size_t> pivots;
  size_t r = 0;
  for (size_t c = 0; c < M.cols && r < M.rows; ++c) {
    size_t p = r;
    while (p < M.rows && M(p, c) == 0) ++p;
    if (p == M.rows) continue;
    for (size_t j = 0; j < M.cols; ++j) std::swap(M(r, j), M(p, j));
    Rat inv = M(r, c);
    for (size_t j = 0; j < M.cols; ++j) M(r, j) /= inv;
    for (size_t i = 0; i < M.rows; ++i) {
      if (i == r || M(i, c) == 0) continue;
      Rat f = M(i, c);
      for (size_t j = 0; j < M.cols; ++j) M(i, j) -= f * M(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

inline size_t rank(const IntMat& M) {
  QMat q = QMat::from(M);
  return row_reduce(q).size();
}

// Solve A x = b over Q.  Returns one solution if consistent.
inline std::optional<QVec> solve_rational(const IntMat& A, const QVec& b) {
  assert(A.rows == b.size());
  QMat M(A.rows, A.cols + 1);
  for (size_t i = 0; i < A.rows; ++i) {
    for (size_t j = 0; j < A.cols; ++j) M(i, j) = Rat(A(i, j));
    M(i, A.cols) = b[i];
  }
  auto pivots = row_reduce(M);
  for (size_t p : pivots)
    if (p == A.cols) return std::nullopt;  // inconsistent
  QVec x(A.cols, Rat(0));
  for (size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = M(r, A.cols);
  return x;
}

// ---------------------------------------------------------------------------
// Smith normal form
// ---------------------------------------------------------------------------

struct SNF {
  IntMat U, D, V;  // U * A * V = D
};

// Full Smith normal form with unimodular transforms.  D is diagonal with
// d1 | d2 | ... and nonnegative diagonal entries.
inline SNF smith_normal_form(const IntMat& A0) {
  IntMat A = A0;
  size_t m = A.rows, n = A.cols;
  IntMat U = IntMat::identity(m), V = IntMat::identity(n);

  auto swap_rows = [&](size_t i, size_t j) {
    for (size_t c = 0; c < n; ++c) std::swap(A(i, c), A(j, c));
    for (size_t c = 0; c < m; ++c) std::swap(U(i, c), U(j, c));
  };
  auto swap_cols = [&](size_t i, size_t j) {
    for (size_t r = 0; r < m; ++r) std::swap(A(r, i), A(r, j));
    for (size_t r = 0; r < n; ++r) std::swap(V(r, i), V(r, j));
  };
  auto addmul_row = [&](size_t dst, size_t src, const Int& c) {
    for (size_t k = 0; k < n; ++k) A(dst, k) += c * A(src, k);
    for (size_t k = 0; k < m; ++k) U(dst, k) += c * U(src, k);
  };
  auto addmul_col = [&](size_t dst, size_t src, const Int& c) {
    for (size_t k = 0; k < m; ++k) A(k, dst) += c * A(k, src);
    for (size_t k = 0; k < n; ++k) V(k, dst) += c * V(k, src);
  };
  auto neg_row = [&](size_t i) {
    for (size_t k = 0; k < n; ++k) A(i, k) = -A(i, k);
    for (size_t k = 0; k < m; ++k) U(i, k) = -U(i, k);
  };

  size_t t = 0;
  while (t < m && t < n) {
    // Find a nonzero pivot in the remaining block.
    size_t pi = t, pj = t;
    bool found = false;
    for (size_t i = t; i < m && !found; ++i)
      for (size_t j = t; j < n && !found; ++j)
        if (A(i, j) != 0) {
          pi = i;
          pj = j;
          found = true;
        }
    if (!found) break;
    if (pi != t) swap_rows(t, pi);
    if (pj != t) swap_cols(t, pj);

    // Reduce row/column t until the pivot divides everything it meets.
    bool dirty = true;
    while (dirty) {
      dirty = false;
      for (size_t i = t + 1; i < m; ++i) {
        if (A(i, t) == 0) continue;
        Int q = A(i, t) / A(t, t);
        addmul_row(i, t, -q);
        if (A(i, t) != 0) {
          swap_rows(t, i);
          dirty = true;
        }
      }
      for (size_t j = t + 1; j < n; ++j) {
        if (A(t, j) == 0) continue;
        Int q = A(t, j) / A(t, t);
        addmul_col(j, t, -q);
        if (A(t, j) != 0) {
          swap_cols(t, j);
          dirty = true;
        }
      }
    }
    ++t;
  }
  // Fix signs and enforce the divisibility chain.
  size_t r = std::min(m, n);
  for (size_t i = 0; i < r; ++i)
    if (A(i, i) < 0) neg_row(i);
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t i = 0; i + 1 < r; ++i) {
      if (A(i + 1, i + 1) == 0) continue;
      if (A(i, i) == 0 || A(i + 1, i + 1) % A(i, i) != 0) {
        // Standard 2x2 fix: gcd/lcm the pair.
        addmul_col(i, i + 1, 1);
        // Now column i has entries (d_i, d_{i+1}) in rows i, i+1; clear.
        while (A(i + 1, i) != 0) {
          Int q = A(i, i) / A(i + 1, i);
          if (q != 0) addmul_row(i, i + 1, -q);
          if (A(i, i) != 0 || A(i + 1, i) != 0) {
            // swap to continue euclid
            if (A(i + 1, i) != 0 &&
                (A(i, i) == 0 ||
                 boost::multiprecision::abs(A(i, i)) >
                     boost::multiprecision::abs(A(i + 1, i))))
              swap_rows(i, i + 1);
            else if (A(i + 1, i) != 0 && q == 0)
              swap_rows(i, i + 1);
            else if (A(i + 1, i) == 0)
              break;
          }
        }
        // Clear the fill-in in row i / row i+1 off-diagonal.
        if (A(i, i + 1) != 0) {
          Int q = A(i, i + 1) / A(i, i);
          addmul_col(i + 1, i, -q);
        }
        if (A(i + 1, i + 1) < 0) neg_row(i + 1);
        if (A(i, i) < 0) neg_row(i);
        changed = true;
      }
    }
  }
  return SNF{U, A, V};
}

// Diagonal invariant factors (nonzero ones), in divisibility order.
inline std::vector<Int> invariant_factors(const IntMat& A) {
  SNF s = smith_normal_form(A);
  std::vector<Int> f;
  for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
    if (s.D(i, i) != 0) f.push_back(s.D(i, i));
  return f;
}

// Basis of the integer kernel {x : A x = 0}, as columns.  The kernel of an
// integer matrix is automatically saturated.
inline std::vector<Vec> integer_kernel(const IntMat& A) {
  if (A.cols == 0) return {};
  if (A.rows == 0) {
    std::vector<Vec> basis;
    for (size_t j = 0; j < A.cols; ++j) {
      Vec e(A.cols, Int(0));
      e[j] = 1;
      basis.push_back(e);
    }
    return basis;
  }
  SNF s = smith_normal_form(A);
  size_t r = 0;
  for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
    if (s.D(i, i) != 0) ++r;
  std::vector<Vec> basis;
  for (size_t j = r; j < A.cols; ++j) basis.push_back(s.V.col(j));
  return basis;
}

// Solve A x = b over Z.  Returns one solution if one exists.
inline std::optional<Vec> solve_integral(const IntMat& A, const Vec& b) {
  SNF s = smith_normal_form(A);
  Vec c = mat_apply(s.U, b);  // D y = c with x = V y
  Vec y(A.cols, Int(0));
  size_t r = std::min(s.D.rows, s.D.cols);
  for (size_t i = 0; i < c.size(); ++i) {
    Int d = (i < r) ? s.D(i, i) : Int(0);
    if (d == 0) {
      if (c[i] != 0) return std::nullopt;
    } else {
      if (c[i] % d != 0) return std::nullopt;
      if (i < y.size()) y[i] = c[i] / d;
    }
  }
  return mat_apply(s.V, y);
}

// Inverse of a matrix with |det| = 1.  Throws if not unimodular.
inline IntMat unimodular_inverse(const IntMat& M) {
  assert(M.rows == M.cols);
  Int d = det(M);
  if (d != 1 && d != -1)
    throw std::invalid_argument("unimodular_inverse: |det| != 1");
  size_t n = M.rows;
  // Adjugate via cofactors (n is small throughout the library).
  IntMat inv(n, n);
  if (n == 0) return inv;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      IntMat minor(n - 1, n - 1);
      for (size_t r_ = 0, rr = 0; r_ < n; ++r_) {
        if (r_ == j) continue;
        for (size_t c_ = 0, cc = 0; c_ < n; ++c_) {
          if (c_ == i) continue;
          minor(rr, cc) = M(r_, c_);
          ++cc;
        }
        ++rr;
      }
      Int cof = det(minor);
      if ((i + j) % 2 == 1) cof = -cof;
      inv(i, j) = cof / d;
    }
  return inv;
}

// ---------------------------------------------------------------------------
// Integral affine maps x |-> linear*x + translation
// ---------------------------------------------------------------------------

struct AffMapZ {
  IntMat linear;
  Vec translation;

  AffMapZ() = default;
  AffMapZ(IntMat lin, Vec t) : linear(std::move(lin)), translation(std::move(t)) {
    assert(linear.rows == translation.size());
  }
  static AffMapZ identity(size_t n) {
    return AffMapZ(IntMat::identity(n), Vec(n, Int(0)));
  }

  Vec apply(const Vec& x) const {
    return vec_add(mat_apply(linear, x), translation);
  }

  // this after other:  (this o other)(x) = this(other(x))
  AffMapZ compose(const AffMapZ& other) const {
    return AffMapZ(mat_mul(linear, other.linear),
                   vec_add(mat_apply(linear, other.translation), translation));
  }

  AffMapZ inverse() const {
    IntMat li = unimodular_inverse(linear);
    return AffMapZ(li, vec_neg(mat_apply(li, translation)));
  }

  bool operator==(const AffMapZ& o) const {
    return linear == o.linear && translation == o.translation;
  }
};

// ---------------------------------------------------------------------------
// Rational polyhedral cones
// ---------------------------------------------------------------------------

struct RationalCone {
  size_t ambient_rank = 0;
  std::vector<Vec> generators;  // primitive; may include opposite pairs (lineality)

  RationalCone() = default;
  RationalCone(size_t n, std::vector<Vec> gens) : ambient_rank(n) {
    for (auto& g : gens) {
      Vec p = primitive_directed(std::move(g));
      if (!is_zero(p)) generators.push_back(std::move(p));
    }
    // Deduplicate, deterministic order.
    std::sort(generators.begin(), generators.end(), lex_less);
    generators.erase(std::unique(generators.begin(), generators.end()),
                     generators.end());
  }

  size_t dim() const {
    if (generators.empty()) return 0;
    return rank(IntMat::from_columns(generators));
  }
};

namespace detail {

// Membership x in cone(generators): exists lambda >= 0 with G lambda = x.
// Small exact LP via enumeration of basic feasible solutions.
inline bool in_cone_span(const std::vector<Vec>& gens, const QVec& x) {
  size_t n = x.size();
  // Quick outs
  bool zero = true;
  for (auto& xi : x)
    if (xi != 0) zero = false;
  if (zero) return true;
  if (gens.empty()) return false;
  // Phase: try all subsets of gens of size <= rank as candidate supports
  // (Caratheodory).  Desk-scale generator counts keep this cheap.
  size_t k = gens.size();
  size_t r = rank(IntMat::from_columns(gens));
  std::vector<size_t> idx(k);
  for (size_t i = 0; i < k; ++i) idx[i] = i;
  // enumerate subsets of size up to r
  std::function<bool(std::vector<size_t>&, size_t, size_t)> rec =
      [&](std::vector<size_t>& chosen, size_t start, size_t want) -> bool {
    if (chosen.size() == want) {
      std::vector<Vec> sub;
      for (size_t i : chosen) sub.push_back(gens[i]);
      IntMat G = IntMat::from_columns(sub);
      auto sol = solve_rational(G, x);
      if (!sol) return false;
      // Verify solution exactly (solve_rational gives one solution of the
      // reduced system; re-check and sign-check).
      QVec lhs(n, Rat(0));
      for (size_t j = 0; j < sub.size(); ++j)
        for (size_t i = 0; i < n; ++i) lhs[i] += (*sol)[j] * Rat(sub[j][i]);
      for (size_t i = 0; i < n; ++i)
        if (lhs[i] != x[i]) return false;
      for (auto& l : *sol)
        if (l < 0) return false;
      return true;
    }
    for (size_t i = start; i < k; ++i) {
      chosen.push_back(i);
      if (rec(chosen, i + 1, want)) return true;
      chosen.pop_back();
    }
    return false;
  };
  for (size_t want = 1; want <= r; ++want) {
    std::vector<size_t> chosen;
    if (rec(chosen, 0, want)) return true;
  }
  return false;
}

}  // namespace detail

inline bool cone_contains(const RationalCone& c, const Vec& x) {
  return detail::in_cone_span(c.generators, to_q(x));
}

inline bool cone_contains_q(const RationalCone& c, const QVec& x) {
  return detail::in_cone_span(c.generators, x);
}

// Polar dual cone {y | <y, g> >= 0 for all generators g}, returned by its
// extreme rays (plus a lineality basis as opposite ray pairs when present).
//
// Implementation: the dual cone is an intersection of half-spaces.  We find
// its lineality space (orthogonal complement of the span of the generators),
// then enumerate candidate rays as kernels of (rank-1)-subsets of the
// constraints intersected with the constraint set, which is exact and
// sufficient at desk scale.
inline RationalCone dual_cone(const RationalCone& c) {
  size_t n = c.ambient_rank;
  const auto& gens = c.generators;
  if (gens.empty()) {
    // Dual of {0} is everything: generators +-e_i.
    std::vector<Vec> out;
    for (size_t i = 0; i < n; ++i) {
      Vec e(n, Int(0));
      e[i] = 1;
      out.push_back(e);
      out.push_back(vec_neg(e));
    }
    return RationalCone(n, out);
  }
  IntMat G = IntMat::from_rows(gens);  // constraints G y >= 0
  // Lineality of the dual: {y : G y = 0}.
  std::vector<Vec> lin = integer_kernel(G);
  std::vector<Vec> out;
  for (const auto& l : lin) {
    out.push_back(l);
    out.push_back(vec_neg(l));
  }
  // Extreme rays lie on intersections of constraint hyperplanes of corank 1
  // relative to the span.  Enumerate subsets of constraints, take the kernel
  // of the stacked system together with the lineality quotient, and keep rays
  // satisfying all constraints.
  size_t m = gens.size();
  std::vector<Vec> candidates;
  // All subsets S of constraints; kernel of rows(S) of dimension lin.size()+1
  // gives a candidate ray (both signs tried).
  for (size_t mask = 0; mask < (size_t(1) << m); ++mask) {
    std::vector<Vec> rows_;
    for (size_t i = 0; i < m; ++i)
      if (mask & (size_t(1) << i)) rows_.push_back(gens[i]);
    IntMat S = rows_.empty() ? IntMat(0, n) : IntMat::from_rows(rows_);
    std::vector<Vec> ker = integer_kernel(S);
    if (ker.size() != lin.size() + 1) continue;
    // The ray direction is the kernel modulo lineality; project by choosing
    // any kernel vector independent from lin.
    for (const auto& kv : ker) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        Vec v = sgn ? vec_neg(kv) : kv;
        bool ok = true;
        for (const auto& g : gens)
          if (dot(g, v) < 0) {
            ok = false;
            break;
          }
        bool nonzero_constraint = false;
        for (const auto& g : gens)
          if (dot(g, v) > 0) nonzero_constraint = true;
        // Skip pure lineality vectors (they are already included).
        if (ok && nonzero_constraint) candidates.push_back(primitive_directed(v));
      }
    }
  }
  // Also handle the case with no binding constraints needed (e.g. m rows all
  // zero rank): covered above by lineality.
  std::sort(candidates.begin(), candidates.end(), lex_less);
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  // Keep only extreme ones: v extreme iff not in cone of the others + lineality.
  std::vector<Vec> extreme;
  for (size_t i = 0; i < candidates.size(); ++i) {
    std::vector<Vec> others;
    for (size_t j = 0; j < candidates.size(); ++j)
      if (j != i) others.push_back(candidates[j]);
    for (const auto& l : lin) {
      others.push_back(l);
      others.push_back(vec_neg(l));
    }
    if (!detail::in_cone_span(others, to_q(candidates[i])))
      extreme.push_back(candidates[i]);
  }
  if (extreme.empty() && !candidates.empty()) {
    // All candidates equivalent (1-dim cases); keep the deduplicated set.
    extreme = candidates;
  }
  for (const auto& l : lin) {
    extreme.push_back(l);
    extreme.push_back(vec_neg(l));
  }
  return RationalCone(n, extreme);
}

// Facet normals of a cone: generators of the dual.  For a full-dimensional
// cone these are the (inner) normals of its facets.
inline std::vector<Vec> cone_facet_normals(const RationalCone& c) {
  return dual_cone(c).generators;
}

// Is the cone strictly convex (contains no line)?
inline bool cone_strictly_convex(const RationalCone& c) {
  // A cone contains a line iff some generator's negative lies in the cone.
  for (const auto& g : c.generators)
    if (cone_contains(c, vec_neg(g))) return false;
  return true;
}

// Extreme rays of a (strictly convex) cone given arbitrary generators.
inline std::vector<Vec> cone_extreme_rays(const RationalCone& c) {
  std::vector<Vec> rays;
  for (size_t i = 0; i < c.generators.size(); ++i) {
    std::vector<Vec> others;
    for (size_t j = 0; j < c.generators.size(); ++j)
      if (j != i) others.push_back(c.generators[j]);
    if (!detail::in_cone_span(others, to_q(c.generators[i])))
      rays.push_back(c.generators[i]);
  }
  return rays;
}

// ---------------------------------------------------------------------------
// Wedge isomorphism (Construction 1.26 chart map)
// ---------------------------------------------------------------------------

// The unique integral linear map sending the primitive generator raysA[i] to
// raysB[correspondence[i]] and restricting to a lattice isomorphism of the
// saturated spans; nullopt if no such integral map exists.
inline std::optional<IntMat> wedge_isomorphism(
    const std::vector<Vec>& raysA, const std::vector<Vec>& raysB,
    const std::vector<size_t>& correspondence) {
  if (raysA.empty() || raysA.size() != correspondence.size()) return std::nullopt;
  size_t n = raysA[0].size();
  for (const auto& r : raysA)
    if (r.size() != n) throw std::invalid_argument("dimension mismatch");
  for (const auto& r : raysB)
    if (r.size() != n) throw std::invalid_argument("dimension mismatch");

  std::vector<Vec> A, B;
  for (size_t i = 0; i < raysA.size(); ++i) {
    A.push_back(primitive_directed(raysA[i]));
    B.push_back(primitive_directed(raysB[correspondence[i]]));
  }
  IntMat MA = IntMat::from_columns(A);
  IntMat MB = IntMat::from_columns(B);
  size_t r = rank(MA);
  if (rank(MB) != r) return std::nullopt;

  // Solve M * MA = MB row by row: for each output coordinate i, find row m_i
  // with m_i . a_j = (MB)_{i,j}.  The solution is unique on span(A); off the
  // span we complete by solving on a saturated lattice basis extension so the
  // resulting matrix is integral whenever possible.
  //
  // Strategy: extend a lattice basis of sat-span(A) to a basis of Z^n (via
  // SNF), map the complement arbitrarily-but-integrally (identity on the
  // complement coordinates), which keeps uniqueness on the span — the only
  // part callers use.
  SNF sa = smith_normal_form(MA);
  // Columns of U^{-1}: first r columns scaled by D give a basis adapted to
  // the span.  Lattice basis of saturated span: first r columns of U^{-1}.
  IntMat Uinv = unimodular_inverse(sa.U);
  std::vector<Vec> span_basis;
  for (size_t j = 0; j < r; ++j) span_basis.push_back(Uinv.col(j));
  std::vector<Vec> compl_basis;
  for (size_t j = r; j < n; ++j) compl_basis.push_back(Uinv.col(j));

  // Express each basis vector of the span rationally in terms of A, then map.
  std::vector<Vec> image_of_basis;
  for (const auto& bvec : span_basis) {
    auto lam = solve_rational(MA, to_q(bvec));
    if (!lam) return std::nullopt;
    QVec img(n, Rat(0));
    for (size_t j = 0; j < B.size(); ++j)
      for (size_t i = 0; i < n; ++i) img[i] += (*lam)[j] * Rat(B[j][i]);
    // The map is integral iff the image of every lattice vector of the
    // saturated span is integral.
    Vec iv(n);
    for (size_t i = 0; i < n; ++i) {
      if (boost::multiprecision::denominator(img[i]) != 1) return std::nullopt;
      iv[i] = boost::multiprecision::numerator(img[i]);
    }
    image_of_basis.push_back(iv);
  }
  // Lattice isomorphism of saturated spans: image lattice of span_basis must
  // equal the saturated span of B.  Check via SNF invariants.
  {
    IntMat IB = IntMat::from_columns(image_of_basis);
    SNF sb = smith_normal_form(IntMat::from_columns(B));
    // Saturated span of B has rank r; the image lattice (spanned by
    // image_of_basis) must be exactly sat-span(B):  every image vector lies in
    // sat-span(B) automatically; require the index to be 1.
    std::vector<Int> fi = invariant_factors(IB);
    if (fi.size() != r) return std::nullopt;
    Int prod = 1;
    for (auto& f : fi) prod *= f;
    if (prod != 1) return std::nullopt;
    (void)sb;
  }

  // Assemble M: on span_basis -> image_of_basis, on compl_basis -> itself.
  std::vector<Vec> all_src = span_basis, all_img = image_of_basis;
  for (const auto& cb : compl_basis) {
    all_src.push_back(cb);
    all_img.push_back(cb);
  }
  IntMat S = IntMat::from_columns(all_src);  // unimodular
  IntMat T = IntMat::from_columns(all_img);
  IntMat M = mat_mul(T, unimodular_inverse(S));
  // Final verification on the given rays.
  for (size_t j = 0; j < A.size(); ++j)
    if (mat_apply(M, A[j]) != B[j]) return std::nullopt;
  return M;
}

// ---------------------------------------------------------------------------
// Hilbert basis (naive bounded enumeration; desk-scale cones only)
// ---------------------------------------------------------------------------

namespace detail {

// Enumerate lattice points of the half-open parallelepiped sum t_i g_i,
// 0 <= t_i <= 1, for a simplicial generator set.
inline void parallelepiped_points(const std::vector<Vec>& gens,
                                  std::vector<Vec>& out) {
  if (gens.empty()) return;
  size_t n = gens[0].size();
  // Bounding box of the parallelepiped corners.
  Vec lo(n, Int(0)), hi(n, Int(0));
  size_t k = gens.size();
  for (size_t mask = 0; mask < (size_t(1) << k); ++mask) {
    Vec corner(n, Int(0));
    for (size_t i = 0; i < k; ++i)
      if (mask & (size_t(1) << i)) corner = vec_add(corner, gens[i]);
    for (size_t c = 0; c < n; ++c) {
      lo[c] = std::min(lo[c], corner[c]);
      hi[c] = std::max(hi[c], corner[c]);
    }
  }
  IntMat G = IntMat::from_columns(gens);
  std::function<void(Vec&, size_t)> rec = [&](Vec& pt, size_t c) {
    if (c == n) {
      auto lam = solve_rational(G, to_q(pt));
      if (!lam) return;
      // verify + bounds
      QVec lhs(n, Rat(0));
      for (size_t j = 0; j < gens.size(); ++j)
        for (size_t i = 0; i < n; ++i) lhs[i] += (*lam)[j] * Rat(gens[j][i]);
      for (size_t i = 0; i < n; ++i)
        if (lhs[i] != Rat(pt[i])) return;
      for (auto& l : *lam)
        if (l < 0 || l > 1) return;
      out.push_back(pt);
      return;
    }
    for (Int v = lo[c]; v <= hi[c]; ++v) {
      pt[c] = v;
      rec(pt, c + 1);
    }
  };
  Vec pt(n, Int(0));
  rec(pt, 0);
}

}  // namespace detail

// Hilbert basis of cone(c) ∩ Z^n for a strictly convex cone.  Naive: union of
// parallelepiped lattice points over a triangulation of the generator set,
// then removal of reducible elements.
inline std::vector<Vec> hilbert_basis(const RationalCone& c) {
  std::vector<Vec> rays = cone_extreme_rays(c);
  if (rays.empty()) return {};
  if (!cone_strictly_convex(c))
    throw std::invalid_argument("hilbert_basis: cone not strictly convex");
  size_t d = c.dim();
  // Triangulate: fix rays[0], combine with all (d-1)-subsets of the rest that
  // give full-dim simplicial subcones; at desk scale, just take all d-subsets
  // of rays containing linearly independent sets and union their points.
  std::vector<Vec> candidates = rays;
  size_t k = rays.size();
  std::vector<size_t> idx;
  std::function<void(size_t)> rec = [&](size_t start) {
    if (idx.size() == d) {
      std::vector<Vec> sub;
      for (size_t i : idx) sub.push_back(rays[i]);
      if (rank(IntMat::from_columns(sub)) == d)
        detail::parallelepiped_points(sub, candidates);
      return;
    }
    for (size_t i = start; i < k; ++i) {
      idx.push_back(i);
      rec(i + 1);
      idx.pop_back();
    }
  };
  rec(0);
  // Deduplicate, drop zero.
  std::sort(candidates.begin(), candidates.end(), lex_less);
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  candidates.erase(
      std::remove_if(candidates.begin(), candidates.end(),
                     [](const Vec& v) { return is_zero(v); }),
      candidates.end());
  // Keep irreducible elements: x is reducible iff x - y lies in the cone for
  // some other candidate y (then x = y + (x-y) with both in the monoid).
  std::vector<Vec> basis;
  for (const auto& x : candidates) {
    bool reducible = false;
    for (const auto& y : candidates) {
      if (y == x) continue;
      Vec diff = vec_sub(x, y);
      if (is_zero(diff)) continue;
      if (cone_contains(c, diff)) {
        reducible = true;
        break;
      }
    }
    if (!reducible) basis.push_back(x);
  }
  return basis;
}

}  // namespace afw
