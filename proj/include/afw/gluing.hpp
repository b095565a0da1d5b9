// Multiplicative gluing data on an affine complex: piecewise-multiplicative
// elements attached to cells, open/closed gluing data and their cocycle laws,
// the rank-one edge invariant D, lifting of closed data to Cech cocycles, and
// the obstruction class of closed data.  Also the toric local models: graded
// cone rings of cells and the boundary rings of the dual (fan-picture)
// vertices, as finitely presented monoid rings.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "afw/monodromy.hpp"
#include "afw/mpl.hpp"

namespace afw {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct GluingError : std::runtime_error {
  explicit GluingError(const std::string& m) : std::runtime_error(m) {}
};

struct CocycleViolationError : GluingError {
  size_t e1, e2, e3;  // composable pair and its composite
  CocycleViolationError(const std::string& m, size_t a, size_t b, size_t c)
      : GluingError(m), e1(a), e2(b), e3(c) {}
};

struct NotMaximalPairError : GluingError {
  explicit NotMaximalPairError(const std::string& m) : GluingError(m) {}
};

struct NotSimpleError : GluingError {
  explicit NotSimpleError(const std::string& m) : GluingError(m) {}
};

struct LCViolatedError : GluingError {
  explicit LCViolatedError(const std::string& m) : GluingError(m) {}
};

// ---------------------------------------------------------------------------
// Coefficient group: the divisible hull of a free abelian group on named
// generators.  An element is a finite product  prod g^(q_g)  with rational
// exponents.  Names that are decimal numerals denote prime numbers, so
// positive rationals embed via their factorizations; other names are free
// symbols.
// ---------------------------------------------------------------------------

struct Coeff {
  std::map<std::string, Rat> e;  // name -> exponent, no zero entries
  bool operator==(const Coeff& o) const { return e == o.e; }
  bool operator!=(const Coeff& o) const { return e != o.e; }
  bool operator<(const Coeff& o) const { return e < o.e; }
};

inline Coeff coeff_one() { return Coeff{}; }

inline bool coeff_is_one(const Coeff& a) { return a.e.empty(); }

inline Coeff coeff_gen(const std::string& name) {
  Coeff c;
  c.e[name] = 1;
  return c;
}

inline Coeff coeff_mul(const Coeff& a, const Coeff& b) {
  Coeff c = a;
  for (const auto& [k, v] : b.e) {
    Rat& slot = c.e[k];
    slot += v;
    if (slot == 0) c.e.erase(k);
  }
  return c;
}

inline Coeff coeff_pow(const Coeff& a, const Rat& q) {
  Coeff c;
  if (q == 0) return c;
  for (const auto& [k, v] : a.e) c.e[k] = v * q;
  return c;
}

inline Coeff coeff_inv(const Coeff& a) { return coeff_pow(a, Rat(-1)); }

inline Coeff coeff_div(const Coeff& a, const Coeff& b) {
  return coeff_mul(a, coeff_inv(b));
}

// Positive rational as a product of primes.
inline Coeff coeff_from_rational(const Rat& q) {
  if (q <= 0)
    throw std::invalid_argument("coeff_from_rational: not positive");
  Coeff c;
  auto factor = [&](Int v, int sign) {
    for (Int d = 2; d * d <= v; ++d) {
      while (v % d == 0) {
        Rat& slot = c.e[d.str()];
        slot += sign;
        if (slot == 0) c.e.erase(d.str());
        v /= d;
      }
    }
    if (v > 1) {
      Rat& slot = c.e[v.str()];
      slot += sign;
      if (slot == 0) c.e.erase(v.str());
    }
  };
  factor(boost::multiprecision::numerator(q), +1);
  factor(boost::multiprecision::denominator(q), -1);
  return c;
}

inline bool coeff_is_numeric(const Coeff& a) {
  for (const auto& [k, v] : a.e) {
    if (k.empty() || k.find_first_not_of("0123456789") != std::string::npos)
      return false;
    if (boost::multiprecision::denominator(v) != 1) return false;
  }
  return true;
}

inline Rat coeff_to_rational(const Coeff& a) {
  if (!coeff_is_numeric(a))
    throw std::invalid_argument("coeff_to_rational: not a rational value");
  Rat out(1);
  for (const auto& [k, v] : a.e) {
    Int p(k);
    Int n = boost::multiprecision::numerator(v);
    Rat f(1);
    Int cnt = n < 0 ? -n : n;
    for (Int i = 0; i < cnt; ++i) f *= p;
    out *= (n < 0) ? Rat(1) / f : f;
  }
  return out;
}

inline std::string coeff_str(const Coeff& a) {
  if (a.e.empty()) return "1";
  std::string s;
  for (const auto& [k, v] : a.e) {
    if (!s.empty()) s += "*";
    s += k;
    if (v != 1) s += "^" + v.str();
  }
  return s;
}

// Component vectors: elements of Lambda (x) Coeff, i.e. homs on covectors.
using CoeffVec = std::vector<Coeff>;

inline CoeffVec coeff_vec_one(size_t n) { return CoeffVec(n); }

inline CoeffVec coeff_vec_mul(const CoeffVec& a, const CoeffVec& b) {
  assert(a.size() == b.size());
  CoeffVec c(a.size());
  for (size_t i = 0; i < a.size(); ++i) c[i] = coeff_mul(a[i], b[i]);
  return c;
}

inline CoeffVec coeff_vec_inv(const CoeffVec& a) {
  CoeffVec c(a.size());
  for (size_t i = 0; i < a.size(); ++i) c[i] = coeff_inv(a[i]);
  return c;
}

// Evaluation at an integer covector: prod c_i^(n_i).
inline Coeff coeff_eval(const CoeffVec& c, const Vec& n) {
  assert(c.size() == n.size());
  Coeff out;
  for (size_t i = 0; i < c.size(); ++i)
    out = coeff_mul(out, coeff_pow(c[i], Rat(n[i])));
  return out;
}

// Base change along a vector map: if x' = M x, components transform so that
// evaluation is preserved: eval(transform(c, M), n') = eval(c, n' * M).
inline CoeffVec coeff_transform(const CoeffVec& c, const IntMat& M) {
  assert(M.cols == c.size());
  CoeffVec out(M.rows);
  for (size_t i = 0; i < M.rows; ++i)
    for (size_t j = 0; j < M.cols; ++j)
      out[i] = coeff_mul(out[i], coeff_pow(c[j], Rat(M(i, j))));
  return out;
}

inline std::set<std::string> coeff_names(const Coeff& a) {
  std::set<std::string> s;
  for (const auto& [k, v] : a.e) s.insert(k);
  return s;
}

// ---------------------------------------------------------------------------
// Exact rational linear algebra: particular solution and kernel of A x = b.
// ---------------------------------------------------------------------------

struct QSolve {
  bool consistent = true;
  std::vector<Rat> x;                      // particular solution (if any)
  std::vector<std::vector<Rat>> kernel;    // basis of the null space
};

inline QSolve qsolve(std::vector<std::vector<Rat>> A, std::vector<Rat> b) {
  QSolve out;
  size_t m = A.size();
  size_t n = m ? A[0].size() : (b.empty() ? 0 : 0);
  for (const auto& r : A) assert(r.size() == n);
  assert(b.size() == m);
  std::vector<size_t> pivot_col;
  size_t row = 0;
  for (size_t col = 0; col < n && row < m; ++col) {
    size_t pr = row;
    while (pr < m && A[pr][col] == 0) ++pr;
    if (pr == m) continue;
    std::swap(A[pr], A[row]);
    std::swap(b[pr], b[row]);
    Rat p = A[row][col];
    for (size_t j = col; j < n; ++j) A[row][j] /= p;
    b[row] /= p;
    for (size_t i = 0; i < m; ++i) {
      if (i == row || A[i][col] == 0) continue;
      Rat f = A[i][col];
      for (size_t j = col; j < n; ++j) A[i][j] -= f * A[row][j];
      b[i] -= f * b[row];
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (size_t i = row; i < m; ++i)
    if (b[i] != 0) {
      out.consistent = false;
      return out;
    }
  out.x.assign(n, Rat(0));
  for (size_t i = 0; i < pivot_col.size(); ++i) out.x[pivot_col[i]] = b[i];
  std::vector<bool> is_pivot(n, false);
  for (size_t c : pivot_col) is_pivot[c] = true;
  for (size_t fc = 0; fc < n; ++fc) {
    if (is_pivot[fc]) continue;
    std::vector<Rat> k(n, Rat(0));
    k[fc] = 1;
    for (size_t i = 0; i < pivot_col.size(); ++i) k[pivot_col[i]] = -A[i][fc];
    out.kernel.push_back(k);
  }
  return out;
}

// Multiplicative linear system: find Coeff values x_0..x_{n-1} with
// prod_j x_j^(A[i][j]) = c_i for all i.  Solved separately per generator
// name; returns nullopt if inconsistent for some name.
inline std::optional<std::vector<Coeff>> coeff_solve(
    const std::vector<std::vector<Rat>>& A, const std::vector<Coeff>& c) {
  assert(A.size() == c.size());
  size_t n = A.empty() ? 0 : A[0].size();
  std::set<std::string> names;
  for (const auto& v : c)
    for (const auto& [k, q] : v.e) names.insert(k);
  std::vector<Coeff> x(n);
  for (const auto& name : names) {
    std::vector<Rat> b;
    for (const auto& v : c) {
      auto it = v.e.find(name);
      b.push_back(it == v.e.end() ? Rat(0) : it->second);
    }
    QSolve s = qsolve(A, b);
    if (!s.consistent) return std::nullopt;
    for (size_t j = 0; j < n; ++j)
      if (s.x[j] != 0)
        x[j] = coeff_mul(x[j], coeff_pow(coeff_gen(name), s.x[j]));
  }
  // Homogeneous for every absent name; x is a valid solution overall.
  return x;
}

// ---------------------------------------------------------------------------
// Frame helpers
// ---------------------------------------------------------------------------

namespace detail {

// Chart of a specific corner (poly, vertex): polytope coordinates -> the fan
// coordinates at that vertex class.
inline AffMapZ corner_chart(const AffineComplex& cx, size_t poly,
                            size_t vertex) {
  const auto& c = cx.corners[cx.corner_id.at({poly, vertex})];
  const Vec& w = cx.spec.polytopes[poly].vertices[vertex];
  return AffMapZ(c.wedge_iso, vec_neg(mat_apply(c.wedge_iso, w)));
}

// Integer basis of the covectors vanishing on a local face of P.
inline std::vector<Vec> local_conormal_rows(const LatticePolytope& P,
                                            size_t face) {
  const auto& verts = P.faces[face].verts;
  size_t n = P.ambient_rank;
  if (verts.size() == 1) {
    std::vector<Vec> rows;
    for (size_t i = 0; i < n; ++i) {
      Vec e(n, Int(0));
      e[i] = 1;
      rows.push_back(e);
    }
    return rows;
  }
  std::vector<Vec> diffs;
  for (size_t i = 1; i < verts.size(); ++i)
    diffs.push_back(
        vec_sub(P.vertices[verts[i]], P.vertices[verts[0]]));
  return integer_kernel(IntMat::from_rows(diffs));
}

inline size_t vertex_index_of_face(const LatticePolytope& P, size_t face) {
  assert(P.faces[face].verts.size() == 1);
  return P.faces[face].verts[0];
}

// All non-identity morphism classes (2-chains).
inline std::vector<size_t> morphism_classes(const AffineComplex& cx) {
  std::vector<size_t> out;
  for (size_t c = 0; c < cx.chain_reps.size(); ++c)
    if (cx.chain_len(c) == 2) out.push_back(c);
  return out;
}

inline std::vector<size_t> chains_of_length(const AffineComplex& cx,
                                            size_t len) {
  std::vector<size_t> out;
  for (size_t c = 0; c < cx.chain_reps.size(); ++c)
    if (cx.chain_len(c) == len) out.push_back(c);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Piecewise-multiplicative elements on a cell.  The value at each vertex germ
// (v -> tau) is a hom on the covectors at v, stored as a component vector in
// the coordinates of the vertex fan at v; values at germs sharing a face must
// agree on the covectors conormal to that face.
// ---------------------------------------------------------------------------

struct PMElement {
  size_t tau = 0;
  std::map<size_t, CoeffVec> at_germ;  // vertex germ class -> components
};

inline PMElement pm_one(const AffineComplex& cx, size_t tau) {
  PMElement s;
  s.tau = tau;
  for (size_t f : vertex_germs(cx, tau)) s.at_germ[f] = coeff_vec_one(cx.n);
  return s;
}

inline PMElement pm_mul(const PMElement& a, const PMElement& b) {
  assert(a.tau == b.tau);
  PMElement c;
  c.tau = a.tau;
  for (const auto& [f, v] : a.at_germ)
    c.at_germ[f] = coeff_vec_mul(v, b.at_germ.at(f));
  return c;
}

inline PMElement pm_inv(const PMElement& a) {
  PMElement c;
  c.tau = a.tau;
  for (const auto& [f, v] : a.at_germ) c.at_germ[f] = coeff_vec_inv(v);
  return c;
}

inline bool pm_eq(const PMElement& a, const PMElement& b) {
  return a.tau == b.tau && a.at_germ == b.at_germ;
}

// Face compatibility: realize each morphism into tau and compare the germs at
// the vertices of the realized source face on its conormal covectors.
inline bool pm_is_compatible(const AffineComplex& cx, const PMElement& s,
                             std::string* why = nullptr) {
  auto germs = vertex_germs(cx, s.tau);
  if (s.at_germ.size() != germs.size()) {
    if (why) *why = "wrong germ key set";
    return false;
  }
  for (size_t f : germs) {
    auto it = s.at_germ.find(f);
    if (it == s.at_germ.end() || it->second.size() != cx.n) {
      if (why) *why = "missing or malformed germ component vector";
      return false;
    }
  }
  for (size_t g = 0; g < cx.chain_reps.size(); ++g) {
    if (cx.chain_len(g) > 2) continue;
    if (cx.chain_top_cell(g) != s.tau) continue;
    const LocalChain& rep = cx.chain_reps[g];
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    size_t wf = rep.faces.front();
    size_t keyface = rep.faces.back();
    auto rows = detail::local_conormal_rows(P, wf);
    const auto& verts = P.faces[wf].verts;
    std::vector<size_t> keys;
    std::vector<IntMat> charts;
    for (size_t u : verts) {
      LocalChain vc;
      vc.poly = rep.poly;
      vc.faces = {detail::vertex_face_of(P, u)};
      if (vc.faces[0] != keyface) vc.faces.push_back(keyface);
      keys.push_back(cx.chain_class_of.at(vc));
      charts.push_back(detail::corner_chart(cx, rep.poly, u).linear);
    }
    for (const Vec& n_p : rows) {
      std::optional<Coeff> ref;
      for (size_t i = 0; i < verts.size(); ++i) {
        Vec n_fan = covector_pushforward(n_p, charts[i]);
        Coeff v = coeff_eval(s.at_germ.at(keys[i]), n_fan);
        if (!ref)
          ref = v;
        else if (!(*ref == v)) {
          if (why)
            *why = "germs disagree on a conormal covector of chain class " +
                   std::to_string(g);
          return false;
        }
      }
    }
  }
  return true;
}

// Value of a face-compatible element on a covector conormal to tau, given in
// the ambient coordinates of the cell representative of tau.  Well defined
// because toric transport is trivial on these covectors.
inline Coeff pm_eval_conormal(const AffineComplex& cx, const PMElement& s,
                              const Vec& n_rep) {
  size_t f0 = vertex_germs(cx, s.tau).front();
  const LocalChain& rep = cx.chain_reps[f0];
  const LatticePolytope& P = cx.spec.polytopes[rep.poly];
  size_t keyface = rep.faces.back();
  const AffMapZ& R = cx.face_to_rep[cx.local_face_id.at({rep.poly, keyface})];
  Vec n_p = mat_apply_left(n_rep, R.linear);
  size_t u = detail::vertex_index_of_face(P, rep.faces.front());
  Vec n_fan =
      covector_pushforward(n_p, detail::corner_chart(cx, rep.poly, u).linear);
  return coeff_eval(s.at_germ.at(f0), n_fan);
}

// The element all of whose germs are transports of one component vector given
// at the first vertex germ (in its fan coordinates), along fixed paths
// through the first maximal germ of tau.
inline PMElement pm_from_invariant_vector(const AffineComplex& cx, size_t tau,
                                          const CoeffVec& base) {
  assert(base.size() == cx.n);
  PMElement s;
  s.tau = tau;
  auto germs = vertex_germs(cx, tau);
  size_t E0 = maximal_germs(cx, tau).front();
  auto frame = [&](size_t f) {
    // fan frame at the bottom of f -> ambient frame of the E0-top cell rep
    std::vector<size_t> path;
    if (!cx.is_identity_morphism(f)) path.push_back(f);
    if (!cx.is_identity_morphism(E0)) path.push_back(E0);
    if (path.empty())
      throw std::logic_error("pm_from_invariant_vector: zero-dimensional");
    const LocalChain& rep = locate_chain(cx, path);
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    size_t u = detail::vertex_index_of_face(P, rep.faces.front());
    IntMat A = detail::corner_chart(cx, rep.poly, u).linear;
    const AffMapZ& R =
        cx.face_to_rep[cx.local_face_id.at({rep.poly, rep.faces.back()})];
    return mat_mul(R.linear, unimodular_inverse(A));  // fan -> sigma0 rep
  };
  IntMat M0 = frame(germs.front());
  CoeffVec c_rep = coeff_transform(base, M0);
  for (size_t f : germs) {
    if (f == germs.front()) {
      s.at_germ[f] = base;
      continue;
    }
    IntMat Mf = frame(f);
    s.at_germ[f] = coeff_transform(c_rep, unimodular_inverse(Mf));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Open gluing data: one face-compatible element per non-identity morphism,
// subject to the exact cocycle law over composable pairs.
// ---------------------------------------------------------------------------

enum class GluingKind { Open, Closed, Lifted };

struct OpenGluingData {
  std::map<size_t, PMElement> entry;  // morphism class -> element of PM(src)
  GluingKind kind = GluingKind::Open;
};

inline OpenGluingData trivial_gluing_data(const AffineComplex& cx) {
  OpenGluingData od;
  for (size_t e : detail::morphism_classes(cx))
    od.entry[e] = pm_one(cx, cx.chain_bottom_cell(e));
  return od;
}

inline void validate_gluing(const AffineComplex& cx,
                            const OpenGluingData& od) {
  for (size_t e : detail::morphism_classes(cx)) {
    auto it = od.entry.find(e);
    if (it == od.entry.end())
      throw GluingError("validate_gluing: missing entry for morphism " +
                        std::to_string(e));
    if (it->second.tau != cx.chain_bottom_cell(e))
      throw GluingError("validate_gluing: entry attached to the wrong cell");
    std::string why;
    if (!pm_is_compatible(cx, it->second, &why))
      throw GluingError("validate_gluing: entry for morphism " +
                        std::to_string(e) + " not face-compatible: " + why);
  }
  for (size_t c : detail::chains_of_length(cx, 3)) {
    size_t e1 = cx.subchain(c, {0, 1});
    size_t e2 = cx.subchain(c, {1, 2});
    size_t e3 = cx.subchain(c, {0, 2});
    const PMElement& s1 = od.entry.at(e1);
    const PMElement& s2 = od.entry.at(e2);
    const PMElement& s3 = od.entry.at(e3);
    for (const auto& [f, v3] : s3.at_germ) {
      CoeffVec rhs =
          coeff_vec_mul(s1.at_germ.at(f), s2.at_germ.at(cx.compose(f, e1)));
      if (!(v3 == rhs))
        throw CocycleViolationError(
            "validate_gluing: cocycle law fails on the composable pair (" +
                std::to_string(e1) + ", " + std::to_string(e2) + ") -> " +
                std::to_string(e3),
            e1, e2, e3);
    }
  }
}

// Twist by a collection of elements, one per cell:
// s'_e = t_src^{-1} * s_e * (t_dst restricted along e).
inline OpenGluingData apply_equivalence(
    const AffineComplex& cx, const OpenGluingData& od,
    const std::map<size_t, PMElement>& t) {
  OpenGluingData out;
  out.kind = od.kind;
  for (const auto& [e, s] : od.entry) {
    size_t t1 = cx.chain_bottom_cell(e), t2 = cx.chain_top_cell(e);
    PMElement r;
    r.tau = t1;
    const PMElement& t2el = t.at(t2);
    for (const auto& [f, v] : s.at_germ)
      r.at_germ[f] = t2el.at_germ.at(cx.compose(f, e));
    out.entry[e] = pm_mul(pm_inv(t.at(t1)), pm_mul(s, r));
  }
  return out;
}

inline std::map<size_t, PMElement> trivial_twist(const AffineComplex& cx) {
  std::map<size_t, PMElement> t;
  for (size_t cell = 0; cell < cx.n_cells; ++cell)
    t[cell] = pm_one(cx, cell);
  return t;
}

// ---------------------------------------------------------------------------
// Closed gluing data: for each morphism, the common restriction of the germs
// to the covectors conormal to the source cell, recorded on the conormal
// basis of the cell representative.
// ---------------------------------------------------------------------------

struct ClosedGluingData {
  std::map<size_t, CoeffVec> val;  // morphism -> values on conormal basis
};

inline ClosedGluingData to_closed(const AffineComplex& cx,
                                  const OpenGluingData& od) {
  validate_gluing(cx, od);
  ClosedGluingData cd;
  for (const auto& [e, s] : od.entry) {
    auto basis = detail::cell_conormal_basis(cx, s.tau);
    CoeffVec v;
    for (const Vec& n : basis) v.push_back(pm_eval_conormal(cx, s, n));
    cd.val[e] = v;
  }
  return cd;
}

// Value at a covector conormal to the source of e, in the ambient frame of
// the source's cell representative.
inline Coeff closed_eval(const AffineComplex& cx, const ClosedGluingData& cd,
                         size_t e, const Vec& n_rep) {
  size_t tau = cx.chain_bottom_cell(e);
  auto basis = detail::cell_conormal_basis(cx, tau);
  auto coords = solve_integral(IntMat::from_columns(basis), n_rep);
  if (!coords)
    throw std::invalid_argument("closed_eval: covector not conormal");
  Coeff out;
  const CoeffVec& v = cd.val.at(e);
  for (size_t i = 0; i < v.size(); ++i)
    out = coeff_mul(out, coeff_pow(v[i], Rat((*coords)[i])));
  return out;
}

// Layout and integer rows of the Cech cocycle law for closed data: a closed
// collection is a cocycle iff every row's weighted product of values is 1.
struct ClosedLayout {
  std::vector<size_t> morphs;          // deterministic order
  std::map<size_t, size_t> offset;     // morphism -> first slot
  std::map<size_t, size_t> width;      // morphism -> basis size
  size_t total = 0;
};

inline ClosedLayout closed_layout(const AffineComplex& cx) {
  ClosedLayout L;
  L.morphs = detail::morphism_classes(cx);
  for (size_t e : L.morphs) {
    size_t w = detail::cell_conormal_basis(cx, cx.chain_bottom_cell(e)).size();
    L.offset[e] = L.total;
    L.width[e] = w;
    L.total += w;
  }
  return L;
}

inline std::vector<std::vector<Int>> closed_cocycle_rows(
    const AffineComplex& cx) {
  ClosedLayout L = closed_layout(cx);
  std::vector<std::vector<Int>> rows;
  for (size_t c : detail::chains_of_length(cx, 3)) {
    size_t e_ab = cx.subchain(c, {0, 1});
    size_t e_bt = cx.subchain(c, {1, 2});
    size_t e_at = cx.subchain(c, {0, 2});
    const LocalChain& rep = cx.chain_reps[c];
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    auto top_rows = detail::local_conormal_rows(P, rep.faces[2]);
    auto coords_for = [&](size_t e, size_t local_face, const Vec& n_p) {
      const AffMapZ& R =
          cx.face_to_rep[cx.local_face_id.at({rep.poly, local_face})];
      Vec n_cellrep = covector_pushforward(n_p, R.linear);
      auto basis = detail::cell_conormal_basis(cx, cx.chain_bottom_cell(e));
      auto coords = solve_integral(IntMat::from_columns(basis), n_cellrep);
      if (!coords)
        throw std::logic_error("closed_cocycle_rows: conormal decomposition "
                               "failed");
      return *coords;
    };
    for (const Vec& n_p : top_rows) {
      // law: val(e_at)(n) = val(e_ab)(n) * val(e_bt)(n)
      std::vector<Int> row(L.total, Int(0));
      Vec c_at = coords_for(e_at, rep.faces[0], n_p);
      Vec c_ab = coords_for(e_ab, rep.faces[0], n_p);
      Vec c_bt = coords_for(e_bt, rep.faces[1], n_p);
      for (size_t i = 0; i < c_at.size(); ++i)
        row[L.offset.at(e_at) + i] -= c_at[i];
      for (size_t i = 0; i < c_ab.size(); ++i)
        row[L.offset.at(e_ab) + i] += c_ab[i];
      for (size_t i = 0; i < c_bt.size(); ++i)
        row[L.offset.at(e_bt) + i] += c_bt[i];
      rows.push_back(row);
    }
  }
  return rows;
}

inline bool closed_is_cocycle(const AffineComplex& cx,
                              const ClosedGluingData& cd) {
  ClosedLayout L = closed_layout(cx);
  for (const auto& row : closed_cocycle_rows(cx)) {
    Coeff prod;
    for (size_t e : L.morphs) {
      const CoeffVec& v = cd.val.at(e);
      for (size_t i = 0; i < v.size(); ++i)
        prod = coeff_mul(prod, coeff_pow(v[i], Rat(row[L.offset.at(e) + i])));
    }
    if (!coeff_is_one(prod)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// The rank-one invariant D(s, h, f): for s in PM(tau), h : omega -> tau from
// a 1-cell and f : tau -> sigma fixing a realization, the ratio of the germs
// of s at the two endpoints of omega is d_omega (x) D for a single
// coefficient D.
// ---------------------------------------------------------------------------

namespace detail {

struct EdgeFrame {
  size_t poly = 0;
  size_t k1_plus = 0, k1_minus = 0;  // germ classes v± -> tau
  size_t k2_plus = 0, k2_minus = 0;  // germ classes v± -> sigma
  IntMat A_plus, A_minus;            // corner charts: poly -> fan coords
  Vec d;                             // primitive, from v+ to v- (poly coords)
  Vec nd;                            // integer covector with <nd, d> = 1
};

inline EdgeFrame edge_frame(const AffineComplex& cx, size_t h, size_t f) {
  bool hid = cx.is_identity_morphism(h), fid = cx.is_identity_morphism(f);
  if (hid && fid)
    throw std::invalid_argument("edge_frame: both morphisms are identities");
  size_t omega_face, tau_face, sigma_face;
  const LocalChain* rep;
  if (hid) {
    rep = &cx.chain_reps[f];
    omega_face = tau_face = rep->faces[0];
    sigma_face = rep->faces[1];
  } else if (fid) {
    rep = &cx.chain_reps[h];
    omega_face = rep->faces[0];
    tau_face = sigma_face = rep->faces[1];
  } else {
    rep = &locate_chain(cx, {h, f});
    omega_face = rep->faces[0];
    tau_face = rep->faces[1];
    sigma_face = rep->faces[2];
  }
  const LatticePolytope& P = cx.spec.polytopes[rep->poly];
  if (P.faces[omega_face].dim != 1)
    throw std::invalid_argument("edge_frame: source is not a 1-cell");
  auto ends = edge_endpoint_germs(cx, rep->poly, omega_face);
  auto key = [&](const std::pair<size_t, Vec>& e) {
    return std::make_pair(cx.chain_bottom_cell(e.first), e.first);
  };
  size_t plus = key(ends[0]) <= key(ends[1]) ? 0 : 1;
  size_t minus = 1 - plus;
  EdgeFrame out;
  out.poly = rep->poly;
  auto vertex_idx = [&](const Vec& coords) -> size_t {
    for (size_t i = 0; i < P.vertices.size(); ++i)
      if (P.vertices[i] == coords) return i;
    throw std::logic_error("edge_frame: endpoint is not a vertex");
  };
  size_t up = vertex_idx(ends[plus].second);
  size_t um = vertex_idx(ends[minus].second);
  auto germ_key = [&](size_t u, size_t top_face) {
    LocalChain c;
    c.poly = rep->poly;
    c.faces = {vertex_face_of(P, u)};
    if (c.faces[0] != top_face) c.faces.push_back(top_face);
    return cx.chain_class_of.at(c);
  };
  out.k1_plus = germ_key(up, tau_face);
  out.k1_minus = germ_key(um, tau_face);
  out.k2_plus = germ_key(up, sigma_face);
  out.k2_minus = germ_key(um, sigma_face);
  out.A_plus = corner_chart(cx, rep->poly, up).linear;
  out.A_minus = corner_chart(cx, rep->poly, um).linear;
  out.d = primitive_directed(vec_sub(ends[minus].second, ends[plus].second));
  auto nd = solve_integral(IntMat::from_rows({out.d}), Vec{Int(1)});
  if (!nd) throw std::logic_error("edge_frame: direction not primitive");
  out.nd = *nd;
  return out;
}

}  // namespace detail

inline Coeff D_invariant(const AffineComplex& cx, const PMElement& s, size_t h,
                         size_t f) {
  detail::EdgeFrame fd = detail::edge_frame(cx, h, f);
  size_t tau = cx.is_identity_morphism(h) ? cx.chain_bottom_cell(f)
                                          : cx.chain_top_cell(h);
  if (s.tau != tau)
    throw std::invalid_argument("D_invariant: element not attached to the "
                                "target of the edge morphism");
  CoeffVec cm = coeff_transform(s.at_germ.at(fd.k1_minus),
                                unimodular_inverse(fd.A_minus));
  CoeffVec cp = coeff_transform(s.at_germ.at(fd.k1_plus),
                                unimodular_inverse(fd.A_plus));
  CoeffVec r = coeff_vec_mul(cm, coeff_vec_inv(cp));
  Coeff D = coeff_eval(r, fd.nd);
  for (size_t i = 0; i < r.size(); ++i)
    if (!(r[i] == coeff_pow(D, Rat(fd.d[i]))))
      throw GluingError("D_invariant: germ ratio is not of rank one along "
                        "the edge");
  return D;
}

// ---------------------------------------------------------------------------
// Local constancy across zero-monodromy diagrams: whenever two morphisms to
// maximal cells induce the same edge covector, the D invariants of the
// attached data must agree.
// ---------------------------------------------------------------------------

struct LCReport {
  bool ok = true;
  // (edge morphism h, g1, g2) with equal covectors but different D
  std::vector<std::array<size_t, 3>> witnesses;
};

inline LCReport check_LC(const AffineComplex& cx, const MonodromyAtlas& atlas,
                         const OpenGluingData& od) {
  LCReport rep;
  for (size_t tau = 0; tau < cx.n_cells; ++tau) {
    if (cx.cell_dim[tau] == 0 || cx.cell_dim[tau] == int(cx.n)) continue;
    std::vector<size_t> homs;
    if (cx.cell_dim[tau] == 1) homs.push_back(cx.identity_morphism(tau));
    for (size_t h : detail::morphism_classes(cx))
      if (cx.chain_top_cell(h) == tau &&
          cx.cell_dim[cx.chain_bottom_cell(h)] == 1)
        homs.push_back(h);
    auto maxg = maximal_germs(cx, tau);
    for (size_t h : homs) {
      size_t omega = cx.is_identity_morphism(h) ? tau
                                                : cx.chain_bottom_cell(h);
      const auto& odata = atlas.omega.at(omega);
      for (size_t i = 0; i < maxg.size(); ++i)
        for (size_t j = i + 1; j < maxg.size(); ++j) {
          if (odata.n.at(cx.compose(h, maxg[i])) !=
              odata.n.at(cx.compose(h, maxg[j])))
            continue;
          Coeff D1 = D_invariant(cx, od.entry.at(maxg[i]), h, maxg[i]);
          Coeff D2 = D_invariant(cx, od.entry.at(maxg[j]), h, maxg[j]);
          if (!(D1 == D2)) {
            rep.ok = false;
            rep.witnesses.push_back({h, maxg[i], maxg[j]});
          }
        }
    }
  }
  return rep;
}

inline LCReport check_LC(const AffineComplex& cx, const OpenGluingData& od) {
  MonodromyAtlas atlas = edge_invariants(cx);
  return check_LC(cx, atlas, od);
}

// ---------------------------------------------------------------------------
// Equivalence of gluing data: s2 = t^{-1} s1 t for a collection of elements
// t_tau, multiplicative (induced by a single invariant vector) on maximal
// cells.  Returns the witnessing collection when one exists.
// ---------------------------------------------------------------------------

namespace detail {

// Variable layout for per-cell twist unknowns.  Maximal cells carry one
// global component vector in the frame of their cell representative; other
// cells carry one component vector per vertex germ (fan frames).
struct TwistLayout {
  const AffineComplex* cx = nullptr;
  std::map<std::pair<size_t, size_t>, size_t> germ_offset;  // (cell, germ)
  std::map<size_t, size_t> global_offset;                   // maximal cell
  std::map<size_t, IntMat> germ_matrix;  // maximal vertex germ -> frame map
  size_t total = 0;
  bool middle_only = false;  // restrict unknowns to 0 < dim < n
};

inline TwistLayout twist_layout(const AffineComplex& cx, bool middle_only) {
  TwistLayout L;
  L.cx = &cx;
  L.middle_only = middle_only;
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    int d = cx.cell_dim[cell];
    if (middle_only && (d == 0 || d == int(cx.n))) continue;
    if (d == int(cx.n)) {
      L.global_offset[cell] = L.total;
      L.total += cx.n;
      for (size_t G : vertex_germs(cx, cell)) {
        const auto& corner = cx.corners[cx.corner_of_germ.at(G)];
        IntMat A = cx.chart(G).linear;
        size_t top = cx.spec.polytopes[corner.poly].faces.size() - 1;
        const AffMapZ& R =
            cx.face_to_rep[cx.local_face_id.at({corner.poly, top})];
        L.germ_matrix[G] = mat_mul(A, unimodular_inverse(R.linear));
      }
    } else {
      for (size_t f : vertex_germs(cx, cell)) {
        L.germ_offset[{cell, f}] = L.total;
        L.total += cx.n;
      }
    }
  }
  return L;
}

// Add the coefficient row of "component i of the twist germ at (cell, f)".
inline void add_germ_component(const TwistLayout& L, std::vector<Rat>& row,
                               size_t cell, size_t f, size_t i, const Rat& c) {
  const AffineComplex& cx = *L.cx;
  int d = cx.cell_dim[cell];
  if (L.middle_only && (d == 0 || d == int(cx.n))) return;  // pinned to 1
  if (d == int(cx.n)) {
    size_t off = L.global_offset.at(cell);
    const IntMat& M = L.germ_matrix.at(f);
    for (size_t j = 0; j < cx.n; ++j) row[off + j] += c * Rat(M(i, j));
  } else {
    size_t off = L.germ_offset.at({cell, f});
    row[off + i] += c;
  }
}

// Add the coefficient row of "evaluation of the twist germ at (cell, f)
// against integer covector n (fan frame)".
inline void add_germ_eval(const TwistLayout& L, std::vector<Rat>& row,
                          size_t cell, size_t f, const Vec& n, const Rat& c) {
  for (size_t i = 0; i < n.size(); ++i)
    if (n[i] != 0) add_germ_component(L, row, cell, f, i, c * Rat(n[i]));
}

// Face-compatibility rows for all non-maximal, non-pinned cells.
inline void append_compat_rows(const TwistLayout& L,
                               std::vector<std::vector<Rat>>& A,
                               std::vector<Coeff>& b) {
  const AffineComplex& cx = *L.cx;
  for (size_t g = 0; g < cx.chain_reps.size(); ++g) {
    if (cx.chain_len(g) > 2) continue;
    size_t tau = cx.chain_top_cell(g);
    int d = cx.cell_dim[tau];
    if (d == int(cx.n)) continue;  // globals are compatible by construction
    if (L.middle_only && d == 0) continue;
    const LocalChain& rep = cx.chain_reps[g];
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    size_t wf = rep.faces.front();
    size_t keyface = rep.faces.back();
    auto rows = local_conormal_rows(P, wf);
    const auto& verts = P.faces[wf].verts;
    for (const Vec& n_p : rows)
      for (size_t i = 1; i < verts.size(); ++i) {
        std::vector<Rat> row(L.total, Rat(0));
        auto add = [&](size_t u, const Rat& c) {
          LocalChain vc;
          vc.poly = rep.poly;
          vc.faces = {vertex_face_of(P, u)};
          if (vc.faces[0] != keyface) vc.faces.push_back(keyface);
          size_t key = cx.chain_class_of.at(vc);
          Vec n_fan = covector_pushforward(
              n_p, corner_chart(cx, rep.poly, u).linear);
          add_germ_eval(L, row, tau, key, n_fan, c);
        };
        add(verts[0], Rat(1));
        add(verts[i], Rat(-1));
        bool nonzero = false;
        for (const Rat& x : row)
          if (x != 0) nonzero = true;
        if (nonzero) {
          A.push_back(row);
          b.push_back(coeff_one());
        }
      }
  }
}

// Materialize the twist collection from solved variable values.
inline std::map<size_t, PMElement> materialize_twist(
    const TwistLayout& L, const std::vector<Coeff>& vars) {
  const AffineComplex& cx = *L.cx;
  std::map<size_t, PMElement> t;
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    int d = cx.cell_dim[cell];
    PMElement el;
    el.tau = cell;
    if (L.middle_only && (d == 0 || d == int(cx.n))) {
      t[cell] = pm_one(cx, cell);
      continue;
    }
    if (d == int(cx.n)) {
      size_t off = L.global_offset.at(cell);
      CoeffVec glob(vars.begin() + off, vars.begin() + off + cx.n);
      for (size_t G : vertex_germs(cx, cell))
        el.at_germ[G] = coeff_transform(glob, L.germ_matrix.at(G));
    } else {
      for (size_t f : vertex_germs(cx, cell)) {
        size_t off = L.germ_offset.at({cell, f});
        el.at_germ[f] = CoeffVec(vars.begin() + off,
                                 vars.begin() + off + cx.n);
      }
    }
    t[cell] = el;
  }
  return t;
}

}  // namespace detail

struct GluingEquivalence {
  bool equivalent = false;
  std::map<size_t, PMElement> t;
};

inline GluingEquivalence equivalent(const AffineComplex& cx,
                                    const OpenGluingData& s1,
                                    const OpenGluingData& s2) {
  validate_gluing(cx, s1);
  validate_gluing(cx, s2);
  detail::TwistLayout L = detail::twist_layout(cx, /*middle_only=*/false);
  std::vector<std::vector<Rat>> A;
  std::vector<Coeff> b;
  detail::append_compat_rows(L, A, b);
  for (size_t e : detail::morphism_classes(cx)) {
    size_t t1 = cx.chain_bottom_cell(e), t2 = cx.chain_top_cell(e);
    for (const auto& [f, v1] : s1.entry.at(e).at_germ) {
      const CoeffVec& v2 = s2.entry.at(e).at_germ.at(f);
      size_t g2 = cx.compose(f, e);
      for (size_t i = 0; i < cx.n; ++i) {
        // s2 = t1^{-1} s1 t2|  =>  t1_i / t2_i = s1_i / s2_i  (component i)
        std::vector<Rat> row(L.total, Rat(0));
        detail::add_germ_component(L, row, t1, f, i, Rat(1));
        detail::add_germ_component(L, row, t2, g2, i, Rat(-1));
        A.push_back(row);
        b.push_back(coeff_div(v1[i], v2[i]));
      }
    }
  }
  GluingEquivalence out;
  auto sol = coeff_solve(A, b);
  if (!sol) return out;
  out.t = detail::materialize_twist(L, *sol);
  OpenGluingData check = apply_equivalence(cx, s1, out.t);
  for (const auto& [e, s] : s2.entry)
    if (!pm_eq(check.entry.at(e), s))
      throw std::logic_error("equivalent: solver produced a non-witness");
  out.equivalent = true;
  return out;
}

// ---------------------------------------------------------------------------
// Lifting: twist open data by middle-cell elements so that every D invariant
// of the result is trivial (the data is then induced by a Cech cocycle of
// invariant vectors).  Requires a simple complex satisfying local constancy.
// ---------------------------------------------------------------------------

struct LiftResult {
  OpenGluingData lifted;
  std::map<size_t, PMElement> t;
};

namespace detail {

// All (h, f) with h from a 1-cell into the source of the non-identity
// morphism f; h may be the identity when the source is itself a 1-cell.
inline std::vector<std::pair<size_t, size_t>> edge_diagrams(
    const AffineComplex& cx) {
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t f : morphism_classes(cx)) {
    size_t tau = cx.chain_bottom_cell(f);
    if (cx.cell_dim[tau] < 1) continue;
    if (cx.cell_dim[tau] == 1) out.push_back({cx.identity_morphism(tau), f});
    for (size_t h : morphism_classes(cx))
      if (cx.chain_top_cell(h) == tau &&
          cx.cell_dim[cx.chain_bottom_cell(h)] == 1)
        out.push_back({h, f});
  }
  return out;
}

}  // namespace detail

inline LiftResult lift_gluing_data(const AffineComplex& cx,
                                   const OpenGluingData& od) {
  validate_gluing(cx, od);
  MonodromyAtlas atlas = edge_invariants(cx);
  SimplicityCertificate cert = check_simple(atlas);
  if (!cert.simple)
    throw NotSimpleError("lift_gluing_data: complex is not simple: " +
                         cert.witness);
  LCReport lc = check_LC(cx, atlas, od);
  if (!lc.ok)
    throw LCViolatedError(
        "lift_gluing_data: local constancy fails on " +
        std::to_string(lc.witnesses.size()) + " zero-monodromy diagram(s)");

  detail::TwistLayout L = detail::twist_layout(cx, /*middle_only=*/true);
  std::vector<std::vector<Rat>> A;
  std::vector<Coeff> b;
  detail::append_compat_rows(L, A, b);
  for (const auto& [h, f] : detail::edge_diagrams(cx)) {
    detail::EdgeFrame fd = detail::edge_frame(cx, h, f);
    size_t t1 = cx.chain_bottom_cell(f), t2 = cx.chain_top_cell(f);
    // want D(s'_f, h, f) = 1 with s'_f = t1^{-1} s_f (t2 | f):
    //   D(t1,h,f) - D(t2|,h,f) = D(s_f,h,f)   (written additively)
    std::vector<Rat> row(L.total, Rat(0));
    Vec nm = covector_pushforward(fd.nd, fd.A_minus);
    Vec np = covector_pushforward(fd.nd, fd.A_plus);
    detail::add_germ_eval(L, row, t1, fd.k1_minus, nm, Rat(1));
    detail::add_germ_eval(L, row, t1, fd.k1_plus, np, Rat(-1));
    detail::add_germ_eval(L, row, t2, fd.k2_minus, nm, Rat(-1));
    detail::add_germ_eval(L, row, t2, fd.k2_plus, np, Rat(1));
    A.push_back(row);
    b.push_back(D_invariant(cx, od.entry.at(f), h, f));
  }
  auto sol = coeff_solve(A, b);
  if (!sol)
    throw GluingError("lift_gluing_data: twist system inconsistent");
  LiftResult out;
  out.t = detail::materialize_twist(L, *sol);
  out.lifted = apply_equivalence(cx, od, out.t);
  out.lifted.kind = GluingKind::Lifted;
  validate_gluing(cx, out.lifted);
  for (const auto& [h, f] : detail::edge_diagrams(cx))
    if (!coeff_is_one(D_invariant(cx, out.lifted.entry.at(f), h, f)))
      throw std::logic_error("lift_gluing_data: residual D invariant");
  return out;
}

// ---------------------------------------------------------------------------
// Transition maps between the boundary fans of two maximal cells sharing a
// cell tau: the piecewise-linear comparison of the two dual spaces over the
// cones of the localized normal fan of tau.
// ---------------------------------------------------------------------------

struct TransitionMap {
  size_t tau = 0, e1 = 0, e2 = 0;      // tau -> sigma1, tau -> sigma2
  size_t sigma1 = 0, sigma2 = 0;
  std::vector<size_t> germs;           // vertex germ classes v -> tau
  std::map<size_t, IntMat> psi;        // germ -> matrix M2-rep -> M1-rep
  std::map<size_t, std::vector<Vec>> cone_rows;  // germ -> H-rep in M1-rep
  // Piecewise-linear map on covectors of sigma1's representative frame.
  Vec apply(const Vec& p) const {
    for (size_t f : germs) {
      bool inside = true;
      for (const Vec& r : cone_rows.at(f))
        if (dot(p, r) < 0) {
          inside = false;
          break;
        }
      if (inside) return mat_apply_left(p, psi.at(f));
    }
    throw std::invalid_argument(
        "TransitionMap::apply: point outside the localized fan");
  }
};

inline TransitionMap transition_map(const AffineComplex& cx, size_t e1,
                                    size_t e2) {
  TransitionMap tm;
  tm.e1 = e1;
  tm.e2 = e2;
  tm.tau = cx.chain_bottom_cell(e1);
  tm.sigma1 = cx.chain_top_cell(e1);
  tm.sigma2 = cx.chain_top_cell(e2);
  if (cx.chain_bottom_cell(e2) != tm.tau)
    throw std::invalid_argument("transition_map: sources differ");
  if (cx.cell_dim[tm.sigma1] != int(cx.n) ||
      cx.cell_dim[tm.sigma2] != int(cx.n))
    throw std::invalid_argument("transition_map: targets not maximal");
  bool found = false;
  for (const auto& mp : maximal_pairs(cx, tm.sigma1, tm.sigma2)) {
    for (const auto& gp : mp.germ_pairs)
      if (gp == std::make_pair(e1, e2)) {
        found = true;
        bool maximal_node = false;
        for (const auto& nn : mp.maximal_nodes)
          if (nn == std::make_pair(e1, e2)) maximal_node = true;
        if (!maximal_node)
          throw NotMaximalPairError(
              "transition_map: the pair is not maximal in its component");
      }
    if (found) break;
  }
  if (!found)
    throw std::invalid_argument("transition_map: not a germ pair of the two "
                                "maximal cells");

  auto realize = [&](size_t e) {
    // poly, tau-face, transport to the cell representative of the top
    if (cx.is_identity_morphism(e)) {
      const LocalFace& r = cx.cell_rep[cx.chain_top_cell(e)];
      return std::make_tuple(r.poly, r.face, AffMapZ::identity(cx.n));
    }
    const LocalChain& r = cx.chain_reps[e];
    size_t top = cx.spec.polytopes[r.poly].faces.size() - 1;
    return std::make_tuple(
        r.poly, r.faces[0],
        cx.face_to_rep[cx.local_face_id.at({r.poly, top})]);
  };
  auto [p1, tf1, R1] = realize(e1);
  auto [p2, tf2, R2] = realize(e2);
  const LatticePolytope& P1 = cx.spec.polytopes[p1];
  const LatticePolytope& P2 = cx.spec.polytopes[p2];

  auto germ_of_vertex = [&](size_t poly, size_t u, size_t tf) {
    LocalChain c;
    c.poly = poly;
    c.faces = {detail::vertex_face_of(cx.spec.polytopes[poly], u)};
    if (c.faces[0] != tf) c.faces.push_back(tf);
    return cx.chain_class_of.at(c);
  };
  std::map<size_t, size_t> vert1, vert2;  // germ -> vertex index
  for (size_t u : P1.faces[tf1].verts) {
    size_t g = germ_of_vertex(p1, u, tf1);
    if (vert1.count(g))
      throw GluingError("transition_map: self-identified vertex germs");
    vert1[g] = u;
  }
  for (size_t u : P2.faces[tf2].verts) vert2[germ_of_vertex(p2, u, tf2)] = u;
  if (vert1.size() != vert2.size())
    throw std::logic_error("transition_map: germ sets differ");

  auto corner_to_rep = [&](size_t G) {
    const auto& corner = cx.corners[cx.corner_of_germ.at(G)];
    size_t top = cx.spec.polytopes[corner.poly].faces.size() - 1;
    return cx.face_to_rep[cx.local_face_id.at({corner.poly, top})].linear;
  };
  for (const auto& [g, u] : vert1) {
    tm.germs.push_back(g);
    size_t G1 = cx.compose(g, e1), G2 = cx.compose(g, e2);
    IntMat cross = cx.cross_via(G2, G1).linear;  // G2 corner -> G1 corner
    tm.psi[g] = mat_mul(corner_to_rep(G1),
                        mat_mul(cross, unimodular_inverse(corner_to_rep(G2))));
    std::vector<Vec> rows;
    for (size_t w : P1.faces[tf1].verts)
      if (w != u)
        rows.push_back(mat_apply(R1.linear,
                                 vec_sub(P1.vertices[w], P1.vertices[u])));
    tm.cone_rows[g] = rows;
  }

  // Consistency: the linear pieces agree on overlaps (conormal covectors of
  // the smallest common face of the two vertices) and carry the tau-copy of
  // sigma2's frame onto that of sigma1's.
  for (const auto& [g, u2] : vert2) {
    size_t u1 = vert1.at(g);
    for (const auto& [h, w2] : vert2) {
      size_t w1 = vert1.at(h);
      Vec d2 = mat_apply(R2.linear,
                         vec_sub(P2.vertices[w2], P2.vertices[u2]));
      Vec d1 = mat_apply(R1.linear,
                         vec_sub(P1.vertices[w1], P1.vertices[u1]));
      if (mat_apply(tm.psi.at(g), d2) != d1)
        throw std::logic_error("transition_map: vertex alignment failure");
    }
  }
  for (size_t a = 0; a < tm.germs.size(); ++a)
    for (size_t bidx = a + 1; bidx < tm.germs.size(); ++bidx) {
      size_t ga = tm.germs[a], gb = tm.germs[bidx];
      size_t ua = vert1.at(ga), ub = vert1.at(gb);
      // smallest face of the tau-copy containing both vertices
      size_t best = size_t(-1);
      for (size_t fc = 0; fc < P1.faces.size(); ++fc) {
        const auto& fv = P1.faces[fc].verts;
        if (std::find(fv.begin(), fv.end(), ua) == fv.end()) continue;
        if (std::find(fv.begin(), fv.end(), ub) == fv.end()) continue;
        const auto& tv = P1.faces[tf1].verts;
        bool sub = std::includes(tv.begin(), tv.end(), fv.begin(), fv.end());
        if (!sub) continue;
        if (best == size_t(-1) || P1.faces[fc].dim < P1.faces[best].dim)
          best = fc;
      }
      if (best == size_t(-1)) continue;
      for (const Vec& n_p : detail::local_conormal_rows(P1, best)) {
        Vec n_rep = covector_pushforward(n_p, R1.linear);
        if (mat_apply_left(n_rep, tm.psi.at(ga)) !=
            mat_apply_left(n_rep, tm.psi.at(gb)))
          throw std::logic_error("transition_map: pieces disagree on an "
                                 "overlap");
      }
    }
  return tm;
}

// ---------------------------------------------------------------------------
// Monoid presentations: generators with integral points and degrees, binomial
// relations, and annihilation relations (monomials equal to zero).
// ---------------------------------------------------------------------------

struct MonoidGenerator {
  Vec point;
  Int degree = 1;
};

struct MonoidRelation {
  std::vector<Int> lhs, rhs;  // exponent vectors; rhs empty for annihilation
  bool annihilation = false;
};

struct MonoidPresentation {
  size_t ambient = 0;
  bool graded = true;  // value of a monomial includes its total degree
  std::vector<MonoidGenerator> gens;
  std::vector<MonoidRelation> rels;
  Int degree_bound = 4;
};

namespace detail {

inline Int monomial_weight(const MonoidPresentation& P,
                           const std::vector<Int>& e) {
  Int w = 0;
  for (size_t i = 0; i < e.size(); ++i) w += e[i] * P.gens[i].degree;
  return w;
}

inline std::pair<Vec, Int> monomial_value(const MonoidPresentation& P,
                                          const std::vector<Int>& e) {
  Vec p(P.ambient, Int(0));
  for (size_t i = 0; i < e.size(); ++i)
    for (size_t j = 0; j < P.ambient; ++j)
      p[j] += e[i] * P.gens[i].point[j];
  return {p, P.graded ? monomial_weight(P, e) : Int(0)};
}

inline void enumerate_monomials(
    const MonoidPresentation& P, const Int& bound,
    const std::function<void(const std::vector<Int>&)>& emit) {
  std::vector<Int> e(P.gens.size(), Int(0));
  std::function<void(size_t, Int)> rec = [&](size_t i, Int left) {
    if (i == P.gens.size()) {
      emit(e);
      return;
    }
    Int maxe = P.gens[i].degree > 0 ? left / P.gens[i].degree : Int(0);
    for (Int k = 0; k <= maxe; ++k) {
      e[i] = k;
      rec(i + 1, left - k * P.gens[i].degree);
    }
    e[i] = 0;
  };
  rec(0, bound);
}

// Spanning binomial relations among equal-valued monomials within the bound.
inline void spanning_relations(MonoidPresentation& P) {
  std::map<std::pair<Vec, Int>, std::vector<std::vector<Int>>> groups;
  enumerate_monomials(P, P.degree_bound, [&](const std::vector<Int>& e) {
    bool zero = true;
    for (const Int& x : e)
      if (x != 0) zero = false;
    if (zero) return;
    groups[monomial_value(P, e)].push_back(e);
  });
  for (auto& [val, mons] : groups) {
    for (size_t i = 1; i < mons.size(); ++i) {
      MonoidRelation r;
      r.lhs = mons[0];
      r.rhs = mons[i];
      P.rels.push_back(r);
    }
  }
}

}  // namespace detail

// Graded ring of a lattice polytope Q (possibly of lower dimension than its
// ambient space): degree-k part spanned by the lattice points of k*Q.
inline MonoidPresentation cone_ring_presentation(const std::vector<Vec>& verts,
                                                 size_t ambient,
                                                 Int degree_bound = 4) {
  MonoidPresentation P;
  P.ambient = ambient;
  P.graded = true;
  P.degree_bound = degree_bound;
  std::vector<std::set<Vec>> level(size_t(degree_bound) + 1);
  for (Int k = 1; k <= degree_bound; ++k) {
    std::vector<Vec> scaled;
    for (const Vec& v : verts) {
      Vec s(v.size());
      for (size_t j = 0; j < v.size(); ++j) s[j] = v[j] * k;
      scaled.push_back(s);
    }
    auto pts = lattice_points(make_polytope(ambient, scaled));
    level[size_t(k)] = std::set<Vec>(pts.begin(), pts.end());
  }
  for (Int k = 1; k <= degree_bound; ++k) {
    for (const Vec& q : level[size_t(k)]) {
      bool reducible = false;
      for (Int j = 1; j < k && !reducible; ++j)
        for (const Vec& a : level[size_t(j)]) {
          Vec r = vec_sub(q, a);
          if (level[size_t(k - j)].count(r)) {
            reducible = true;
            break;
          }
        }
      if (!reducible) P.gens.push_back({q, k});
    }
  }
  std::sort(P.gens.begin(), P.gens.end(),
            [](const MonoidGenerator& a, const MonoidGenerator& b) {
              return std::tie(a.degree, a.point) < std::tie(b.degree, b.point);
            });
  detail::spanning_relations(P);
  return P;
}

// Express a monoid element as a monomial in the generators, or nullopt.
inline std::optional<std::vector<Int>> represent_in_gens(
    const MonoidPresentation& P, const Vec& point, const Int& degree) {
  std::vector<Int> e(P.gens.size(), Int(0));
  std::function<std::optional<std::vector<Int>>(size_t, Vec, Int)> rec =
      [&](size_t i, Vec rest, Int deg) -> std::optional<std::vector<Int>> {
    bool zero = is_zero(rest);
    if (P.graded ? (deg == 0 && zero) : zero) return e;
    if (i == P.gens.size()) return std::nullopt;
    Int maxe = P.graded
                   ? (P.gens[i].degree > 0 ? deg / P.gens[i].degree : Int(0))
                   : P.degree_bound;
    for (Int k = maxe; k >= 0; --k) {
      Vec r = rest;
      bool ok = true;
      for (size_t j = 0; j < P.ambient; ++j)
        r[j] -= k * P.gens[i].point[j];
      Int d = deg - k * P.gens[i].degree;
      if (P.graded && d < 0) ok = false;
      if (ok) {
        e[i] = k;
        auto sub = rec(i + 1, r, d);
        if (sub) return sub;
      }
      e[i] = 0;
    }
    return std::nullopt;
  };
  return rec(0, point, degree);
}

// Faithfulness of a presentation within the weight bound: the relations
// connect exactly the monomials with equal value, and annihilations reach
// exactly the monomials whose value is declared zero by `is_zero_value`.
inline bool presentation_faithful(
    const MonoidPresentation& P,
    const std::function<bool(const Vec&, const Int&)>& is_zero_value =
        nullptr) {
  std::vector<std::vector<Int>> mons;
  std::map<std::vector<Int>, size_t> idx;
  detail::enumerate_monomials(P, P.degree_bound,
                              [&](const std::vector<Int>& e) {
                                idx[e] = mons.size();
                                mons.push_back(e);
                              });
  std::vector<size_t> uf(mons.size() + 1);
  for (size_t i = 0; i < uf.size(); ++i) uf[i] = i;
  std::function<size_t(size_t)> find = [&](size_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  auto join = [&](size_t a, size_t b) { uf[find(a)] = find(b); };
  size_t zero_node = mons.size();
  auto divisible = [&](const std::vector<Int>& m, const std::vector<Int>& d) {
    for (size_t i = 0; i < m.size(); ++i)
      if (m[i] < d[i]) return false;
    return true;
  };
  for (const auto& rel : P.rels) {
    for (size_t mi = 0; mi < mons.size(); ++mi) {
      if (!divisible(mons[mi], rel.lhs)) continue;
      if (rel.annihilation) {
        join(mi, zero_node);
        continue;
      }
      std::vector<Int> other = mons[mi];
      for (size_t i = 0; i < other.size(); ++i)
        other[i] += rel.rhs[i] - rel.lhs[i];
      auto it = idx.find(other);
      if (it != idx.end()) join(mi, it->second);
    }
  }
  // saturate zero class under divisibility (0 * x = 0)
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t mi = 0; mi < mons.size(); ++mi) {
      if (find(mi) == find(zero_node)) continue;
      for (size_t mj = 0; mj < mons.size(); ++mj) {
        if (find(mj) != find(zero_node)) continue;
        if (divisible(mons[mi], mons[mj]) && mi != mj) {
          bool proper = false;
          for (size_t i = 0; i < mons[mi].size(); ++i)
            if (mons[mj][i] > 0) proper = true;
          if (proper) {
            join(mi, zero_node);
            changed = true;
          }
        }
      }
    }
  }
  std::map<size_t, std::pair<Vec, Int>> class_value;
  std::map<std::pair<Vec, Int>, size_t> value_class;
  for (size_t mi = 0; mi < mons.size(); ++mi) {
    auto val = detail::monomial_value(P, mons[mi]);
    bool zero = is_zero_value && is_zero_value(val.first, val.second);
    size_t root = find(mi);
    if (zero != (root == find(zero_node))) return false;
    if (zero) continue;
    auto it = class_value.find(root);
    if (it == class_value.end()) {
      class_value[root] = val;
    } else if (it->second != val) {
      return false;
    }
    auto vt = value_class.find(val);
    if (vt == value_class.end()) {
      value_class[val] = root;
    } else if (vt->second != root) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Cone-picture rings: the graded ring of each cell, and the restriction maps
// of a morphism tau -> sigma carrying each generator of the sigma-ring to a
// monomial of the tau-ring or to zero.
// ---------------------------------------------------------------------------

struct ConePictureRings {
  std::map<size_t, MonoidPresentation> ring;  // cell -> graded ring
  // morphism -> per generator of the target ring, the exponent vector of its
  // image in the source ring (absent = zero).
  std::map<size_t, std::vector<std::optional<std::vector<Int>>>> restriction;
};

inline ConePictureRings cone_picture_rings(const AffineComplex& cx,
                                           Int degree_bound = 4) {
  ConePictureRings out;
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    const LocalFace& r = cx.cell_rep[cell];
    const LatticePolytope& P = cx.spec.polytopes[r.poly];
    std::vector<Vec> verts;
    for (size_t u : P.faces[r.face].verts) verts.push_back(P.vertices[u]);
    out.ring[cell] = cone_ring_presentation(verts, cx.n, degree_bound);
  }
  for (size_t e : detail::morphism_classes(cx)) {
    size_t tau = cx.chain_bottom_cell(e), sigma = cx.chain_top_cell(e);
    const LocalChain& rep = cx.chain_reps[e];
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    AffMapZ Rs =
        cx.face_to_rep[cx.local_face_id.at({rep.poly, rep.faces[1]})];
    AffMapZ Rt =
        cx.face_to_rep[cx.local_face_id.at({rep.poly, rep.faces[0]})];
    AffMapZ RsInv = Rs.inverse();
    std::map<Int, std::set<Vec>> tau_level;
    auto tau_points = [&](const Int& k) -> const std::set<Vec>& {
      auto it = tau_level.find(k);
      if (it != tau_level.end()) return it->second;
      std::vector<Vec> scaled;
      for (size_t u : P.faces[rep.faces[0]].verts) {
        Vec s = P.vertices[u];
        for (auto& x : s) x *= k;
        scaled.push_back(s);
      }
      auto pts = lattice_points(make_polytope(cx.n, scaled));
      return tau_level[k] = std::set<Vec>(pts.begin(), pts.end());
    };
    std::vector<std::optional<std::vector<Int>>> images;
    for (const auto& g : out.ring.at(sigma).gens) {
      // generator (q, k) in the sigma representative frame -> this poly
      Vec q_p = mat_apply(RsInv.linear, g.point);
      for (size_t j = 0; j < cx.n; ++j)
        q_p[j] += g.degree * RsInv.translation[j];
      if (!tau_points(g.degree).count(q_p)) {
        images.push_back(std::nullopt);
        continue;
      }
      Vec q_t = mat_apply(Rt.linear, q_p);
      for (size_t j = 0; j < cx.n; ++j)
        q_t[j] += g.degree * Rt.translation[j];
      auto expn = represent_in_gens(out.ring.at(tau), q_t, g.degree);
      if (!expn)
        throw std::logic_error("cone_picture_rings: generator image not in "
                               "the target ring");
      images.push_back(expn);
    }
    out.restriction[e] = images;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fan-picture local models at a vertex with cell polytope S (full dimension):
// the monoid of the dual of the cone over S x {1}, its Hilbert basis and
// binomial presentation, and the boundary quotient with its annihilations.
// ---------------------------------------------------------------------------

struct FanLocalModel {
  std::vector<Vec> hilbert_basis;    // in dual x Z, primitive set of gens
  MonoidPresentation cone_ring;      // the full dual monoid
  MonoidPresentation boundary_ring;  // supported on the boundary, with zeros
  Vec rho;                           // the distinguished element (0,...,0,1)
  std::function<bool(const Vec&, const Int&)> interior;  // zero predicate
};

inline FanLocalModel fan_local_models(const LatticePolytope& S,
                                      Int degree_bound = 4) {
  size_t n = S.ambient_rank;
  if (S.tangent_basis.size() != n)
    throw std::invalid_argument("fan_local_models: polytope not full "
                                "dimensional");
  std::vector<Vec> crays;
  for (const Vec& v : S.vertices) {
    Vec r = v;
    r.push_back(Int(1));
    crays.push_back(r);
  }
  RationalCone C(n + 1, crays);
  RationalCone Cd = dual_cone(C);
  std::vector<Vec> ext = cone_extreme_rays(Cd);
  if (ext.size() > 18)
    throw std::invalid_argument("fan_local_models: too many extreme rays");
  // Hilbert basis: candidates in the zonotope of the extreme rays.
  std::vector<Vec> sums;
  size_t m = ext.size();
  for (size_t mask = 0; mask < (size_t(1) << m); ++mask) {
    Vec s(n + 1, Int(0));
    for (size_t i = 0; i < m; ++i)
      if (mask & (size_t(1) << i)) s = vec_add(s, ext[i]);
    sums.push_back(s);
  }
  std::vector<Vec> cand;
  for (const Vec& p : lattice_points(make_polytope(n + 1, sums)))
    if (!is_zero(p) && cone_contains(Cd, p)) cand.push_back(p);
  std::set<Vec> cand_set(cand.begin(), cand.end());
  std::vector<Vec> hb;
  for (const Vec& p : cand) {
    bool reducible = false;
    for (const Vec& a : cand) {
      if (a == p) continue;
      Vec r = vec_sub(p, a);
      if (!is_zero(r) && cone_contains(Cd, r)) {
        reducible = true;
        break;
      }
    }
    if (!reducible) hb.push_back(p);
  }
  std::sort(hb.begin(), hb.end());

  FanLocalModel out;
  out.hilbert_basis = hb;
  out.rho = Vec(n + 1, Int(0));
  out.rho[n] = 1;
  auto interior = [crays](const Vec& p, const Int&) {
    for (const Vec& r : crays)
      if (dot(p, r) == 0) return false;
    return true;
  };
  out.interior = interior;

  out.cone_ring.ambient = n + 1;
  out.cone_ring.graded = false;
  out.cone_ring.degree_bound = degree_bound;
  for (const Vec& p : hb) out.cone_ring.gens.push_back({p, Int(1)});
  detail::spanning_relations(out.cone_ring);

  MonoidPresentation& B = out.boundary_ring;
  B.ambient = n + 1;
  B.graded = false;
  B.degree_bound = degree_bound;
  for (const Vec& p : hb)
    if (!interior(p, Int(0))) B.gens.push_back({p, Int(1)});
  // binomials between boundary monomials, and minimal annihilations
  std::map<Vec, std::vector<std::vector<Int>>> groups;
  detail::enumerate_monomials(B, B.degree_bound, [&](const std::vector<Int>&
                                                         e) {
    bool zero = true;
    for (const Int& x : e)
      if (x != 0) zero = false;
    if (zero) return;
    auto val = detail::monomial_value(B, e);
    if (interior(val.first, Int(0))) {
      bool minimal = true;
      for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        Vec sub = vec_sub(val.first, B.gens[i].point);
        if (!is_zero(sub) && interior(sub, Int(0))) minimal = false;
      }
      if (minimal) {
        MonoidRelation r;
        r.lhs = e;
        r.annihilation = true;
        B.rels.push_back(r);
      }
      return;
    }
    groups[val.first].push_back(e);
  });
  for (auto& [val, mons] : groups)
    for (size_t i = 1; i < mons.size(); ++i) {
      MonoidRelation r;
      r.lhs = mons[0];
      r.rhs = mons[i];
      B.rels.push_back(r);
    }
  return out;
}

inline FanLocalModel fan_local_models(const AffineComplex& cx, size_t sigma,
                                      Int degree_bound = 4) {
  if (cx.cell_dim[sigma] != int(cx.n))
    throw std::invalid_argument("fan_local_models: cell not maximal");
  const LocalFace& r = cx.cell_rep[sigma];
  const LatticePolytope& P = cx.spec.polytopes[r.poly];
  std::vector<Vec> verts;
  for (size_t u : P.faces[r.face].verts) verts.push_back(P.vertices[u]);
  return fan_local_models(make_polytope(cx.n, verts), degree_bound);
}

// ---------------------------------------------------------------------------
// Obstruction class of closed data: the 2-cocycle of defects of the naive
// degree-lift determined by a strictly convex multi-valued piecewise-linear
// function, and its triviality as a coboundary.
// ---------------------------------------------------------------------------

struct ObstructionResult {
  std::map<size_t, Coeff> cocycle;  // 3-chain class -> defect
  bool trivial = false;
};

inline ObstructionResult obstruction_o(const AffineComplex& cx,
                                       const MPLFunction& phi,
                                       const ClosedGluingData& cd) {
  MPLReport mr = mpl_validate(cx, phi);
  if (!mr.strict_convexity)
    throw NotStrictlyConvexError("obstruction_o: " + mr.witness);

  // positions: slope differences at the base vertex germ of each cell
  auto pos = [&](size_t cell, size_t G) {
    size_t fb = vertex_germs(cx, cell).front();
    return detail::mpl_slope(phi, cx.compose(fb, G));
  };
  // evaluate cd entry e (source cell s) at a covector given in the fan frame
  // of the base vertex germ of `big` (a cell containing the source via e).
  auto eval_at = [&](size_t e, size_t big, const Vec& n_fan) {
    size_t fb = vertex_germs(cx, big).front();
    const LocalChain& rep = cx.chain_reps[fb];
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    size_t bigface = rep.faces.back();
    size_t u = detail::vertex_index_of_face(P, rep.faces.front());
    Vec n_p =
        mat_apply_left(n_fan, detail::corner_chart(cx, rep.poly, u).linear);
    // find the local face realizing e inside this copy of big
    size_t src_face = size_t(-1);
    for (size_t fc = 0; fc < P.faces.size(); ++fc) {
      if (fc == bigface) continue;
      LocalChain c;
      c.poly = rep.poly;
      c.faces = {fc, bigface};
      auto it = cx.chain_class_of.find(c);
      if (it != cx.chain_class_of.end() && it->second == e) {
        src_face = fc;
        break;
      }
    }
    if (src_face == size_t(-1))
      throw std::logic_error("obstruction_o: morphism not realized at the "
                             "base germ");
    const AffMapZ& R =
        cx.face_to_rep[cx.local_face_id.at({rep.poly, src_face})];
    return closed_eval(cx, cd, e, covector_pushforward(n_p, R.linear));
  };

  ObstructionResult out;
  for (size_t c : detail::chains_of_length(cx, 3)) {
    size_t e_ab = cx.subchain(c, {0, 1});
    size_t e_bt = cx.subchain(c, {1, 2});
    size_t e_at = cx.subchain(c, {0, 2});
    size_t bcell = cx.chain_cells[c][1], tcell = cx.chain_cells[c][2];
    size_t G0t = maximal_germs(cx, tcell).front();
    size_t G0b = maximal_germs(cx, bcell).front();
    std::optional<Coeff> defect;
    for (size_t G : maximal_germs(cx, tcell)) {
      Vec dt = vec_sub(pos(tcell, G), pos(tcell, G0t));
      size_t Gb = cx.compose(e_bt, G);
      Vec db = vec_sub(pos(bcell, Gb), pos(bcell, G0b));
      Coeff d = coeff_mul(
          coeff_mul(eval_at(e_bt, tcell, dt), eval_at(e_ab, bcell, db)),
          coeff_inv(eval_at(e_at, tcell, dt)));
      if (!defect)
        defect = d;
      else if (!(*defect == d))
        throw std::logic_error("obstruction_o: defect depends on the "
                               "maximal germ");
    }
    out.cocycle[c] = *defect;
  }
  // cocycle law on 4-chains
  for (size_t c : detail::chains_of_length(cx, 4)) {
    Coeff z = coeff_mul(
        coeff_mul(out.cocycle.at(cx.subchain(c, {1, 2, 3})),
                  coeff_inv(out.cocycle.at(cx.subchain(c, {0, 2, 3})))),
        coeff_mul(out.cocycle.at(cx.subchain(c, {0, 1, 3})),
                  coeff_inv(out.cocycle.at(cx.subchain(c, {0, 1, 2})))));
    if (!coeff_is_one(z))
      throw std::logic_error("obstruction_o: defect is not a 2-cocycle");
  }
  // triviality: solvable as a coboundary of a 1-cochain on morphisms
  auto morphs = detail::morphism_classes(cx);
  std::map<size_t, size_t> mi;
  for (size_t i = 0; i < morphs.size(); ++i) mi[morphs[i]] = i;
  std::vector<std::vector<Rat>> A;
  std::vector<Coeff> b;
  for (const auto& [c, d] : out.cocycle) {
    std::vector<Rat> row(morphs.size(), Rat(0));
    row[mi.at(cx.subchain(c, {1, 2}))] += 1;
    row[mi.at(cx.subchain(c, {0, 1}))] += 1;
    row[mi.at(cx.subchain(c, {0, 2}))] -= 1;
    A.push_back(row);
    b.push_back(d);
  }
  out.trivial = coeff_solve(A, b).has_value();
  return out;
}

}  // namespace afw
