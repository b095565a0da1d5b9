// Integer homological machinery: barycentric and polyhedral cochain
// complexes for systems of abelian groups over a face poset (with the
// extension condition (*) governing acyclicity), Cech complexes on the open
// cover W = {W_tau} of the manifold for the sheaves i_*Lambda, i_*Lambda-check,
// Z and Aff(B,Z), cohomology via Smith normal form, and the derived reports:
// the moduli group of gluing data, H^i(X, O_X), orientability / dualizing
// sheaf, the log-Picard rank bookkeeping and the radiance-obstruction
// cocycle.
#pragma once

#include <functional>

#include "afw/monodromy.hpp"

namespace afw {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct NonFunctorialSystem : std::runtime_error {
  explicit NonFunctorialSystem(const std::string& m) : std::runtime_error(m) {}
};

struct UnboundedError : std::runtime_error {
  explicit UnboundedError(const std::string& m) : std::runtime_error(m) {}
};

struct NonCompactError : std::runtime_error {
  explicit NonCompactError(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Integer cochain complexes and their cohomology
// ---------------------------------------------------------------------------

struct CochainComplexZ {
  std::vector<size_t> ranks;  // ranks of C^0 .. C^m
  std::vector<IntMat> d;      // d[i] : C^i -> C^{i+1}
};

inline void check_complex(const CochainComplexZ& C) {
  for (size_t i = 0; i < C.d.size(); ++i) {
    size_t target = (i + 1 < C.ranks.size()) ? C.ranks[i + 1] : 0;
    if (C.d[i].cols != C.ranks[i] || C.d[i].rows != target)
      throw std::logic_error("cochain complex: differential shape mismatch");
    if (i + 1 < C.d.size()) {
      IntMat dd = mat_mul(C.d[i + 1], C.d[i]);
      for (size_t r = 0; r < dd.rows; ++r)
        for (size_t c = 0; c < dd.cols; ++c)
          if (dd(r, c) != 0)
            throw std::logic_error("cochain complex: d o d != 0");
    }
  }
}

struct CohomologyZ {
  size_t rank = 0;
  std::vector<Int> torsion;  // invariant factors > 1, in divisibility order
};

inline CohomologyZ cohomology_Z(const CochainComplexZ& C, size_t i) {
  CohomologyZ H;
  if (i >= C.ranks.size()) return H;
  size_t out_rank = (i < C.d.size()) ? rank(C.d[i]) : 0;
  size_t in_rank = 0;
  if (i >= 1 && i - 1 < C.d.size())
    for (const Int& f : invariant_factors(C.d[i - 1])) {
      ++in_rank;
      if (f > 1) H.torsion.push_back(f);
    }
  H.rank = C.ranks[i] - out_rank - in_rank;
  return H;
}

// ---------------------------------------------------------------------------
// Systems of abelian groups over a finite poset
// ---------------------------------------------------------------------------

// A finitely generated abelian group presented as Z^gens / im(relations).
struct PresentedGroup {
  size_t gens = 0;
  IntMat relations{0, 0};  // gens x r, columns are relators
  PresentedGroup() = default;
  explicit PresentedGroup(size_t g) : gens(g), relations(g, 0) {}
  PresentedGroup(size_t g, IntMat rel) : gens(g), relations(std::move(rel)) {}
  bool is_free() const { return rank(relations) == 0; }
  bool is_finite() const { return rank(relations) == gens; }
};

struct AbGroupSystem {
  std::vector<int> deg;  // grading of each index (cell dimension)
  std::vector<PresentedGroup> group;
  // Strictly comparable pairs (a, b), a < b in the poset, with the
  // homomorphism matrix G_a -> G_b on generators.
  std::map<std::pair<size_t, size_t>, IntMat> phi;

  size_t size() const { return deg.size(); }
  bool leq(size_t a, size_t b) const {
    return a == b || phi.count({a, b}) > 0;
  }
  IntMat map_matrix(size_t a, size_t b) const {
    if (a == b) return IntMat::identity(group[a].gens);
    return phi.at({a, b});
  }
};

namespace detail {

inline IntMat mat_of_columns(size_t dim, const std::vector<Vec>& cols) {
  IntMat M(dim, cols.size());
  for (size_t j = 0; j < cols.size(); ++j)
    for (size_t i = 0; i < dim; ++i) M(i, j) = cols[j][i];
  return M;
}

// Is v in the column span (over Z) of M?
inline bool in_column_span(const IntMat& M, const Vec& v) {
  if (M.cols == 0) return is_zero(v);
  return bool(solve_integral(M, v));
}

}  // namespace detail

inline void check_functorial(const AbGroupSystem& sys) {
  size_t m = sys.size();
  for (const auto& [key, M] : sys.phi) {
    auto [a, b] = key;
    if (a == b || sys.phi.count({b, a}))
      throw NonFunctorialSystem("poset relation is not antisymmetric");
    if (M.rows != sys.group[b].gens || M.cols != sys.group[a].gens)
      throw NonFunctorialSystem("homomorphism matrix shape mismatch");
    // relators of G_a must land in the relation subgroup of G_b
    for (size_t j = 0; j < sys.group[a].relations.cols; ++j) {
      Vec img = mat_apply(M, sys.group[a].relations.col(j));
      if (!detail::in_column_span(sys.group[b].relations, img))
        throw NonFunctorialSystem("map does not respect relations");
    }
  }
  for (size_t a = 0; a < m; ++a)
    for (size_t b = 0; b < m; ++b) {
      if (a == b || !sys.leq(a, b)) continue;
      for (size_t c = 0; c < m; ++c) {
        if (b == c || !sys.leq(b, c)) continue;
        if (!sys.leq(a, c))
          throw NonFunctorialSystem("poset relation is not transitive");
        IntMat comp = mat_mul(sys.map_matrix(b, c), sys.map_matrix(a, b));
        IntMat direct = sys.map_matrix(a, c);
        for (size_t j = 0; j < comp.cols; ++j) {
          Vec diff = vec_sub(comp.col(j), direct.col(j));
          if (!detail::in_column_span(sys.group[c].relations, diff))
            throw NonFunctorialSystem(
                "composition of maps disagrees with the direct map");
        }
      }
    }
}

// System over the face poset of a lattice polytope (all faces of dim >= 0,
// including the polytope itself).
inline AbGroupSystem system_on_polytope(
    const LatticePolytope& P,
    const std::function<PresentedGroup(size_t)>& grp,
    const std::function<IntMat(size_t, size_t)>& hom) {
  AbGroupSystem S;
  std::vector<size_t> faces;
  for (size_t f = 0; f < P.faces.size(); ++f)
    if (P.faces[f].dim >= 0) faces.push_back(f);
  for (size_t f : faces) {
    S.deg.push_back(P.faces[f].dim);
    S.group.push_back(grp(f));
  }
  for (size_t i = 0; i < faces.size(); ++i)
    for (size_t j = 0; j < faces.size(); ++j) {
      if (i == j) continue;
      if (P.faces[faces[i]].dim >= P.faces[faces[j]].dim) continue;
      if (!face_leq(P.faces[faces[i]], P.faces[faces[j]])) continue;
      S.phi[{i, j}] = hom(faces[i], faces[j]);
    }
  check_functorial(S);
  return S;
}

inline AbGroupSystem constant_system(const LatticePolytope& P,
                                     const PresentedGroup& G) {
  return system_on_polytope(
      P, [&](size_t) { return G; },
      [&](size_t, size_t) { return IntMat::identity(G.gens); });
}

namespace detail {

// All strict chains of the poset, grouped by length-1 (the degree).
inline std::vector<std::vector<std::vector<size_t>>> poset_chains(
    const AbGroupSystem& sys) {
  size_t m = sys.size();
  std::vector<std::vector<std::vector<size_t>>> out;
  std::vector<std::vector<size_t>> frontier;
  for (size_t i = 0; i < m; ++i) frontier.push_back({i});
  while (!frontier.empty()) {
    out.push_back(frontier);
    std::vector<std::vector<size_t>> next;
    for (const auto& ch : frontier)
      for (size_t j = 0; j < m; ++j)
        if (j != ch.back() && sys.leq(ch.back(), j)) {
          auto ext = ch;
          ext.push_back(j);
          next.push_back(ext);
        }
    frontier = std::move(next);
  }
  return out;
}

inline void require_free(const AbGroupSystem& sys, const char* who) {
  for (const auto& g : sys.group)
    if (!g.is_free())
      throw std::invalid_argument(std::string(who) +
                                  ": only free groups are supported");
}

}  // namespace detail

// Barycentric cochain complex: C^k = (+) over chains s_0 < ... < s_k of
// M_{s_k}; (df)_{s_0..s_{k+1}} = sum_i (-1)^i phi_{s_{k+1}}(f with s_i
// omitted).
inline CochainComplexZ barycentric_complex(const AbGroupSystem& sys) {
  check_functorial(sys);
  detail::require_free(sys, "barycentric_complex");
  auto chains = detail::poset_chains(sys);
  CochainComplexZ C;
  std::vector<std::map<std::vector<size_t>, size_t>> offset(chains.size());
  for (size_t k = 0; k < chains.size(); ++k) {
    size_t r = 0;
    for (const auto& ch : chains[k]) {
      offset[k][ch] = r;
      r += sys.group[ch.back()].gens;
    }
    C.ranks.push_back(r);
  }
  for (size_t k = 0; k + 1 < chains.size(); ++k) {
    IntMat D(C.ranks[k + 1], C.ranks[k]);
    for (const auto& E : chains[k + 1]) {
      size_t ro = offset[k + 1].at(E);
      for (size_t i = 0; i < E.size(); ++i) {
        std::vector<size_t> sub;
        for (size_t p = 0; p < E.size(); ++p)
          if (p != i) sub.push_back(E[p]);
        size_t co = offset[k].at(sub);
        IntMat M = sys.map_matrix(sub.back(), E.back());
        int sign = (i % 2 == 0) ? 1 : -1;
        for (size_t r = 0; r < M.rows; ++r)
          for (size_t c = 0; c < M.cols; ++c)
            D(ro + r, co + c) += Int(sign) * M(r, c);
      }
    }
    C.d.push_back(D);
  }
  check_complex(C);
  return C;
}

// Incidence signs sgn(tau, omega) for cover pairs of a graded polytopal
// poset, satisfying the diamond relation sgn(s,t+)sgn(t+,w) =
// -sgn(s,t-)sgn(t-,w).  The virtual empty face below the vertices forces
// opposite signs at the two endpoints of every edge.
namespace detail {

inline std::map<std::pair<size_t, size_t>, int> incidence_signs(
    const AbGroupSystem& sys) {
  size_t m = sys.size();
  int maxdeg = 0;
  for (int d : sys.deg) maxdeg = std::max(maxdeg, d);
  std::map<std::pair<size_t, size_t>, int> sgn;
  for (int d = 1; d <= maxdeg; ++d) {
    for (size_t w = 0; w < m; ++w) {
      if (sys.deg[w] != d) continue;
      std::vector<size_t> facets;
      for (size_t t = 0; t < m; ++t)
        if (t != w && sys.deg[t] == d - 1 && sys.leq(t, w)) facets.push_back(t);
      if (facets.empty())
        throw std::invalid_argument("polyhedral_complex: cell without facets");
      std::map<size_t, size_t> fidx;
      for (size_t i = 0; i < facets.size(); ++i) fidx[facets[i]] = i;
      // constraints s(t1) * s(t2) = rel over shared codim-2 faces
      std::vector<std::vector<std::pair<size_t, int>>> adj(facets.size());
      auto add_constraint = [&](size_t t1, size_t t2, int rel) {
        adj[fidx.at(t1)].push_back({fidx.at(t2), rel});
        adj[fidx.at(t2)].push_back({fidx.at(t1), rel});
      };
      if (d == 1) {
        if (facets.size() != 2)
          throw std::invalid_argument(
              "polyhedral_complex: edge without exactly two vertices");
        add_constraint(facets[0], facets[1], -1);
      } else {
        for (size_t s = 0; s < m; ++s) {
          if (sys.deg[s] != d - 2 || !sys.leq(s, w) || s == w) continue;
          std::vector<size_t> mid;
          for (size_t t : facets)
            if (sys.leq(s, t) && s != t) mid.push_back(t);
          if (mid.size() != 2)
            throw std::invalid_argument(
                "polyhedral_complex: poset is not polytopal (diamond "
                "property fails)");
          int rel = -sgn.at({s, mid[0]}) * sgn.at({s, mid[1]});
          add_constraint(mid[0], mid[1], rel);
        }
      }
      // 2-colour by BFS
      std::vector<int> s(facets.size(), 0);
      for (size_t seed = 0; seed < facets.size(); ++seed) {
        if (s[seed] != 0) continue;
        s[seed] = 1;
        std::vector<size_t> queue = {seed};
        while (!queue.empty()) {
          size_t x = queue.back();
          queue.pop_back();
          for (auto [y, rel] : adj[x]) {
            int want = rel * s[x];
            if (s[y] == 0) {
              s[y] = want;
              queue.push_back(y);
            } else if (s[y] != want) {
              throw std::invalid_argument(
                  "polyhedral_complex: no coherent incidence signs");
            }
          }
        }
      }
      for (size_t i = 0; i < facets.size(); ++i) sgn[{facets[i], w}] = s[i];
    }
  }
  return sgn;
}

}  // namespace detail

// Polyhedral cochain complex: C^k = (+) over deg-k indices tau of M_tau;
// (df)_omega = sum over facets tau of sgn(tau, omega) phi_{omega tau}(f_tau).
inline CochainComplexZ polyhedral_complex(const AbGroupSystem& sys) {
  check_functorial(sys);
  detail::require_free(sys, "polyhedral_complex");
  auto sgn = detail::incidence_signs(sys);
  size_t m = sys.size();
  int maxdeg = 0;
  for (int d : sys.deg) maxdeg = std::max(maxdeg, d);
  CochainComplexZ C;
  std::map<size_t, size_t> offset;
  for (int k = 0; k <= maxdeg; ++k) {
    size_t r = 0;
    for (size_t i = 0; i < m; ++i)
      if (sys.deg[i] == k) {
        offset[i] = r;
        r += sys.group[i].gens;
      }
    C.ranks.push_back(r);
  }
  for (int k = 0; k < maxdeg; ++k) {
    IntMat D(C.ranks[k + 1], C.ranks[k]);
    for (size_t w = 0; w < m; ++w) {
      if (sys.deg[w] != k + 1) continue;
      for (size_t t = 0; t < m; ++t) {
        if (t == w || sys.deg[t] != k || !sys.leq(t, w)) continue;
        IntMat M = sys.map_matrix(t, w);
        int s = sgn.at({t, w});
        for (size_t r = 0; r < M.rows; ++r)
          for (size_t c = 0; c < M.cols; ++c)
            D(offset.at(w) + r, offset.at(t) + c) += Int(s) * M(r, c);
      }
    }
    C.d.push_back(D);
  }
  check_complex(C);
  return C;
}

// ---------------------------------------------------------------------------
// Condition (*): every compatible collection on a subset of the poset
// extends to a compatible collection on the whole poset.
// ---------------------------------------------------------------------------

struct StarReport {
  bool ok = true;
  std::string witness;
};

namespace detail {

// Constraint matrix for compatibility of a collection indexed by subset S
// (free groups): rows express phi_sigma(x_tau) - phi_sigma(x_tau') = 0 for
// all pairs in S with a common coface sigma anywhere in the poset.
inline IntMat compatibility_matrix(const AbGroupSystem& sys,
                                   const std::vector<size_t>& S,
                                   std::vector<size_t>& offsets) {
  size_t m = sys.size();
  offsets.assign(S.size(), 0);
  size_t cols = 0;
  for (size_t i = 0; i < S.size(); ++i) {
    offsets[i] = cols;
    cols += sys.group[S[i]].gens;
  }
  std::vector<Vec> rows;
  for (size_t i = 0; i < S.size(); ++i)
    for (size_t j = i + 1; j < S.size(); ++j)
      for (size_t sg = 0; sg < m; ++sg) {
        if (!sys.leq(S[i], sg) || !sys.leq(S[j], sg)) continue;
        IntMat Mi = sys.map_matrix(S[i], sg);
        IntMat Mj = sys.map_matrix(S[j], sg);
        for (size_t r = 0; r < sys.group[sg].gens; ++r) {
          Vec row(cols, Int(0));
          for (size_t c = 0; c < Mi.cols; ++c) row[offsets[i] + c] += Mi(r, c);
          for (size_t c = 0; c < Mj.cols; ++c) row[offsets[j] + c] -= Mj(r, c);
          rows.push_back(row);
        }
      }
  IntMat A(rows.size(), cols);
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < cols; ++c) A(r, c) = rows[r][c];
  return A;
}

}  // namespace detail

inline StarReport condition_star_check(const AbGroupSystem& sys) {
  check_functorial(sys);
  size_t m = sys.size();
  if (m > 16)
    throw UnboundedError("condition_star_check: poset too large");
  bool all_free = true, all_finite = true;
  for (const auto& g : sys.group) {
    if (!g.is_free()) all_free = false;
    if (!g.is_finite()) all_finite = false;
  }
  StarReport rep;
  std::vector<size_t> full(m);
  for (size_t i = 0; i < m; ++i) full[i] = i;

  if (all_free) {
    // Lattice criterion: the projection of the compatible lattice on the
    // whole poset must cover the compatible lattice of every subset.
    std::vector<size_t> full_off;
    IntMat Afull = detail::compatibility_matrix(sys, full, full_off);
    size_t total = Afull.cols;
    std::vector<Vec> Kfull = integer_kernel(Afull);
    for (size_t mask = 1; mask + 1 < (size_t(1) << m); ++mask) {
      std::vector<size_t> S;
      for (size_t i = 0; i < m; ++i)
        if (mask & (size_t(1) << i)) S.push_back(i);
      std::vector<size_t> off;
      IntMat As = detail::compatibility_matrix(sys, S, off);
      std::vector<Vec> Ks = integer_kernel(As);
      if (Ks.empty()) continue;
      // project the full kernel onto the S coordinates
      std::vector<Vec> proj;
      for (const Vec& k : Kfull) {
        Vec p(As.cols, Int(0));
        for (size_t i = 0; i < S.size(); ++i)
          for (size_t c = 0; c < sys.group[S[i]].gens; ++c)
            p[off[i] + c] = k[full_off[S[i]] + c];
        proj.push_back(p);
      }
      (void)total;
      IntMat P = detail::mat_of_columns(As.cols, proj);
      for (const Vec& v : Ks)
        if (!detail::in_column_span(P, v)) {
          rep.ok = false;
          rep.witness = "compatible collection on subset {";
          for (size_t i = 0; i < S.size(); ++i)
            rep.witness +=
                (i ? "," : "") + std::to_string(S[i]);
          rep.witness += "} does not extend";
          return rep;
        }
    }
    return rep;
  }

  if (all_finite) {
    // Enumerate group elements through Smith normal form.
    struct En {
      std::vector<Int> diag;
      IntMat Uinv{0, 0};
    };
    std::vector<En> en(m);
    size_t budget = 1;
    for (size_t i = 0; i < m; ++i) {
      SNF s = smith_normal_form(sys.group[i].relations);
      En e;
      e.Uinv = unimodular_inverse(s.U);
      size_t count = 1;
      for (size_t k = 0; k < sys.group[i].gens; ++k) {
        Int d = (k < std::min(s.D.rows, s.D.cols)) ? s.D(k, k) : Int(0);
        if (d <= 0) throw UnboundedError("condition_star_check: group not "
                                         "finite");
        e.diag.push_back(d);
        count *= size_t(d);
      }
      if (budget > (size_t(1) << 20) / std::max<size_t>(count, 1))
        throw UnboundedError("condition_star_check: enumeration too large");
      budget *= std::max<size_t>(count, 1);
      en[i] = e;
    }
    auto element = [&](size_t i, size_t code) -> Vec {
      Vec y(sys.group[i].gens, Int(0));
      for (size_t k = 0; k < y.size(); ++k) {
        Int d = en[i].diag[k];
        y[k] = Int(long(code % size_t(d)));
        code /= size_t(d);
      }
      return mat_apply(en[i].Uinv, y);
    };
    auto order = [&](size_t i) {
      size_t c = 1;
      for (const Int& d : en[i].diag) c *= size_t(d);
      return c;
    };
    auto compatible_pair = [&](size_t a, const Vec& fa, size_t b,
                               const Vec& fb) {
      for (size_t sg = 0; sg < m; ++sg) {
        if (!sys.leq(a, sg) || !sys.leq(b, sg)) continue;
        Vec diff = vec_sub(mat_apply(sys.map_matrix(a, sg), fa),
                           mat_apply(sys.map_matrix(b, sg), fb));
        if (!detail::in_column_span(sys.group[sg].relations, diff))
          return false;
      }
      return true;
    };
    // Backtracking over an ordered index list; the first |S| entries are
    // fixed, the rest are searched.
    std::function<bool(const std::vector<size_t>&, std::vector<Vec>&, size_t)>
        extend = [&](const std::vector<size_t>& idx, std::vector<Vec>& vals,
                     size_t k) -> bool {
      if (k == idx.size()) return true;
      for (size_t code = 0; code < order(idx[k]); ++code) {
        Vec f = element(idx[k], code);
        bool ok = true;
        for (size_t j = 0; j < k && ok; ++j)
          ok = compatible_pair(idx[j], vals[j], idx[k], f);
        if (!ok) continue;
        vals.push_back(f);
        if (extend(idx, vals, k + 1)) return true;
        vals.pop_back();
      }
      return false;
    };
    for (size_t mask = 1; mask + 1 < (size_t(1) << m); ++mask) {
      std::vector<size_t> idx;
      for (size_t i = 0; i < m; ++i)
        if (mask & (size_t(1) << i)) idx.push_back(i);
      size_t nfixed = idx.size();
      for (size_t i = 0; i < m; ++i)
        if (!(mask & (size_t(1) << i))) idx.push_back(i);
      // enumerate compatible collections on the fixed part
      std::function<bool(std::vector<Vec>&, size_t)> walk =
          [&](std::vector<Vec>& vals, size_t k) -> bool {
        if (k == nfixed) {
          std::vector<Vec> attempt = vals;
          return extend(idx, attempt, nfixed);
        }
        for (size_t code = 0; code < order(idx[k]); ++code) {
          Vec f = element(idx[k], code);
          bool ok = true;
          for (size_t j = 0; j < k && ok; ++j)
            ok = compatible_pair(idx[j], vals[j], idx[k], f);
          if (!ok) continue;
          vals.push_back(f);
          bool good = walk(vals, k + 1);
          vals.pop_back();
          if (!good) return false;
        }
        return true;
      };
      std::vector<Vec> vals;
      if (!walk(vals, 0)) {
        rep.ok = false;
        rep.witness = "compatible collection on subset mask " +
                      std::to_string(mask) + " does not extend";
        return rep;
      }
    }
    return rep;
  }

  throw UnboundedError(
      "condition_star_check: mixed free/finite systems are not decidable "
      "here");
}

// ---------------------------------------------------------------------------
// Cech complex on the cover W = {W_tau}
// ---------------------------------------------------------------------------
//
// The p-fold intersections of the open stars W_tau decompose into connected
// components indexed by the chain classes of length p (the barycentric
// simplices), so the Cech complex has one summand per chain class: the
// lattice of monodromy-invariant sections at the class's base node.

enum class WSheaf { Lambda, LambdaCheck, ConstZ, Aff };

struct CechComplexW {
  const AffineComplex* cx = nullptr;
  WSheaf sheaf = WSheaf::ConstZ;
  size_t secdim = 0;                           // ambient section dimension
  std::vector<std::vector<size_t>> simplices;  // per degree: chain classes
  std::map<size_t, std::vector<Vec>> basis;    // class -> section lattice
  std::map<size_t, size_t> base;               // class -> base node class
  std::map<size_t, size_t> offset;             // class -> offset in its degree
  std::map<size_t, AffineComplex::Holonomy> hol;
  CochainComplexZ C;
};

namespace detail {

inline Vec cech_transform(WSheaf s, const AffMapZ& T, const Vec& v,
                          size_t n) {
  switch (s) {
    case WSheaf::ConstZ:
      return v;
    case WSheaf::Lambda:
      return mat_apply(T.linear, v);
    case WSheaf::LambdaCheck:
      return covector_pushforward(v, T.linear);
    case WSheaf::Aff: {
      Vec cov(v.begin(), v.begin() + n);
      Vec np = covector_pushforward(cov, T.linear);
      Vec out = np;
      out.push_back(v[n] - dot(np, T.translation));
      return out;
    }
  }
  throw std::logic_error("cech_transform: unknown sheaf");
}

// Rows annihilating the invariant sections, per holonomy generator.
inline std::vector<Vec> invariance_rows(WSheaf s, const AffMapZ& g,
                                        size_t n) {
  std::vector<Vec> rows;
  auto push_linear = [&](const IntMat& M, size_t pad) {
    for (size_t r = 0; r < M.rows; ++r) {
      Vec row(M.cols + pad, Int(0));
      for (size_t c = 0; c < M.cols; ++c)
        row[c] = M(r, c) - Int(r == c ? 1 : 0);
      rows.push_back(row);
    }
  };
  switch (s) {
    case WSheaf::ConstZ:
      break;
    case WSheaf::Lambda:
      push_linear(g.linear, 0);
      break;
    case WSheaf::LambdaCheck:
      push_linear(g.linear.transpose(), 0);
      break;
    case WSheaf::Aff: {
      push_linear(g.linear.transpose(), 1);
      Vec row(n + 1, Int(0));
      for (size_t i = 0; i < n; ++i) row[i] = g.translation[i];
      rows.push_back(row);
      break;
    }
  }
  return rows;
}

}  // namespace detail

// Node of chain c's chamber structure lying in the frame of D's base node,
// where D extends c; returns the transport from c's base node into that
// frame.  `deleted` is the position of the extra cell of D relative to c.
inline const AffMapZ& cech_frame_transport(const CechComplexW& W, size_t c,
                                           size_t D, size_t deleted) {
  const AffineComplex& cx = *W.cx;
  size_t bD = W.base.at(D);
  size_t LD = cx.chain_len(D);
  size_t Lb = cx.chain_len(bD);
  std::vector<size_t> pos;
  for (size_t p = 0; p < LD; ++p)
    if (p != deleted) pos.push_back(p);
  if (pos.empty() || pos.back() != Lb - 1) pos.push_back(Lb - 1);
  size_t m = cx.subchain(bD, pos);
  return W.hol.at(c).to_node.at(m);
}

// Restriction matrix from sections over the component of chain c to sections
// over the component of its extension D (columns = images of c's basis in
// D's basis coordinates).
inline IntMat cech_restriction(const CechComplexW& W, size_t c, size_t D,
                               size_t deleted) {
  const AffineComplex& cx = *W.cx;
  const AffMapZ& T = cech_frame_transport(W, c, D, deleted);
  const auto& bc = W.basis.at(c);
  const auto& bd = W.basis.at(D);
  IntMat BD = detail::mat_of_columns(W.secdim, bd);
  IntMat R(bd.size(), bc.size());
  for (size_t j = 0; j < bc.size(); ++j) {
    Vec img = detail::cech_transform(W.sheaf, T, bc[j], cx.n);
    if (bd.empty()) {
      if (!is_zero(img))
        throw std::logic_error(
            "cech_restriction: restricted section is not invariant");
      continue;
    }
    auto coords = solve_integral(BD, img);
    if (!coords)
      throw std::logic_error(
          "cech_restriction: restricted section is not invariant");
    for (size_t i = 0; i < bd.size(); ++i) R(i, j) = (*coords)[i];
  }
  return R;
}

inline CechComplexW cech_W_complex(const AffineComplex& cx, WSheaf sheaf) {
  CechComplexW W;
  W.cx = &cx;
  W.sheaf = sheaf;
  size_t n = cx.n;
  W.secdim = (sheaf == WSheaf::ConstZ) ? 1
             : (sheaf == WSheaf::Aff)  ? n + 1
                                       : n;
  W.simplices.assign(n + 1, {});
  for (size_t c = 0; c < cx.n_chains; ++c)
    W.simplices[cx.chain_len(c) - 1].push_back(c);
  for (size_t p = 0; p <= n; ++p) {
    size_t r = 0;
    for (size_t c : W.simplices[p]) {
      auto H = cx.holonomy(c);
      if (H.nodes.empty())
        throw std::logic_error("cech_W_complex: flag without chambers");
      std::vector<Vec> rows;
      for (const auto& g : H.generators) {
        auto gr = detail::invariance_rows(sheaf, g, n);
        rows.insert(rows.end(), gr.begin(), gr.end());
      }
      IntMat A(rows.size(), W.secdim);
      for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < W.secdim; ++j) A(i, j) = rows[i][j];
      W.basis[c] = integer_kernel(A);
      W.base[c] = H.base_node;
      W.hol[c] = std::move(H);
      W.offset[c] = r;
      r += W.basis[c].size();
    }
    W.C.ranks.push_back(r);
  }
  for (size_t p = 0; p < n; ++p) {
    IntMat D(W.C.ranks[p + 1], W.C.ranks[p]);
    for (size_t Dc : W.simplices[p + 1]) {
      size_t L = p + 2;
      for (size_t i = 0; i < L; ++i) {
        std::vector<size_t> pos;
        for (size_t q = 0; q < L; ++q)
          if (q != i) pos.push_back(q);
        size_t sub = cx.subchain(Dc, pos);
        IntMat R = cech_restriction(W, sub, Dc, i);
        int sign = (i % 2 == 0) ? 1 : -1;
        size_t ro = W.offset.at(Dc), co = W.offset.at(sub);
        for (size_t r = 0; r < R.rows; ++r)
          for (size_t c2 = 0; c2 < R.cols; ++c2)
            D(ro + r, co + c2) += Int(sign) * R(r, c2);
      }
    }
    W.C.d.push_back(D);
  }
  check_complex(W.C);
  return W;
}

// Raw section vector of a cochain over one chain-class component.
inline Vec cochain_value(const CechComplexW& W, const Vec& cochain,
                         size_t chain_class) {
  const auto& b = W.basis.at(chain_class);
  size_t off = W.offset.at(chain_class);
  Vec out(W.secdim, Int(0));
  for (size_t j = 0; j < b.size(); ++j)
    for (size_t i = 0; i < W.secdim; ++i)
      out[i] += cochain[off + j] * b[j][i];
  return out;
}

inline bool is_cocycle(const CechComplexW& W, size_t p, const Vec& v) {
  if (p >= W.C.d.size()) return true;
  return is_zero(mat_apply(W.C.d[p], v));
}

inline bool is_coboundary(const CechComplexW& W, size_t p, const Vec& v) {
  if (p == 0 || p - 1 >= W.C.d.size()) return is_zero(v);
  return bool(solve_integral(W.C.d[p - 1], v));
}

// ---------------------------------------------------------------------------
// Radiance-obstruction cocycle
// ---------------------------------------------------------------------------
//
// Per cell tau the chart graph section s_tau sends the first vertex of the
// base node's cell face to the origin; on the overlap component of a 2-chain
// (tau0 < tau1) the difference s_1 - s_0 is the constant flat section given
// by the developed base-point difference.  Returns the 1-cochain in the
// basis coordinates of a Lambda Cech complex.

inline Vec radiance_cocycle(const AffineComplex& cx, const CechComplexW& W) {
  if (W.sheaf != WSheaf::Lambda)
    throw std::invalid_argument("radiance_cocycle: Lambda Cech complex "
                                "required");
  auto base_point = [&](size_t cell_chain) -> Vec {
    size_t b = W.base.at(cell_chain);
    const LocalChain& rep = cx.chain_reps[b];
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    return P.vertices[P.faces[rep.faces[0]].verts[0]];
  };
  Vec out(W.C.ranks.size() > 1 ? W.C.ranks[1] : 0, Int(0));
  if (W.simplices.size() < 2) return out;
  for (size_t Cc : W.simplices[1]) {
    Vec q[2];
    for (size_t k = 0; k < 2; ++k) {
      size_t ck = cx.subchain(Cc, {k});
      const AffMapZ& T = cech_frame_transport(W, ck, Cc, 1 - k);
      q[k] = T.apply(base_point(ck));
    }
    Vec v = vec_sub(q[1], q[0]);
    const auto& b = W.basis.at(Cc);
    if (b.empty()) {
      if (!is_zero(v))
        throw std::logic_error("radiance_cocycle: value is not a section");
      continue;
    }
    auto coords = solve_integral(detail::mat_of_columns(W.secdim, b), v);
    if (!coords)
      throw std::logic_error("radiance_cocycle: value is not a section");
    for (size_t j = 0; j < b.size(); ++j) out[W.offset.at(Cc) + j] = (*coords)[j];
  }
  if (!is_cocycle(W, 1, out))
    throw std::logic_error("radiance_cocycle: cocycle condition fails");
  return out;
}

// ---------------------------------------------------------------------------
// Moduli group of gluing data
// ---------------------------------------------------------------------------

inline std::string render_torus_group(size_t r, const std::vector<Int>& tors) {
  std::string s;
  if (r == 1) s = "k^x";
  else if (r > 1) s = "(k^x)^" + std::to_string(r);
  for (const Int& d : tors) {
    if (!s.empty()) s += " x ";
    s += "mu_" + d.str();
  }
  if (s.empty()) s = "1";
  return s;
}

struct ModuliReport {
  size_t rank = 0;            // free rank of H^1(W, i_*Lambda)
  std::vector<Int> torsion;   // torsion of H^2(W, i_*Lambda) -> mu_d factors
  bool positive = true, simple = true;
  std::string note;           // set when the complex is not simple
  std::string rendered;       // "(k^x)^r x mu_d x ..."
};

inline ModuliReport moduli_group(const AffineComplex& cx) {
  ModuliReport rep;
  MonodromyAtlas atlas = edge_invariants(cx);
  auto pos = check_positive(atlas);
  rep.positive = pos.positive;
  if (pos.positive)
    rep.simple = check_simple(atlas).simple;
  else
    rep.simple = false;
  if (!rep.simple)
    rep.note = "gluing-data classification only";
  auto W = cech_W_complex(cx, WSheaf::Lambda);
  rep.rank = cohomology_Z(W.C, 1).rank;
  rep.torsion = cohomology_Z(W.C, 2).torsion;
  rep.rendered = render_torus_group(rep.rank, rep.torsion);
  return rep;
}

// ---------------------------------------------------------------------------
// H^i(X, O_X) = H^i(B, A)
// ---------------------------------------------------------------------------

struct CoeffMarker {
  bool is_field = false;
  Int characteristic = Int(0);  // 0 = characteristic zero
};

inline std::vector<size_t> ox_cohomology(const AffineComplex& cx,
                                         const CoeffMarker& A = {}) {
  auto W = cech_W_complex(cx, WSheaf::ConstZ);
  std::vector<CohomologyZ> H;
  for (size_t i = 0; i <= cx.n; ++i) H.push_back(cohomology_Z(W.C, i));
  std::vector<size_t> out;
  for (size_t i = 0; i <= cx.n; ++i) {
    size_t r = H[i].rank;
    if (A.is_field && A.characteristic > 0) {
      for (const Int& d : H[i].torsion)
        if (d % A.characteristic == 0) ++r;
      if (i + 1 <= cx.n)
        for (const Int& d : H[i + 1].torsion)
          if (d % A.characteristic == 0) ++r;
    }
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orientability and the dualizing sheaf
// ---------------------------------------------------------------------------

struct OrientabilityReport {
  bool orientable = false;
  std::string dualizing;            // verdict on omega_X
  std::vector<int> chart_orientation;  // per polytope, when orientable
};

// Coherent orientation search: orient every maximal-cell chart so that the
// two induced orientations on each interior wall are opposite.  The gluing
// map g carries one wall germ onto the other *within* the target chart, so
// the comparison needs both the determinant sign of g and which side of the
// wall the glued cell lands on: folding onto the same side reverses the
// orientation relation.
inline OrientabilityReport orientability_and_dualizing(
    const AffineComplex& cx) {
  if (cx.has_boundary)
    throw NonCompactError("orientability_and_dualizing: B has boundary");
  size_t np = cx.spec.polytopes.size();
  struct Rel {
    size_t p1, p2;
    int sign;
  };
  std::vector<Rel> rels;
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    if (cx.cell_dim[cell] != int(cx.n) - 1) continue;
    const auto& mem = cx.cell_members[cell];
    if (mem.size() != 2) continue;
    AffMapZ g = cx.face_to_rep[mem[1]].inverse().compose(
        cx.face_to_rep[mem[0]]);
    const LocalFace& lf1 = cx.local_faces[mem[0]];
    const LocalFace& lf2 = cx.local_faces[mem[1]];
    const LatticePolytope& P1 = cx.spec.polytopes[lf1.poly];
    const LatticePolytope& P2 = cx.spec.polytopes[lf2.poly];
    const auto& fverts = P2.faces[lf2.face].verts;
    Vec b = P2.vertices[fverts[0]];
    IntMat A(fverts.size() - 1, cx.n);
    for (size_t k = 1; k < fverts.size(); ++k) {
      Vec t = vec_sub(P2.vertices[fverts[k]], b);
      for (size_t j = 0; j < cx.n; ++j) A(k - 1, j) = t[j];
    }
    auto ker = integer_kernel(A);
    if (ker.size() != 1)
      throw std::logic_error("orientability: wall conormal not unique");
    const Vec& nrm = ker[0];
    Int side2 = 0, side1 = 0;
    for (const Vec& v : P2.vertices) side2 += dot(nrm, vec_sub(v, b));
    for (const Vec& v : P1.vertices)
      side1 += dot(nrm, vec_sub(g.apply(v), b));
    bool same_side = (side2 > 0) == (side1 > 0);
    int s = (det(g.linear) > 0 ? 1 : -1) * (same_side ? -1 : 1);
    rels.push_back({lf1.poly, lf2.poly, s});
  }
  std::vector<std::vector<std::pair<size_t, int>>> adj(np);
  for (const auto& r : rels) {
    adj[r.p1].push_back({r.p2, r.sign});
    adj[r.p2].push_back({r.p1, r.sign});
  }
  OrientabilityReport rep;
  std::vector<int> o(np, 0);
  bool ok = true;
  for (size_t seed = 0; seed < np && ok; ++seed) {
    if (o[seed] != 0) continue;
    o[seed] = 1;
    std::vector<size_t> queue = {seed};
    while (!queue.empty() && ok) {
      size_t x = queue.back();
      queue.pop_back();
      for (auto [y, s] : adj[x]) {
        int want = s * o[x];
        if (o[y] == 0) {
          o[y] = want;
          queue.push_back(y);
        } else if (o[y] != want) {
          ok = false;
          break;
        }
      }
    }
  }
  rep.orientable = ok;
  if (ok) {
    rep.chart_orientation = o;
    rep.dualizing = "omega_X = O_X";
  } else {
    rep.dualizing = "omega_X^2 = O_X (omega_X 2-torsion)";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Log-Picard rank bookkeeping
// ---------------------------------------------------------------------------

struct LogPicReport {
  bool positive = true, simple = true, standard = true;
  std::string h0_rendered = "k^x x Z";  // H^0(X \ Z, M^gp) for compact B
  size_t kx_rank = 0;             // rank H^1(B, Z): continuous part
  std::vector<Int> kx_torsion;    // torsion of H^2(B, Z)
  size_t discrete_rank = 0;       // rank H^1(W, Aff(B, Z))
  std::vector<Int> discrete_torsion;
  std::string rendered;           // H^1(X \ Z, M^gp) rank form
  std::string note;
};

inline LogPicReport log_pic_rank(const AffineComplex& cx) {
  LogPicReport rep;
  MonodromyAtlas atlas = edge_invariants(cx);
  auto pos = check_positive(atlas);
  rep.positive = pos.positive;
  if (pos.positive) {
    auto cert = check_simple(atlas);
    rep.simple = cert.simple;
    for (const auto& ent : cert.entries)
      if (ent.p > 0 && !is_standard_simplex(ent.delta_tau))
        rep.standard = false;
  } else {
    rep.simple = rep.standard = false;
  }
  auto WZ = cech_W_complex(cx, WSheaf::ConstZ);
  auto WA = cech_W_complex(cx, WSheaf::Aff);
  auto HB1 = cohomology_Z(WZ.C, 1);
  auto HB2 = cohomology_Z(WZ.C, 2);
  auto HA1 = cohomology_Z(WA.C, 1);
  rep.kx_rank = HB1.rank;
  rep.kx_torsion = HB2.torsion;
  rep.discrete_rank = HA1.rank;
  rep.discrete_torsion = HA1.torsion;
  if (!rep.standard)
    rep.note = "rank bookkeeping over Q only (Delta(tau) not standard)";
  std::string s;
  if (rep.kx_rank == 1) s = "k^x";
  else if (rep.kx_rank > 1) s = "(k^x)^" + std::to_string(rep.kx_rank);
  for (const Int& d : rep.kx_torsion) {
    if (!s.empty()) s += " x ";
    s += "mu_" + d.str();
  }
  if (rep.discrete_rank > 0) {
    if (!s.empty()) s += " x ";
    s += (rep.discrete_rank == 1)
             ? "Z"
             : "Z^" + std::to_string(rep.discrete_rank);
  }
  if (s.empty()) s = "1";
  rep.rendered = s;
  return rep;
}

}  // namespace afw
