// Lattice polytopes with explicit face lattices, complete fans, quotient and
// localized fans, barycentric subdivision of graded posets, elementary and
// standard simplex tests, and Newton polytopes of convex piecewise linear
// functions on fans.
//
// Everything is exact and deterministic; algorithms are brute-force
// supporting-hyperplane enumerations adequate for low ambient rank.
#pragma once

#include <algorithm>
#include <map>
#include <set>

#include "afw/lattice.hpp"

namespace afw {

// ---------------------------------------------------------------------------
// Convex position helpers
// ---------------------------------------------------------------------------

namespace detail {

// Is p in the convex hull of pts?  (Homogenize and reuse cone membership.)
inline bool in_convex_hull(const std::vector<Vec>& pts, const Vec& p) {
  if (pts.empty()) return false;
  std::vector<Vec> homog;
  for (const auto& q : pts) {
    Vec h = q;
    h.push_back(1);
    homog.push_back(h);
  }
  Vec hp = p;
  hp.push_back(1);
  return in_cone_span(homog, to_q(hp));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LatticePolytope
// ---------------------------------------------------------------------------

struct LatticePolytope {
  struct Face {
    std::vector<size_t> verts;  // sorted vertex indices; empty face = {}
    int dim = -1;               // -1 for the empty face
  };

  size_t ambient_rank = 0;
  std::vector<Vec> vertices;  // extreme points, lex-sorted
  std::vector<Face> faces;    // graded: sorted by (dim, verts); includes empty and top
  int dim = -1;

  // Coordinates relative to the tangent lattice of the affine span:
  // vertex i corresponds to base_vertex + tangent_basis * vcoords[i].
  Vec base_vertex;                     // = vertices[0] (lex-least)
  std::vector<Vec> tangent_basis;      // lattice basis of saturated span of differences
  std::vector<Vec> vcoords;            // per-vertex coordinates, length = dim
  // Facet inequalities in tangent coordinates: <normal, u> >= offset, with
  // equality exactly on the facet.  Aligned with facet_sets.
  std::vector<Vec> facet_normals;
  std::vector<Int> facet_offsets;
  std::vector<std::vector<size_t>> facet_sets;

  const Face& top() const { return faces.back(); }

  // Index into faces of the face with the given (sorted) vertex set, or npos.
  size_t face_index(const std::vector<size_t>& verts) const {
    for (size_t i = 0; i < faces.size(); ++i)
      if (faces[i].verts == verts) return i;
    return size_t(-1);
  }

  Vec vertex_of_coords(const Vec& u) const {
    Vec p = base_vertex;
    for (size_t j = 0; j < tangent_basis.size(); ++j)
      p = vec_add(p, vec_scale(u[j], tangent_basis[j]));
    return p;
  }
};

// Build a polytope as the convex hull of the given points.
inline LatticePolytope make_polytope(size_t ambient_rank,
                                     std::vector<Vec> points) {
  if (points.empty()) throw std::invalid_argument("make_polytope: no points");
  for (const auto& p : points)
    if (p.size() != ambient_rank)
      throw std::invalid_argument("make_polytope: dimension mismatch");
  std::sort(points.begin(), points.end(), lex_less);
  points.erase(std::unique(points.begin(), points.end()), points.end());

  LatticePolytope P;
  P.ambient_rank = ambient_rank;
  // Extreme points.
  for (size_t i = 0; i < points.size(); ++i) {
    std::vector<Vec> others;
    for (size_t j = 0; j < points.size(); ++j)
      if (j != i) others.push_back(points[j]);
    if (others.empty() || !detail::in_convex_hull(others, points[i]))
      P.vertices.push_back(points[i]);
  }
  std::sort(P.vertices.begin(), P.vertices.end(), lex_less);
  P.base_vertex = P.vertices[0];

  // Tangent lattice of the affine span: saturated span of differences.
  std::vector<Vec> diffs;
  for (size_t i = 1; i < P.vertices.size(); ++i)
    diffs.push_back(vec_sub(P.vertices[i], P.base_vertex));
  size_t d = diffs.empty() ? 0 : rank(IntMat::from_columns(diffs));
  P.dim = int(d);
  if (d > 0) {
    SNF s = smith_normal_form(IntMat::from_columns(diffs));
    IntMat Uinv = unimodular_inverse(s.U);
    for (size_t j = 0; j < d; ++j) P.tangent_basis.push_back(Uinv.col(j));
    // Coordinates of each vertex: solve tangent_basis * u = v - v0 (integral
    // because the basis generates the saturated span).
    IntMat B = IntMat::from_columns(P.tangent_basis);
    for (const auto& v : P.vertices) {
      auto u = solve_integral(B, vec_sub(v, P.base_vertex));
      if (!u)
        throw std::logic_error("make_polytope: tangent basis not saturated");
      P.vcoords.push_back(*u);
    }
  } else {
    P.vcoords.assign(P.vertices.size(), Vec{});
  }

  size_t n = P.vertices.size();
  // Facets via supporting hyperplanes in tangent coordinates.
  if (d >= 1) {
    std::set<std::vector<size_t>> facet_seen;
    std::vector<size_t> idx;
    std::function<void(size_t)> rec = [&](size_t start) {
      if (idx.size() == d) {
        // Hyperplane through the chosen vertices (if their affine rank is d-1).
        std::vector<Vec> hd;
        for (size_t k = 1; k < idx.size(); ++k)
          hd.push_back(vec_sub(P.vcoords[idx[k]], P.vcoords[idx[0]]));
        IntMat D = IntMat::from_rows(hd);
        if (d > 1 && rank(D) != d - 1) return;
        auto ker = integer_kernel(D.rows ? D : IntMat(0, d));
        // Kernel of the (d-1)xd system has dim 1 when rank is d-1; for d=1
        // with no rows the kernel is all of Z^1.
        Vec nrm;
        if (d == 1) {
          nrm = Vec{Int(1)};
        } else {
          if (ker.size() != 1) return;
          nrm = primitive_directed(ker[0]);
        }
        Int c = dot(nrm, P.vcoords[idx[0]]);
        bool above = false, below = false;
        for (size_t i = 0; i < n; ++i) {
          Int v = dot(nrm, P.vcoords[i]);
          if (v > c) above = true;
          if (v < c) below = true;
        }
        if (above && below) return;
        if (below) {
          nrm = vec_neg(nrm);
          c = -c;
        }
        std::vector<size_t> fs;
        for (size_t i = 0; i < n; ++i)
          if (dot(nrm, P.vcoords[i]) == c) fs.push_back(i);
        // fs must be a proper face of affine rank d-1.
        if (fs.size() == n) return;
        if (facet_seen.insert(fs).second) {
          P.facet_sets.push_back(fs);
          P.facet_normals.push_back(nrm);
          P.facet_offsets.push_back(c);
        }
        return;
      }
      for (size_t i = start; i < n; ++i) {
        idx.push_back(i);
        rec(i + 1);
        idx.pop_back();
      }
    };
    rec(0);
    // Deterministic order of facets.
    std::vector<size_t> order(P.facet_sets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return P.facet_sets[a] < P.facet_sets[b];
    });
    std::vector<Vec> fn;
    std::vector<Int> fo;
    std::vector<std::vector<size_t>> fsets;
    for (size_t i : order) {
      fn.push_back(P.facet_normals[i]);
      fo.push_back(P.facet_offsets[i]);
      fsets.push_back(P.facet_sets[i]);
    }
    P.facet_normals = fn;
    P.facet_offsets = fo;
    P.facet_sets = fsets;
  }

  // Face lattice: closure of facet vertex sets under intersection, plus the
  // top face and the empty face.
  std::set<std::vector<size_t>> fsets;
  std::vector<size_t> all(n);
  for (size_t i = 0; i < n; ++i) all[i] = i;
  fsets.insert(all);
  for (const auto& f : P.facet_sets) fsets.insert(f);
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::vector<size_t>> cur(fsets.begin(), fsets.end());
    for (size_t i = 0; i < cur.size(); ++i)
      for (size_t j = i + 1; j < cur.size(); ++j) {
        std::vector<size_t> inter;
        std::set_intersection(cur[i].begin(), cur[i].end(), cur[j].begin(),
                              cur[j].end(), std::back_inserter(inter));
        if (fsets.insert(inter).second) grew = true;
      }
  }
  fsets.insert({});
  for (const auto& fs : fsets) {
    LatticePolytope::Face f;
    f.verts = fs;
    if (fs.empty()) {
      f.dim = -1;
    } else if (fs.size() == 1) {
      f.dim = 0;
    } else {
      std::vector<Vec> fd;
      for (size_t k = 1; k < fs.size(); ++k)
        fd.push_back(vec_sub(P.vcoords[fs[k]], P.vcoords[fs[0]]));
      f.dim = int(rank(IntMat::from_columns(fd)));
    }
    P.faces.push_back(f);
  }
  std::sort(P.faces.begin(), P.faces.end(),
            [](const LatticePolytope::Face& a, const LatticePolytope::Face& b) {
              if (a.dim != b.dim) return a.dim < b.dim;
              return a.verts < b.verts;
            });
  return P;
}

// Faces of a given dimension.
inline std::vector<size_t> faces_of_dim(const LatticePolytope& P, int k) {
  std::vector<size_t> out;
  for (size_t i = 0; i < P.faces.size(); ++i)
    if (P.faces[i].dim == k) out.push_back(i);
  return out;
}

inline bool face_leq(const LatticePolytope::Face& a,
                     const LatticePolytope::Face& b) {
  return std::includes(b.verts.begin(), b.verts.end(), a.verts.begin(),
                       a.verts.end());
}

// All lattice points of the polytope (bounding box + hull membership).
inline std::vector<Vec> lattice_points(const LatticePolytope& P) {
  size_t n = P.ambient_rank;
  Vec lo = P.vertices[0], hi = P.vertices[0];
  for (const auto& v : P.vertices)
    for (size_t c = 0; c < n; ++c) {
      lo[c] = std::min(lo[c], v[c]);
      hi[c] = std::max(hi[c], v[c]);
    }
  std::vector<Vec> out;
  Vec pt(n);
  std::function<void(size_t)> rec = [&](size_t c) {
    if (c == n) {
      if (detail::in_convex_hull(P.vertices, pt)) out.push_back(pt);
      return;
    }
    for (Int v = lo[c]; v <= hi[c]; ++v) {
      pt[c] = v;
      rec(c + 1);
    }
  };
  rec(0);
  return out;
}

// Translate so the lexicographically least vertex sits at the origin — the
// canonical representative of a polytope given only up to translation.
inline LatticePolytope canonical_translate(const LatticePolytope& P) {
  std::vector<Vec> pts;
  for (const auto& v : P.vertices) pts.push_back(vec_sub(v, P.vertices[0]));
  return make_polytope(P.ambient_rank, pts);
}

inline bool equal_up_to_translation(const LatticePolytope& P,
                                    const LatticePolytope& Q) {
  if (P.ambient_rank != Q.ambient_rank) return false;
  auto a = canonical_translate(P), b = canonical_translate(Q);
  return a.vertices == b.vertices;
}

// An elementary simplex: a simplex whose only lattice points are its vertices.
inline bool is_simplex(const LatticePolytope& P) {
  return P.vertices.size() == size_t(P.dim) + 1;
}

inline bool is_elementary_simplex(const LatticePolytope& P) {
  if (!is_simplex(P)) return false;
  return lattice_points(P).size() == P.vertices.size();
}

// A standard simplex: unimodular image of conv{0, e_1, ..., e_k}; equivalently
// a simplex whose edge vectors from one vertex form a basis of the tangent
// lattice (all invariant factors 1).
inline bool is_standard_simplex(const LatticePolytope& P) {
  if (!is_simplex(P)) return false;
  if (P.dim == 0) return true;
  std::vector<Vec> edges;
  for (size_t i = 1; i < P.vcoords.size(); ++i)
    edges.push_back(vec_sub(P.vcoords[i], P.vcoords[0]));
  IntMat E = IntMat::from_columns(edges);
  Int d = det(E);
  return d == 1 || d == -1;
}

// The wedge (tangent cone) of the polytope at a face, generated by all
// vertex differences v - w for w a vertex of the face.  In ambient coords.
inline RationalCone tangent_wedge(const LatticePolytope& P, size_t face_idx) {
  const auto& f = P.faces[face_idx];
  if (f.verts.empty())
    throw std::invalid_argument("tangent_wedge: empty face");
  std::vector<Vec> gens;
  const Vec& w = P.vertices[f.verts[0]];
  for (const auto& v : P.vertices) gens.push_back(vec_sub(v, w));
  for (size_t k : f.verts)
    for (size_t l : f.verts) {
      Vec dvec = vec_sub(P.vertices[k], P.vertices[l]);
      if (!is_zero(dvec)) gens.push_back(dvec);
    }
  return RationalCone(P.ambient_rank, gens);
}

// ---------------------------------------------------------------------------
// FanZ
// ---------------------------------------------------------------------------

struct FanZ {
  size_t ambient_rank = 0;
  std::vector<Vec> rays;                   // primitive, deterministic order
  std::vector<std::vector<size_t>> cones;  // sorted ray-index lists; closed
                                           // under faces; {} is the zero cone
  std::vector<bool> maximal;               // aligned with cones

  RationalCone cone(size_t i) const {
    std::vector<Vec> gens;
    for (size_t r : cones[i]) gens.push_back(rays[r]);
    return RationalCone(ambient_rank, gens);
  }

  size_t cone_index(const std::vector<size_t>& ray_set) const {
    for (size_t i = 0; i < cones.size(); ++i)
      if (cones[i] == ray_set) return i;
    return size_t(-1);
  }

  std::vector<size_t> maximal_cones() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < cones.size(); ++i)
      if (maximal[i]) out.push_back(i);
    return out;
  }
};

namespace detail {

// All faces of the cone spanned by the given ray subset (indices into rays):
// intersections of the facet sets cut out by dual generators.
inline std::set<std::vector<size_t>> cone_face_sets(
    const std::vector<Vec>& rays, const std::vector<size_t>& cone_set,
    size_t ambient_rank) {
  std::vector<Vec> gens;
  for (size_t r : cone_set) gens.push_back(rays[r]);
  RationalCone C(ambient_rank, gens);
  RationalCone D = dual_cone(C);
  std::set<std::vector<size_t>> out;
  out.insert(cone_set);
  std::vector<std::vector<size_t>> walls;
  for (const auto& f : D.generators) {
    std::vector<size_t> on;
    for (size_t r : cone_set)
      if (dot(f, rays[r]) == 0) on.push_back(r);
    if (on.size() < cone_set.size()) walls.push_back(on);
  }
  for (const auto& w : walls) out.insert(w);
  out.insert(std::vector<size_t>{});
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::vector<size_t>> cur(out.begin(), out.end());
    for (const auto& a : cur)
      for (const auto& w : walls) {
        std::vector<size_t> inter;
        std::set_intersection(a.begin(), a.end(), w.begin(), w.end(),
                              std::back_inserter(inter));
        if (out.insert(inter).second) grew = true;
      }
  }
  out.insert(std::vector<size_t>{});
  return out;
}

}  // namespace detail

// Build a fan from generating cones (each a list of ray vectors); the face
// closure is computed, rays are normalized to primitive and deduplicated.
inline FanZ make_fan(size_t ambient_rank,
                     const std::vector<std::vector<Vec>>& generating_cones) {
  FanZ F;
  F.ambient_rank = ambient_rank;
  std::map<Vec, size_t> ray_idx;
  std::vector<std::vector<size_t>> gen_sets;
  for (const auto& gc : generating_cones) {
    std::vector<size_t> s;
    // Use extreme rays only, to keep cone descriptions canonical.
    RationalCone C(ambient_rank, gc);
    std::vector<Vec> ext =
        cone_strictly_convex(C) ? cone_extreme_rays(C) : C.generators;
    for (const auto& rv : ext) {
      Vec p = primitive_directed(rv);
      auto it = ray_idx.find(p);
      size_t id;
      if (it == ray_idx.end()) {
        id = F.rays.size();
        ray_idx[p] = id;
        F.rays.push_back(p);
      } else {
        id = it->second;
      }
      s.push_back(id);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    gen_sets.push_back(s);
  }
  std::set<std::vector<size_t>> all;
  for (const auto& s : gen_sets) {
    auto faces = detail::cone_face_sets(F.rays, s, ambient_rank);
    all.insert(faces.begin(), faces.end());
  }
  for (const auto& s : all) F.cones.push_back(s);
  std::sort(F.cones.begin(), F.cones.end(),
            [](const std::vector<size_t>& a, const std::vector<size_t>& b) {
              if (a.size() != b.size()) return a.size() < b.size();
              return a < b;
            });
  // Maximality: a cone is maximal iff its ray set is not a subset of another
  // cone's ray set (adequate because cones are closed under faces).
  F.maximal.assign(F.cones.size(), true);
  for (size_t i = 0; i < F.cones.size(); ++i)
    for (size_t j = 0; j < F.cones.size(); ++j) {
      if (i == j) continue;
      if (F.cones[i].size() < F.cones[j].size() &&
          std::includes(F.cones[j].begin(), F.cones[j].end(),
                        F.cones[i].begin(), F.cones[i].end()))
        F.maximal[i] = false;
    }
  return F;
}

inline size_t fan_cone_dim(const FanZ& F, size_t i) {
  if (F.cones[i].empty()) return 0;
  std::vector<Vec> gens;
  for (size_t r : F.cones[i]) gens.push_back(F.rays[r]);
  return rank(IntMat::from_columns(gens));
}

// Completeness: every maximal cone is full-dimensional and every facet of a
// maximal cone is shared by exactly two maximal cones.
inline bool fan_is_complete(const FanZ& F) {
  if (F.ambient_rank == 0) return true;
  auto maxc = F.maximal_cones();
  if (maxc.empty()) return false;
  for (size_t m : maxc)
    if (fan_cone_dim(F, m) != F.ambient_rank) return false;
  // Collect facets of maximal cones and count incidences.
  std::map<std::vector<size_t>, int> facet_count;
  for (size_t m : maxc) {
    auto faces = detail::cone_face_sets(F.rays, F.cones[m], F.ambient_rank);
    for (const auto& f : faces) {
      if (f == F.cones[m]) continue;
      std::vector<Vec> gens;
      for (size_t r : f) gens.push_back(F.rays[r]);
      size_t d = gens.empty() ? 0 : rank(IntMat::from_columns(gens));
      if (d == F.ambient_rank - 1) ++facet_count[f];
    }
  }
  for (const auto& [f, c] : facet_count)
    if (c != 2) return false;
  return !facet_count.empty() || F.ambient_rank == 0 ||
         (F.ambient_rank == 1 && maxc.size() == 2);
}

// Find a cone of the fan containing the point (smallest such, deterministic).
inline size_t fan_cone_containing(const FanZ& F, const Vec& x) {
  size_t best = size_t(-1);
  for (size_t i = 0; i < F.cones.size(); ++i) {
    if (cone_contains(F.cone(i), x)) {
      if (best == size_t(-1) || F.cones[i].size() < F.cones[best].size())
        best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Normal fan
// ---------------------------------------------------------------------------

// Normal fan of a polytope, in the dual of its tangent lattice.  The cone of
// face w consists of the covectors constant on w and minimized there over P.
inline FanZ normal_fan(const LatticePolytope& P) {
  if (P.dim <= 0) {
    FanZ F;
    F.ambient_rank = 0;
    F.cones.push_back({});
    F.maximal.assign(1, true);
    return F;
  }
  size_t d = size_t(P.dim);
  // Maximal cones of the normal fan correspond to vertices of P; each is
  // generated by the facet normals of the facets through that vertex.
  std::vector<std::vector<Vec>> gens;
  for (size_t vi = 0; vi < P.vertices.size(); ++vi) {
    std::vector<Vec> g;
    for (size_t fi = 0; fi < P.facet_sets.size(); ++fi)
      if (std::binary_search(P.facet_sets[fi].begin(), P.facet_sets[fi].end(),
                             vi))
        g.push_back(P.facet_normals[fi]);
    gens.push_back(g);
  }
  FanZ F = make_fan(d, gens);
  return F;
}

// The normal-fan cone index of a given face of P (order-reversing bijection
// between faces of P and cones of its normal fan).
inline size_t normal_cone_of_face(const LatticePolytope& P, const FanZ& nf,
                                  size_t face_idx) {
  const auto& f = P.faces[face_idx];
  if (f.verts.empty())
    throw std::invalid_argument("normal_cone_of_face: empty face");
  // Rays of the normal cone: facet normals of facets containing the face.
  std::vector<size_t> set;
  for (size_t fi = 0; fi < P.facet_sets.size(); ++fi) {
    bool contains = std::includes(P.facet_sets[fi].begin(),
                                  P.facet_sets[fi].end(), f.verts.begin(),
                                  f.verts.end());
    if (contains) {
      // Locate the ray index of this facet normal.
      Vec p = primitive_directed(P.facet_normals[fi]);
      for (size_t r = 0; r < nf.rays.size(); ++r)
        if (nf.rays[r] == p) {
          set.push_back(r);
          break;
        }
    }
  }
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  size_t idx = nf.cone_index(set);
  if (idx == size_t(-1))
    throw std::logic_error("normal_cone_of_face: cone not found in fan");
  return idx;
}

// ---------------------------------------------------------------------------
// Quotient and localized fans
// ---------------------------------------------------------------------------

// Quotient fan Σ(τ): images of the cones containing τ in the quotient lattice
// Z^n / (saturated span of τ).
inline FanZ quotient_fan(const FanZ& F, const std::vector<size_t>& tau) {
  size_t n = F.ambient_rank;
  size_t ti = F.cone_index(tau);
  if (ti == size_t(-1))
    throw std::invalid_argument("quotient_fan: cone not in fan");
  if (tau.empty()) return F;
  std::vector<Vec> tgens;
  for (size_t r : tau) tgens.push_back(F.rays[r]);
  IntMat T = IntMat::from_columns(tgens);
  SNF s = smith_normal_form(T);
  size_t k = 0;
  for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
    if (s.D(i, i) != 0) ++k;
  // Projection = last n-k rows of U (kills the saturated span of tau).
  IntMat proj(n - k, n);
  for (size_t i = 0; i < n - k; ++i)
    for (size_t j = 0; j < n; ++j) proj(i, j) = s.U(i + k, j);
  std::vector<std::vector<Vec>> gens;
  for (size_t ci = 0; ci < F.cones.size(); ++ci) {
    if (!std::includes(F.cones[ci].begin(), F.cones[ci].end(), tau.begin(),
                       tau.end()))
      continue;
    std::vector<Vec> g;
    for (size_t r : F.cones[ci]) {
      Vec img = mat_apply(proj, F.rays[r]);
      if (!is_zero(img)) g.push_back(img);
    }
    gens.push_back(g);
  }
  return make_fan(n - k, gens);
}

// Localized fan τ^{-1}Σ: cones σ + Rτ for σ ⊇ τ, in the same ambient space.
// Cones are generally not strictly convex.
inline FanZ localized_fan(const FanZ& F, const std::vector<size_t>& tau) {
  size_t ti = F.cone_index(tau);
  if (ti == size_t(-1))
    throw std::invalid_argument("localized_fan: cone not in fan");
  FanZ out;
  out.ambient_rank = F.ambient_rank;
  std::map<Vec, size_t> ray_idx;
  auto ray_id = [&](const Vec& v) {
    Vec p = primitive_directed(v);
    auto it = ray_idx.find(p);
    if (it != ray_idx.end()) return it->second;
    size_t id = out.rays.size();
    ray_idx[p] = id;
    out.rays.push_back(p);
    return id;
  };
  std::set<std::vector<size_t>> sets;
  for (size_t ci = 0; ci < F.cones.size(); ++ci) {
    if (!std::includes(F.cones[ci].begin(), F.cones[ci].end(), tau.begin(),
                       tau.end()))
      continue;
    std::vector<size_t> s;
    for (size_t r : F.cones[ci]) s.push_back(ray_id(F.rays[r]));
    for (size_t r : tau) s.push_back(ray_id(vec_neg(F.rays[r])));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    sets.insert(s);
  }
  for (const auto& s : sets) out.cones.push_back(s);
  std::sort(out.cones.begin(), out.cones.end(),
            [](const std::vector<size_t>& a, const std::vector<size_t>& b) {
              if (a.size() != b.size()) return a.size() < b.size();
              return a < b;
            });
  out.maximal.assign(out.cones.size(), true);
  for (size_t i = 0; i < out.cones.size(); ++i)
    for (size_t j = 0; j < out.cones.size(); ++j) {
      if (i == j) continue;
      if (out.cones[i] != out.cones[j] &&
          std::includes(out.cones[j].begin(), out.cones[j].end(),
                        out.cones[i].begin(), out.cones[i].end()))
        out.maximal[i] = false;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Barycentric subdivision of a graded poset
// ---------------------------------------------------------------------------

// Chains of a finite poset given by element count and a strict-order test.
// Each simplex is an ascending chain of element indices; includes all chain
// lengths >= 1.
inline std::vector<std::vector<size_t>> barycentric_subdivision(
    size_t n_elems, const std::function<bool(size_t, size_t)>& strictly_less) {
  std::vector<std::vector<size_t>> chains;
  std::vector<size_t> cur;
  // Extend only by strictly larger elements; transitivity makes consecutive
  // comparability sufficient for a chain.
  std::function<void()> grow = [&]() {
    for (size_t i = 0; i < n_elems; ++i) {
      if (!cur.empty()) {
        if (!strictly_less(cur.back(), i)) continue;
      }
      cur.push_back(i);
      chains.push_back(cur);
      grow();
      cur.pop_back();
    }
  };
  grow();
  // Deduplicate (each chain produced once since it is determined by its
  // ascending element order, but keep this defensive and deterministic).
  std::sort(chains.begin(), chains.end());
  chains.erase(std::unique(chains.begin(), chains.end()), chains.end());
  return chains;
}

// ---------------------------------------------------------------------------
// Piecewise linear functions on fans and Newton polytopes
// ---------------------------------------------------------------------------

struct PLOnFan {
  const FanZ* fan = nullptr;
  // slope per cone index (only maximal cones need entries; keyed by index).
  std::map<size_t, Vec> slopes;

  Int value(const Vec& y) const {
    // Find a maximal cone containing y and apply its slope.
    for (const auto& [ci, s] : slopes)
      if (cone_contains(fan->cone(ci), y)) return dot(s, y);
    throw std::invalid_argument("PLOnFan::value: point outside fan support");
  }
};

// Continuity: slopes of any two maximal cones agree on the rays of their
// common face.
inline bool pl_is_continuous(const PLOnFan& f) {
  const FanZ& F = *f.fan;
  for (const auto& [ci, si] : f.slopes)
    for (const auto& [cj, sj] : f.slopes) {
      if (ci >= cj) continue;
      std::vector<size_t> inter;
      std::set_intersection(F.cones[ci].begin(), F.cones[ci].end(),
                            F.cones[cj].begin(), F.cones[cj].end(),
                            std::back_inserter(inter));
      for (size_t r : inter)
        if (dot(si, F.rays[r]) != dot(sj, F.rays[r])) return false;
    }
  return true;
}

// Convexity test: for every maximal cone σ with slope n_σ and every ray y of
// the fan, <n_σ, y> <= f(y).
inline bool pl_is_convex(const PLOnFan& f) {
  if (!pl_is_continuous(f)) return false;
  const FanZ& F = *f.fan;
  for (const auto& [ci, si] : f.slopes)
    for (const auto& ry : F.rays) {
      Int fy;
      bool found = false;
      for (const auto& [cj, sj] : f.slopes)
        if (cone_contains(F.cone(cj), ry)) {
          fy = dot(sj, ry);
          found = true;
          break;
        }
      if (!found) continue;
      if (dot(si, ry) > fy) return false;
    }
  return true;
}

// Newton polytope of a convex piecewise linear function: convex hull of the
// negated slope covectors.  Recovery: f(y) = -inf{<y,x> : x in newton(f)}.
inline LatticePolytope newton_polytope(const PLOnFan& f) {
  if (!pl_is_convex(f))
    throw std::invalid_argument("newton_polytope: function not convex");
  std::vector<Vec> pts;
  for (const auto& [ci, s] : f.slopes) pts.push_back(vec_neg(s));
  return make_polytope(f.fan->ambient_rank, pts);
}

}  // namespace afw
