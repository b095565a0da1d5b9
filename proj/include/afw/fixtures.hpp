// Built-in example complexes: the flat torus, circles R/nZ, the quartic
// dual intersection complex (boundary of a tetrahedron with projective-plane
// fans), the two-triangle disk with one interior singular point, and friends.
#pragma once

#include "afw/complex.hpp"

namespace afw {
namespace fixtures {

inline Vec v1(int a) { return Vec{Int(a)}; }
inline Vec v2(int a, int b) { return Vec{Int(a), Int(b)}; }
inline Vec v3(int a, int b, int c) { return Vec{Int(a), Int(b), Int(c)}; }

// Index of the fan cone whose ray set is exactly the given vectors.
inline size_t fan_cone_by_rays(const FanZ& F, std::vector<Vec> rays) {
  std::vector<size_t> set;
  for (auto& r : rays) {
    Vec p = primitive_directed(r);
    bool found = false;
    for (size_t i = 0; i < F.rays.size(); ++i)
      if (F.rays[i] == p) {
        set.push_back(i);
        found = true;
        break;
      }
    if (!found) throw std::invalid_argument("fan_cone_by_rays: unknown ray");
  }
  std::sort(set.begin(), set.end());
  size_t idx = F.cone_index(set);
  if (idx == size_t(-1))
    throw std::invalid_argument("fan_cone_by_rays: no such cone");
  return idx;
}

// A unimodular linear map sending primitive u to primitive v (rank 2).
inline IntMat unimodular_sending(const Vec& u, const Vec& v) {
  // Complete u and v to bases (u, u'), (v, v') with det 1, map basis to basis.
  auto complete = [](const Vec& w) -> Vec {
    // find w' with det(w, w') = 1, i.e. w[0]*y1 - w[1]*y0 = 1
    IntMat A(1, 2, {-w[1], w[0]});
    auto s = solve_integral(A, Vec{Int(1)});
    if (!s) throw std::invalid_argument("unimodular_sending: not primitive");
    return *s;
  };
  Vec up = complete(u), vp = complete(v);
  IntMat U = IntMat::from_columns({u, up});
  IntMat V = IntMat::from_columns({v, vp});
  return mat_mul(V, unimodular_inverse(U));
}

// An affine unimodular map with p1 |-> p2 and q1 |-> q2 (all in Z^2,
// q1 - p1 and q2 - p2 primitive).
inline AffMapZ affine_sending(const Vec& p1, const Vec& q1, const Vec& p2,
                              const Vec& q2) {
  IntMat L = unimodular_sending(vec_sub(q1, p1), vec_sub(q2, p2));
  return AffMapZ(L, vec_sub(p2, mat_apply(L, p1)));
}

// ---------------------------------------------------------------------------
// Flat torus: one unit square, opposite sides identified by translations.
// ---------------------------------------------------------------------------
inline ComplexSpec torus() {
  ComplexSpec S;
  S.dim = 2;
  auto P = make_polytope(2, {v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)});
  S.polytopes.push_back(P);
  // lex-sorted vertices: 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1)
  S.identifications.push_back(
      {0, {0, 1}, 0, {2, 3}, AffMapZ(IntMat::identity(2), v2(1, 0))});
  S.identifications.push_back(
      {0, {0, 2}, 0, {1, 3}, AffMapZ(IntMat::identity(2), v2(0, 1))});
  FanZ F = make_fan(2, {{v2(1, 0), v2(0, 1)},
                        {v2(0, 1), v2(-1, 0)},
                        {v2(-1, 0), v2(0, -1)},
                        {v2(0, -1), v2(1, 0)}});
  VertexFanSpec vf;
  vf.poly = 0;
  vf.vertex = 0;
  vf.fan = F;
  vf.corner_to_cone = {
      {{0, 0}, fan_cone_by_rays(F, {v2(1, 0), v2(0, 1)})},
      {{0, 1}, fan_cone_by_rays(F, {v2(1, 0), v2(0, -1)})},
      {{0, 2}, fan_cone_by_rays(F, {v2(-1, 0), v2(0, 1)})},
      {{0, 3}, fan_cone_by_rays(F, {v2(-1, 0), v2(0, -1)})},
  };
  S.fans.push_back(vf);
  return S;
}

// ---------------------------------------------------------------------------
// Circle R/nZ: a single interval [0, n] with endpoints identified.
// ---------------------------------------------------------------------------
inline ComplexSpec circle(int nlen = 1) {
  ComplexSpec S;
  S.dim = 1;
  auto P = make_polytope(1, {v1(0), v1(nlen)});
  S.polytopes.push_back(P);
  S.identifications.push_back(
      {0, {0}, 0, {1}, AffMapZ(IntMat::identity(1), v1(nlen))});
  FanZ F = make_fan(1, {{v1(1)}, {v1(-1)}});
  VertexFanSpec vf;
  vf.poly = 0;
  vf.vertex = 0;
  vf.fan = F;
  vf.corner_to_cone = {
      {{0, 0}, fan_cone_by_rays(F, {v1(1)})},
      {{0, 1}, fan_cone_by_rays(F, {v1(-1)})},
  };
  S.fans.push_back(vf);
  return S;
}

// ---------------------------------------------------------------------------
// Quartic dual intersection complex: boundary of a tetrahedron built from 4
// standard triangles, with the projective-plane fan at each vertex.
// ---------------------------------------------------------------------------
inline ComplexSpec quartic() {
  ComplexSpec S;
  S.dim = 2;
  auto T = make_polytope(2, {v2(0, 0), v2(1, 0), v2(0, 1)});
  // lex-sorted: 0=(0,0) 1=(0,1) 2=(1,0)
  for (int i = 0; i < 4; ++i) S.polytopes.push_back(T);
  // Triangle i omits abstract tetrahedron vertex i; its corners 0,1,2 carry
  // the ascending remaining labels.
  auto labels = [](int i) {
    std::vector<int> l;
    for (int k = 0; k < 4; ++k)
      if (k != i) l.push_back(k);
    return l;
  };
  auto corner_of_label = [&](int tri, int lab) -> size_t {
    auto l = labels(tri);
    for (size_t c = 0; c < 3; ++c)
      if (l[c] == lab) return c;
    throw std::logic_error("label not on triangle");
  };
  const std::vector<Vec> corner_pt = {v2(0, 0), v2(0, 1), v2(1, 0)};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      // shared abstract edge: labels not in {i, j}
      std::vector<int> e;
      for (int k = 0; k < 4; ++k)
        if (k != i && k != j) e.push_back(k);
      size_t a1 = corner_of_label(i, e[0]), b1 = corner_of_label(i, e[1]);
      size_t a2 = corner_of_label(j, e[0]), b2 = corner_of_label(j, e[1]);
      Identification id;
      id.poly_from = size_t(i);
      id.verts_from = {a1, b1};
      id.poly_to = size_t(j);
      id.verts_to = {a2, b2};
      id.map = affine_sending(corner_pt[a1], corner_pt[b1], corner_pt[a2],
                              corner_pt[b2]);
      S.identifications.push_back(id);
    }
  // Fan of P^2 at each abstract vertex.
  FanZ F = make_fan(2, {{v2(1, 0), v2(0, 1)},
                        {v2(0, 1), v2(-1, -1)},
                        {v2(-1, -1), v2(1, 0)}});
  std::vector<std::vector<Vec>> cone_rays = {
      {v2(1, 0), v2(0, 1)}, {v2(0, 1), v2(-1, -1)}, {v2(-1, -1), v2(1, 0)}};
  for (int k = 0; k < 4; ++k) {
    VertexFanSpec vf;
    vf.fan = F;
    int slot = 0;
    bool rep_set = false;
    for (int i = 0; i < 4; ++i) {
      if (i == k) continue;
      size_t c = corner_of_label(i, k);
      if (!rep_set) {
        vf.poly = size_t(i);
        vf.vertex = c;
        rep_set = true;
      }
      vf.corner_to_cone.push_back(
          {{size_t(i), c}, fan_cone_by_rays(F, cone_rays[slot])});
      ++slot;
    }
    S.fans.push_back(vf);
  }
  return S;
}

// ---------------------------------------------------------------------------
// Two triangles sharing the vertical edge (0,0)-(0,1), with one singular
// point on that edge (a disk with boundary).  The vertex structures are flat
// at (0,0) and sheared at (0,1), so the transition through (0,1) from the
// right triangle to the left one is the unit shear [[1,0],[1,1]].  Passing
// `sheared_up = false` mirrors the shear at (0,1), producing the
// opposite-orientation singular point (negative monodromy).
// ---------------------------------------------------------------------------
inline ComplexSpec focus_focus(bool sheared_up = true) {
  ComplexSpec S;
  S.dim = 2;
  S.allow_boundary = true;
  auto P0 = make_polytope(2, {v2(0, 0), v2(1, 0), v2(0, 1)});
  // lex: 0=(0,0) 1=(0,1) 2=(1,0)
  auto P1 = make_polytope(2, {v2(-1, 1), v2(0, 0), v2(0, 1)});
  // lex: 0=(-1,1) 1=(0,0) 2=(0,1)
  S.polytopes = {P0, P1};
  S.identifications.push_back(
      {0, {0, 1}, 1, {1, 2}, AffMapZ::identity(2)});

  {  // vertex (1,0): single corner of P0
    FanZ F = make_fan(2, {{v2(-1, 0), v2(-1, 1)}});
    VertexFanSpec vf;
    vf.poly = 0;
    vf.vertex = 2;
    vf.fan = F;
    vf.corner_to_cone = {
        {{0, 2}, fan_cone_by_rays(F, {v2(-1, 0), v2(-1, 1)})}};
    S.fans.push_back(vf);
  }
  {  // vertex (-1,1): single corner of P1
    FanZ F = make_fan(2, {{v2(1, -1), v2(1, 0)}});
    VertexFanSpec vf;
    vf.poly = 1;
    vf.vertex = 0;
    vf.fan = F;
    vf.corner_to_cone = {{{1, 0}, fan_cone_by_rays(F, {v2(1, -1), v2(1, 0)})}};
    S.fans.push_back(vf);
  }
  {  // vertex (0,0): corners (P0, 0) and (P1, 1); flat structure
    FanZ F = make_fan(2, {{v2(1, 0), v2(0, 1)}, {v2(0, 1), v2(-1, 1)}});
    VertexFanSpec vf;
    vf.poly = 0;
    vf.vertex = 0;
    vf.fan = F;
    vf.corner_to_cone = {
        {{0, 0}, fan_cone_by_rays(F, {v2(1, 0), v2(0, 1)})},
        {{1, 1}, fan_cone_by_rays(F, {v2(0, 1), v2(-1, 1)})},
    };
    S.fans.push_back(vf);
  }
  {  // vertex (0,1): corners (P0, 1) and (P1, 2); sheared structure
    Vec second = sheared_up ? v2(-1, 1) : v2(-1, -1);
    FanZ F = make_fan(2, {{v2(0, -1), v2(1, -1)}, {v2(0, -1), second}});
    VertexFanSpec vf;
    vf.poly = 0;
    vf.vertex = 1;
    vf.fan = F;
    vf.corner_to_cone = {
        {{0, 1}, fan_cone_by_rays(F, {v2(0, -1), v2(1, -1)})},
        {{1, 2}, fan_cone_by_rays(F, {v2(0, -1), second})},
    };
    S.fans.push_back(vf);
  }
  return S;
}

inline ComplexSpec focus_focus_negative() { return focus_focus(false); }

// ---------------------------------------------------------------------------
// Mapping torus of the shear [[1,e],[0,1]]: the unit square split along its
// diagonal, horizontal sides identified by a translation and the vertical
// gluing twisted by the shear.  The affine structure is flat (no singular
// points) but globally twisted, like the base of a Kodaira fibration.
// ---------------------------------------------------------------------------
inline ComplexSpec kodaira(int e = 2) {
  ComplexSpec S;
  S.dim = 2;
  auto P0 = make_polytope(2, {v2(0, 0), v2(1, 0), v2(1, 1)});
  // lex: 0=(0,0) 1=(1,0) 2=(1,1)
  auto P1 = make_polytope(2, {v2(0, 0), v2(1, 1), v2(0, 1)});
  // lex: 0=(0,0) 1=(0,1) 2=(1,1)
  S.polytopes = {P0, P1};
  // shared diagonal
  S.identifications.push_back({0, {0, 2}, 1, {0, 2}, AffMapZ::identity(2)});
  // bottom of P0 to top of P1 by the shear
  S.identifications.push_back(
      {0, {0, 1}, 1, {1, 2},
       AffMapZ(IntMat(2, 2, {Int(1), Int(e), Int(0), Int(1)}), v2(0, 1))});
  // right of P0 to left of P1 by translation
  S.identifications.push_back(
      {0, {1, 2}, 1, {0, 1}, AffMapZ(IntMat::identity(2), v2(-1, 0))});
  // single vertex class; its developed star closes up after the shear
  FanZ F = make_fan(2, {{v2(1, 0), v2(1, 1)},
                        {v2(1, 1), v2(0, 1)},
                        {v2(0, 1), v2(-1, 0)},
                        {v2(-1, 0), v2(e - 1, -1)},
                        {v2(e - 1, -1), v2(e, -1)},
                        {v2(e, -1), v2(1, 0)}});
  VertexFanSpec vf;
  vf.poly = 0;
  vf.vertex = 0;
  vf.fan = F;
  vf.corner_to_cone = {
      {{0, 0}, fan_cone_by_rays(F, {v2(1, 0), v2(1, 1)})},
      {{1, 0}, fan_cone_by_rays(F, {v2(1, 1), v2(0, 1)})},
      {{0, 1}, fan_cone_by_rays(F, {v2(0, 1), v2(-1, 0)})},
      {{1, 2}, fan_cone_by_rays(F, {v2(-1, 0), v2(e - 1, -1)})},
      {{0, 2}, fan_cone_by_rays(F, {v2(e - 1, -1), v2(e, -1)})},
      {{1, 1}, fan_cone_by_rays(F, {v2(e, -1), v2(1, 0)})},
  };
  S.fans.push_back(vf);
  return S;
}

// ---------------------------------------------------------------------------
// Projective plane as the antipodal quotient of the octahedron boundary:
// four standard triangles with pairwise identity identifications, the
// twisting carried entirely by the corner-to-cone assignments.  The result
// is compact and non-orientable, with one charge-2 singular point on each
// of the six edges (the double cover is the octahedron sphere with its 12
// charge-2 points).
// ---------------------------------------------------------------------------
inline ComplexSpec enriques() {
  ComplexSpec S;
  S.dim = 2;
  auto T = make_polytope(2, {v2(0, 0), v2(1, 0), v2(0, 1)});
  // lex: 0=(0,0) 1=(0,1) 2=(1,0)
  // triangle index t(s2,s3): 0=(+,+) 1=(+,-) 2=(-,+) 3=(-,-)
  for (int i = 0; i < 4; ++i) S.polytopes.push_back(T);
  auto glue = [&](size_t a, size_t b, std::vector<size_t> verts) {
    S.identifications.push_back({a, verts, b, verts, AffMapZ::identity(2)});
  };
  glue(0, 1, {0, 2});  // bottom edges, shared s2 = +
  glue(2, 3, {0, 2});  // bottom edges, shared s2 = -
  glue(0, 2, {0, 1});  // left edges, shared s3 = +
  glue(1, 3, {0, 1});  // left edges, shared s3 = -
  glue(0, 3, {1, 2});  // hypotenuses, antipodal pairs
  glue(1, 2, {1, 2});
  FanZ F = make_fan(2, {{v2(1, 0), v2(0, 1)},
                        {v2(0, 1), v2(-1, 0)},
                        {v2(-1, 0), v2(0, -1)},
                        {v2(0, -1), v2(1, 0)}});
  auto quad = [&](int s1, int s2) {
    Vec r1 = s1 > 0 ? v2(1, 0) : v2(-1, 0);
    Vec r2 = s2 > 0 ? v2(0, 1) : v2(0, -1);
    return fan_cone_by_rays(F, {r1, r2});
  };
  auto add_fan = [&](size_t vert, std::vector<std::pair<int, int>> quads) {
    VertexFanSpec vf;
    vf.poly = 0;
    vf.vertex = vert;
    vf.fan = F;
    for (size_t t = 0; t < 4; ++t)
      vf.corner_to_cone.push_back({{t, vert}, quad(quads[t].first,
                                                   quads[t].second)});
    S.fans.push_back(vf);
  };
  // right-angle corners: quadrant matches the triangle's sign pair
  add_fan(0, {{+1, +1}, {+1, -1}, {-1, +1}, {-1, -1}});
  // the two hypotenuse corners pick up the antipodal twist
  add_fan(2, {{+1, +1}, {+1, -1}, {-1, -1}, {-1, +1}});
  add_fan(1, {{+1, +1}, {-1, -1}, {+1, -1}, {-1, +1}});
  return S;
}

// ---------------------------------------------------------------------------
// Two triangular prisms sharing a unit square, with a singular segment in the
// interior of that square: the product of the two-triangle disk with an
// interval.  The vertex structures over the square are flat at y = 0 and
// sheared at y = 1, independently of z.
// ---------------------------------------------------------------------------
inline ComplexSpec two_pyramids() {
  ComplexSpec S;
  S.dim = 3;
  S.allow_boundary = true;
  auto P0 = make_polytope(3, {v3(0, 0, 0), v3(0, 0, 1), v3(0, 1, 0),
                              v3(0, 1, 1), v3(1, 0, 0), v3(1, 0, 1)});
  // lex: 0=(0,0,0) 1=(0,0,1) 2=(0,1,0) 3=(0,1,1) 4=(1,0,0) 5=(1,0,1)
  auto P1 = make_polytope(3, {v3(-1, 1, 0), v3(-1, 1, 1), v3(0, 0, 0),
                              v3(0, 0, 1), v3(0, 1, 0), v3(0, 1, 1)});
  // lex: 0=(-1,1,0) 1=(-1,1,1) 2=(0,0,0) 3=(0,0,1) 4=(0,1,0) 5=(0,1,1)
  S.polytopes = {P0, P1};
  S.identifications.push_back(
      {0, {0, 1, 2, 3}, 1, {2, 3, 4, 5}, AffMapZ::identity(3)});

  auto single = [&](size_t poly, size_t vert, std::vector<Vec> rays) {
    FanZ F = make_fan(3, {rays});
    VertexFanSpec vf;
    vf.poly = poly;
    vf.vertex = vert;
    vf.fan = F;
    vf.corner_to_cone = {{{poly, vert}, fan_cone_by_rays(F, rays)}};
    S.fans.push_back(vf);
  };
  auto shared = [&](size_t v0, size_t v1, std::vector<Vec> c0,
                    std::vector<Vec> c1) {
    std::vector<std::vector<Vec>> cones = {c0, c1};
    FanZ F = make_fan(3, cones);
    VertexFanSpec vf;
    vf.poly = 0;
    vf.vertex = v0;
    vf.fan = F;
    vf.corner_to_cone = {{{0, v0}, fan_cone_by_rays(F, c0)},
                         {{1, v1}, fan_cone_by_rays(F, c1)}};
    S.fans.push_back(vf);
  };
  // shared square vertices
  shared(0, 2, {v3(1, 0, 0), v3(0, 1, 0), v3(0, 0, 1)},
         {v3(0, 1, 0), v3(-1, 1, 0), v3(0, 0, 1)});  // (0,0,0), flat
  shared(1, 3, {v3(1, 0, 0), v3(0, 1, 0), v3(0, 0, -1)},
         {v3(0, 1, 0), v3(-1, 1, 0), v3(0, 0, -1)});  // (0,0,1), flat
  shared(2, 4, {v3(0, -1, 0), v3(1, -1, 0), v3(0, 0, 1)},
         {v3(0, -1, 0), v3(-1, 1, 0), v3(0, 0, 1)});  // (0,1,0), sheared
  shared(3, 5, {v3(0, -1, 0), v3(1, -1, 0), v3(0, 0, -1)},
         {v3(0, -1, 0), v3(-1, 1, 0), v3(0, 0, -1)});  // (0,1,1), sheared
  // outer vertices
  single(0, 4, {v3(-1, 0, 0), v3(-1, 1, 0), v3(0, 0, 1)});   // (1,0,0)
  single(0, 5, {v3(-1, 0, 0), v3(-1, 1, 0), v3(0, 0, -1)});  // (1,0,1)
  single(1, 0, {v3(1, -1, 0), v3(1, 0, 0), v3(0, 0, 1)});    // (-1,1,0)
  single(1, 1, {v3(1, -1, 0), v3(1, 0, 0), v3(0, 0, -1)});   // (-1,1,1)
  // The shared vertices sit on the boundary, where the cone automorphisms
  // leave the wedge isomorphisms underdetermined; pin the intended ones.
  IntMat id3 = AffMapZ::identity(3).linear;
  IntMat shear = IntMat::from_columns(
      {v3(1, -1, 0), v3(0, 1, 0), v3(0, 0, 1)});
  S.pinned_wedge_iso[{0, 0}] = id3;
  S.pinned_wedge_iso[{1, 2}] = id3;
  S.pinned_wedge_iso[{0, 1}] = id3;
  S.pinned_wedge_iso[{1, 3}] = id3;
  S.pinned_wedge_iso[{0, 2}] = id3;
  S.pinned_wedge_iso[{1, 4}] = shear;
  S.pinned_wedge_iso[{0, 3}] = id3;
  S.pinned_wedge_iso[{1, 5}] = shear;
  return S;
}

// ---------------------------------------------------------------------------
// Two hexagonal prisms sharing the hexagon z = 0, with the vertex structure
// at each shared vertex v twisted so that crossing the hexagon through v
// shears by z * v.  Going around a boundary edge of the hexagon picks up the
// unit shear along that edge's direction: each of the six edges carries a
// primitive positive monodromy invariant.
// ---------------------------------------------------------------------------
inline ComplexSpec hexagon_model() {
  ComplexSpec S;
  S.dim = 3;
  S.allow_boundary = true;
  const std::vector<Vec> hex = {v2(1, 0),  v2(1, 1),   v2(0, 1),
                                v2(-1, 0), v2(-1, -1), v2(0, -1)};
  auto lift = [&](int z) {
    std::vector<Vec> out;
    for (auto& h : hex) out.push_back(v3(int(h[0]), int(h[1]), z));
    return out;
  };
  auto prism = [&](int zlo, int zhi) {
    std::vector<Vec> vs = lift(zlo);
    auto up = lift(zhi);
    vs.insert(vs.end(), up.begin(), up.end());
    return make_polytope(3, vs);
  };
  auto P0 = prism(-1, 0), P1 = prism(0, 1);
  S.polytopes = {P0, P1};
  auto index_of = [&](const LatticePolytope& P, const Vec& v) -> size_t {
    for (size_t i = 0; i < P.vertices.size(); ++i)
      if (P.vertices[i] == v) return i;
    throw std::logic_error("hexagon_model: vertex not found");
  };
  {
    Identification id;
    id.poly_from = 0;
    id.poly_to = 1;
    for (auto& h : hex) {
      Vec v = v3(int(h[0]), int(h[1]), 0);
      id.verts_from.push_back(index_of(P0, v));
      id.verts_to.push_back(index_of(P1, v));
    }
    id.map = AffMapZ::identity(3);
    S.identifications.push_back(id);
  }
  // Hexagon corner directions (to the two neighbours), per corner index.
  auto corner_dirs = [&](size_t k) {
    Vec a = hex[(k + 1) % 6], b = hex[(k + 5) % 6];
    return std::pair<Vec, Vec>(
        v3(int(a[0] - hex[k][0]), int(a[1] - hex[k][1]), 0),
        v3(int(b[0] - hex[k][0]), int(b[1] - hex[k][1]), 0));
  };
  for (size_t k = 0; k < 6; ++k) {
    auto [d1, d2] = corner_dirs(k);
    Vec v = hex[k];
    {  // shared vertex (v, 0): flat above, twisted below
      std::vector<Vec> up = {d1, d2, v3(0, 0, 1)};
      std::vector<Vec> dn = {d1, d2, v3(int(v[0]), int(v[1]), -1)};
      FanZ F = make_fan(3, {up, dn});
      VertexFanSpec vf;
      vf.poly = 0;
      vf.vertex = index_of(P0, v3(int(v[0]), int(v[1]), 0));
      vf.fan = F;
      vf.corner_to_cone = {
          {{0, index_of(P0, v3(int(v[0]), int(v[1]), 0))},
           fan_cone_by_rays(F, dn)},
          {{1, index_of(P1, v3(int(v[0]), int(v[1]), 0))},
           fan_cone_by_rays(F, up)}};
      S.fans.push_back(vf);
      // boundary vertex: pin the intended wedge isomorphisms
      S.pinned_wedge_iso[{1, index_of(P1, v3(int(v[0]), int(v[1]), 0))}] =
          AffMapZ::identity(3).linear;
      S.pinned_wedge_iso[{0, index_of(P0, v3(int(v[0]), int(v[1]), 0))}] =
          IntMat::from_columns(
              {v3(1, 0, 0), v3(0, 1, 0), v3(-int(v[0]), -int(v[1]), 1)});
    }
    {  // outer vertex (v, -1)
      std::vector<Vec> c = {d1, d2, v3(0, 0, 1)};
      FanZ F = make_fan(3, {c});
      VertexFanSpec vf;
      vf.poly = 0;
      vf.vertex = index_of(P0, v3(int(v[0]), int(v[1]), -1));
      vf.fan = F;
      vf.corner_to_cone = {{{0, vf.vertex}, fan_cone_by_rays(F, c)}};
      S.fans.push_back(vf);
    }
    {  // outer vertex (v, 1)
      std::vector<Vec> c = {d1, d2, v3(0, 0, -1)};
      FanZ F = make_fan(3, {c});
      VertexFanSpec vf;
      vf.poly = 1;
      vf.vertex = index_of(P1, v3(int(v[0]), int(v[1]), 1));
      vf.fan = F;
      vf.corner_to_cone = {{{1, vf.vertex}, fan_cone_by_rays(F, c)}};
      S.fans.push_back(vf);
    }
  }
  return S;
}

}  // namespace fixtures
}  // namespace afw
