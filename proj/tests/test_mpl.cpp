#include <catch2/catch_amalgamated.hpp>

#include "afw/fixtures.hpp"
#include "afw/mpl.hpp"

using namespace afw;
using namespace afw::fixtures;

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

// Ray coefficients keyed by edge germ, from a function of the ray vector.
static std::map<size_t, Int> ray_coeffs(const AffineComplex& cx,
                                        std::function<Int(const Vec&)> f) {
  std::map<size_t, Int> out;
  for (size_t c = 0; c < cx.n_chains; ++c) {
    if (cx.chain_len(c) != 2) continue;
    if (cx.cell_dim[cx.chain_cells[c][0]] != 0) continue;
    if (cx.cell_dim[cx.chain_cells[c][1]] != 1) continue;
    size_t v = cx.chain_cells[c][0];
    const FanZ& F = cx.spec.fans[cx.fan_of_vertex_class[v]].fan;
    size_t cone = cx.germ_cone.at(c);
    REQUIRE(F.cones[cone].size() == 1);
    out[c] = f(F.rays[F.cones[cone][0]]);
  }
  return out;
}

// The maximal vertex germ at vertex class v whose fan cone has the given rays.
static size_t germ_by_rays(const AffineComplex& cx, size_t v,
                           std::vector<Vec> rays) {
  const FanZ& F = cx.spec.fans[cx.fan_of_vertex_class[v]].fan;
  size_t cone = fan_cone_by_rays(F, std::move(rays));
  for (size_t e : maximal_germs(cx, v))
    if (cx.germ_cone.at(e) == cone) return e;
  throw std::logic_error("germ_by_rays: no germ on that cone");
}

static std::vector<size_t> cells_of_dim(const AffineComplex& cx, int d) {
  std::vector<size_t> out;
  for (size_t i = 0; i < cx.n_cells; ++i)
    if (cx.cell_dim[i] == d) out.push_back(i);
  return out;
}

// Divide all polytope vertices and identification translations by d.
static ComplexSpec rescale_spec(const ComplexSpec& S, const Int& d) {
  ComplexSpec R = S;
  R.polytopes.clear();
  for (const auto& P : S.polytopes) {
    std::vector<Vec> vs;
    for (const auto& v : P.vertices) {
      Vec w(v.size());
      for (size_t i = 0; i < v.size(); ++i) {
        REQUIRE(v[i] % d == 0);
        w[i] = v[i] / d;
      }
      vs.push_back(w);
    }
    R.polytopes.push_back(make_polytope(P.ambient_rank, vs));
  }
  for (auto& id : R.identifications)
    for (auto& t : id.map.translation) {
      REQUIRE(t % d == 0);
      t /= d;
    }
  return R;
}

static std::multiset<Int> rep_set(size_t n, const Int& v) {
  std::multiset<Int> out;
  for (size_t i = 0; i < n; ++i) out.insert(v);
  return out;
}

static std::multiset<Int> edge_c_values(const AffineComplex& cx) {
  auto atlas = edge_invariants(cx);
  std::multiset<Int> out;
  for (const auto& e : atlas.edges) out.insert(e.c);
  return out;
}

// ---------------------------------------------------------------------------
// Validation on the flat torus
// ---------------------------------------------------------------------------

TEST_CASE("globally linear slopes are convex but not strictly convex") {
  auto cx = build_complex(torus());
  MPLFunction phi;
  for (size_t e : maximal_vertex_germ_classes(cx)) phi.slope[e] = v2(2, 3);
  MPLReport rep = mpl_validate(cx, phi);
  CHECK(rep.continuity);
  CHECK(rep.integrality);
  CHECK(rep.convexity);
  CHECK_FALSE(rep.strict_convexity);

  for (size_t rho : cells_of_dim(cx, 1)) CHECK(mpl_kink(cx, phi, rho) == 0);

  auto W = cech_W_complex(cx, WSheaf::LambdaCheck);
  Vec a = c1_cochain(cx, phi, W);
  CHECK(is_coboundary(W, 1, a));

  CHECK_THROWS_AS(discrete_legendre(cx, phi), NotStrictlyConvexError);
}

TEST_CASE("unit-kink function on the torus from ray coefficients") {
  auto cx = build_complex(torus());
  auto phi = mpl_from_polarization(cx, ray_coeffs(cx, [](const Vec& r) {
                                     return Int((r[0] > 0) + (r[1] > 0));
                                   }));
  // a(1,0)=1, a(0,1)=1, a(-1,0)=0, a(0,-1)=0.
  size_t v = cells_of_dim(cx, 0)[0];
  CHECK(phi.slope.at(germ_by_rays(cx, v, {v2(1, 0), v2(0, 1)})) == v2(1, 1));
  CHECK(phi.slope.at(germ_by_rays(cx, v, {v2(-1, 0), v2(0, 1)})) == v2(0, 1));
  CHECK(phi.slope.at(germ_by_rays(cx, v, {v2(-1, 0), v2(0, -1)})) == v2(0, 0));
  CHECK(phi.slope.at(germ_by_rays(cx, v, {v2(1, 0), v2(0, -1)})) == v2(1, 0));

  MPLReport rep = mpl_validate(cx, phi);
  CHECK(rep.continuity);
  CHECK(rep.convexity);
  CHECK(rep.strict_convexity);

  for (size_t rho : cells_of_dim(cx, 1)) CHECK(mpl_kink(cx, phi, rho) == 1);

  auto W = cech_W_complex(cx, WSheaf::LambdaCheck);
  Vec a = c1_cochain(cx, phi, W);
  CHECK(is_cocycle(W, 1, a));
  CHECK_FALSE(is_coboundary(W, 1, a));

  // Equality modulo a linear function per vertex.
  MPLFunction shifted;
  for (const auto& [e, s] : phi.slope)
    shifted.slope[e] = vec_add(s, v2(5, -2));
  CHECK(mpl_equal(cx, phi, shifted));
  CHECK(mpl_equal(cx, shifted, phi));

  auto ones = mpl_from_polarization(
      cx, ray_coeffs(cx, [](const Vec&) { return Int(1); }));
  CHECK_FALSE(mpl_equal(cx, phi, ones));
}

TEST_CASE("polarization coefficients act additively") {
  auto cx = build_complex(torus());
  auto a1 = ray_coeffs(cx, [](const Vec& r) {
    return Int(r[0] == 1 ? 1 : 0) + Int(r[1] == 1 ? 1 : 0);
  });
  auto a2 = ray_coeffs(cx, [](const Vec& r) {
    return Int(r[0] == -1 ? 1 : 0) + Int(r[1] == -1 ? 1 : 0);
  });
  auto sum = a1;
  for (auto& [g, c] : sum) c += a2.at(g);
  auto p1 = mpl_from_polarization(cx, a1);
  auto p2 = mpl_from_polarization(cx, a2);
  auto ps = mpl_from_polarization(cx, sum);
  for (const auto& [e, s] : ps.slope)
    CHECK(s == vec_add(p1.slope.at(e), p2.slope.at(e)));
  for (size_t rho : cells_of_dim(cx, 1)) CHECK(mpl_kink(cx, ps, rho) == 2);
}

TEST_CASE("discontinuous slopes are reported and rejected") {
  auto cx = build_complex(torus());
  size_t v = cells_of_dim(cx, 0)[0];
  MPLFunction phi;
  for (size_t e : maximal_vertex_germ_classes(cx)) phi.slope[e] = v2(0, 0);
  phi.slope[germ_by_rays(cx, v, {v2(1, 0), v2(0, 1)})] = v2(1, 1);
  MPLReport rep = mpl_validate(cx, phi);
  CHECK_FALSE(rep.continuity);
  CHECK_FALSE(rep.convexity);
  CHECK_FALSE(rep.strict_convexity);
  CHECK_FALSE(rep.witness.empty());
  CHECK_THROWS_AS(discrete_legendre(cx, phi), DiscontinuousError);
}

TEST_CASE("transform requires a compact complex") {
  auto cx = build_complex(focus_focus());
  CHECK_THROWS_AS(discrete_legendre(cx, MPLFunction{}), NonCompactError);
}

// ---------------------------------------------------------------------------
// Discrete Legendre transform: flat torus
// ---------------------------------------------------------------------------

static MPLFunction torus_unit_kink(const AffineComplex& cx) {
  return mpl_from_polarization(cx, ray_coeffs(cx, [](const Vec& r) {
                                 return Int((r[0] > 0) + (r[1] > 0));
                               }));
}

TEST_CASE("the unit-kink torus is self-dual") {
  auto cx = build_complex(torus());
  auto phi = torus_unit_kink(cx);
  LegendreOutput out = discrete_legendre(cx, phi);

  CHECK(out.dual.n_cells == cx.n_cells);
  CHECK(cells_of_dim(out.dual, 0).size() == 1);
  CHECK(cells_of_dim(out.dual, 1).size() == 2);
  CHECK(cells_of_dim(out.dual, 2).size() == 1);
  for (size_t tau = 0; tau < cx.n_cells; ++tau)
    CHECK(out.dual.cell_dim[out.cell_to_dual[tau]] ==
          int(cx.n) - cx.cell_dim[tau]);

  ComplexIso iso = find_complex_isomorphism(out.dual, cx);
  CHECK(iso.found);
  CHECK(mpl_isomorphic(out.dual, out.phi_check, cx, phi));
  CHECK(legendre_involution_check(cx, phi));

  // Flatness is preserved.
  auto cvals = edge_c_values(out.dual);
  CHECK(cvals == std::multiset<Int>{Int(0), Int(0)});

  CHECK(c1_matches_dual_radiance(cx, phi, out));
}

// ---------------------------------------------------------------------------
// Discrete Legendre transform: quartic
// ---------------------------------------------------------------------------

static MPLFunction quartic_unit_kink(const AffineComplex& cx) {
  // a = 1 on the (-1,-1) ray of every vertex fan, 0 on the others.
  return mpl_from_polarization(cx, ray_coeffs(cx, [](const Vec& r) {
                                 return Int(r[0] == -1 && r[1] == -1 ? 1 : 0);
                               }));
}

TEST_CASE("unit-kink function on the quartic complex") {
  auto cx = build_complex(quartic());
  auto phi = quartic_unit_kink(cx);
  MPLReport rep = mpl_validate(cx, phi);
  CHECK(rep.continuity);
  CHECK(rep.convexity);
  CHECK(rep.strict_convexity);
  auto edges = cells_of_dim(cx, 1);
  CHECK(edges.size() == 6);
  for (size_t rho : edges) CHECK(mpl_kink(cx, phi, rho) == 1);

  auto W = cech_W_complex(cx, WSheaf::LambdaCheck);
  Vec a = c1_cochain(cx, phi, W);
  CHECK(is_cocycle(W, 1, a));
  CHECK_FALSE(is_coboundary(W, 1, a));
}

TEST_CASE("transform of the quartic preserves the edge invariants") {
  auto cx = build_complex(quartic());
  auto phi = quartic_unit_kink(cx);
  LegendreOutput out = discrete_legendre(cx, phi);

  CHECK(cells_of_dim(out.dual, 0).size() == 4);
  CHECK(cells_of_dim(out.dual, 1).size() == 6);
  CHECK(cells_of_dim(out.dual, 2).size() == 4);

  // Every dual edge carries the same total charge 4; the (n, m) tables swap.
  auto cin = edge_c_values(cx);
  auto cout = edge_c_values(out.dual);
  CHECK(cin == rep_set(6, Int(4)));
  CHECK(cout == cin);

  // Monodromy-invariant cohomology is exchanged between tangent and
  // cotangent coefficients.
  auto WL1 = cech_W_complex(cx, WSheaf::Lambda);
  auto WC1 = cech_W_complex(cx, WSheaf::LambdaCheck);
  auto WL2 = cech_W_complex(out.dual, WSheaf::Lambda);
  auto WC2 = cech_W_complex(out.dual, WSheaf::LambdaCheck);
  for (size_t i = 0; i <= 2; ++i) {
    CHECK(cohomology_Z(WL1.C, i).rank == cohomology_Z(WC2.C, i).rank);
    CHECK(cohomology_Z(WC1.C, i).rank == cohomology_Z(WL2.C, i).rank);
    CHECK(cohomology_Z(WL1.C, i).torsion == cohomology_Z(WC2.C, i).torsion);
    CHECK(cohomology_Z(WC1.C, i).torsion == cohomology_Z(WL2.C, i).torsion);
  }

  CHECK(legendre_involution_check(cx, phi));
  CHECK(c1_matches_dual_radiance(cx, phi, out));
}

// ---------------------------------------------------------------------------
// Boundaries of reflexive polytopes
// ---------------------------------------------------------------------------

TEST_CASE("boundary of the square is a flat circle with four charts") {
  auto Xi = make_polytope(2, {v2(-1, -1), v2(1, -1), v2(-1, 1), v2(1, 1)});
  auto spec = build_reflexive_boundary(Xi);
  CHECK(spec.dim == 1);
  CHECK(spec.polytopes.size() == 4);
  auto cx = build_complex(spec);
  CHECK(cells_of_dim(cx, 0).size() == 4);
  CHECK(cells_of_dim(cx, 1).size() == 4);
  CHECK_FALSE(cx.has_boundary);

  // Flat circle: constant and tangent cohomology of S^1.
  auto WZ = cech_W_complex(cx, WSheaf::ConstZ);
  CHECK(cohomology_Z(WZ.C, 0).rank == 1);
  CHECK(cohomology_Z(WZ.C, 1).rank == 1);
  auto WL = cech_W_complex(cx, WSheaf::Lambda);
  CHECK(cohomology_Z(WL.C, 0).rank == 1);
  CHECK(cohomology_Z(WL.C, 1).rank == 1);
}

TEST_CASE("square and diamond boundaries are exchanged by the transform") {
  auto sq = build_complex(build_reflexive_boundary(
      make_polytope(2, {v2(-1, -1), v2(1, -1), v2(-1, 1), v2(1, 1)})));
  auto dm = build_complex(build_reflexive_boundary(
      make_polytope(2, {v2(1, 0), v2(0, 1), v2(-1, 0), v2(0, -1)})));
  // Symmetric coefficients a = 1 on both rays of every vertex: each Newton
  // segment has lattice length 2, so the transform reproduces the square
  // boundary itself.
  auto phi2 = mpl_from_polarization(
      sq, ray_coeffs(sq, [](const Vec&) { return Int(1); }));
  CHECK(mpl_validate(sq, phi2).strict_convexity);
  LegendreOutput out2 = discrete_legendre(sq, phi2);
  CHECK(find_complex_isomorphism(out2.dual, sq).found);
  CHECK_FALSE(find_complex_isomorphism(out2.dual, dm).found);
  CHECK(legendre_involution_check(sq, phi2));
  CHECK(c1_matches_dual_radiance(sq, phi2, out2));

  // Kink-1 coefficients (1 on one ray, 0 on the other, per vertex): Newton
  // segments of length 1, and the transform yields the diamond boundary.
  std::map<size_t, Int> asym;
  for (size_t v = 0; v < sq.n_cells; ++v) {
    if (sq.cell_dim[v] != 0) continue;
    auto germs = maximal_germs(sq, v);
    REQUIRE(germs.size() == 2);
    asym[germs[0]] = 1;
    asym[germs[1]] = 0;
  }
  auto phi1 = mpl_from_polarization(sq, asym);
  CHECK(mpl_validate(sq, phi1).strict_convexity);
  for (size_t v = 0; v < sq.n_cells; ++v)
    if (sq.cell_dim[v] == 0) CHECK(mpl_kink(sq, phi1, v) == 1);
  LegendreOutput out1 = discrete_legendre(sq, phi1);
  CHECK(find_complex_isomorphism(out1.dual, dm).found);
  CHECK_FALSE(find_complex_isomorphism(out1.dual, sq).found);
  CHECK(legendre_involution_check(sq, phi1));
  CHECK(c1_matches_dual_radiance(sq, phi1, out1));

  // The first Chern class of an ample function on the circle is nonzero.
  auto W = cech_W_complex(sq, WSheaf::LambdaCheck);
  Vec a = c1_cochain(sq, phi1, W);
  CHECK_FALSE(is_coboundary(W, 1, a));
}

TEST_CASE("boundary of the reflexive 3-simplex is the rescaled quartic") {
  auto Xi = make_polytope(
      3, {v3(-1, -1, -1), v3(3, -1, -1), v3(-1, 3, -1), v3(-1, -1, 3)});
  auto spec = build_reflexive_boundary(Xi);
  CHECK(spec.polytopes.size() == 4);
  auto cx = build_complex(spec);
  CHECK(cells_of_dim(cx, 0).size() == 4);
  CHECK(cells_of_dim(cx, 1).size() == 6);
  CHECK(cells_of_dim(cx, 2).size() == 4);
  CHECK(edge_c_values(cx) == rep_set(6, Int(4)));

  auto small = build_complex(rescale_spec(spec, Int(4)));
  CHECK(find_complex_isomorphism(small, build_complex(quartic())).found);
}

TEST_CASE("boundary of the octahedron and its antipodal quotient") {
  auto Xi = make_polytope(3, {v3(1, 0, 0), v3(-1, 0, 0), v3(0, 1, 0),
                              v3(0, -1, 0), v3(0, 0, 1), v3(0, 0, -1)});
  auto cx = build_complex(build_reflexive_boundary(Xi));
  CHECK(cells_of_dim(cx, 0).size() == 6);
  CHECK(cells_of_dim(cx, 1).size() == 12);
  CHECK(cells_of_dim(cx, 2).size() == 8);
  CHECK(edge_c_values(cx) == rep_set(12, Int(2)));

  auto qx = build_complex(build_reflexive_boundary_quotient(Xi));
  CHECK(find_complex_isomorphism(qx, build_complex(enriques())).found);
}

TEST_CASE("non-reflexive polytopes are rejected") {
  CHECK_THROWS_AS(build_reflexive_boundary(
                      make_polytope(2, {v2(0, 0), v2(1, 0), v2(0, 1),
                                        v2(1, 1)})),
                  NotReflexiveError);
  CHECK_THROWS_AS(build_reflexive_boundary(
                      make_polytope(2, {v2(-2, -2), v2(2, -2), v2(-2, 2),
                                        v2(2, 2)})),
                  NotReflexiveError);
  CHECK_THROWS_AS(build_reflexive_boundary(
                      make_polytope(2, {v2(0, 0), v2(4, 0), v2(0, 4)})),
                  NotReflexiveError);
}

TEST_CASE("boundary of the reflexive triangle") {
  auto Xi = make_polytope(2, {v2(-1, -1), v2(2, -1), v2(-1, 2)});
  auto cx = build_complex(build_reflexive_boundary(Xi));
  CHECK(cells_of_dim(cx, 0).size() == 3);
  CHECK(cells_of_dim(cx, 1).size() == 3);
  auto phi = mpl_from_polarization(
      cx, ray_coeffs(cx, [](const Vec&) { return Int(1); }));
  CHECK(mpl_validate(cx, phi).strict_convexity);
  CHECK(legendre_involution_check(cx, phi));
}
