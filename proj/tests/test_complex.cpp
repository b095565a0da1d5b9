#include <catch2/catch_amalgamated.hpp>

#include "afw/fixtures.hpp"

using namespace afw;
using namespace afw::fixtures;

static std::vector<size_t> cells_of_dim(const AffineComplex& cx, int d) {
  std::vector<size_t> out;
  for (size_t i = 0; i < cx.n_cells; ++i)
    if (cx.cell_dim[i] == d) out.push_back(i);
  return out;
}

TEST_CASE("torus: cells, germs, discriminant") {
  auto cx = build_complex(torus());
  CHECK(cells_of_dim(cx, 0).size() == 1);
  CHECK(cells_of_dim(cx, 1).size() == 2);
  CHECK(cells_of_dim(cx, 2).size() == 1);
  size_t v = cells_of_dim(cx, 0)[0];
  size_t sq = cells_of_dim(cx, 2)[0];
  CHECK(cx.hom_set(v, sq).size() == 4);  // four corner germs
  for (size_t e : cells_of_dim(cx, 1))
    CHECK(cx.hom_set(e, sq).size() == 2);
  CHECK(cx.hom_set(sq, sq).size() == 1);  // identity only
  CHECK(cx.delta_prime.size() == 2);      // two edge barycenters
  CHECK(cx.delta.empty());                // flat: no singular points
  CHECK_FALSE(cx.has_boundary);
  CHECK(validate_toric(cx).toric);
}

TEST_CASE("torus: flat holonomy everywhere") {
  auto cx = build_complex(torus());
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    auto H = cx.holonomy(cx.identity_morphism(cell));
    for (const auto& g : H.generators) {
      CHECK(g.linear.is_identity());
      CHECK(is_zero(g.translation));
    }
  }
}

TEST_CASE("torus: maximal pairs") {
  auto cx = build_complex(torus());
  size_t sq = cells_of_dim(cx, 2)[0];
  auto pairs = maximal_pairs(cx, sq, sq);
  CHECK(pairs.size() == 9);  // diagonal + 4 edge pairs + 4 vertex pairs
  size_t diag = 0, edgep = 0, vertp = 0;
  for (const auto& mp : pairs) {
    size_t tau = cx.chain_cells[mp.maximal_nodes.front().first][0];
    int d = cx.cell_dim[tau];
    if (d == 2) ++diag;
    if (d == 1) ++edgep;
    if (d == 0) ++vertp;
  }
  CHECK(diag == 1);
  CHECK(edgep == 4);
  CHECK(vertp == 4);
  // The isolated vertex pairs are the opposite-corner ones: their
  // identification maps one corner of the square to the opposite corner.
  for (const auto& mp : pairs) {
    size_t tau = cx.chain_cells[mp.maximal_nodes.front().first][0];
    if (cx.cell_dim[tau] != 0) continue;
    CHECK(mp.germ_pairs.size() == 1);
  }
}

TEST_CASE("circle R/nZ") {
  for (int k : {1, 3}) {
    auto cx = build_complex(circle(k));
    CHECK(cells_of_dim(cx, 0).size() == 1);
    CHECK(cells_of_dim(cx, 1).size() == 1);
    size_t v = cells_of_dim(cx, 0)[0];
    size_t e = cells_of_dim(cx, 1)[0];
    CHECK(cx.hom_set(v, e).size() == 2);
    CHECK(cx.delta.empty());
    CHECK(validate_toric(cx).toric);
  }
}

TEST_CASE("quartic: combinatorics of the tetrahedron boundary") {
  auto cx = build_complex(quartic());
  CHECK(cells_of_dim(cx, 0).size() == 4);
  CHECK(cells_of_dim(cx, 1).size() == 6);
  CHECK(cells_of_dim(cx, 2).size() == 4);
  // Hom(vertex, facet): one morphism per incident facet (3 per vertex).
  for (size_t v : cells_of_dim(cx, 0)) {
    size_t total = 0;
    for (size_t s : cells_of_dim(cx, 2)) total += cx.hom_set(v, s).size();
    CHECK(total == 3);
  }
  for (size_t e : cells_of_dim(cx, 1)) {
    size_t total = 0;
    for (size_t s : cells_of_dim(cx, 2)) total += cx.hom_set(e, s).size();
    CHECK(total == 2);
  }
}

TEST_CASE("quartic: six singular points, toric, unipotent monodromy") {
  auto cx = build_complex(quartic());
  CHECK(cx.delta_prime.size() == 6);
  CHECK(cx.delta.size() == 6);
  CHECK(validate_toric(cx).toric);
  for (size_t e : cells_of_dim(cx, 1)) {
    auto H = cx.holonomy(cx.identity_morphism(e));
    REQUIRE(H.generators.size() == 1);
    const auto& T = H.generators[0].linear;
    // unipotent, nontrivial: trace 2, det 1
    CHECK(T(0, 0) + T(1, 1) == 2);
    CHECK(det(T) == 1);
    CHECK_FALSE(T.is_identity());
  }
}

TEST_CASE("focus-focus disk: one singular point") {
  auto cx = build_complex(focus_focus());
  CHECK(cx.has_boundary);
  CHECK(cells_of_dim(cx, 0).size() == 4);
  CHECK(cells_of_dim(cx, 1).size() == 5);
  CHECK(cells_of_dim(cx, 2).size() == 2);
  CHECK(cx.delta_prime.size() == 5);
  REQUIRE(cx.delta.size() == 1);
  // The singular edge is the shared diagonal: both maximal germs.
  size_t sing = cx.chain_cells[cx.delta[0]][0];
  size_t total = 0;
  for (size_t s : cells_of_dim(cx, 2)) total += cx.hom_set(sing, s).size();
  CHECK(total == 2);
  // Monodromy is a unit shear (conjugate to [[1,1],[0,1]]).
  auto H = cx.holonomy(cx.identity_morphism(sing));
  REQUIRE(H.generators.size() == 1);
  const auto& T = H.generators[0].linear;
  CHECK(T(0, 0) + T(1, 1) == 2);
  CHECK(det(T) == 1);
  CHECK_FALSE(T.is_identity());
  CHECK(validate_toric(cx).toric);
}

TEST_CASE("composition is the third edge of the 2-simplex") {
  auto cx = build_complex(quartic());
  for (size_t v : cells_of_dim(cx, 0))
    for (size_t e : cells_of_dim(cx, 1))
      for (size_t g : cx.hom_set(v, e))
        for (size_t s : cells_of_dim(cx, 2))
          for (size_t m : cx.hom_set(e, s)) {
            size_t comp = cx.compose(g, m);
            CHECK(cx.chain_cells[comp][0] == v);
            CHECK(cx.chain_cells[comp].back() == s);
          }
}

TEST_CASE("corrupted fan structure is rejected as non-toric") {
  auto S = focus_focus();
  // Assign both corners at the sheared vertex to the same cone; the only
  // consistent wedge identifications are then orientation-reversing, and the
  // loop around the singular point violates toricity.
  for (auto& vf : S.fans) {
    if (vf.corner_to_cone.size() != 2) continue;
    // find the sheared vertex class: its fan contains the ray (0,-1)
    bool is_sheared = false;
    for (const auto& r : vf.fan.rays)
      if (r == v2(0, -1)) is_sheared = true;
    if (!is_sheared) continue;
    size_t cone0 = fan_cone_by_rays(vf.fan, {v2(0, -1), v2(1, -1)});
    for (auto& [corner, cone] : vf.corner_to_cone) cone = cone0;
  }
  auto cx = build_complex(S);
  auto rep = validate_toric(cx);
  CHECK_FALSE(rep.toric);
  CHECK_FALSE(rep.witness.empty());
}

TEST_CASE("builder rejects bad input") {
  // Non-unimodular identification.
  {
    auto S = torus();
    S.identifications[0].map.linear = IntMat(2, 2, {Int(2), Int(0), Int(0),
                                                    Int(1)});
    CHECK_THROWS_AS(build_complex(S), ComplexError);
  }
  // Missing fan.
  {
    auto S = torus();
    S.fans.clear();
    CHECK_THROWS_AS(build_complex(S), ComplexError);
  }
  // Dangling codimension-1 face without boundary permission.
  {
    auto S = focus_focus();
    S.allow_boundary = false;
    CHECK_THROWS_AS(build_complex(S), ComplexError);
  }
}

TEST_CASE("holonomy fixes flags pointwise and has trivial translation") {
  for (auto spec : {torus(), quartic()}) {
    auto cx = build_complex(spec);
    for (size_t cell = 0; cell < cx.n_cells; ++cell) {
      size_t flag = cx.identity_morphism(cell);
      auto H = cx.holonomy(flag);
      if (H.nodes.empty()) continue;
      const LocalChain& rep = cx.chain_reps[H.base_node];
      const auto& P = cx.spec.polytopes[rep.poly];
      for (const auto& g : H.generators)
        for (size_t a : P.faces[rep.faces[0]].verts)
          CHECK(g.apply(P.vertices[a]) == P.vertices[a]);
    }
  }
}
