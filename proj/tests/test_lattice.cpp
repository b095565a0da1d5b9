#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "afw/lattice.hpp"

using namespace afw;

static Vec V2(int a, int b) { return Vec{Int(a), Int(b)}; }
static Vec V3(int a, int b, int c) { return Vec{Int(a), Int(b), Int(c)}; }

TEST_CASE("primitive normalization") {
  CHECK(primitive(V2(2, 4)) == V2(1, 2));
  CHECK(primitive(V2(-2, 4)) == V2(1, -2));
  CHECK(primitive(V2(0, -6)) == V2(0, 1));
  CHECK(primitive(V2(0, 0)) == V2(0, 0));
  CHECK(primitive_directed(V2(-2, 4)) == V2(-1, 2));
}

TEST_CASE("determinant") {
  CHECK(det(IntMat::identity(3)) == 1);
  IntMat m(2, 2, {Int(1), Int(2), Int(3), Int(4)});
  CHECK(det(m) == -2);
  IntMat s(3, 3, {Int(2), Int(0), Int(0), Int(0), Int(3), Int(0), Int(0),
                  Int(0), Int(5)});
  CHECK(det(s) == 30);
  IntMat sing(2, 2, {Int(1), Int(2), Int(2), Int(4)});
  CHECK(det(sing) == 0);
}

TEST_CASE("smith normal form: U*A*V = D with divisibility chain") {
  auto check = [](const IntMat& A) {
    SNF s = smith_normal_form(A);
    CHECK(mat_mul(mat_mul(s.U, A), s.V) == s.D);
    Int du = det(s.U), dv = det(s.V);
    CHECK((du == 1 || du == -1));
    CHECK((dv == 1 || dv == -1));
    size_t r = std::min(s.D.rows, s.D.cols);
    for (size_t i = 0; i < s.D.rows; ++i)
      for (size_t j = 0; j < s.D.cols; ++j)
        if (i != j) CHECK(s.D(i, j) == 0);
    for (size_t i = 0; i < r; ++i) CHECK(s.D(i, i) >= 0);
    for (size_t i = 0; i + 1 < r; ++i) {
      if (s.D(i + 1, i + 1) != 0) {
        REQUIRE(s.D(i, i) != 0);
        CHECK(s.D(i + 1, i + 1) % s.D(i, i) == 0);
      }
    }
    return s;
  };

  check(IntMat::identity(4));
  check(IntMat(2, 3, {Int(2), Int(4), Int(4), Int(-6), Int(6), Int(12)}));
  check(IntMat(3, 3, {Int(2), Int(0), Int(0), Int(0), Int(2), Int(0), Int(0),
                      Int(0), Int(2)}));
  check(IntMat(3, 2, {Int(6), Int(4), Int(10), Int(4), Int(2), Int(8)}));
  // A classic: invariant factors of diag(2,3) are (1,6).
  SNF s = check(IntMat(2, 2, {Int(2), Int(0), Int(0), Int(3)}));
  CHECK(s.D(0, 0) == 1);
  CHECK(s.D(1, 1) == 6);

  // Randomized property test.
  std::mt19937 rng(12345);
  for (int trial = 0; trial < 60; ++trial) {
    size_t m = 1 + rng() % 4, n = 1 + rng() % 4;
    IntMat A(m, n);
    for (auto& x : A.a) x = int(rng() % 21) - 10;
    check(A);
  }
}

TEST_CASE("invariant factors") {
  IntMat A(2, 2, {Int(2), Int(0), Int(0), Int(4)});
  auto f = invariant_factors(A);
  REQUIRE(f.size() == 2);
  CHECK(f[0] == 2);
  CHECK(f[1] == 4);
}

TEST_CASE("integer kernel") {
  // Kernel of [1 2 3] is rank 2; members must satisfy the equation.
  IntMat A(1, 3, {Int(1), Int(2), Int(3)});
  auto ker = integer_kernel(A);
  REQUIRE(ker.size() == 2);
  for (const auto& k : ker) CHECK(is_zero(mat_apply(A, k)));
  // (1,-2,1) must be an integer combination of the basis: saturation check.
  IntMat K = IntMat::from_columns(ker);
  CHECK(solve_integral(K, V3(1, -2, 1)).has_value());

  // Full-rank square matrix: trivial kernel.
  IntMat B(2, 2, {Int(1), Int(1), Int(0), Int(1)});
  CHECK(integer_kernel(B).empty());
}

TEST_CASE("integral solve") {
  IntMat A(2, 2, {Int(2), Int(0), Int(0), Int(3)});
  auto x = solve_integral(A, V2(4, 9));
  REQUIRE(x.has_value());
  CHECK(mat_apply(A, *x) == V2(4, 9));
  CHECK_FALSE(solve_integral(A, V2(1, 0)).has_value());
  // Underdetermined consistent system.
  IntMat B(1, 2, {Int(2), Int(3)});
  auto y = solve_integral(B, Vec{Int(1)});
  REQUIRE(y.has_value());
  CHECK(mat_apply(B, *y) == Vec{Int(1)});
}

TEST_CASE("unimodular inverse and affine maps") {
  IntMat M(2, 2, {Int(1), Int(1), Int(0), Int(1)});
  IntMat Mi = unimodular_inverse(M);
  CHECK(mat_mul(M, Mi).is_identity());

  AffMapZ f(M, V2(3, -1));
  AffMapZ g = f.inverse();
  AffMapZ id = f.compose(g);
  CHECK(id.linear.is_identity());
  CHECK(is_zero(id.translation));
  CHECK(f.apply(V2(1, 2)) == V2(6, 1));

  IntMat bad(2, 2, {Int(2), Int(0), Int(0), Int(1)});
  CHECK_THROWS(unimodular_inverse(bad));
}

TEST_CASE("cone membership") {
  RationalCone quadrant(2, {V2(1, 0), V2(0, 1)});
  CHECK(cone_contains(quadrant, V2(3, 5)));
  CHECK(cone_contains(quadrant, V2(0, 0)));
  CHECK_FALSE(cone_contains(quadrant, V2(-1, 2)));
  CHECK(cone_strictly_convex(quadrant));

  RationalCone halfplane(2, {V2(1, 0), V2(-1, 0), V2(0, 1)});
  CHECK(cone_contains(halfplane, V2(-7, 3)));
  CHECK_FALSE(cone_contains(halfplane, V2(0, -1)));
  CHECK_FALSE(cone_strictly_convex(halfplane));
}

TEST_CASE("dual cone examples") {
  // Self-dual quadrant.
  RationalCone quadrant(2, {V2(1, 0), V2(0, 1)});
  RationalCone dq = dual_cone(quadrant);
  std::vector<Vec> expect = {V2(0, 1), V2(1, 0)};
  CHECK(dq.generators == expect);

  // cone{(1,0),(1,2)} -> cone{(0,1),(2,-1)}.
  RationalCone c(2, {V2(1, 0), V2(1, 2)});
  RationalCone dc = dual_cone(c);
  std::vector<Vec> expect2 = {V2(0, 1), V2(2, -1)};
  CHECK(dc.generators == expect2);

  // Half-plane dual is the single ray (0,1).
  RationalCone halfplane(2, {V2(1, 0), V2(-1, 0), V2(0, 1)});
  RationalCone dh = dual_cone(halfplane);
  std::vector<Vec> expect3 = {V2(0, 1)};
  CHECK(dh.generators == expect3);

  // Dual of {0} is everything.
  RationalCone zero(2, {});
  RationalCone dz = dual_cone(zero);
  CHECK(dz.dim() == 2);
  CHECK_FALSE(cone_strictly_convex(dz));
}

TEST_CASE("double dual recovers the cone") {
  std::vector<RationalCone> cones = {
      RationalCone(2, {V2(1, 0), V2(1, 2)}),
      RationalCone(2, {V2(2, 1), V2(1, 1)}),
      RationalCone(3, {V3(1, 0, 0), V3(0, 1, 0), V3(0, 0, 1)}),
      RationalCone(3, {V3(1, 0, 0), V3(0, 1, 0), V3(1, 0, 2), V3(0, 1, 2)}),
  };
  for (const auto& c : cones) {
    RationalCone dd = dual_cone(dual_cone(c));
    // Same cone: mutual containment of generators.
    for (const auto& g : c.generators) CHECK(cone_contains(dd, g));
    for (const auto& g : dd.generators) CHECK(cone_contains(c, g));
  }
}

TEST_CASE("wedge isomorphism") {
  // Quadrant to the wedge spanned by (1,0),(1,1): shear.
  auto m = wedge_isomorphism({V2(1, 0), V2(0, 1)}, {V2(1, 0), V2(1, 1)},
                             {0, 1});
  REQUIRE(m.has_value());
  CHECK(mat_apply(*m, V2(1, 0)) == V2(1, 0));
  CHECK(mat_apply(*m, V2(0, 1)) == V2(1, 1));
  Int d = det(*m);
  CHECK((d == 1 || d == -1));

  // Involution compatibility: the reverse correspondence gives the inverse.
  auto mi = wedge_isomorphism({V2(1, 0), V2(1, 1)}, {V2(1, 0), V2(0, 1)},
                              {0, 1});
  REQUIRE(mi.has_value());
  CHECK(mat_mul(*m, *mi).is_identity());

  // Quadrant onto cone{(2,1),(1,1)}: determinant 1, so the map exists.
  auto m2 = wedge_isomorphism({V2(1, 0), V2(0, 1)}, {V2(2, 1), V2(1, 1)},
                              {0, 1});
  REQUIRE(m2.has_value());
  CHECK(mat_apply(*m2, V2(1, 0)) == V2(2, 1));
  CHECK(mat_apply(*m2, V2(0, 1)) == V2(1, 1));
  CHECK(det(*m2) == 1);

  // Quadrant onto cone{(1,0),(1,2)}: determinant 2, image lattice has index
  // 2 in Z^2, so no lattice isomorphism exists.
  auto mbad = wedge_isomorphism({V2(1, 0), V2(0, 1)}, {V2(1, 0), V2(1, 2)},
                                {0, 1});
  CHECK_FALSE(mbad.has_value());

  // Identity correspondence on a cone's own rays.
  auto mid = wedge_isomorphism({V2(1, 0), V2(1, 2)}, {V2(1, 0), V2(1, 2)},
                               {0, 1});
  REQUIRE(mid.has_value());
  CHECK(mid->is_identity());

  // Genuinely absent: 3 rays in the plane force an inconsistent system.
  auto none = wedge_isomorphism({V2(1, 0), V2(0, 1), V2(1, 1)},
                                {V2(1, 0), V2(0, 1), V2(1, 2)}, {0, 1, 2});
  CHECK_FALSE(none.has_value());

  // Lower-dimensional wedge inside a bigger lattice: single ray to single
  // ray; map must be a lattice isomorphism on the saturated spans.
  auto r = wedge_isomorphism({V3(1, 0, 0)}, {V3(0, 2, 0)}, {0});
  REQUIRE(r.has_value());
  CHECK(mat_apply(*r, V3(1, 0, 0)) == V3(0, 1, 0));  // primitive images
}

TEST_CASE("hilbert basis") {
  // Quadrant: basis is the two unit vectors.
  RationalCone quadrant(2, {V2(1, 0), V2(0, 1)});
  auto hb = hilbert_basis(quadrant);
  std::vector<Vec> expect = {V2(0, 1), V2(1, 0)};
  std::sort(hb.begin(), hb.end(), lex_less);
  CHECK(hb == expect);

  // cone{(1,0),(1,2)}: the A_1 singularity; basis {(1,0),(1,1),(1,2)}.
  RationalCone c(2, {V2(1, 0), V2(1, 2)});
  auto hb2 = hilbert_basis(c);
  std::sort(hb2.begin(), hb2.end(), lex_less);
  std::vector<Vec> expect2 = {V2(1, 0), V2(1, 1), V2(1, 2)};
  CHECK(hb2 == expect2);

  // cone{(1,0),(1,3)}: basis {(1,0),(1,1),(1,2),(1,3)}.
  RationalCone c3(2, {V2(1, 0), V2(1, 3)});
  auto hb3 = hilbert_basis(c3);
  std::sort(hb3.begin(), hb3.end(), lex_less);
  std::vector<Vec> expect3 = {V2(1, 0), V2(1, 1), V2(1, 2), V2(1, 3)};
  CHECK(hb3 == expect3);

  // Every Hilbert basis element is irreducible and generates: spot check that
  // an interior point decomposes.
  CHECK(cone_contains(c, V2(2, 1)));
}

TEST_CASE("extreme rays drop redundant generators") {
  RationalCone c(2, {V2(1, 0), V2(1, 1), V2(0, 1)});
  auto rays = cone_extreme_rays(c);
  std::sort(rays.begin(), rays.end(), lex_less);
  std::vector<Vec> expect = {V2(0, 1), V2(1, 0)};
  CHECK(rays == expect);
}
