#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "afw/fixtures.hpp"
#include "afw/gluing.hpp"

using namespace afw;
using namespace afw::fixtures;

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

static std::vector<size_t> cells_of_dim(const AffineComplex& cx, int d) {
  std::vector<size_t> out;
  for (size_t i = 0; i < cx.n_cells; ++i)
    if (cx.cell_dim[i] == d) out.push_back(i);
  return out;
}

// The unique cell of dimension d with exactly two maximal germs.
static size_t doubly_covered_cell(const AffineComplex& cx, int d) {
  for (size_t c : cells_of_dim(cx, d))
    if (maximal_germs(cx, c).size() == 2) return c;
  throw std::logic_error("no doubly covered cell of that dimension");
}

static Coeff q_pow(int k) { return coeff_pow(coeff_gen("q"), Rat(k)); }

// A generic compatible twist (one projective multiplicative element per
// cell), built from the kernel of the compatibility rows.
static std::map<size_t, PMElement> generic_twist(const AffineComplex& cx,
                                                 unsigned seed,
                                                 const std::string& name) {
  auto L = detail::twist_layout(cx, false);
  std::vector<std::vector<Rat>> A;
  std::vector<Coeff> b;
  detail::append_compat_rows(L, A, b);
  QSolve qs = qsolve(A, std::vector<Rat>(A.size(), Rat(0)));
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(-3, 3);
  std::vector<Rat> combo(L.total, Rat(0));
  for (const auto& k : qs.kernel) {
    int c = d(rng);
    for (size_t j = 0; j < k.size(); ++j) combo[j] += Rat(c) * k[j];
  }
  std::vector<Coeff> vars(L.total);
  for (size_t j = 0; j < L.total; ++j)
    if (combo[j] != 0) vars[j] = coeff_pow(coeff_gen(name), combo[j]);
  return detail::materialize_twist(L, vars);
}

// Exponent-linear model of all open gluing data with values q^e: variables
// are the components of every entry's germ vectors, valid data is the kernel
// of the compatibility and cocycle rows.
struct GDModel {
  const AffineComplex* cx = nullptr;
  std::map<std::pair<size_t, size_t>, size_t> off;  // (morphism, germ)
  size_t total = 0;
  std::vector<std::vector<Rat>> rows;
  std::vector<std::vector<Rat>> ker;

  explicit GDModel(const AffineComplex& c) : cx(&c) {
    for (size_t e : detail::morphism_classes(c))
      for (size_t f : vertex_germs(c, c.chain_bottom_cell(e))) {
        off[{e, f}] = total;
        total += c.n;
      }
    // compatibility rows: for every realization of the source cell, the
    // entry's conormal values must not depend on the vertex used.
    for (size_t e : detail::morphism_classes(c)) {
      size_t tau = c.chain_bottom_cell(e);
      for (size_t g = 0; g < c.chain_reps.size(); ++g) {
        if (c.chain_len(g) > 2 || c.chain_top_cell(g) != tau) continue;
        const LocalChain& rep = c.chain_reps[g];
        const LatticePolytope& P = c.spec.polytopes[rep.poly];
        size_t wf = rep.faces.front(), keyface = rep.faces.back();
        auto nrows = detail::local_conormal_rows(P, wf);
        const auto& verts = P.faces[wf].verts;
        for (const Vec& n_p : nrows)
          for (size_t i = 1; i < verts.size(); ++i) {
            std::vector<Rat> row(total, Rat(0));
            auto add = [&](size_t u, int sgn) {
              LocalChain vc;
              vc.poly = rep.poly;
              vc.faces = {detail::vertex_face_of(P, u)};
              if (vc.faces[0] != keyface) vc.faces.push_back(keyface);
              size_t key = c.chain_class_of.at(vc);
              Vec nf = covector_pushforward(
                  n_p, detail::corner_chart(c, rep.poly, u).linear);
              add_eval(row, e, key, nf, Rat(sgn));
            };
            add(verts[0], +1);
            add(verts[i], -1);
            bool nz = false;
            for (const auto& x : row)
              if (x != 0) nz = true;
            if (nz) rows.push_back(row);
          }
      }
    }
    // cocycle rows
    for (size_t ch = 0; ch < c.chain_reps.size(); ++ch) {
      if (c.chain_len(ch) != 3) continue;
      size_t e01 = c.subchain(ch, {0, 1});
      size_t e12 = c.subchain(ch, {1, 2});
      size_t e02 = c.subchain(ch, {0, 2});
      for (size_t f : vertex_germs(c, c.chain_bottom_cell(e01)))
        for (size_t i = 0; i < c.n; ++i) {
          std::vector<Rat> row(total, Rat(0));
          row[off.at({e02, f}) + i] += 1;
          row[off.at({e01, f}) + i] -= 1;
          row[off.at({e12, c.compose(f, e01)}) + i] -= 1;
          rows.push_back(row);
        }
    }
    ker = qsolve(rows, std::vector<Rat>(rows.size(), Rat(0))).kernel;
  }

  void add_eval(std::vector<Rat>& row, size_t e, size_t f, const Vec& n,
                const Rat& c0) const {
    size_t base = off.at({e, f});
    for (size_t i = 0; i < n.size(); ++i) row[base + i] += c0 * Rat(n[i]);
  }

  OpenGluingData materialize(const std::vector<Rat>& x,
                             const std::string& name) const {
    OpenGluingData od;
    for (size_t e : detail::morphism_classes(*cx)) {
      PMElement s;
      s.tau = cx->chain_bottom_cell(e);
      for (size_t f : vertex_germs(*cx, s.tau)) {
        CoeffVec v(cx->n);
        size_t base = off.at({e, f});
        for (size_t i = 0; i < cx->n; ++i)
          if (x[base + i] != 0)
            v[i] = coeff_pow(coeff_gen(name), x[base + i]);
        s.at_germ[f] = v;
      }
      od.entry[e] = s;
    }
    return od;
  }

  std::vector<Rat> random_kernel_point(unsigned seed) const {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> d(-3, 3);
    std::vector<Rat> x(total, Rat(0));
    for (const auto& k : ker) {
      int c0 = d(rng);
      for (size_t j = 0; j < total; ++j) x[j] += Rat(c0) * k[j];
    }
    return x;
  }
};

// The standard polarization of the torus fixture: coefficient of a ray is
// the number of its positive coordinates.
static MPLFunction torus_polarization(const AffineComplex& cx) {
  std::map<size_t, Int> pol;
  for (size_t c = 0; c < cx.n_chains; ++c) {
    if (cx.chain_len(c) != 2) continue;
    if (cx.cell_dim[cx.chain_cells[c][0]] != 0) continue;
    if (cx.cell_dim[cx.chain_cells[c][1]] != 1) continue;
    size_t v = cx.chain_cells[c][0];
    const FanZ& F = cx.spec.fans[cx.fan_of_vertex_class[v]].fan;
    const Vec& r = F.rays[F.cones[cx.germ_cone.at(c)][0]];
    pol[c] = Int((r[0] > 0) + (r[1] > 0));
  }
  return mpl_from_polarization(cx, pol);
}

// ---------------------------------------------------------------------------
// Coefficient group
// ---------------------------------------------------------------------------

TEST_CASE("exponent coefficients form a divisible group", "[gluing][coeff]") {
  Coeff q = coeff_gen("q"), r = coeff_gen("r");
  REQUIRE(coeff_is_one(coeff_one()));
  REQUIRE(coeff_mul(q, coeff_inv(q)) == coeff_one());
  REQUIRE(coeff_pow(q, Rat(3)) == coeff_mul(q, coeff_mul(q, q)));
  REQUIRE(coeff_div(coeff_mul(q, r), r) == q);
  REQUIRE(coeff_str(coeff_mul(coeff_pow(q, Rat(-2)), r)) == "q^-2*r");

  // numeric embedding via prime factorizations
  Coeff six = coeff_from_rational(Rat(6));
  REQUIRE(six == coeff_mul(coeff_from_rational(Rat(2)),
                           coeff_from_rational(Rat(3))));
  REQUIRE(coeff_is_numeric(six));
  REQUIRE_FALSE(coeff_is_numeric(q));
  REQUIRE(coeff_to_rational(coeff_from_rational(Rat(35, 8))) == Rat(35, 8));

  // evaluation of vectors at covectors, and base change
  CoeffVec v{q, r};
  REQUIRE(coeff_eval(v, v2(2, -1)) == coeff_div(coeff_pow(q, Rat(2)), r));
  IntMat M = IntMat::from_rows({v2(1, 2), v2(0, 1)});
  Vec n = v2(3, -5);
  REQUIRE(coeff_eval(coeff_transform(v, M), n) ==
          coeff_eval(v, mat_apply_left(n, M)));
}

TEST_CASE("rational solver and componentwise coefficient solve",
          "[gluing][solver]") {
  // unique solution
  std::vector<std::vector<Rat>> A{{Rat(1), Rat(1)}, {Rat(1), Rat(-1)}};
  QSolve s = qsolve(A, {Rat(3), Rat(1)});
  REQUIRE(s.consistent);
  REQUIRE(s.x == std::vector<Rat>{Rat(2), Rat(1)});
  REQUIRE(s.kernel.empty());

  // inconsistent
  std::vector<std::vector<Rat>> B{{Rat(1), Rat(1)}, {Rat(2), Rat(2)}};
  REQUIRE_FALSE(qsolve(B, {Rat(1), Rat(3)}).consistent);

  // one-dimensional kernel
  QSolve k = qsolve(B, {Rat(1), Rat(2)});
  REQUIRE(k.consistent);
  REQUIRE(k.kernel.size() == 1);
  REQUIRE(k.kernel[0][0] + k.kernel[0][1] == 0);

  // coefficient right-hand sides are solved one symbol at a time
  auto sol = coeff_solve(A, {coeff_gen("q"), coeff_pow(coeff_gen("q"),
                                                       Rat(3))});
  REQUIRE(sol);
  REQUIRE((*sol)[0] == coeff_pow(coeff_gen("q"), Rat(2)));
  REQUIRE((*sol)[1] == coeff_inv(coeff_gen("q")));
  REQUIRE_FALSE(coeff_solve(B, {coeff_gen("q"), coeff_one()}));
}

// ---------------------------------------------------------------------------
// Cone picture rings
// ---------------------------------------------------------------------------

TEST_CASE("cone picture rings of the torus", "[gluing][rings]") {
  auto cx = build_complex(torus());
  auto rings = cone_picture_rings(cx);

  size_t v = cells_of_dim(cx, 0)[0];
  size_t e = cells_of_dim(cx, 1)[0];
  size_t sq = cells_of_dim(cx, 2)[0];

  // vertex: one free degree-one generator
  REQUIRE(rings.ring.at(v).gens.size() == 1);
  REQUIRE(rings.ring.at(v).rels.empty());

  // edge: two free degree-one generators
  REQUIRE(rings.ring.at(e).gens.size() == 2);
  REQUIRE(rings.ring.at(e).rels.empty());

  // square: four degree-one generators with the single quadric xw = yz
  const MonoidPresentation& R = rings.ring.at(sq);
  REQUIRE(R.gens.size() == 4);
  for (const auto& g : R.gens) REQUIRE(g.degree == 1);
  REQUIRE(presentation_faithful(R));
  // graded dimensions (k+1)^2: every point of k*[0,1]^2 is hit
  for (int k = 1; k <= 4; ++k) {
    size_t count = 0;
    for (int a = 0; a <= k; ++a)
      for (int b = 0; b <= k; ++b)
        if (represent_in_gens(R, v2(a, b), Int(k))) ++count;
    REQUIRE(count == size_t((k + 1) * (k + 1)));
  }
  // faithfulness is not vacuous: dropping all relations overcounts
  MonoidPresentation free_R = R;
  free_R.rels.clear();
  REQUIRE_FALSE(presentation_faithful(free_R));

  // restrictions: a generator survives iff it lies on the smaller cell
  for (size_t m : detail::morphism_classes(cx)) {
    size_t engaged = 0;
    for (const auto& img : rings.restriction.at(m))
      if (img) ++engaged;
    int dt = cx.cell_dim[cx.chain_bottom_cell(m)];
    REQUIRE(engaged == size_t(dt == 0 ? 1 : 2));
  }
}

TEST_CASE("cone picture rings of the quartic and the circle",
          "[gluing][rings]") {
  auto cx = build_complex(quartic());
  auto rings = cone_picture_rings(cx);
  for (size_t sq : cells_of_dim(cx, 2)) {
    const MonoidPresentation& R = rings.ring.at(sq);
    REQUIRE(R.gens.size() == 3);  // unimodular triangle
    REQUIRE(R.rels.empty());
    REQUIRE(presentation_faithful(R));
    // graded dimensions (k+1)(k+2)/2
    for (int k = 1; k <= 3; ++k) {
      size_t count = 0;
      for (int a = 0; a <= k; ++a)
        for (int b = 0; a + b <= k; ++b)
          if (represent_in_gens(R, v2(a, b), Int(k))) ++count;
      REQUIRE(count == size_t((k + 1) * (k + 2) / 2));
    }
  }

  // circle of circumference 3: one vertex class, one edge class of lattice
  // length 3, whose degree-one part has all four lattice points
  auto cc = build_complex(circle(3));
  auto crings = cone_picture_rings(cc);
  for (size_t c = 0; c < cc.n_cells; ++c) {
    REQUIRE(crings.ring.at(c).gens.size() ==
            size_t(cc.cell_dim[c] == 0 ? 1 : 4));
    REQUIRE(presentation_faithful(crings.ring.at(c)));
  }
}

// ---------------------------------------------------------------------------
// Fan picture local models
// ---------------------------------------------------------------------------

TEST_CASE("fan local model of the interval", "[gluing][models]") {
  auto m = fan_local_models(make_polytope(1, {Vec{Int(0)}, Vec{Int(1)}}));
  REQUIRE(m.rho == v2(0, 1));
  REQUIRE(m.hilbert_basis == std::vector<Vec>{v2(-1, 1), v2(1, 0)});
  REQUIRE(m.boundary_ring.gens.size() == 2);
  REQUIRE(m.boundary_ring.rels.size() == 1);
  REQUIRE(m.boundary_ring.rels[0].annihilation);
  REQUIRE(m.boundary_ring.rels[0].lhs == std::vector<Int>{Int(1), Int(1)});
  REQUIRE(m.interior(m.rho, Int(0)));
  for (const Vec& h : m.hilbert_basis) REQUIRE_FALSE(m.interior(h, Int(0)));
}

TEST_CASE("fan local model of the unit square", "[gluing][models]") {
  auto m = fan_local_models(make_polytope(
      2, {v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)}));
  REQUIRE(m.rho == v3(0, 0, 1));
  REQUIRE(m.hilbert_basis ==
          std::vector<Vec>{v3(-1, 0, 1), v3(0, -1, 1), v3(0, 1, 0),
                           v3(1, 0, 0)});
  // two annihilations: opposite generator pairs multiply to z^rho = 0
  REQUIRE(m.boundary_ring.gens.size() == 4);
  std::set<std::vector<Int>> ann;
  for (const auto& r : m.boundary_ring.rels)
    if (r.annihilation) ann.insert(r.lhs);
  REQUIRE(ann == std::set<std::vector<Int>>{
                     {Int(1), Int(0), Int(0), Int(1)},
                     {Int(0), Int(1), Int(1), Int(0)}});
}

TEST_CASE("fan local model of the centered square", "[gluing][models]") {
  auto m = fan_local_models(make_polytope(
      2, {v2(1, 1), v2(1, -1), v2(-1, 1), v2(-1, -1)}));
  // five generators including the interior element rho
  REQUIRE(m.hilbert_basis ==
          std::vector<Vec>{v3(-1, 0, 1), v3(0, -1, 1), v3(0, 0, 1),
                           v3(0, 1, 1), v3(1, 0, 1)});
  REQUIRE(m.cone_ring.gens.size() == 5);
  REQUIRE(m.interior(v3(0, 0, 1), Int(0)));
  // t^2 = xy = zw in the cone ring: all three monomials share the value
  // (0,0,2); the spanning relations must identify them
  auto val = [&](const std::vector<Int>& e) {
    return detail::monomial_value(m.cone_ring, e).first;
  };
  REQUIRE(val({Int(1), Int(0), Int(0), Int(0), Int(1)}) == v3(0, 0, 2));
  REQUIRE(val({Int(0), Int(1), Int(0), Int(1), Int(0)}) == v3(0, 0, 2));
  REQUIRE(val({Int(0), Int(0), Int(2), Int(0), Int(0)}) == v3(0, 0, 2));
  // boundary ring: the interior generator is dropped, opposite pairs die
  REQUIRE(m.boundary_ring.gens.size() == 4);
  std::set<std::vector<Int>> ann;
  for (const auto& r : m.boundary_ring.rels)
    if (r.annihilation) ann.insert(r.lhs);
  REQUIRE(ann == std::set<std::vector<Int>>{
                     {Int(1), Int(0), Int(0), Int(1)},
                     {Int(0), Int(1), Int(1), Int(0)}});
}

TEST_CASE("fan local model of the standard simplex", "[gluing][models]") {
  auto m = fan_local_models(make_polytope(
      2, {v2(0, 0), v2(1, 0), v2(0, 1)}));
  REQUIRE(m.hilbert_basis ==
          std::vector<Vec>{v3(-1, -1, 1), v3(0, 1, 0), v3(1, 0, 0)});
  REQUIRE(m.cone_ring.rels.empty());  // unimodular: free monoid
  REQUIRE(m.boundary_ring.gens.size() == 3);
  REQUIRE(m.boundary_ring.rels.size() == 1);
  REQUIRE(m.boundary_ring.rels[0].annihilation);
  REQUIRE(m.boundary_ring.rels[0].lhs ==
          std::vector<Int>{Int(1), Int(1), Int(1)});
}

TEST_CASE("fan local model of a maximal cell of the torus",
          "[gluing][models]") {
  auto cx = build_complex(torus());
  size_t sq = cells_of_dim(cx, 2)[0];
  auto m = fan_local_models(cx, sq);
  REQUIRE(m.hilbert_basis.size() == 4);
  REQUIRE(m.rho == v3(0, 0, 1));
  REQUIRE_THROWS_AS(fan_local_models(cx, cells_of_dim(cx, 1)[0]),
                    std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Transition maps between maximal charts
// ---------------------------------------------------------------------------

TEST_CASE("transition map across an interior edge with a focus-focus point",
          "[gluing][transition]") {
  auto cx = build_complex(focus_focus());
  size_t tau = doubly_covered_cell(cx, 1);
  auto mg = maximal_germs(cx, tau);
  REQUIRE(mg.size() == 2);
  auto tm = transition_map(cx, mg[0], mg[1]);
  REQUIRE(tm.germs.size() == 2);

  // one piece is the identity, the other the elementary shear
  IntMat id2 = AffMapZ::identity(2).linear;
  IntMat shear = IntMat::from_rows({v2(1, 0), v2(-1, 1)});
  std::multiset<std::vector<Int>> got, want;
  for (const auto& [g, m] : tm.psi) got.insert(m.a);
  want.insert(id2.a);
  want.insert(shear.a);
  REQUIRE(got == want);

  // piecewise action on covectors: the fan rays are fixed, the interior of
  // the lower half plane is sheared
  REQUIRE(tm.apply(v2(0, 1)) == v2(0, 1));
  REQUIRE(tm.apply(v2(1, 0)) == v2(1, 0));
  REQUIRE(tm.apply(v2(-1, 0)) == v2(-1, 0));
  REQUIRE(tm.apply(v2(-1, 1)) == v2(-1, 1));
  REQUIRE(tm.apply(v2(0, -1)) == v2(1, -1));
  REQUIRE(tm.apply(v2(1, -1)) == v2(2, -1));
}

TEST_CASE("transition map of the two-pyramid fixture",
          "[gluing][transition]") {
  auto cx = build_complex(two_pyramids());
  size_t tau = doubly_covered_cell(cx, 2);
  auto mg = maximal_germs(cx, tau);
  REQUIRE(mg.size() == 2);
  auto tm = transition_map(cx, mg[0], mg[1]);
  REQUIRE(tm.germs.size() == 4);

  IntMat id3 = AffMapZ::identity(3).linear;
  IntMat shear = IntMat::from_rows({v3(1, 0, 0), v3(-1, 1, 0), v3(0, 0, 1)});
  size_t n_id = 0, n_shear = 0;
  for (const auto& [g, m] : tm.psi) {
    if (m == id3) ++n_id;
    if (m == shear) ++n_shear;
  }
  REQUIRE(n_id == 2);
  REQUIRE(n_shear == 2);

  REQUIRE(tm.apply(v3(1, 0, 0)) == v3(1, 0, 0));
  REQUIRE(tm.apply(v3(-1, 0, 0)) == v3(-1, 0, 0));
  REQUIRE(tm.apply(v3(0, 1, 0)) == v3(0, 1, 0));
  REQUIRE(tm.apply(v3(0, 0, 1)) == v3(0, 0, 1));
  REQUIRE(tm.apply(v3(0, 0, -1)) == v3(0, 0, -1));
  REQUIRE(tm.apply(v3(0, -1, 0)) == v3(1, -1, 0));
}

TEST_CASE("maximal pairs on the torus", "[gluing][transition]") {
  auto cx = build_complex(torus());
  size_t v = cells_of_dim(cx, 0)[0];
  auto mg = maximal_germs(cx, v);
  REQUIRE(mg.size() == 4);

  // every vertex germ is maximally paired with exactly one partner, and the
  // transition map of such a pair is the identity
  for (size_t i = 0; i < mg.size(); ++i) {
    size_t partners = 0;
    for (size_t j = 0; j < mg.size(); ++j) {
      try {
        auto tm = transition_map(cx, mg[i], mg[j]);
        ++partners;
        REQUIRE(tm.germs.size() == 1);
        REQUIRE(tm.psi.begin()->second == AffMapZ::identity(2).linear);
      } catch (const NotMaximalPairError&) {
      }
    }
    REQUIRE(partners == 1);
    REQUIRE_THROWS_AS(transition_map(cx, mg[i], mg[i]), NotMaximalPairError);
  }

  // edge germs: cross pairs are maximal with one piece per endpoint germ
  size_t e = cells_of_dim(cx, 1)[0];
  auto me = maximal_germs(cx, e);
  REQUIRE(me.size() == 2);
  REQUIRE(transition_map(cx, me[0], me[1]).germs.size() == 2);
  REQUIRE_THROWS_AS(transition_map(cx, me[0], me[0]), NotMaximalPairError);
}

// ---------------------------------------------------------------------------
// Open gluing data: validation, cocycle law, closed projection
// ---------------------------------------------------------------------------

TEST_CASE("trivial and coboundary gluing data validate", "[gluing][data]") {
  for (auto spec : {torus(), focus_focus()}) {
    auto cx = build_complex(spec);
    auto od = trivial_gluing_data(cx);
    REQUIRE_NOTHROW(validate_gluing(cx, od));

    auto t = generic_twist(cx, 7, "q");
    for (const auto& [cell, el] : t) REQUIRE(pm_is_compatible(cx, el));
    auto cb = apply_equivalence(cx, od, t);
    REQUIRE_NOTHROW(validate_gluing(cx, cb));
  }
}

TEST_CASE("a tampered entry violates the cocycle law", "[gluing][data]") {
  auto cx = build_complex(torus());
  auto od = trivial_gluing_data(cx);
  // scale one vertex-into-square entry by an invariant vector element
  for (auto& [e, s] : od.entry) {
    if (cx.cell_dim[cx.chain_bottom_cell(e)] != 0) continue;
    if (cx.cell_dim[cx.chain_top_cell(e)] != 2) continue;
    s = pm_mul(s, pm_from_invariant_vector(cx, s.tau,
                                           {coeff_gen("q"), coeff_one()}));
    break;
  }
  REQUIRE_THROWS_AS(validate_gluing(cx, od), CocycleViolationError);
  try {
    validate_gluing(cx, od);
  } catch (const CocycleViolationError& err) {
    // the reported triple is composable and composes correctly
    REQUIRE(cx.chain_top_cell(err.e1) == cx.chain_bottom_cell(err.e2));
    REQUIRE(cx.chain_bottom_cell(err.e3) == cx.chain_bottom_cell(err.e1));
    REQUIRE(cx.chain_top_cell(err.e3) == cx.chain_top_cell(err.e2));
  }
}

TEST_CASE("generic valid gluing data from the exponent model",
          "[gluing][data]") {
  auto cx = build_complex(torus());
  GDModel M(cx);
  REQUIRE(M.total == 32);
  REQUIRE(M.ker.size() == 12);
  auto od = M.materialize(M.random_kernel_point(5), "q");
  REQUIRE_NOTHROW(validate_gluing(cx, od));

  // a point off the kernel fails
  std::vector<Rat> bad(M.total, Rat(0));
  bad[0] = 1;
  bool valid = true;
  try {
    validate_gluing(cx, M.materialize(bad, "q"));
  } catch (const GluingError&) {
    valid = false;
  }
  REQUIRE_FALSE(valid);
}

TEST_CASE("closed projection and the closed cocycle law", "[gluing][data]") {
  auto cx = build_complex(torus());
  GDModel M(cx);
  auto od = M.materialize(M.random_kernel_point(3), "q");
  auto cd = to_closed(cx, od);
  REQUIRE(closed_is_cocycle(cx, cd));

  // evaluation agrees with the projective multiplicative values
  for (const auto& [e, s] : od.entry) {
    auto basis = detail::cell_conormal_basis(cx, s.tau);
    for (size_t i = 0; i < basis.size(); ++i)
      REQUIRE(closed_eval(cx, cd, e, basis[i]) ==
              pm_eval_conormal(cx, s, basis[i]));
  }

  // in the plane the closed cocycle condition is vacuous: every triple's top
  // cell is maximal, so the layout admits no rows at all
  REQUIRE(closed_cocycle_rows(cx).empty());
  REQUIRE(closed_layout(cx).total == 20);
}

// ---------------------------------------------------------------------------
// The D invariant
// ---------------------------------------------------------------------------

TEST_CASE("D invariant of trivial data is trivial", "[gluing][D]") {
  for (auto spec : {torus(), focus_focus(), kodaira()}) {
    auto cx = build_complex(spec);
    auto od = trivial_gluing_data(cx);
    for (auto [h, f] : detail::edge_diagrams(cx))
      REQUIRE(coeff_is_one(D_invariant(cx, od.entry.at(f), h, f)));
  }
}

TEST_CASE("D transforms by the edge covector under a change of chart",
          "[gluing][D]") {
  auto cx = build_complex(focus_focus());
  auto atlas = edge_invariants(cx);
  auto t = generic_twist(cx, 11, "q");
  size_t tau = doubly_covered_cell(cx, 1);
  auto mg = maximal_germs(cx, tau);
  const PMElement& sp = t.at(tau);
  size_t h = cx.identity_morphism(tau);
  Coeff D1 = D_invariant(cx, sp, h, mg[0]);
  Coeff D2 = D_invariant(cx, sp, h, mg[1]);
  REQUIRE_FALSE(coeff_is_one(D1));  // the twist is generic

  // D(s,h,f1) = D(s,h,f2) * s(n^{f1 f2})^{-1}
  Vec n12 = atlas.n_of(tau, mg[0], mg[1]);
  auto fd = detail::edge_frame(cx, h, mg[0]);
  Coeff sn = coeff_eval(sp.at_germ.at(fd.k1_plus),
                        covector_pushforward(n12, fd.A_plus));
  REQUIRE(D1 == coeff_mul(D2, coeff_inv(sn)));
}

TEST_CASE("hexagon edge coefficients satisfy the boundary relation",
          "[gluing][D][hexagon]") {
  auto cx = build_complex(hexagon_model());
  auto atlas = edge_invariants(cx);
  GDModel M(cx);

  std::vector<size_t> sing;
  for (const auto& ei : atlas.edges)
    if (!ei.n_e.empty()) sing.push_back(ei.omega_cell);
  std::sort(sing.begin(), sing.end());
  sing.erase(std::unique(sing.begin(), sing.end()), sing.end());
  REQUIRE(sing.size() == 6);

  for (unsigned seed : {5u, 9u, 23u}) {
    auto od = M.materialize(M.random_kernel_point(seed), "q");
    REQUIRE_NOTHROW(validate_gluing(cx, od));

    Vec total = v2(0, 0);
    size_t nontrivial = 0;
    for (size_t w : sing) {
      auto mg = maximal_germs(cx, w);
      REQUIRE(mg.size() == 2);
      size_t h = cx.identity_morphism(w);
      size_t g1 = mg[0], g2 = mg[1];
      if (cx.chain_top_cell(g1) > cx.chain_top_cell(g2)) std::swap(g1, g2);
      Coeff D1 = D_invariant(cx, od.entry.at(g1), h, g1);
      Coeff D2 = D_invariant(cx, od.entry.at(g2), h, g2);

      // normalization factor: the reference entry evaluated at the covector
      // separating the two maximal germs
      Vec n12 = atlas.n_of(w, g1, g2);
      const auto& om = atlas.omega.at(w);
      const LocalChain& rep0 = locate_chain(cx, {om.f_plus, om.base});
      const LatticePolytope& P0 = cx.spec.polytopes[rep0.poly];
      auto ends = detail::edge_endpoint_germs(cx, rep0.poly, rep0.faces[1]);
      const Vec& x0 = ends[0].second;
      size_t u = 0;
      for (size_t i = 0; i < P0.vertices.size(); ++i)
        if (P0.vertices[i] == x0) u = i;
      LocalChain vc;
      vc.poly = rep0.poly;
      vc.faces = {detail::vertex_face_of(P0, u), rep0.faces[1]};
      size_t key = cx.chain_class_of.at(vc);
      IntMat A = detail::corner_chart(cx, rep0.poly, u).linear;
      Coeff sn = coeff_eval(od.entry.at(g1).at_germ.at(key),
                            covector_pushforward(n12, A));
      Coeff c = coeff_mul(coeff_div(D1, D2), sn);
      if (!coeff_is_one(c)) ++nontrivial;
      Rat a = c.e.count("q") ? c.e.at("q") : Rat(0);
      REQUIRE(boost::multiprecision::denominator(a) == 1);

      // orient the edge counterclockwise around the interior cell: the sign
      // is positive when the canonical direction keeps the center on the
      // left of p -> q
      const Vec& p = ends[0].second;
      const Vec& q = ends[1].second;
      Vec mid2 = v2(0, 0), dir2 = v2(0, 0);
      for (int i = 0; i < 2; ++i) {
        mid2[i] = p[i] + q[i];
        dir2[i] = om.d[i];
      }
      Int cross = mid2[0] * dir2[1] - mid2[1] * dir2[0];
      REQUIRE(cross != 0);
      int eps = cross > 0 ? 1 : -1;
      Int ai = boost::multiprecision::numerator(a);
      for (int i = 0; i < 2; ++i) total[i] += Int(eps) * ai * dir2[i];
    }
    REQUIRE(nontrivial > 0);
    REQUIRE(total == v2(0, 0));
  }
}

// ---------------------------------------------------------------------------
// Local constancy
// ---------------------------------------------------------------------------

TEST_CASE("local constancy holds on coboundaries and planar kernels",
          "[gluing][LC]") {
  for (auto spec : {torus(), focus_focus()}) {
    auto cx = build_complex(spec);
    REQUIRE(check_LC(cx, trivial_gluing_data(cx)).ok);
    auto cb = apply_equivalence(cx, trivial_gluing_data(cx),
                                generic_twist(cx, 13, "q"));
    REQUIRE(check_LC(cx, cb).ok);
    GDModel M(cx);
    auto od = M.materialize(M.random_kernel_point(5), "q");
    REQUIRE(check_LC(cx, od).ok);
  }
}

TEST_CASE("local constancy fails for generic data on the elliptic fibration",
          "[gluing][LC]") {
  auto cx = build_complex(kodaira());
  GDModel M(cx);
  auto od = M.materialize(M.random_kernel_point(5), "q");
  REQUIRE_NOTHROW(validate_gluing(cx, od));
  auto lc = check_LC(cx, od);
  REQUIRE_FALSE(lc.ok);
  REQUIRE_FALSE(lc.witnesses.empty());
  auto atlas = edge_invariants(cx);
  for (const auto& [h, g1, g2] : lc.witnesses) {
    // each witness is a genuine violation: equal covectors, unequal D
    size_t om = cx.is_identity_morphism(h) ? cx.chain_bottom_cell(g1)
                                           : cx.chain_bottom_cell(h);
    REQUIRE(atlas.omega.at(om).n.at(cx.compose(h, g1)) ==
            atlas.omega.at(om).n.at(cx.compose(h, g2)));
    REQUIRE_FALSE(D_invariant(cx, od.entry.at(g1), h, g1) ==
                  D_invariant(cx, od.entry.at(g2), h, g2));
  }
}

// ---------------------------------------------------------------------------
// Equivalence
// ---------------------------------------------------------------------------

TEST_CASE("equivalence recovers a planted twist", "[gluing][equivalence]") {
  auto cx = build_complex(torus());
  auto od = trivial_gluing_data(cx);
  auto t = generic_twist(cx, 17, "q");
  auto cb = apply_equivalence(cx, od, t);

  auto eq = equivalent(cx, od, cb);
  REQUIRE(eq.equivalent);
  // the returned witness transforms od into cb
  auto check = apply_equivalence(cx, od, eq.t);
  for (const auto& [e, s] : cb.entry) REQUIRE(pm_eq(check.entry.at(e), s));

  REQUIRE(equivalent(cx, cb, cb).equivalent);
  REQUIRE(equivalent(cx, cb, od).equivalent);
}

TEST_CASE("inequivalent gluing data is recognized", "[gluing][equivalence]") {
  auto cx = build_complex(torus());
  GDModel M(cx);
  // find a kernel basis vector outside the coboundary span
  auto TL = detail::twist_layout(cx, false);
  std::vector<std::vector<Rat>> B(M.total, std::vector<Rat>(TL.total,
                                                            Rat(0)));
  for (size_t e : detail::morphism_classes(cx)) {
    size_t t1 = cx.chain_bottom_cell(e), t2 = cx.chain_top_cell(e);
    for (size_t f : vertex_germs(cx, t1)) {
      size_t g2 = cx.compose(f, e);
      for (size_t i = 0; i < cx.n; ++i) {
        std::vector<Rat> row(TL.total, Rat(0));
        detail::add_germ_component(TL, row, t2, g2, i, Rat(1));
        detail::add_germ_component(TL, row, t1, f, i, Rat(-1));
        B[M.off.at({e, f}) + i] = row;
      }
    }
  }
  size_t outside = 0;
  std::vector<Rat> witness;
  for (const auto& k : M.ker)
    if (!qsolve(B, k).consistent) {
      ++outside;
      if (witness.empty()) witness = k;
    }
  REQUIRE(outside == 8);  // moduli of the two-torus: rank 8 beyond twists

  auto od = M.materialize(witness, "q");
  REQUIRE_NOTHROW(validate_gluing(cx, od));
  REQUIRE_FALSE(equivalent(cx, trivial_gluing_data(cx), od).equivalent);
  REQUIRE(equivalent(cx, od, od).equivalent);
}

// ---------------------------------------------------------------------------
// Lifting
// ---------------------------------------------------------------------------

TEST_CASE("lifting trivializes every D invariant", "[gluing][lift]") {
  for (auto spec : {torus(), focus_focus()}) {
    auto cx = build_complex(spec);
    GDModel M(cx);
    auto od = M.materialize(M.random_kernel_point(9), "q");
    auto lr = lift_gluing_data(cx, od);
    REQUIRE(lr.lifted.kind == GluingKind::Lifted);
    REQUIRE_NOTHROW(validate_gluing(cx, lr.lifted));
    for (auto [h, f] : detail::edge_diagrams(cx))
      REQUIRE(coeff_is_one(D_invariant(cx, lr.lifted.entry.at(f), h, f)));
  }
}

TEST_CASE("lifting trivial data returns a trivial twist", "[gluing][lift]") {
  auto cx = build_complex(focus_focus());
  auto lr = lift_gluing_data(cx, trivial_gluing_data(cx));
  for (const auto& [e, s] : lr.lifted.entry)
    REQUIRE(pm_eq(s, pm_one(cx, s.tau)));
}

TEST_CASE("lifting refuses non-simple and non-constant data",
          "[gluing][lift]") {
  auto cq = build_complex(quartic());
  REQUIRE_THROWS_AS(lift_gluing_data(cq, trivial_gluing_data(cq)),
                    NotSimpleError);

  auto ck = build_complex(kodaira());
  GDModel M(ck);
  auto od = M.materialize(M.random_kernel_point(5), "q");
  REQUIRE_THROWS_AS(lift_gluing_data(ck, od), LCViolatedError);
}

// ---------------------------------------------------------------------------
// Obstruction of closed data
// ---------------------------------------------------------------------------

TEST_CASE("obstruction vanishes on open-induced closed data",
          "[gluing][obstruction]") {
  auto cx = build_complex(torus());
  auto phi = torus_polarization(cx);

  auto ob0 = obstruction_o(cx, phi, to_closed(cx, trivial_gluing_data(cx)));
  REQUIRE(ob0.trivial);
  for (const auto& [ch, c] : ob0.cocycle) REQUIRE(coeff_is_one(c));

  for (unsigned seed : {3u, 7u, 19u}) {
    auto cb = apply_equivalence(cx, trivial_gluing_data(cx),
                                generic_twist(cx, seed, "q"));
    REQUIRE(obstruction_o(cx, phi, to_closed(cx, cb)).trivial);
  }
}

TEST_CASE("some closed cocycles on the torus are obstructed",
          "[gluing][obstruction]") {
  auto cx = build_complex(torus());
  auto phi = torus_polarization(cx);
  auto L = closed_layout(cx);

  // in the plane every closed collection is a cocycle; scan a basis
  size_t nontrivial = 0, trivial = 0;
  for (size_t j = 0; j < L.total; ++j) {
    ClosedGluingData cd;
    for (size_t e : L.morphs) {
      CoeffVec v(L.width.at(e));
      for (size_t i = 0; i < v.size(); ++i)
        if (L.offset.at(e) + i == j) v[i] = coeff_gen("q");
      cd.val[e] = v;
    }
    REQUIRE(closed_is_cocycle(cx, cd));
    auto ob = obstruction_o(cx, phi, cd);
    (ob.trivial ? trivial : nontrivial)++;
  }
  REQUIRE(nontrivial == 4);
  REQUIRE(trivial == 16);
}

TEST_CASE("obstruction requires a strictly convex function",
          "[gluing][obstruction]") {
  auto cx = build_complex(torus());
  // the zero function is multi-valued piecewise linear but not strictly
  // convex
  std::map<size_t, Int> zero;
  for (size_t c = 0; c < cx.n_chains; ++c) {
    if (cx.chain_len(c) != 2) continue;
    if (cx.cell_dim[cx.chain_cells[c][0]] != 0) continue;
    if (cx.cell_dim[cx.chain_cells[c][1]] != 1) continue;
    zero[c] = 0;
  }
  auto flat = mpl_from_polarization(cx, zero);
  auto cd = to_closed(cx, trivial_gluing_data(cx));
  REQUIRE_THROWS_AS(obstruction_o(cx, flat, cd), NotStrictlyConvexError);
}
