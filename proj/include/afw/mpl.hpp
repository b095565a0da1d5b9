// Multi-valued piecewise linear functions on an affine complex, their
// validation (continuity, convexity, strict convexity per cell), first Chern
// cocycles against the barycentric cover, the discrete Legendre transform
// producing the dual complex with its dual function, involution checking via
// exhaustive graded isomorphism search, and builders for boundary-of-reflexive
// fixtures (with an optional central quotient).
#pragma once

#include "afw/cohomology.hpp"
#include "afw/monodromy.hpp"

namespace afw {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct DiscontinuousError : std::runtime_error {
  explicit DiscontinuousError(const std::string& m) : std::runtime_error(m) {}
};

struct NotStrictlyConvexError : std::runtime_error {
  explicit NotStrictlyConvexError(const std::string& m)
      : std::runtime_error(m) {}
};

struct InconsistentOnOverlapsError : std::runtime_error {
  explicit InconsistentOnOverlapsError(const std::string& m)
      : std::runtime_error(m) {}
};

struct NotReflexiveError : std::runtime_error {
  explicit NotReflexiveError(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// MPLFunction
// ---------------------------------------------------------------------------
//
// A multi-valued piecewise linear function is a choice, at every vertex class
// v, of an integral piecewise linear function on the vertex fan Sigma_v,
// normalized to vanish at the origin.  It is stored by its slope covector on
// each maximal cone, keyed by the corresponding maximal vertex germ (the
// chain class of (v < sigma)).  No constraint ties different vertices: the
// sheaf is a quotient modulo affine functions, and the stars of distinct
// vertices do not meet.

struct MPLFunction {
  std::map<size_t, Vec> slope;  // maximal vertex germ chain class -> covector
                                // in the vertex-fan coordinates
};

// All maximal vertex germ chain classes (v < sigma).
inline std::vector<size_t> maximal_vertex_germ_classes(
    const AffineComplex& cx) {
  std::vector<size_t> out;
  for (size_t c = 0; c < cx.n_chains; ++c)
    if (cx.chain_len(c) == 2 && cx.cell_dim[cx.chain_cells[c][0]] == 0 &&
        cx.cell_dim[cx.chain_cells[c][1]] == int(cx.n))
      out.push_back(c);
  return out;
}

namespace detail {

inline const Vec& mpl_slope(const MPLFunction& phi, size_t germ) {
  auto it = phi.slope.find(germ);
  if (it == phi.slope.end())
    throw std::invalid_argument("MPLFunction: slope missing for germ " +
                                std::to_string(germ));
  return it->second;
}

// All germ classes (v < tau) at a vertex class, including the identity.
inline std::vector<size_t> germs_at_vertex_class(const AffineComplex& cx,
                                                 size_t v) {
  std::vector<size_t> out = {cx.identity_morphism(v)};
  for (size_t c = 0; c < cx.n_chains; ++c)
    if (cx.chain_len(c) == 2 && cx.chain_cells[c][0] == v) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Strict convexity of a piecewise linear function on a complete fan
// ---------------------------------------------------------------------------

// Strict convexity: the maximal domains of linearity are exactly the maximal
// cones; equivalently <n_c, y> < f(y) for every maximal cone c and every fan
// ray y not lying in c (checking rays suffices by conic combination).
inline bool pl_is_strictly_convex(const PLOnFan& f) {
  if (!pl_is_continuous(f)) return false;
  const FanZ& F = *f.fan;
  for (const auto& [ci, si] : f.slopes)
    for (size_t r = 0; r < F.rays.size(); ++r) {
      if (std::binary_search(F.cones[ci].begin(), F.cones[ci].end(), r))
        continue;
      Int fy;
      bool found = false;
      for (const auto& [cj, sj] : f.slopes)
        if (std::binary_search(F.cones[cj].begin(), F.cones[cj].end(), r)) {
          fy = dot(sj, F.rays[r]);
          found = true;
          break;
        }
      if (!found) continue;
      if (dot(si, F.rays[r]) >= fy) return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// The induced function on the quotient fan of a cell
// ---------------------------------------------------------------------------
//
// For a cell tau, pick the least vertex germ f : v -> tau.  The fan of tau is
// the quotient of Sigma_v by the cone of f; the function descends after
// subtracting the slope of a base maximal germ, because any two slopes over
// tau agree on the tangent directions of tau.

struct CellFanFunction {
  size_t tau = 0;
  size_t base_vertex_germ = 0;  // f : v -> tau
  size_t base_max_germ = 0;     // e0 : tau -> sigma0 (least class id)
  FanZ fan;                     // in Z^{n - dim tau}
  IntMat proj;                  // vertex-fan coords -> quotient coords
  std::map<size_t, size_t> cone_of_germ;  // morphism tau -> sigma  =>  cone
  std::map<size_t, Vec> slopes;           // maximal cone index -> slope

  PLOnFan pl() const { return PLOnFan{&fan, slopes}; }
};

inline CellFanFunction mpl_phi_tau(const AffineComplex& cx,
                                   const MPLFunction& phi, size_t tau) {
  size_t n = cx.n;
  CellFanFunction out;
  out.tau = tau;

  if (cx.cell_dim[tau] == int(n)) {
    // Trivial quotient: a point fan.
    out.base_vertex_germ = vertex_germs(cx, tau).front();
    out.base_max_germ = cx.identity_morphism(tau);
    out.fan.ambient_rank = 0;
    out.fan.cones.push_back({});
    out.fan.maximal.assign(1, true);
    out.proj = IntMat(0, n);
    out.cone_of_germ[out.base_max_germ] = 0;
    out.slopes[0] = Vec{};
    return out;
  }

  size_t f = vertex_germs(cx, tau).front();
  out.base_vertex_germ = f;
  size_t v = cx.chain_cells[f][0];
  const FanZ& vfan = cx.spec.fans[cx.fan_of_vertex_class[v]].fan;

  auto maxg = maximal_germs(cx, tau);  // sorted, non-empty
  out.base_max_germ = maxg.front();

  if (cx.cell_dim[tau] == 0) {
    out.fan = vfan;
    out.proj = IntMat::identity(n);
    for (size_t e : maxg) {
      size_t cone = cx.germ_cone.at(e);
      out.cone_of_germ[e] = cone;
      const Vec& s = detail::mpl_slope(phi, e);
      auto it = out.slopes.find(cone);
      if (it != out.slopes.end() && it->second != s)
        throw std::logic_error("mpl_phi_tau: conflicting slopes on a cone");
      out.slopes[cone] = s;
    }
    return out;
  }

  // Quotient projection killing the tangent directions of tau (spanned by
  // the rays of the cone of f in Sigma_v).
  size_t fcone = cx.germ_cone.at(f);
  std::vector<Vec> tgens;
  for (size_t r : vfan.cones[fcone]) tgens.push_back(vfan.rays[r]);
  SNF s = smith_normal_form(IntMat::from_columns(tgens));
  size_t k = 0;
  for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
    if (s.D(i, i) != 0) ++k;
  IntMat proj(n - k, n);
  for (size_t i = 0; i + k < n; ++i)
    for (size_t j = 0; j < n; ++j) proj(i, j) = s.U(i + k, j);
  out.proj = proj;

  auto project_cone = [&](size_t cone_idx) {
    std::vector<Vec> gens;
    for (size_t ri : vfan.cones[cone_idx]) {
      Vec img = mat_apply(proj, vfan.rays[ri]);
      if (!is_zero(img)) gens.push_back(img);
    }
    std::vector<Vec> ex = cone_extreme_rays(RationalCone(n - k, gens));
    std::sort(ex.begin(), ex.end(), lex_less);
    return ex;
  };

  std::vector<std::vector<Vec>> max_gens;
  for (size_t e : maxg)
    max_gens.push_back(project_cone(cx.germ_cone.at(cx.compose(f, e))));
  out.fan = make_fan(n - k, max_gens);

  auto cone_in_fan = [&](const std::vector<Vec>& rays) {
    std::vector<size_t> set;
    for (const auto& x : rays) {
      Vec p = primitive_directed(x);
      bool found = false;
      for (size_t i = 0; i < out.fan.rays.size(); ++i)
        if (out.fan.rays[i] == p) {
          set.push_back(i);
          found = true;
          break;
        }
      if (!found) throw std::logic_error("mpl_phi_tau: projected ray missing");
    }
    std::sort(set.begin(), set.end());
    size_t idx = out.fan.cone_index(set);
    if (idx == size_t(-1))
      throw std::logic_error("mpl_phi_tau: projected cone missing");
    return idx;
  };

  IntMat projT = proj.transpose();
  const Vec& n0 = detail::mpl_slope(phi, cx.compose(f, out.base_max_germ));
  for (size_t i = 0; i < maxg.size(); ++i) {
    size_t e = maxg[i];
    size_t cone = cone_in_fan(max_gens[i]);
    out.cone_of_germ[e] = cone;
    Vec rel = vec_sub(detail::mpl_slope(phi, cx.compose(f, e)), n0);
    auto w = solve_integral(projT, rel);
    if (!w)
      throw DiscontinuousError(
          "mpl_phi_tau: slope difference does not annihilate the tangent "
          "space of cell " +
          std::to_string(tau));
    auto it = out.slopes.find(cone);
    if (it != out.slopes.end() && it->second != *w)
      throw std::logic_error("mpl_phi_tau: conflicting slopes on a cone");
    out.slopes[cone] = *w;
  }
  return out;
}

// The kink of phi across a codimension-1 cell rho: phi_rho(r+) + phi_rho(r-)
// for the two (opposite) rays of the 1-dimensional quotient fan.  Linear
// renormalizations cancel because r+ + r- = 0.
inline Int mpl_kink(const AffineComplex& cx, const MPLFunction& phi,
                    size_t rho) {
  if (cx.cell_dim[rho] != int(cx.n) - 1)
    throw std::invalid_argument("mpl_kink: not a codimension-1 cell");
  CellFanFunction pt = mpl_phi_tau(cx, phi, rho);
  if (pt.fan.rays.size() != 2)
    throw std::logic_error("mpl_kink: quotient fan is not a line");
  PLOnFan f = pt.pl();
  return f.value(pt.fan.rays[0]) + f.value(pt.fan.rays[1]);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct MPLReport {
  bool continuity = true;
  bool integrality = true;  // inherent to the integral-slope representation
  bool convexity = true;
  bool strict_convexity = true;
  std::string witness;
};

inline MPLReport mpl_validate(const AffineComplex& cx, const MPLFunction& phi) {
  MPLReport rep;
  // Every maximal vertex germ must carry a slope (precondition).
  for (size_t e : maximal_vertex_germ_classes(cx)) detail::mpl_slope(phi, e);

  // Continuity at every vertex: adjacent slopes agree on shared cone rays.
  for (size_t v = 0; v < cx.n_cells; ++v) {
    if (cx.cell_dim[v] != 0) continue;
    CellFanFunction pv;
    pv.tau = v;  // assemble the vertex function directly (no descent needed)
    const FanZ& vfan = cx.spec.fans[cx.fan_of_vertex_class[v]].fan;
    std::map<size_t, Vec> slopes;
    for (size_t e : maximal_germs(cx, v))
      slopes[cx.germ_cone.at(e)] = detail::mpl_slope(phi, e);
    PLOnFan f{&vfan, slopes};
    if (!pl_is_continuous(f)) {
      rep.continuity = false;
      rep.convexity = false;
      rep.strict_convexity = false;
      rep.witness = "discontinuous across a wall of the fan at vertex cell " +
                    std::to_string(v);
      return rep;
    }
  }

  for (size_t tau = 0; tau < cx.n_cells; ++tau) {
    CellFanFunction pt = mpl_phi_tau(cx, phi, tau);
    PLOnFan f = pt.pl();
    if (!pl_is_convex(f)) {
      rep.convexity = false;
      rep.strict_convexity = false;
      if (rep.witness.empty())
        rep.witness = "not convex on the fan of cell " + std::to_string(tau);
    } else if (!pl_is_strictly_convex(f)) {
      rep.strict_convexity = false;
      if (rep.witness.empty())
        rep.witness =
            "not strictly convex on the fan of cell " + std::to_string(tau);
    }
  }
  return rep;
}

// Equality in the quotient modulo one linear function per vertex.
inline bool mpl_equal(const AffineComplex& cx, const MPLFunction& a,
                      const MPLFunction& b) {
  for (size_t v = 0; v < cx.n_cells; ++v) {
    if (cx.cell_dim[v] != 0) continue;
    bool have = false;
    Vec delta;
    for (size_t e : maximal_germs(cx, v)) {
      Vec d = vec_sub(detail::mpl_slope(a, e), detail::mpl_slope(b, e));
      if (!have) {
        delta = d;
        have = true;
      } else if (d != delta) {
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Polarization-induced function
// ---------------------------------------------------------------------------

// Coefficients are given per edge germ (v < omega), one value on each ray of
// every vertex fan; on each maximal cone they must extend to an integral
// linear function.
inline MPLFunction mpl_from_polarization(const AffineComplex& cx,
                                         const std::map<size_t, Int>& coeff) {
  MPLFunction phi;
  for (size_t v = 0; v < cx.n_cells; ++v) {
    if (cx.cell_dim[v] != 0) continue;
    const FanZ& vfan = cx.spec.fans[cx.fan_of_vertex_class[v]].fan;
    // Ray index -> edge germ class.
    std::map<size_t, size_t> germ_of_ray;
    for (size_t g : detail::germs_at_vertex_class(cx, v)) {
      size_t cone = cx.germ_cone.at(g);
      if (vfan.cones[cone].size() == 1 && fan_cone_dim(vfan, cone) == 1)
        germ_of_ray[vfan.cones[cone][0]] = g;
    }
    for (size_t e : maximal_germs(cx, v)) {
      size_t cone = cx.germ_cone.at(e);
      std::vector<Vec> rows;
      Vec rhs;
      for (size_t ri : vfan.cones[cone]) {
        auto git = germ_of_ray.find(ri);
        if (git == germ_of_ray.end())
          throw std::logic_error(
              "mpl_from_polarization: fan ray without an edge germ");
        auto cit = coeff.find(git->second);
        if (cit == coeff.end())
          throw std::invalid_argument(
              "mpl_from_polarization: missing coefficient for edge germ " +
              std::to_string(git->second));
        rows.push_back(vfan.rays[ri]);
        rhs.push_back(cit->second);
      }
      auto nvec = solve_integral(IntMat::from_rows(rows), rhs);
      if (!nvec)
        throw InconsistentOnOverlapsError(
            "ray coefficients on the cone of germ " + std::to_string(e) +
            " admit no integral linear extension");
      phi.slope[e] = *nvec;
    }
  }
  return phi;
}

// ---------------------------------------------------------------------------
// First Chern cocycle
// ---------------------------------------------------------------------------
//
// Choose, per cell tau, the single-valued local representative transported
// from the least vertex germ of tau.  On the overlap component of a pair
// (tau0 < tau1), the difference of representative slopes is a flat integral
// covector: the Cech boundary of phi in H^1(W, i_* Lambda-check).

namespace detail {

// Gradient, in the polytope coordinates of the chain N's realization, of the
// canonical single-valued representative of phi over W_tau (tau at position
// pos in N), evaluated in the chamber of N.  The representative is the
// descended function of the quotient fan of tau, normalized against the
// least maximal germ of tau; its gradient on the chamber through a germ
// e : tau -> sigma0 is n_{f e} - n_{f e_base} on the vertex fan.
inline Vec mpl_lift_gradient(const AffineComplex& cx, const MPLFunction& phi,
                             size_t N, size_t pos) {
  size_t L = cx.chain_len(N);
  size_t tau = cx.chain_cells[N][pos];
  size_t f = vertex_germs(cx, tau).front();
  size_t e = (pos + 1 == L) ? cx.identity_morphism(tau)
                            : cx.subchain(N, {pos, L - 1});
  size_t g = cx.compose(f, e);
  size_t gb = cx.compose(f, maximal_germs(cx, tau).front());
  Vec rel = vec_sub(mpl_slope(phi, g), mpl_slope(phi, gb));
  return mat_apply_left(rel, cx.chart(g).linear);
}

}  // namespace detail

inline Vec c1_cochain(const AffineComplex& cx, const MPLFunction& phi,
                      const CechComplexW& W) {
  if (W.sheaf != WSheaf::LambdaCheck)
    throw std::invalid_argument("c1_cochain: LambdaCheck Cech complex "
                                "required");
  Vec out(W.C.ranks.size() > 1 ? W.C.ranks[1] : 0, Int(0));
  if (W.simplices.size() < 2) return out;
  for (size_t Cc : W.simplices[1]) {
    size_t N = W.base.at(Cc);
    Vec v = vec_sub(detail::mpl_lift_gradient(cx, phi, N, 1),
                    detail::mpl_lift_gradient(cx, phi, N, 0));
    const auto& b = W.basis.at(Cc);
    if (b.empty()) {
      if (!is_zero(v))
        throw std::logic_error("c1_cochain: value is not a section");
      continue;
    }
    auto coords = solve_integral(detail::mat_of_columns(W.secdim, b), v);
    if (!coords)
      throw std::logic_error("c1_cochain: value is not a section");
    for (size_t j = 0; j < b.size(); ++j)
      out[W.offset.at(Cc) + j] = (*coords)[j];
  }
  if (!is_cocycle(W, 1, out))
    throw std::logic_error("c1_cochain: cocycle condition fails");
  return out;
}

// ---------------------------------------------------------------------------
// Discrete Legendre transform
// ---------------------------------------------------------------------------

struct LegendreOutput {
  AffineComplex dual;       // (B-check, P-check) with its vertex fans
  MPLFunction phi_check;    // slopes -w on the normal cone of vertex w
  std::vector<size_t> poly_of_vertex;  // input vertex cell -> dual polytope
  std::vector<size_t> vertex_of_poly;  // dual polytope -> input vertex cell
  std::vector<size_t> cell_to_dual;    // input cell -> dual cell class
  std::map<size_t, size_t> dual_germ;  // input max vertex germ -> dual one
  std::map<size_t, size_t> germ_face;  // input germ (v < tau) -> dual local
                                       // face id of the face of v-check
  std::map<size_t, size_t> face_germ;  // inverse of germ_face
};

inline LegendreOutput discrete_legendre(const AffineComplex& cx,
                                        const MPLFunction& phi) {
  size_t n = cx.n;
  if (cx.has_boundary)
    throw NonCompactError("discrete_legendre: complex has boundary");
  {
    MPLReport rep = mpl_validate(cx, phi);
    if (!rep.continuity) throw DiscontinuousError(rep.witness);
    if (!rep.strict_convexity) throw NotStrictlyConvexError(rep.witness);
  }

  LegendreOutput out;
  out.poly_of_vertex.assign(cx.n_cells, size_t(-1));

  // ---- maximal dual cells: Newton polytopes at vertices ----
  std::vector<size_t> vclasses;
  for (size_t v = 0; v < cx.n_cells; ++v)
    if (cx.cell_dim[v] == 0) vclasses.push_back(v);

  ComplexSpec spec;
  spec.dim = n;
  std::map<size_t, size_t> vtx_of_germ;  // input max germ -> vertex index
  for (size_t v : vclasses) {
    out.poly_of_vertex[v] = spec.polytopes.size();
    out.vertex_of_poly.push_back(v);
    auto germs = maximal_germs(cx, v);
    std::vector<Vec> pts;
    for (size_t e : germs) pts.push_back(vec_neg(detail::mpl_slope(phi, e)));
    LatticePolytope nv = make_polytope(n, pts);
    if (nv.dim != int(n) || nv.vertices.size() != germs.size())
      throw NotStrictlyConvexError(
          "Newton polytope at vertex cell " + std::to_string(v) +
          " does not have one vertex per maximal germ");
    for (size_t e : germs) {
      Vec p = vec_neg(detail::mpl_slope(phi, e));
      size_t idx = size_t(-1);
      for (size_t i = 0; i < nv.vertices.size(); ++i)
        if (nv.vertices[i] == p) idx = i;
      if (idx == size_t(-1))
        throw NotStrictlyConvexError("slope is not a Newton vertex");
      vtx_of_germ[e] = idx;
    }
    spec.polytopes.push_back(nv);
  }

  // ---- faces of the Newton polytopes <-> germs at the vertex ----
  // face_key[(poly, face_idx)] = germ class, filled per vertex.
  std::map<std::pair<size_t, size_t>, size_t> face_key;
  std::map<size_t, std::pair<size_t, size_t>> germ_face_local;
  auto face_of_germ = [&](size_t v, size_t f) -> size_t {
    auto it = germ_face_local.find(f);
    if (it != germ_face_local.end()) return it->second.second;
    size_t tau = cx.is_identity_morphism(f) ? cx.chain_cells[f][0]
                                            : cx.chain_cells[f][1];
    std::vector<size_t> verts;
    for (size_t m : maximal_germs(cx, tau))
      verts.push_back(vtx_of_germ.at(cx.compose(f, m)));
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    size_t poly = out.poly_of_vertex[v];
    size_t idx = spec.polytopes[poly].face_index(verts);
    if (idx == size_t(-1))
      throw NotStrictlyConvexError(
          "germ " + std::to_string(f) +
          " does not select a face of the Newton polytope");
    germ_face_local[f] = {poly, idx};
    auto [fit, fresh] = face_key.insert({{poly, idx}, f});
    if (!fresh && fit->second != f)
      throw NotStrictlyConvexError("two germs select one Newton face");
    return idx;
  };
  for (size_t v : vclasses) {
    auto germs = detail::germs_at_vertex_class(cx, v);
    for (size_t f : germs) face_of_germ(v, f);
    // Bijection: one germ per non-empty face.
    size_t nonempty = 0;
    for (const auto& fc : spec.polytopes[out.poly_of_vertex[v]].faces)
      if (fc.dim >= 0) ++nonempty;
    if (nonempty != germs.size())
      throw NotStrictlyConvexError(
          "Newton faces and germs do not biject at vertex cell " +
          std::to_string(v));
  }

  // ---- facet identifications: one per 1-cell, by the translation functor --
  for (size_t omega = 0; omega < cx.n_cells; ++omega) {
    if (cx.cell_dim[omega] != 1) continue;
    auto ends = vertex_germs(cx, omega);
    if (ends.size() != 2)
      throw std::logic_error(
          "discrete_legendre: 1-cell without two endpoint germ classes");
    size_t fp = ends[0], fm = ends[1];
    size_t vp = cx.chain_cells[fp][0], vm = cx.chain_cells[fm][0];
    auto maxg = maximal_germs(cx, omega);
    size_t e0 = maxg.front();
    size_t gp = cx.compose(fp, e0), gm = cx.compose(fm, e0);
    IntMat Ap = cx.chart(gp).linear, Am = cx.chart(gm).linear;
    // Covector transport fan_{vp}-dual -> fan_{vm}-dual through sigma0.
    IntMat L = mat_mul(Ap, unimodular_inverse(Am)).transpose();
    Vec t = vec_sub(vec_neg(detail::mpl_slope(phi, gm)),
                    mat_apply(L, vec_neg(detail::mpl_slope(phi, gp))));
    AffMapZ T(L, t);
    // The translation functor must match every maximal germ of omega.
    for (size_t e : maxg) {
      Vec a = vec_neg(detail::mpl_slope(phi, cx.compose(fp, e)));
      Vec b = vec_neg(detail::mpl_slope(phi, cx.compose(fm, e)));
      if (T.apply(a) != b)
        throw std::logic_error(
            "discrete_legendre: translation functor mismatch on 1-cell " +
            std::to_string(omega));
    }
    Identification id;
    id.poly_from = out.poly_of_vertex[vp];
    id.poly_to = out.poly_of_vertex[vm];
    {
      size_t fidx = face_of_germ(vp, fp);
      id.verts_from = spec.polytopes[id.poly_from].faces[fidx].verts;
      size_t gidx = face_of_germ(vm, fm);
      id.verts_to = spec.polytopes[id.poly_to].faces[gidx].verts;
    }
    id.map = T;
    spec.identifications.push_back(id);
  }

  // ---- vertex fans of the dual: normal fans of the maximal cells ----
  for (size_t sigma = 0; sigma < cx.n_cells; ++sigma) {
    if (cx.cell_dim[sigma] != int(n)) continue;
    size_t psig = cx.cell_rep[sigma].poly;
    const LatticePolytope& P = cx.spec.polytopes[psig];
    VertexFanSpec vf;
    vf.fan = normal_fan(P);
    bool first = true;
    for (size_t c = 0; c < cx.n_chains; ++c) {
      if (cx.chain_len(c) != 2) continue;
      if (cx.chain_cells[c][1] != sigma) continue;
      if (cx.cell_dim[cx.chain_cells[c][0]] != 0) continue;
      size_t v = cx.chain_cells[c][0];
      const auto& corner = cx.corners[cx.corner_of_germ.at(c)];
      size_t vface = detail::vertex_face_of(P, corner.vertex);
      size_t cone = normal_cone_of_face(P, vf.fan, vface);
      std::pair<size_t, size_t> pv = {out.poly_of_vertex[v],
                                      vtx_of_germ.at(c)};
      if (first) {
        vf.poly = pv.first;
        vf.vertex = pv.second;
        first = false;
      }
      vf.corner_to_cone.push_back({pv, cone});
    }
    if (first)
      throw std::logic_error("discrete_legendre: maximal cell without "
                             "vertex germs");
    spec.fans.push_back(vf);
  }

  out.dual = build_complex(spec);

  // ---- identification maps between the categories ----
  for (const auto& [f, pf] : germ_face_local) {
    size_t lf = out.dual.local_face_id.at({pf.first, pf.second});
    out.germ_face[f] = lf;
    out.face_germ[lf] = f;
  }
  out.cell_to_dual.assign(cx.n_cells, size_t(-1));
  for (size_t tau = 0; tau < cx.n_cells; ++tau) {
    size_t cls = size_t(-1);
    for (size_t f : vertex_germs(cx, tau)) {
      size_t lf = out.germ_face.at(f);
      size_t c2 = out.dual.face_cell[lf];
      if (cls == size_t(-1)) cls = c2;
      else if (cls != c2)
        throw std::logic_error(
            "discrete_legendre: dual cell class disagrees across vertex "
            "germs");
    }
    out.cell_to_dual[tau] = cls;
    if (out.dual.cell_dim[cls] != int(n) - cx.cell_dim[tau])
      throw std::logic_error("discrete_legendre: dual dimension mismatch");
  }

  // ---- dual germs and the dual function ----
  for (const auto& [e, vi] : vtx_of_germ) {
    size_t v = cx.chain_cells[e][0];
    size_t poly = out.poly_of_vertex[v];
    const LatticePolytope& NP = spec.polytopes[poly];
    size_t vface = detail::vertex_face_of(NP, vi);
    size_t topf = size_t(-1);
    for (size_t g = 0; g < NP.faces.size(); ++g)
      if (NP.faces[g].dim == int(n)) topf = g;
    LocalChain lc;
    lc.poly = poly;
    lc.faces = {vface, topf};
    size_t ec = out.dual.chain_class_of.at(lc);
    out.dual_germ[e] = ec;
    const auto& corner = cx.corners[cx.corner_of_germ.at(e)];
    const LatticePolytope& P = cx.spec.polytopes[corner.poly];
    out.phi_check.slope[ec] = vec_neg(P.vcoords[corner.vertex]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// c1 versus the radiance obstruction of the transform
// ---------------------------------------------------------------------------
//
// Under the canonical identification of the barycentric covers (pairs map
// contravariantly) and of tangent with cotangent data (charts dualize), the
// first Chern cocycle of phi represents the radiance obstruction class of
// the dual complex.

inline bool c1_matches_dual_radiance(const AffineComplex& cx,
                                     const MPLFunction& phi,
                                     const LegendreOutput& out) {
  CechComplexW Win = cech_W_complex(cx, WSheaf::LambdaCheck);
  Vec a = c1_cochain(cx, phi, Win);
  CechComplexW Wd = cech_W_complex(out.dual, WSheaf::Lambda);
  Vec r = radiance_cocycle(out.dual, Wd);
  Vec theta(Wd.C.ranks.size() > 1 ? Wd.C.ranks[1] : 0, Int(0));

  for (size_t Cc : Win.simplices[1]) {
    Vec u = cochain_value(Win, a, Cc);
    size_t tau0 = cx.chain_cells[Cc][0];
    // Dual pair class via a common vertex germ.
    size_t f0 = vertex_germs(cx, tau0).front();
    size_t v = cx.chain_cells[f0][0];
    size_t N = Win.base.at(Cc);  // (tau0 < tau1 < ... < sigma0)
    size_t L = cx.chain_len(N);
    size_t tau1 = cx.chain_cells[N][1];
    size_t m01 = cx.subchain(N, {0, 1});
    size_t m1top = (L == 2) ? cx.identity_morphism(tau1)
                            : cx.subchain(N, {1, L - 1});
    size_t f1 = cx.compose(f0, m01);
    LocalChain dlc;
    dlc.poly = out.poly_of_vertex[v];
    {
      const LocalFace& a1 = out.dual.local_faces[out.germ_face.at(f1)];
      const LocalFace& a0 = out.dual.local_faces[out.germ_face.at(f0)];
      dlc.faces = {a1.face, a0.face};
    }
    size_t Dc = out.dual.chain_class_of.at(dlc);
    // Dual base node: recover the vertex germ fw0 : w -> tau0 whose Newton
    // face is the second entry of the dual base chain.
    size_t Nd = Wd.base.at(Dc);
    const LocalChain& drep = out.dual.chain_reps[Nd];
    size_t fw0 = out.face_germ.at(
        out.dual.local_face_id.at({drep.poly, drep.faces[1]}));
    size_t g = cx.compose(cx.compose(fw0, m01), m1top);
    IntMat Ainv = unimodular_inverse(cx.chart(g).linear);
    Vec ud = mat_apply_left(u, Ainv);
    const auto& b = Wd.basis.at(Dc);
    if (b.empty()) {
      if (!is_zero(ud)) return false;
      continue;
    }
    auto coords = solve_integral(detail::mat_of_columns(Wd.secdim, b), ud);
    if (!coords) return false;
    for (size_t j = 0; j < b.size(); ++j)
      theta[Wd.offset.at(Dc) + j] = (*coords)[j];
  }
  if (!is_cocycle(Wd, 1, theta)) return false;
  // The pair identification reverses inclusions (tau0 < tau1 maps to
  // dual-of-tau1 < dual-of-tau0), so with our orientation of both cocycles
  // the transported class is minus the radiance class.
  Vec diff = theta;
  for (size_t i = 0; i < diff.size(); ++i) diff[i] += r[i];
  return is_coboundary(Wd, 1, diff);
}

// ---------------------------------------------------------------------------
// Integral isomorphism of complexes
// ---------------------------------------------------------------------------

namespace detail {

// All affine unimodular maps carrying the vertex set of P onto that of Q.
inline std::vector<AffMapZ> polytope_affine_isos(const LatticePolytope& P,
                                                 const LatticePolytope& Q) {
  std::vector<AffMapZ> out;
  if (P.ambient_rank != Q.ambient_rank) return out;
  if (P.vertices.size() != Q.vertices.size()) return out;
  size_t n = P.ambient_rank;
  // Affinely independent spine of P.
  std::vector<size_t> spine = {0};
  std::vector<Vec> diffs;
  for (size_t i = 1; i < P.vertices.size() && diffs.size() < n; ++i) {
    std::vector<Vec> trial = diffs;
    trial.push_back(vec_sub(P.vertices[i], P.vertices[0]));
    if (rank(IntMat::from_columns(trial)) == trial.size()) {
      diffs = trial;
      spine.push_back(i);
    }
  }
  if (diffs.size() != n) return out;  // P not full-dimensional
  IntMat VT = IntMat::from_columns(diffs).transpose();

  std::set<size_t> used;
  std::vector<size_t> img(spine.size());
  std::set<std::pair<std::vector<Vec>, Vec>> seen;
  std::function<void(size_t)> rec = [&](size_t k) {
    if (k == spine.size()) {
      std::vector<Vec> wd;
      for (size_t j = 1; j < spine.size(); ++j)
        wd.push_back(vec_sub(Q.vertices[img[j]], Q.vertices[img[0]]));
      IntMat L(n, n);
      for (size_t rrow = 0; rrow < n; ++rrow) {
        Vec rhs(n);
        for (size_t j = 0; j < n; ++j) rhs[j] = wd[j][rrow];
        auto sol = solve_integral(VT, rhs);
        if (!sol) return;
        for (size_t c = 0; c < n; ++c) L(rrow, c) = (*sol)[c];
      }
      Int d = det(L);
      if (d != 1 && d != -1) return;
      Vec t = vec_sub(Q.vertices[img[0]], mat_apply(L, P.vertices[0]));
      AffMapZ T(L, t);
      // Vertex sets must correspond bijectively.
      std::set<Vec> qset(Q.vertices.begin(), Q.vertices.end());
      for (const auto& pv : P.vertices)
        if (!qset.count(T.apply(pv))) return;
      std::vector<Vec> cols;
      for (size_t c = 0; c < n; ++c) cols.push_back(L.col(c));
      if (seen.insert({cols, t}).second) out.push_back(T);
      return;
    }
    for (size_t j = 0; j < Q.vertices.size(); ++j) {
      if (used.count(j)) continue;
      used.insert(j);
      img[k] = j;
      rec(k + 1);
      used.erase(j);
    }
  };
  rec(0);
  return out;
}

}  // namespace detail

struct ComplexIso {
  bool found = false;
  std::vector<size_t> poly_map;   // cx1 polytope index -> cx2 polytope index
  std::vector<AffMapZ> poly_affine;  // per cx1 polytope
  // Per cx1 vertex class: the induced linear map of vertex fans.
  std::map<size_t, IntMat> fan_map;
};

inline ComplexIso find_complex_isomorphism(const AffineComplex& cx1,
                                           const AffineComplex& cx2) {
  ComplexIso iso;
  if (cx1.n != cx2.n) return iso;
  size_t nP = cx1.spec.polytopes.size();
  if (nP != cx2.spec.polytopes.size()) return iso;
  if (cx1.n_cells != cx2.n_cells) return iso;
  for (int d = 0; d <= int(cx1.n); ++d) {
    size_t a = 0, b = 0;
    for (size_t c = 0; c < cx1.n_cells; ++c) if (cx1.cell_dim[c] == d) ++a;
    for (size_t c = 0; c < cx2.n_cells; ++c) if (cx2.cell_dim[c] == d) ++b;
    if (a != b) return iso;
  }

  // Candidate maps per polytope pair.
  std::vector<std::vector<std::vector<AffMapZ>>> cand(nP);
  for (size_t p = 0; p < nP; ++p) {
    cand[p].resize(nP);
    for (size_t q = 0; q < nP; ++q)
      cand[p][q] = detail::polytope_affine_isos(cx1.spec.polytopes[p],
                                                cx2.spec.polytopes[q]);
  }

  std::vector<size_t> pmap(nP, size_t(-1));
  std::vector<AffMapZ> tmap(nP);
  std::vector<bool> used(nP, false);

  auto image_face = [&](size_t p, size_t f) -> size_t {
    const LatticePolytope& P = cx1.spec.polytopes[p];
    const LatticePolytope& Q = cx2.spec.polytopes[pmap[p]];
    std::vector<size_t> verts;
    for (size_t a : P.faces[f].verts) {
      Vec img = tmap[p].apply(P.vertices[a]);
      size_t idx = size_t(-1);
      for (size_t i = 0; i < Q.vertices.size(); ++i)
        if (Q.vertices[i] == img) idx = i;
      if (idx == size_t(-1)) return size_t(-1);
      verts.push_back(idx);
    }
    std::sort(verts.begin(), verts.end());
    return Q.face_index(verts);
  };

  // Consistency over the currently assigned polytopes.
  auto consistent = [&]() -> bool {
    std::map<size_t, size_t> fwd, bwd;  // cell class maps both ways
    for (size_t lf = 0; lf < cx1.local_faces.size(); ++lf) {
      size_t p = cx1.local_faces[lf].poly;
      if (pmap[p] == size_t(-1)) continue;
      size_t f2 = image_face(p, cx1.local_faces[lf].face);
      if (f2 == size_t(-1)) return false;
      size_t c1 = cx1.face_cell[lf];
      size_t c2 = cx2.face_cell[cx2.local_face_id.at({pmap[p], f2})];
      auto it = fwd.find(c1);
      if (it == fwd.end()) {
        if (bwd.count(c2)) return false;
        fwd[c1] = c2;
        bwd[c2] = c1;
      } else if (it->second != c2) {
        return false;
      }
    }
    // Corner fan maps must be well-defined per vertex class and carry fan1
    // onto fan2 cone-for-cone.
    std::map<size_t, IntMat> fmap;
    for (const auto& c : cx1.corners) {
      if (pmap[c.poly] == size_t(-1)) continue;
      const LatticePolytope& P = cx1.spec.polytopes[c.poly];
      Vec img = tmap[c.poly].apply(P.vertices[c.vertex]);
      const LatticePolytope& Q = cx2.spec.polytopes[pmap[c.poly]];
      size_t vi = size_t(-1);
      for (size_t i = 0; i < Q.vertices.size(); ++i)
        if (Q.vertices[i] == img) vi = i;
      if (vi == size_t(-1)) return false;
      auto it2 = cx2.corner_id.find({pmap[c.poly], vi});
      if (it2 == cx2.corner_id.end()) return false;
      const auto& c2 = cx2.corners[it2->second];
      IntMat Phi = mat_mul(
          c2.wedge_iso,
          mat_mul(tmap[c.poly].linear, unimodular_inverse(c.wedge_iso)));
      auto fit = fmap.find(c.vertex_cell);
      if (fit == fmap.end()) {
        // Phi must map the vertex fan of cx1 onto that of cx2.
        const FanZ& F1 =
            cx1.spec.fans[cx1.fan_of_vertex_class[c.vertex_cell]].fan;
        const FanZ& F2 =
            cx2.spec.fans[cx2.fan_of_vertex_class[c2.vertex_cell]].fan;
        if (F1.rays.size() != F2.rays.size()) return false;
        std::map<size_t, size_t> raymap;
        for (size_t r = 0; r < F1.rays.size(); ++r) {
          Vec rr = primitive_directed(mat_apply(Phi, F1.rays[r]));
          size_t idx = size_t(-1);
          for (size_t s = 0; s < F2.rays.size(); ++s)
            if (F2.rays[s] == rr) idx = s;
          if (idx == size_t(-1)) return false;
          raymap[r] = idx;
        }
        std::set<std::vector<size_t>> cones2(F2.cones.begin(),
                                             F2.cones.end());
        if (F1.cones.size() != F2.cones.size()) return false;
        for (const auto& cone : F1.cones) {
          std::vector<size_t> imgc;
          for (size_t r : cone) imgc.push_back(raymap.at(r));
          std::sort(imgc.begin(), imgc.end());
          if (!cones2.count(imgc)) return false;
        }
        fmap[c.vertex_cell] = Phi;
      } else if (fit->second != Phi) {
        return false;
      }
    }
    return true;
  };

  std::function<bool(size_t)> bt = [&](size_t p) -> bool {
    if (p == nP) return true;
    for (size_t q = 0; q < nP; ++q) {
      if (used[q]) continue;
      for (const auto& T : cand[p][q]) {
        pmap[p] = q;
        tmap[p] = T;
        used[q] = true;
        if (consistent() && bt(p + 1)) return true;
        used[q] = false;
        pmap[p] = size_t(-1);
      }
    }
    return false;
  };
  if (!bt(0)) return iso;

  iso.found = true;
  iso.poly_map = pmap;
  iso.poly_affine = tmap;
  for (const auto& c : cx1.corners) {
    if (iso.fan_map.count(c.vertex_cell)) continue;
    const LatticePolytope& P = cx1.spec.polytopes[c.poly];
    Vec img = tmap[c.poly].apply(P.vertices[c.vertex]);
    const LatticePolytope& Q = cx2.spec.polytopes[pmap[c.poly]];
    size_t vi = size_t(-1);
    for (size_t i = 0; i < Q.vertices.size(); ++i)
      if (Q.vertices[i] == img) vi = i;
    const auto& c2 = cx2.corners[cx2.corner_id.at({pmap[c.poly], vi})];
    iso.fan_map[c.vertex_cell] = mat_mul(
        c2.wedge_iso,
        mat_mul(tmap[c.poly].linear, unimodular_inverse(c.wedge_iso)));
  }
  return iso;
}

// Isomorphism of complexes carrying one multi-valued function to the other
// modulo a linear function per vertex.
inline bool mpl_isomorphic(const AffineComplex& cx1, const MPLFunction& phi1,
                           const AffineComplex& cx2, const MPLFunction& phi2) {
  ComplexIso iso = find_complex_isomorphism(cx1, cx2);
  if (!iso.found) return false;
  for (size_t v = 0; v < cx1.n_cells; ++v) {
    if (cx1.cell_dim[v] != 0) continue;
    const IntMat& Phi = iso.fan_map.at(v);
    bool have = false;
    Vec delta;
    for (size_t e : maximal_germs(cx1, v)) {
      const auto& c = cx1.corners[cx1.corner_of_germ.at(e)];
      const LatticePolytope& P = cx1.spec.polytopes[c.poly];
      Vec img = iso.poly_affine[c.poly].apply(P.vertices[c.vertex]);
      const LatticePolytope& Q = cx2.spec.polytopes[iso.poly_map[c.poly]];
      size_t vi = size_t(-1);
      for (size_t i = 0; i < Q.vertices.size(); ++i)
        if (Q.vertices[i] == img) vi = i;
      size_t e2 =
          cx2.corners[cx2.corner_id.at({iso.poly_map[c.poly], vi})].germ_chain;
      Vec d = vec_sub(mat_apply_left(detail::mpl_slope(phi2, e2), Phi),
                      detail::mpl_slope(phi1, e));
      if (!have) {
        delta = d;
        have = true;
      } else if (d != delta) {
        return false;
      }
    }
  }
  return true;
}

inline bool legendre_involution_check(const AffineComplex& cx,
                                      const MPLFunction& phi) {
  LegendreOutput once = discrete_legendre(cx, phi);
  LegendreOutput twice = discrete_legendre(once.dual, once.phi_check);
  return mpl_isomorphic(cx, phi, twice.dual, twice.phi_check);
}

// ---------------------------------------------------------------------------
// Boundary of a reflexive polytope
// ---------------------------------------------------------------------------

namespace detail {

struct FacetChart {
  size_t face = 0;   // face index in the ambient polytope
  Vec base;          // ambient base vertex (centered coordinates)
  IntMat basis;      // m x (m-1) tangent lattice basis (columns)
  LatticePolytope poly;
  std::map<Vec, size_t> vert_index;  // chart coords -> vertex index in poly
};

inline FacetChart facet_chart(const LatticePolytope& Xi, size_t face,
                              const Vec& center) {
  FacetChart fc;
  fc.face = face;
  const auto& fverts = Xi.faces[face].verts;
  std::vector<Vec> amb;
  for (size_t a : fverts) amb.push_back(vec_sub(Xi.vertices[a], center));
  fc.base = amb[0];
  std::vector<Vec> diffs;
  for (size_t i = 1; i < amb.size(); ++i)
    diffs.push_back(vec_sub(amb[i], fc.base));
  SNF s = smith_normal_form(IntMat::from_columns(diffs));
  size_t r = 0;
  for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
    if (s.D(i, i) != 0) ++r;
  IntMat Uinv = unimodular_inverse(s.U);
  std::vector<Vec> bas;
  for (size_t j = 0; j < r; ++j) bas.push_back(Uinv.col(j));
  fc.basis = IntMat::from_columns(bas);
  std::vector<Vec> coords;
  for (const auto& x : amb) {
    auto u = solve_integral(fc.basis, vec_sub(x, fc.base));
    if (!u) throw std::logic_error("facet_chart: vertex off the face lattice");
    coords.push_back(*u);
  }
  fc.poly = make_polytope(r, coords);
  for (size_t i = 0; i < coords.size(); ++i) {
    size_t idx = size_t(-1);
    for (size_t j = 0; j < fc.poly.vertices.size(); ++j)
      if (fc.poly.vertices[j] == coords[i]) idx = j;
    fc.vert_index[coords[i]] = idx;
  }
  return fc;
}

inline Vec facet_coords(const FacetChart& fc, const Vec& ambient) {
  auto u = solve_integral(fc.basis, vec_sub(ambient, fc.base));
  if (!u) throw std::logic_error("facet_coords: point off the face lattice");
  return *u;
}

// Quotient projection of the ambient lattice by a primitive vector.
inline IntMat quotient_by(const Vec& v) {
  size_t m = v.size();
  SNF s = smith_normal_form(IntMat::from_columns({v}));
  if (s.D(0, 0) != 1 && s.D(0, 0) != -1)
    throw std::logic_error("quotient_by: vector is not primitive");
  IntMat proj(m - 1, m);
  for (size_t i = 0; i + 1 < m; ++i)
    for (size_t j = 0; j < m; ++j) proj(i, j) = s.U(i + 1, j);
  return proj;
}

// Interior lattice points of a full-dimensional polytope.
inline std::vector<Vec> interior_lattice_points(const LatticePolytope& P) {
  std::vector<Vec> out;
  IntMat B = IntMat::from_columns(P.tangent_basis);
  for (const auto& x : lattice_points(P)) {
    auto u = solve_integral(B, vec_sub(x, P.base_vertex));
    if (!u) continue;
    bool strict = true;
    for (size_t f = 0; f < P.facet_normals.size() && strict; ++f)
      if (dot(P.facet_normals[f], *u) <= P.facet_offsets[f]) strict = false;
    if (strict) out.push_back(x);
  }
  return out;
}

// Check reflexivity about the given interior point; Xi must be full-dim.
inline void require_reflexive(const LatticePolytope& Xi, const Vec& center) {
  IntMat B = IntMat::from_columns(Xi.tangent_basis);
  auto uc = solve_integral(B, vec_sub(center, Xi.base_vertex));
  if (!uc) throw NotReflexiveError("interior point off the lattice");
  for (size_t f = 0; f < Xi.facet_normals.size(); ++f) {
    Int d = dot(Xi.facet_normals[f], *uc) - Xi.facet_offsets[f];
    if (d != 1)
      throw NotReflexiveError("facet at lattice distance " + d.str() +
                              " from the interior point");
  }
}

}  // namespace detail

// The boundary of a reflexive polytope as an affine complex: one chart per
// facet (inclusion of its tangent plane), vertex fans by projecting along the
// vertex, and ridge identifications induced by those projections.
inline ComplexSpec build_reflexive_boundary(const LatticePolytope& Xi) {
  size_t m = Xi.ambient_rank;
  if (Xi.dim != int(m) || m < 2)
    throw NotReflexiveError("polytope is not full-dimensional of rank >= 2");
  auto interior = detail::interior_lattice_points(Xi);
  if (interior.size() != 1)
    throw NotReflexiveError("interior lattice point count is " +
                            std::to_string(interior.size()));
  Vec z = interior[0];
  detail::require_reflexive(Xi, z);

  ComplexSpec S;
  S.dim = m - 1;

  auto facets = faces_of_dim(Xi, int(m) - 1);
  std::vector<detail::FacetChart> charts;
  std::map<size_t, size_t> poly_of_face;
  for (size_t f : facets) {
    poly_of_face[f] = charts.size();
    charts.push_back(detail::facet_chart(Xi, f, z));
    S.polytopes.push_back(charts.back().poly);
  }

  // Ridge identifications.
  for (size_t r : faces_of_dim(Xi, int(m) - 2)) {
    std::vector<size_t> in;
    for (size_t f : facets)
      if (face_leq(Xi.faces[r], Xi.faces[f])) in.push_back(f);
    if (in.size() != 2)
      throw std::logic_error("build_reflexive_boundary: ridge not on two "
                             "facets");
    const auto& c1 = charts[poly_of_face[in[0]]];
    const auto& c2 = charts[poly_of_face[in[1]]];
    // Project along the lex-least (centered) vertex of the ridge.
    Vec v0;
    {
      std::vector<Vec> rv;
      for (size_t a : Xi.faces[r].verts)
        rv.push_back(vec_sub(Xi.vertices[a], z));
      std::sort(rv.begin(), rv.end(), lex_less);
      v0 = rv[0];
    }
    IntMat q = detail::quotient_by(v0);
    IntMat qB2 = mat_mul(q, c2.basis);
    {
      Int d = det(qB2);
      if (d != 1 && d != -1)
        throw std::logic_error("build_reflexive_boundary: ridge projection "
                               "is not unimodular");
    }
    IntMat inv = unimodular_inverse(qB2);
    IntMat L = mat_mul(inv, mat_mul(q, c1.basis));
    Vec t = mat_apply(inv, mat_apply(q, vec_sub(c1.base, c2.base)));
    Identification id;
    id.poly_from = poly_of_face[in[0]];
    id.poly_to = poly_of_face[in[1]];
    id.map = AffMapZ(L, t);
    for (size_t a : Xi.faces[r].verts) {
      Vec x = vec_sub(Xi.vertices[a], z);
      Vec u1 = detail::facet_coords(c1, x);
      Vec u2 = detail::facet_coords(c2, x);
      if (id.map.apply(u1) != u2)
        throw std::logic_error("build_reflexive_boundary: ridge map does not "
                               "match on a vertex");
      id.verts_from.push_back(c1.vert_index.at(u1));
      id.verts_to.push_back(c2.vert_index.at(u2));
    }
    std::sort(id.verts_from.begin(), id.verts_from.end());
    std::sort(id.verts_to.begin(), id.verts_to.end());
    S.identifications.push_back(id);
  }

  // Vertex fans: project the face cones at the vertex along the vertex.
  for (size_t vi = 0; vi < Xi.vertices.size(); ++vi) {
    Vec v = vec_sub(Xi.vertices[vi], z);
    IntMat q = detail::quotient_by(v);
    std::vector<std::vector<Vec>> gens;
    std::vector<size_t> vfacets;
    for (size_t f : facets) {
      if (!std::binary_search(Xi.faces[f].verts.begin(),
                              Xi.faces[f].verts.end(), vi))
        continue;
      vfacets.push_back(f);
      std::vector<Vec> g;
      for (size_t a : Xi.faces[f].verts) {
        Vec img = mat_apply(q, vec_sub(vec_sub(Xi.vertices[a], z), v));
        if (!is_zero(img)) g.push_back(img);
      }
      gens.push_back(g);
    }
    VertexFanSpec vf;
    vf.fan = make_fan(m - 1, gens);
    bool first = true;
    for (size_t k = 0; k < vfacets.size(); ++k) {
      std::vector<Vec> ex = cone_extreme_rays(RationalCone(m - 1, gens[k]));
      std::vector<size_t> set;
      for (const auto& x : ex) {
        Vec p = primitive_directed(x);
        for (size_t ri = 0; ri < vf.fan.rays.size(); ++ri)
          if (vf.fan.rays[ri] == p) {
            set.push_back(ri);
            break;
          }
      }
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      size_t cone = vf.fan.cone_index(set);
      if (cone == size_t(-1))
        throw std::logic_error("build_reflexive_boundary: corner cone "
                               "missing from the fan");
      const auto& fc = charts[poly_of_face[vfacets[k]]];
      Vec u = detail::facet_coords(fc, v);
      std::pair<size_t, size_t> pv = {poly_of_face[vfacets[k]],
                                      fc.vert_index.at(u)};
      if (first) {
        vf.poly = pv.first;
        vf.vertex = pv.second;
        first = false;
      }
      vf.corner_to_cone.push_back({pv, cone});
    }
    S.fans.push_back(vf);
  }
  return S;
}

// The antipodal quotient of the boundary of a centrally symmetric reflexive
// polytope: one chart per antipodal facet pair.
inline ComplexSpec build_reflexive_boundary_quotient(
    const LatticePolytope& Xi) {
  size_t m = Xi.ambient_rank;
  if (Xi.dim != int(m) || m < 2)
    throw NotReflexiveError("polytope is not full-dimensional of rank >= 2");
  auto interior = detail::interior_lattice_points(Xi);
  if (interior.size() != 1)
    throw NotReflexiveError("interior lattice point count is " +
                            std::to_string(interior.size()));
  Vec z = interior[0];
  detail::require_reflexive(Xi, z);

  // Centered vertex set must be symmetric.
  std::set<Vec> vset;
  for (const auto& v : Xi.vertices) vset.insert(vec_sub(v, z));
  for (const auto& v : vset)
    if (!vset.count(vec_neg(v)))
      throw NotReflexiveError("polytope is not centrally symmetric");

  auto facets = faces_of_dim(Xi, int(m) - 1);
  auto centered_verts = [&](size_t f) {
    std::vector<Vec> out;
    for (size_t a : Xi.faces[f].verts)
      out.push_back(vec_sub(Xi.vertices[a], z));
    std::sort(out.begin(), out.end(), lex_less);
    return out;
  };
  auto negated = [&](std::vector<Vec> vs) {
    for (auto& v : vs) v = vec_neg(v);
    std::sort(vs.begin(), vs.end(), lex_less);
    return vs;
  };
  // Facet -> antipodal facet.
  std::map<size_t, size_t> antipode;
  for (size_t f : facets) {
    auto target = negated(centered_verts(f));
    for (size_t g : facets)
      if (centered_verts(g) == target) antipode[f] = g;
    if (!antipode.count(f))
      throw NotReflexiveError("facet without an antipodal facet");
  }
  // Keep the lex-least of each pair.
  std::map<size_t, std::pair<size_t, int>> rep;  // facet -> (kept facet, sign)
  std::vector<size_t> kept;
  for (size_t f : facets) {
    size_t g = antipode[f];
    if (centered_verts(f) <= centered_verts(g)) {
      rep[f] = {f, 1};
      kept.push_back(f);
    } else {
      rep[f] = {g, -1};
    }
  }

  ComplexSpec S;
  S.dim = m - 1;
  std::map<size_t, size_t> poly_of_kept;
  std::vector<detail::FacetChart> charts;
  for (size_t f : kept) {
    poly_of_kept[f] = charts.size();
    charts.push_back(detail::facet_chart(Xi, f, z));
    S.polytopes.push_back(charts.back().poly);
  }

  auto signed_coords = [&](const detail::FacetChart& fc, int s,
                           const Vec& centered) {
    // Chart coordinates of the point s * x lying on the kept facet.
    Vec p = s == 1 ? centered : vec_neg(centered);
    return detail::facet_coords(fc, p);
  };

  // Ridge identifications, one per antipodal ridge pair.
  std::set<std::vector<Vec>> done;
  for (size_t r : faces_of_dim(Xi, int(m) - 2)) {
    auto key1 = [&] {
      std::vector<Vec> out;
      for (size_t a : Xi.faces[r].verts)
        out.push_back(vec_sub(Xi.vertices[a], z));
      std::sort(out.begin(), out.end(), lex_less);
      return out;
    }();
    auto key2 = negated(key1);
    std::vector<Vec> key = std::min(key1, key2);
    if (!done.insert(key).second) continue;

    std::vector<size_t> in;
    for (size_t f : facets)
      if (face_leq(Xi.faces[r], Xi.faces[f])) in.push_back(f);
    if (in.size() != 2)
      throw std::logic_error("build_reflexive_boundary_quotient: ridge not "
                             "on two facets");
    auto [k1, s1] = rep[in[0]];
    auto [k2, s2] = rep[in[1]];
    const auto& c1 = charts[poly_of_kept[k1]];
    const auto& c2 = charts[poly_of_kept[k2]];
    Vec v0;
    {
      std::vector<Vec> rv = key1;
      v0 = rv[0];
    }
    IntMat q = detail::quotient_by(v0);
    // u1 on kept(k1) corresponds to the cover point s1 * (b1 + B1 u1) on
    // in[0]; its transition image x2 in aff(in[1]) has q x2 = q (s1 point);
    // the quotient image on kept(k2) is s2 * x2.
    IntMat B2s = c2.basis;
    Vec b2s = c2.base;
    if (s2 == -1) {
      for (size_t i = 0; i < B2s.rows; ++i)
        for (size_t j = 0; j < B2s.cols; ++j) B2s(i, j) = -B2s(i, j);
      b2s = vec_neg(b2s);
    }
    IntMat B1s = c1.basis;
    Vec b1s = c1.base;
    if (s1 == -1) {
      for (size_t i = 0; i < B1s.rows; ++i)
        for (size_t j = 0; j < B1s.cols; ++j) B1s(i, j) = -B1s(i, j);
      b1s = vec_neg(b1s);
    }
    IntMat qB2 = mat_mul(q, B2s);
    {
      Int d = det(qB2);
      if (d != 1 && d != -1)
        throw std::logic_error("build_reflexive_boundary_quotient: ridge "
                               "projection is not unimodular");
    }
    IntMat inv = unimodular_inverse(qB2);
    IntMat L = mat_mul(inv, mat_mul(q, B1s));
    Vec t = mat_apply(inv, mat_apply(q, vec_sub(b1s, b2s)));
    Identification id;
    id.poly_from = poly_of_kept[k1];
    id.poly_to = poly_of_kept[k2];
    id.map = AffMapZ(L, t);
    for (size_t a : Xi.faces[r].verts) {
      Vec x = vec_sub(Xi.vertices[a], z);
      Vec u1 = signed_coords(c1, s1, x);
      Vec u2 = signed_coords(c2, s2, x);
      if (id.map.apply(u1) != u2)
        throw std::logic_error("build_reflexive_boundary_quotient: ridge map "
                               "does not match on a vertex");
      id.verts_from.push_back(c1.vert_index.at(u1));
      id.verts_to.push_back(c2.vert_index.at(u2));
    }
    std::sort(id.verts_from.begin(), id.verts_from.end());
    std::sort(id.verts_to.begin(), id.verts_to.end());
    // Self-gluing of a face to itself by the identity carries no content and
    // is rejected by the builder; skip if degenerate.
    if (!(id.poly_from == id.poly_to && id.verts_from == id.verts_to &&
          [&] {
            for (size_t a : id.verts_from) {
              Vec u = S.polytopes[id.poly_from].vertices[a];
              if (id.map.apply(u) != u) return false;
            }
            return true;
          }()))
      S.identifications.push_back(id);
  }

  // Vertex fans at class representatives lexmin(v, -v).
  std::set<Vec> fan_done;
  for (size_t vi = 0; vi < Xi.vertices.size(); ++vi) {
    Vec v = vec_sub(Xi.vertices[vi], z);
    Vec r = std::min(v, vec_neg(v),
                     [](const Vec& a, const Vec& b) { return lex_less(a, b); });
    if (!fan_done.insert(r).second) continue;
    IntMat q = detail::quotient_by(r);
    // Cones from all cover facets containing r.
    std::vector<std::vector<Vec>> gens;
    std::vector<std::pair<size_t, int>> cone_src;  // (kept facet, sign) with
                                                   // sign * kept containing r
    for (size_t f : facets) {
      // The cover facet "f" contains r iff r is a vertex of f.
      bool has = false;
      for (size_t a : Xi.faces[f].verts)
        if (vec_sub(Xi.vertices[a], z) == r) has = true;
      if (!has) continue;
      std::vector<Vec> g;
      for (size_t a : Xi.faces[f].verts) {
        Vec img = mat_apply(q, vec_sub(vec_sub(Xi.vertices[a], z), r));
        if (!is_zero(img)) g.push_back(img);
      }
      gens.push_back(g);
      cone_src.push_back(rep[f]);
    }
    VertexFanSpec vf;
    vf.fan = make_fan(m - 1, gens);
    bool first = true;
    for (size_t k = 0; k < gens.size(); ++k) {
      std::vector<Vec> ex = cone_extreme_rays(RationalCone(m - 1, gens[k]));
      std::vector<size_t> set;
      for (const auto& x : ex) {
        Vec p = primitive_directed(x);
        for (size_t ri = 0; ri < vf.fan.rays.size(); ++ri)
          if (vf.fan.rays[ri] == p) {
            set.push_back(ri);
            break;
          }
      }
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      size_t cone = vf.fan.cone_index(set);
      if (cone == size_t(-1))
        throw std::logic_error("build_reflexive_boundary_quotient: corner "
                               "cone missing from the fan");
      auto [kf, sf] = cone_src[k];
      const auto& fc = charts[poly_of_kept[kf]];
      // The corner of the kept chart representing (cover facet, vertex r):
      // chart coordinates of sf * r.
      Vec u = signed_coords(fc, sf, r);
      std::pair<size_t, size_t> pv = {poly_of_kept[kf], fc.vert_index.at(u)};
      bool dup = false;
      for (const auto& [qv, qc] : vf.corner_to_cone)
        if (qv == pv) {
          if (qc != cone)
            throw std::logic_error(
                "build_reflexive_boundary_quotient: corner assigned two "
                "cones");
          dup = true;
        }
      if (dup) continue;
      if (first) {
        vf.poly = pv.first;
        vf.vertex = pv.second;
        first = false;
      }
      vf.corner_to_cone.push_back({pv, cone});
    }
    S.fans.push_back(vf);
  }
  return S;
}

}  // namespace afw
