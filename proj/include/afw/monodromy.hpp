// Monodromy of an affine complex: parallel transport along barycentric
// paths, loop monodromies T^{e1 e2}_{f1 f2}, the edge invariants n_e and m_e,
// the piecewise linear functions psi_omega / psi_check_rho, the auxiliary
// polytopes Delta-check(tau) and Delta(tau), positivity, and simplicity.
//
// Orientation conventions (fixed once and for all):
//  - for a 1-cell omega, v+ is the endpoint germ with the smaller
//    (vertex cell id, germ class id) key and d_omega is the primitive
//    generator of Lambda_omega pointing from v+ to v- (low id to high id);
//  - for a codimension-1 cell rho, sigma+ is the maximal germ with the
//    smaller class id, and d-check_rho is the primitive conormal of rho
//    positive towards the interior of sigma+;
//  - normal fans follow the "minimized on the face" convention.
// With these choices the shared proportionality constant c in
// n_e = c * d-check_rho, m_e = c * d_omega is non-negative exactly on the
// positive complexes.
#pragma once

#include "afw/complex.hpp"

namespace afw {

struct NotPositiveError : std::runtime_error {
  explicit NotPositiveError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

// Pull a covector through a coordinate change: if P maps frame-A vectors to
// frame-B vectors, a covector n on frame A becomes n . P^{-1} on frame B.
inline Vec covector_pushforward(const Vec& n, const IntMat& P) {
  return mat_apply_left(n, unimodular_inverse(P));
}

// v = c * d for a single integer c (d nonzero).  Throws if not proportional.
inline Int exact_multiple(const Vec& v, const Vec& d) {
  size_t pivot = size_t(-1);
  for (size_t i = 0; i < d.size(); ++i)
    if (d[i] != 0) {
      pivot = i;
      break;
    }
  if (pivot == size_t(-1))
    throw std::logic_error("exact_multiple: zero direction");
  if (v[pivot] % d[pivot] != 0)
    throw std::logic_error("exact_multiple: not an integral multiple");
  Int c = v[pivot] / d[pivot];
  for (size_t i = 0; i < d.size(); ++i)
    if (v[i] != c * d[i])
      throw std::logic_error("exact_multiple: not proportional");
  return c;
}

// Recover n from M = T - I = d (x) n (column d times row n).
inline Vec rank1_right_factor(const IntMat& M, const Vec& d) {
  size_t pivot = size_t(-1);
  for (size_t i = 0; i < d.size(); ++i)
    if (d[i] != 0) {
      pivot = i;
      break;
    }
  if (pivot == size_t(-1))
    throw std::logic_error("rank1_right_factor: zero direction");
  Vec n(M.cols, Int(0));
  for (size_t j = 0; j < M.cols; ++j) {
    if (M(pivot, j) % d[pivot] != 0)
      throw std::logic_error("rank1_right_factor: monodromy is not of the "
                             "form I + d(x)n");
    n[j] = M(pivot, j) / d[pivot];
    for (size_t i = 0; i < M.rows; ++i)
      if (M(i, j) != d[i] * n[j])
        throw std::logic_error("rank1_right_factor: monodromy is not of the "
                               "form I + d(x)n");
  }
  return n;
}

// Recover m from M = T - I = m (x) dcheck (column m times row dcheck).
inline Vec rank1_left_factor(const IntMat& M, const Vec& dcheck) {
  IntMat Mt = M.transpose();
  return rank1_right_factor(Mt, dcheck);
}

// ---------------------------------------------------------------------------
// Transport along barycentric paths
// ---------------------------------------------------------------------------

// Path: a sequence of maximal vertex germs (chain classes vertex < maximal
// cell).  Consecutive germs must share either their maximal cell (transport
// through its interior, the identity in its coordinates) or their vertex
// class (transport through the vertex chart).  Returns the affine map from
// the first germ's polytope coordinates to the last's.
inline AffMapZ transport(const AffineComplex& cx,
                         const std::vector<size_t>& germs) {
  if (germs.empty()) throw std::invalid_argument("transport: empty path");
  AffMapZ acc = AffMapZ::identity(cx.n);
  for (size_t k = 0; k + 1 < germs.size(); ++k) {
    size_t a = germs[k], b = germs[k + 1];
    if (cx.chain_top_cell(a) == cx.chain_top_cell(b)) {
      // same maximal cell: same polytope, transport is the identity
      if (cx.poly_of_chain(a) != cx.poly_of_chain(b))
        throw std::logic_error("transport: maximal cell in two polytopes");
    } else if (cx.chain_bottom_cell(a) == cx.chain_bottom_cell(b)) {
      acc = cx.cross_via(a, b).compose(acc);
    } else {
      throw std::invalid_argument(
          "transport: consecutive germs share neither vertex nor cell");
    }
  }
  return acc;
}

// Loop monodromy T^{e1 e2}_{f1 f2} for f_i : v_i -> tau, e_i : tau -> sigma_i
// (sigma_i maximal): transport around v1 -> sigma1 -> v2 -> sigma2 -> v1,
// based at v1 in sigma1's polytope coordinates.
inline AffMapZ loop_monodromy(const AffineComplex& cx, size_t f1, size_t f2,
                              size_t e1, size_t e2) {
  size_t m1 = cx.compose(f1, e1);
  size_t m2 = cx.compose(f2, e1);
  size_t m3 = cx.compose(f2, e2);
  size_t m4 = cx.compose(f1, e2);
  return cx.cross_via(m4, m1).compose(cx.cross_via(m2, m3));
}

// ---------------------------------------------------------------------------
// Germ enumeration
// ---------------------------------------------------------------------------

// Morphism classes v -> cell from vertices (the identity if cell is itself a
// vertex).
inline std::vector<size_t> vertex_germs(const AffineComplex& cx, size_t cell) {
  if (cx.cell_dim[cell] == 0) return {cx.identity_morphism(cell)};
  std::vector<size_t> out;
  for (size_t c = 0; c < cx.n_chains; ++c)
    if (cx.chain_len(c) == 2 && cx.chain_cells[c][1] == cell &&
        cx.cell_dim[cx.chain_cells[c][0]] == 0)
      out.push_back(c);
  return out;
}

// Morphism classes cell -> sigma into maximal cells (the identity if cell is
// itself maximal).
inline std::vector<size_t> maximal_germs(const AffineComplex& cx,
                                         size_t cell) {
  if (cx.cell_dim[cell] == int(cx.n)) return {cx.identity_morphism(cell)};
  std::vector<size_t> out;
  for (size_t c = 0; c < cx.n_chains; ++c)
    if (cx.chain_len(c) == 2 && cx.chain_cells[c][0] == cell &&
        cx.cell_dim[cx.chain_cells[c][1]] == int(cx.n))
      out.push_back(c);
  return out;
}

// The representative local chain realizing a composable sequence of
// non-identity morphisms; the last morphism must end in a maximal cell, so
// the class has a unique member and the representative is geometric.
inline const LocalChain& locate_chain(const AffineComplex& cx,
                                      std::vector<size_t> morphs) {
  morphs.erase(std::remove_if(morphs.begin(), morphs.end(),
                              [&](size_t m) {
                                return cx.is_identity_morphism(m);
                              }),
               morphs.end());
  if (morphs.empty())
    throw std::invalid_argument("locate_chain: nothing to locate");
  size_t L = morphs.size() + 1;
  size_t found = size_t(-1);
  for (size_t c = 0; c < cx.n_chains; ++c) {
    if (cx.chain_len(c) != L) continue;
    bool ok = true;
    for (size_t i = 0; i + 1 < L && ok; ++i)
      if (cx.subchain(c, {i, i + 1}) != morphs[i]) ok = false;
    if (!ok) continue;
    if (found != size_t(-1))
      throw std::logic_error("locate_chain: ambiguous realization");
    found = c;
  }
  if (found == size_t(-1))
    throw std::logic_error("locate_chain: no realization");
  return cx.chain_reps[found];
}

namespace detail {

// Local vertex face index (dim-0 face whose vertex is v) in a polytope.
inline size_t vertex_face_of(const LatticePolytope& P, size_t v) {
  for (size_t f = 0; f < P.faces.size(); ++f)
    if (P.faces[f].dim == 0 && P.faces[f].verts[0] == v) return f;
  throw std::logic_error("vertex_face_of: missing vertex face");
}

// For a local edge face in a polytope, the germ class at each endpoint:
// returns {(germ class, endpoint coords), ...} (two entries).
inline std::vector<std::pair<size_t, Vec>> edge_endpoint_germs(
    const AffineComplex& cx, size_t poly, size_t edge_face) {
  const LatticePolytope& P = cx.spec.polytopes[poly];
  std::vector<std::pair<size_t, Vec>> out;
  for (size_t v : P.faces[edge_face].verts) {
    LocalChain lc;
    lc.poly = poly;
    lc.faces = {vertex_face_of(P, v), edge_face};
    out.push_back({cx.chain_class_of.at(lc), P.vertices[v]});
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MonodromyAtlas
// ---------------------------------------------------------------------------

struct MonodromyAtlas {
  const AffineComplex* cx = nullptr;

  // Per 1-cell omega: the oriented endpoint germs, the base maximal germ
  // e0 : omega -> sigma0, d_omega in sigma0's polytope coordinates, and the
  // table of n^{e0 e'} covectors (also in sigma0's dual coordinates).  The
  // full table is n^{e1 e2} = n[e2] - n[e1].
  struct OmegaData {
    size_t omega = 0;
    size_t f_plus = 0, f_minus = 0;  // germ classes v+- -> omega
    size_t base = 0;                 // e0: omega -> sigma0 (least class id)
    Vec d;                           // d_omega, points from v+ to v-
    std::vector<size_t> germs;       // all maximal germs, sorted
    std::map<size_t, Vec> n;         // e' -> n^{e0 e'}
  };

  // Per codimension-1 cell rho: the two maximal germs (boundary cells are
  // marked non-interior and carry no table), the conormal d-check in
  // sigma+'s dual coordinates, the base vertex germ f0, and the table of
  // m^{f0 f'} vectors in sigma+'s coordinates.
  struct RhoData {
    size_t rho = 0;
    bool interior = false;
    size_t g_plus = 0, g_minus = 0;  // germs rho -> sigma+-
    size_t base = 0;                 // f0: v0 -> rho (least class id)
    Vec dcheck;                      // conormal, positive towards sigma+
    std::vector<size_t> germs;       // all vertex germs, sorted
    std::map<size_t, Vec> m;         // f' -> m^{f0 f'}
  };

  std::map<size_t, OmegaData> omega;  // keyed by 1-cell id
  std::map<size_t, RhoData> rho;      // keyed by codim-1 cell id

  // Per morphism e : omega -> rho (the identity morphism when n = 2): the
  // shared proportionality constant c with n_e = c * dcheck_rho and
  // m_e = c * d_omega.  Only interior rho contribute.
  struct EdgeInv {
    size_t e = 0;  // morphism chain class
    size_t omega_cell = 0, rho_cell = 0;
    Int c = 0;
    Vec n_e;  // in omega's base dual coordinates
    Vec m_e;  // in rho's sigma+ coordinates
  };
  std::vector<EdgeInv> edges;
  std::map<size_t, size_t> edge_index;  // morphism class -> index into edges

  const EdgeInv* edge(size_t morphism) const {
    auto it = edge_index.find(morphism);
    return it == edge_index.end() ? nullptr : &edges[it->second];
  }

  Vec n_of(size_t omega_cell, size_t e1, size_t e2) const {
    const OmegaData& od = omega.at(omega_cell);
    return vec_sub(od.n.at(e2), od.n.at(e1));
  }
  Vec m_of(size_t rho_cell, size_t f1, size_t f2) const {
    const RhoData& rd = rho.at(rho_cell);
    return vec_sub(rd.m.at(f2), rd.m.at(f1));
  }
};

inline MonodromyAtlas edge_invariants(const AffineComplex& cx) {
  MonodromyAtlas atlas;
  atlas.cx = &cx;
  size_t n = cx.n;

  // ---- omega tables ----
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    if (cx.cell_dim[cell] != 1) continue;
    MonodromyAtlas::OmegaData od;
    od.omega = cell;
    auto vg = vertex_germs(cx, cell);
    if (vg.size() != 2)
      throw std::logic_error("edge_invariants: 1-cell without two endpoint "
                             "germs");
    auto key = [&](size_t f) {
      return std::make_pair(cx.chain_bottom_cell(f), f);
    };
    od.f_plus = key(vg[0]) < key(vg[1]) ? vg[0] : vg[1];
    od.f_minus = od.f_plus == vg[0] ? vg[1] : vg[0];
    od.germs = maximal_germs(cx, cell);
    std::sort(od.germs.begin(), od.germs.end());
    if (od.germs.empty())
      throw std::logic_error("edge_invariants: 1-cell without maximal germs");
    od.base = od.germs.front();

    // d_omega in sigma0 coordinates: the edge's local copy along e0.
    const LocalChain& rep = cx.chain_reps[od.base];
    auto ends = detail::edge_endpoint_germs(cx, rep.poly, rep.faces[0]);
    Vec x_plus, x_minus;
    for (auto& [g, x] : ends) {
      if (g == od.f_plus) x_plus = x;
      if (g == od.f_minus) x_minus = x;
    }
    if (x_plus.empty() || x_minus.empty())
      throw std::logic_error("edge_invariants: endpoint germs do not match");
    od.d = primitive_directed(vec_sub(x_minus, x_plus));

    for (size_t e : od.germs) {
      if (e == od.base) {
        od.n[e] = Vec(n, Int(0));
        continue;
      }
      AffMapZ T = loop_monodromy(cx, od.f_plus, od.f_minus, od.base, e);
      IntMat M = T.linear;
      for (size_t i = 0; i < n; ++i) M(i, i) -= 1;
      od.n[e] = rank1_right_factor(M, od.d);
    }
    // Telescoping consistency: the direct n^{e1 e2}, transported to the base
    // frame, must equal n[e2] - n[e1].
    for (size_t e1 : od.germs)
      for (size_t e2 : od.germs) {
        if (e1 == od.base || e1 == e2) continue;
        AffMapZ T = loop_monodromy(cx, od.f_plus, od.f_minus, e1, e2);
        IntMat M = T.linear;
        for (size_t i = 0; i < n; ++i) M(i, i) -= 1;
        const LocalChain& r1 = cx.chain_reps[e1];
        auto ends1 = detail::edge_endpoint_germs(cx, r1.poly, r1.faces[0]);
        Vec xp, xm;
        for (auto& [g, x] : ends1) {
          if (g == od.f_plus) xp = x;
          if (g == od.f_minus) xm = x;
        }
        Vec d1 = primitive_directed(vec_sub(xm, xp));
        Vec n12 = rank1_right_factor(M, d1);
        IntMat P = cx.cross_via(cx.compose(od.f_plus, e1),
                                cx.compose(od.f_plus, od.base))
                       .linear;
        if (covector_pushforward(n12, P) !=
            vec_sub(od.n.at(e2), od.n.at(e1)))
          throw std::logic_error(
              "edge_invariants: telescoping identity violated for a 1-cell");
      }
    atlas.omega[cell] = od;
  }

  // ---- rho tables ----
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    if (cx.cell_dim[cell] != int(n) - 1) continue;
    MonodromyAtlas::RhoData rd;
    rd.rho = cell;
    auto mg = maximal_germs(cx, cell);
    std::sort(mg.begin(), mg.end());
    if (mg.size() == 1) {
      rd.interior = false;
      atlas.rho[cell] = rd;
      continue;
    }
    if (mg.size() != 2)
      throw std::logic_error("edge_invariants: codim-1 cell with bad germ "
                             "count");
    rd.interior = true;
    rd.g_plus = mg[0];
    rd.g_minus = mg[1];
    rd.germs = vertex_germs(cx, cell);
    std::sort(rd.germs.begin(), rd.germs.end());
    rd.base = rd.germs.front();

    // Conormal in sigma+ coordinates.
    const LocalChain& rep = cx.chain_reps[rd.g_plus];
    const LatticePolytope& P = cx.spec.polytopes[rep.poly];
    const auto& rf = P.faces[rep.faces[0]];
    std::vector<Vec> diffs;
    for (size_t k = 1; k < rf.verts.size(); ++k)
      diffs.push_back(
          vec_sub(P.vertices[rf.verts[k]], P.vertices[rf.verts[0]]));
    auto ker = diffs.empty()
                   ? integer_kernel(IntMat(0, n))
                   : integer_kernel(IntMat::from_rows(diffs));
    if (ker.size() != 1)
      throw std::logic_error("edge_invariants: conormal rank is not 1");
    rd.dcheck = ker[0];
    {
      // orient towards the interior of sigma+
      const auto& sf = P.faces[rep.faces[1]];
      Int s = 0;
      for (size_t v : sf.verts)
        s += dot(rd.dcheck,
                 vec_sub(P.vertices[v], P.vertices[rf.verts[0]]));
      if (s == 0)
        throw std::logic_error("edge_invariants: degenerate conormal");
      if (s < 0) rd.dcheck = vec_neg(rd.dcheck);
    }

    for (size_t f : rd.germs) {
      if (f == rd.base) {
        rd.m[f] = Vec(n, Int(0));
        continue;
      }
      AffMapZ T = loop_monodromy(cx, rd.base, f, rd.g_plus, rd.g_minus);
      IntMat M = T.linear;
      for (size_t i = 0; i < n; ++i) M(i, i) -= 1;
      rd.m[f] = rank1_left_factor(M, rd.dcheck);
    }
    // Telescoping consistency for the m-table.
    for (size_t f1 : rd.germs)
      for (size_t f2 : rd.germs) {
        if (f1 == rd.base || f1 == f2) continue;
        AffMapZ T = loop_monodromy(cx, f1, f2, rd.g_plus, rd.g_minus);
        IntMat M = T.linear;
        for (size_t i = 0; i < n; ++i) M(i, i) -= 1;
        if (rank1_left_factor(M, rd.dcheck) !=
            vec_sub(rd.m.at(f2), rd.m.at(f1)))
          throw std::logic_error(
              "edge_invariants: telescoping identity violated for a "
              "codim-1 cell");
      }
    atlas.rho[cell] = rd;
  }

  // ---- edge invariants e : omega -> rho ----
  std::vector<size_t> edge_morphs;
  for (size_t c = 0; c < cx.n_chains; ++c) {
    if (cx.chain_len(c) == 1 && n == 2 && cx.cell_dim[cx.chain_cells[c][0]] == 1)
      edge_morphs.push_back(c);
    if (cx.chain_len(c) == 2 && cx.cell_dim[cx.chain_cells[c][0]] == 1 &&
        cx.cell_dim[cx.chain_cells[c][1]] == int(n) - 1 && n != 2)
      edge_morphs.push_back(c);
  }
  std::sort(edge_morphs.begin(), edge_morphs.end());
  for (size_t e : edge_morphs) {
    size_t w = cx.chain_bottom_cell(e);
    size_t r = cx.chain_top_cell(e);
    const auto& rd = atlas.rho.at(r);
    if (!rd.interior) continue;
    const auto& od = atlas.omega.at(w);
    MonodromyAtlas::EdgeInv ei;
    ei.e = e;
    ei.omega_cell = w;
    ei.rho_cell = r;
    ei.m_e = atlas.m_of(r, cx.compose(od.f_plus, e), cx.compose(od.f_minus, e));
    ei.n_e = atlas.n_of(w, cx.compose(e, rd.g_plus), cx.compose(e, rd.g_minus));
    // d_omega in sigma+ coordinates, along the composite germ through e.
    const LocalChain& rep = locate_chain(cx, {od.f_plus, e, rd.g_plus});
    auto ends = detail::edge_endpoint_germs(cx, rep.poly, rep.faces[1]);
    Vec xp, xm;
    for (auto& [g, x] : ends) {
      if (g == od.f_plus) xp = x;
      if (g == od.f_minus) xm = x;
    }
    Vec d_here = primitive_directed(vec_sub(xm, xp));
    ei.c = exact_multiple(ei.m_e, d_here);
    // Cross-check against the n-side: dcheck transported to omega's base
    // frame must satisfy n_e = c * dcheck.
    {
      size_t m_here = cx.compose(cx.compose(od.f_plus, e), rd.g_plus);
      size_t m_base = cx.compose(od.f_plus, od.base);
      IntMat P = cx.cross_via(m_here, m_base).linear;  // sigma+ -> sigma0
      Vec dc_base = covector_pushforward(rd.dcheck, P);
      Int c2 = exact_multiple(ei.n_e, dc_base);
      if (c2 != ei.c)
        throw std::logic_error(
            "edge_invariants: n_e and m_e disagree on the shared constant");
    }
    atlas.edge_index[e] = atlas.edges.size();
    atlas.edges.push_back(ei);
  }

  return atlas;
}

// ---------------------------------------------------------------------------
// psi_omega and psi_check_rho
// ---------------------------------------------------------------------------

// The fan Sigma_omega (star of a 1-cell, modulo its tangent line) together
// with the piecewise linear function determined by the n-table.  Slope on
// the cone of e' is -n^{e0 e'}; changing e0 changes psi by a linear function.
struct PsiOmega {
  size_t omega = 0;
  FanZ fan;                               // in Z^{n-1}
  std::map<size_t, size_t> cone_of_germ;  // morphism omega -> tau  =>  cone
  std::map<size_t, Vec> slopes;           // maximal cone index -> slope
  IntMat proj;                            // vertex-fan coords -> quotient

  PLOnFan pl() const { return PLOnFan{&fan, slopes}; }
};

inline PsiOmega psi_omega(const MonodromyAtlas& atlas, size_t omega_cell) {
  const AffineComplex& cx = *atlas.cx;
  size_t n = cx.n;
  if (n < 2) throw std::invalid_argument("psi_omega: dimension too small");
  const auto& od = atlas.omega.at(omega_cell);

  size_t vcell = cx.chain_bottom_cell(od.f_plus);
  const FanZ& vfan = cx.spec.fans[cx.fan_of_vertex_class[vcell]].fan;
  size_t ray_cone = cx.germ_cone.at(od.f_plus);
  if (vfan.cones[ray_cone].size() != 1)
    throw std::logic_error("psi_omega: edge germ is not a ray");
  Vec r = vfan.rays[vfan.cones[ray_cone][0]];

  // Quotient projection killing the ray.
  SNF s = smith_normal_form(IntMat::from_columns({r}));
  IntMat proj(n - 1, n);
  for (size_t i = 0; i + 1 < n; ++i)
    for (size_t j = 0; j < n; ++j) proj(i, j) = s.U(i + 1, j);

  // All germs omega -> tau (including the identity).
  std::vector<size_t> germs = {cx.identity_morphism(omega_cell)};
  for (size_t c = 0; c < cx.n_chains; ++c)
    if (cx.chain_len(c) == 2 && cx.chain_cells[c][0] == omega_cell)
      germs.push_back(c);

  auto project_cone = [&](size_t cone_idx) {
    std::vector<Vec> gens;
    for (size_t ri : vfan.cones[cone_idx]) {
      Vec img = mat_apply(proj, vfan.rays[ri]);
      if (!is_zero(img)) gens.push_back(img);
    }
    std::vector<Vec> ex = cone_extreme_rays(RationalCone(n - 1, gens));
    std::sort(ex.begin(), ex.end(), lex_less);
    return ex;
  };

  std::vector<std::vector<Vec>> max_gens;
  for (size_t e : od.germs)
    max_gens.push_back(project_cone(cx.germ_cone.at(cx.compose(od.f_plus, e))));

  PsiOmega out;
  out.omega = omega_cell;
  out.proj = proj;
  out.fan = make_fan(n - 1, max_gens);

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
      if (!found) throw std::logic_error("psi_omega: projected ray missing");
    }
    std::sort(set.begin(), set.end());
    size_t idx = out.fan.cone_index(set);
    if (idx == size_t(-1))
      throw std::logic_error("psi_omega: projected cone missing");
    return idx;
  };

  for (size_t e : germs)
    out.cone_of_germ[e] =
        cone_in_fan(project_cone(cx.germ_cone.at(cx.compose(od.f_plus, e))));

  // Slopes: transport each covector to the vertex-fan frame and descend.
  IntMat A = cx.chart(cx.compose(od.f_plus, od.base)).linear;  // poly -> fan
  IntMat projT = proj.transpose();
  for (size_t e : od.germs) {
    Vec n_fan = mat_apply_left(od.n.at(e), unimodular_inverse(A));
    auto nb = solve_integral(projT, n_fan);
    if (!nb)
      throw std::logic_error("psi_omega: covector does not descend");
    out.slopes[out.cone_of_germ.at(e)] = vec_neg(*nb);
  }
  return out;
}

// The normal fan of a codimension-1 cell together with the piecewise linear
// function determined by the m-table (slope -m^{f0 f'} on the cone of f').
struct PsiCheckRho {
  size_t rho = 0;
  LatticePolytope cell;                   // rho in its tangent coordinates
  FanZ fan;                               // normal fan, in Z^{n-1}
  std::map<size_t, size_t> cone_of_germ;  // vertex germ f  =>  maximal cone
  std::map<size_t, Vec> slopes;           // maximal cone index -> slope

  PLOnFan pl() const { return PLOnFan{&fan, slopes}; }
};

inline PsiCheckRho psi_check_rho(const MonodromyAtlas& atlas,
                                 size_t rho_cell) {
  const AffineComplex& cx = *atlas.cx;
  size_t n = cx.n;
  const auto& rd = atlas.rho.at(rho_cell);
  if (!rd.interior)
    throw std::invalid_argument("psi_check_rho: boundary cell");

  // rho's copy along sigma+, expressed in the tangent coordinates of the
  // representative local face.
  const LocalChain& rep = cx.chain_reps[rd.g_plus];
  const LatticePolytope& P = cx.spec.polytopes[rep.poly];
  const auto& rf = P.faces[rep.faces[0]];
  size_t local = cx.local_face_id.at({rep.poly, rep.faces[0]});
  IntMat R = cx.face_to_rep[local].linear;

  const LocalFace& crep = cx.cell_rep[rho_cell];
  const LatticePolytope& PR = cx.spec.polytopes[crep.poly];
  const auto& rrf = PR.faces[crep.face];
  std::vector<Vec> diffs;
  for (size_t k = 1; k < rrf.verts.size(); ++k)
    diffs.push_back(
        vec_sub(PR.vertices[rrf.verts[k]], PR.vertices[rrf.verts[0]]));
  IntMat B(n, 0);
  std::vector<Vec> basis;
  if (!diffs.empty()) {
    SNF s = smith_normal_form(IntMat::from_columns(diffs));
    size_t rk = 0;
    for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
      if (s.D(i, i) != 0) ++rk;
    IntMat Uinv = unimodular_inverse(s.U);
    for (size_t j = 0; j < rk; ++j) basis.push_back(Uinv.col(j));
    B = IntMat::from_columns(basis);
  }

  auto tangent_coords = [&](const Vec& v) {
    auto c = solve_integral(B, v);
    if (!c) throw std::logic_error("psi_check_rho: not in the cell lattice");
    return *c;
  };

  PsiCheckRho out;
  out.rho = rho_cell;
  {
    std::vector<Vec> pts;
    Vec x0 = PR.vertices[rrf.verts[0]];
    for (size_t v : rrf.verts)
      pts.push_back(tangent_coords(vec_sub(PR.vertices[v], x0)));
    out.cell = make_polytope(n - 1, pts);
  }
  out.fan = normal_fan(out.cell);

  // Germ <-> vertex correspondence via the sigma+ copy, then cone lookup in
  // the representative's coordinates (the vertex order is preserved by the
  // transport, which maps the local face onto the representative face).
  Vec xr0 = PR.vertices[rrf.verts[0]];
  const AffMapZ& to_rep = cx.face_to_rep[local];
  for (size_t v : rf.verts) {
    LocalChain lc;
    lc.poly = rep.poly;
    lc.faces = {detail::vertex_face_of(P, v), rep.faces[0]};
    size_t germ = cx.chain_class_of.at(lc);
    // vertex index in the cell polytope
    Vec coords = tangent_coords(vec_sub(to_rep.apply(P.vertices[v]), xr0));
    size_t vi = size_t(-1);
    for (size_t k = 0; k < out.cell.vertices.size(); ++k)
      if (out.cell.vertices[k] == coords) vi = k;
    if (vi == size_t(-1))
      throw std::logic_error("psi_check_rho: vertex not found");
    size_t vface = detail::vertex_face_of(out.cell, vi);
    out.cone_of_germ[germ] = normal_cone_of_face(out.cell, out.fan, vface);
  }
  if (out.cone_of_germ.size() != rd.germs.size())
    throw std::logic_error("psi_check_rho: germ/vertex mismatch");

  // Slopes: -m^{f0 f'} in tangent coordinates.
  for (size_t f : rd.germs) {
    Vec m_rep = mat_apply(R, rd.m.at(f));
    out.slopes[out.cone_of_germ.at(f)] = vec_neg(tangent_coords(m_rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Auxiliary polytopes
// ---------------------------------------------------------------------------

// For tau with 1 <= dim tau <= n-1: the polytopes Delta-check_e(tau) for
// each e : omega -> tau (in the conormal frame of tau's representative,
// rank = codim tau) and Delta_f(tau) for each f : tau -> rho with rho
// interior (in the tangent frame, rank = dim tau).  All canonically
// translated.
struct DeltaPolytopes {
  size_t tau = 0;
  std::map<size_t, LatticePolytope> check_delta;  // e -> Delta-check_e(tau)
  std::map<size_t, LatticePolytope> delta;        // f -> Delta_f(tau)
};

namespace detail {

// Tangent basis (columns) of a cell's representative local face.
inline std::vector<Vec> cell_tangent_basis(const AffineComplex& cx,
                                           size_t cell) {
  const LocalFace& crep = cx.cell_rep[cell];
  const LatticePolytope& P = cx.spec.polytopes[crep.poly];
  const auto& f = P.faces[crep.face];
  std::vector<Vec> diffs;
  for (size_t k = 1; k < f.verts.size(); ++k)
    diffs.push_back(vec_sub(P.vertices[f.verts[k]], P.vertices[f.verts[0]]));
  if (diffs.empty()) return {};
  SNF s = smith_normal_form(IntMat::from_columns(diffs));
  size_t rk = 0;
  for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
    if (s.D(i, i) != 0) ++rk;
  IntMat Uinv = unimodular_inverse(s.U);
  std::vector<Vec> basis;
  for (size_t j = 0; j < rk; ++j) basis.push_back(Uinv.col(j));
  return basis;
}

// Conormal basis (columns) of a cell's representative local face.
inline std::vector<Vec> cell_conormal_basis(const AffineComplex& cx,
                                            size_t cell) {
  const LocalFace& crep = cx.cell_rep[cell];
  const LatticePolytope& P = cx.spec.polytopes[crep.poly];
  const auto& f = P.faces[crep.face];
  std::vector<Vec> diffs;
  for (size_t k = 1; k < f.verts.size(); ++k)
    diffs.push_back(vec_sub(P.vertices[f.verts[k]], P.vertices[f.verts[0]]));
  if (diffs.empty()) return integer_kernel(IntMat(0, cx.n));
  return integer_kernel(IntMat::from_rows(diffs));
}

}  // namespace detail

inline DeltaPolytopes delta_polytopes(const MonodromyAtlas& atlas,
                                      size_t tau) {
  const AffineComplex& cx = *atlas.cx;
  size_t n = cx.n;
  int d = cx.cell_dim[tau];
  if (d < 1 || d > int(n) - 1)
    throw std::invalid_argument("delta_polytopes: cell dimension out of "
                                "range");
  DeltaPolytopes out;
  out.tau = tau;

  // ---- Delta-check_e(tau) ----
  std::vector<size_t> p1;  // morphisms omega -> tau
  if (d == 1) p1.push_back(cx.identity_morphism(tau));
  else
    for (size_t c = 0; c < cx.n_chains; ++c)
      if (cx.chain_len(c) == 2 && cx.chain_cells[c][1] == tau &&
          cx.cell_dim[cx.chain_cells[c][0]] == 1)
        p1.push_back(c);

  auto maxg = maximal_germs(cx, tau);
  std::sort(maxg.begin(), maxg.end());

  IntMat C = IntMat::from_columns(detail::cell_conormal_basis(cx, tau));
  for (size_t e : p1) {
    size_t w = cx.chain_bottom_cell(e);
    const auto& od = atlas.omega.at(w);
    size_t f0 = maxg.front();
    size_t h = cx.compose(e, f0);  // omega -> sigma'
    IntMat P = cx.cross_via(cx.compose(od.f_plus, od.base),
                            cx.compose(od.f_plus, h))
                   .linear;  // sigma0 -> sigma'
    const LocalChain& rep = locate_chain(cx, {e, f0});
    size_t tau_pos = rep.faces.size() - 2;  // (.., tau, sigma')
    size_t local = cx.local_face_id.at({rep.poly, rep.faces[tau_pos]});
    IntMat R = cx.face_to_rep[local].linear;
    Vec base_val = od.n.at(h);
    std::vector<Vec> pts;
    for (size_t f : maxg) {
      Vec diff = vec_sub(od.n.at(cx.compose(e, f)), base_val);
      Vec k = covector_pushforward(covector_pushforward(diff, P), R);
      auto coords = solve_integral(C, k);
      if (!coords)
        throw std::logic_error("delta_polytopes: covector not conormal to "
                               "tau");
      pts.push_back(*coords);
    }
    out.check_delta[e] =
        canonical_translate(make_polytope(n - size_t(d), pts));
  }

  // ---- Delta_f(tau) ----
  std::vector<size_t> pn1;  // morphisms tau -> rho
  if (d == int(n) - 1) pn1.push_back(cx.identity_morphism(tau));
  else
    for (size_t c = 0; c < cx.n_chains; ++c)
      if (cx.chain_len(c) == 2 && cx.chain_cells[c][0] == tau &&
          cx.cell_dim[cx.chain_cells[c][1]] == int(n) - 1)
        pn1.push_back(c);

  auto vg = vertex_germs(cx, tau);
  std::sort(vg.begin(), vg.end());
  IntMat B = IntMat::from_columns(detail::cell_tangent_basis(cx, tau));
  for (size_t f : pn1) {
    size_t r = cx.chain_top_cell(f);
    const auto& rd = atlas.rho.at(r);
    if (!rd.interior) continue;
    const LocalChain& rep = locate_chain(cx, {f, rd.g_plus});
    size_t local = cx.local_face_id.at({rep.poly, rep.faces[0]});
    IntMat R = cx.face_to_rep[local].linear;
    Vec base_val = rd.m.at(cx.compose(vg.front(), f));
    std::vector<Vec> pts;
    for (size_t fv : vg) {
      Vec diff = vec_sub(rd.m.at(cx.compose(fv, f)), base_val);
      auto coords = solve_integral(B, mat_apply(R, diff));
      if (!coords)
        throw std::logic_error("delta_polytopes: vector not tangent to tau");
      pts.push_back(*coords);
    }
    out.delta[f] = canonical_translate(make_polytope(size_t(d), pts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Positivity
// ---------------------------------------------------------------------------

struct PositivityReport {
  bool positive = true;
  // offending morphisms e : omega -> rho with their (negative) constants
  std::vector<std::pair<size_t, Int>> negative;
};

inline PositivityReport check_positive(const MonodromyAtlas& atlas) {
  PositivityReport rep;
  for (const auto& ei : atlas.edges)
    if (ei.c < 0) {
      rep.positive = false;
      rep.negative.push_back({ei.e, ei.c});
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Simplicity
// ---------------------------------------------------------------------------

struct SimplicityCertificate {
  struct TauEntry {
    size_t tau = 0;
    size_t p = 0;
    std::vector<std::vector<size_t>> Omega;  // subsets of P_1(tau)
    std::vector<std::vector<size_t>> R;      // subsets of P_{n-1}(tau)
    std::vector<LatticePolytope> check_delta_i, delta_i;
    LatticePolytope check_delta_tau, delta_tau;  // the joins (if p > 0)
    bool ok = true;
    std::string failure;
  };
  std::vector<TauEntry> entries;
  bool simple = true;
  std::string witness;
};

inline SimplicityCertificate check_simple(const MonodromyAtlas& atlas) {
  const AffineComplex& cx = *atlas.cx;
  size_t n = cx.n;
  {
    auto pos = check_positive(atlas);
    if (!pos.positive)
      throw NotPositiveError("check_simple: the complex is not positive");
  }

  SimplicityCertificate cert;
  for (size_t tau = 0; tau < cx.n_cells; ++tau) {
    int d = cx.cell_dim[tau];
    if (d < 1 || d > int(n) - 1) continue;
    SimplicityCertificate::TauEntry ent;
    ent.tau = tau;

    std::vector<size_t> p1, pn1;
    if (d == 1) p1.push_back(cx.identity_morphism(tau));
    else
      for (size_t c = 0; c < cx.n_chains; ++c)
        if (cx.chain_len(c) == 2 && cx.chain_cells[c][1] == tau &&
            cx.cell_dim[cx.chain_cells[c][0]] == 1)
          p1.push_back(c);
    if (d == int(n) - 1) pn1.push_back(cx.identity_morphism(tau));
    else
      for (size_t c = 0; c < cx.n_chains; ++c)
        if (cx.chain_len(c) == 2 && cx.chain_cells[c][0] == tau &&
            cx.cell_dim[cx.chain_cells[c][1]] == int(n) - 1)
          pn1.push_back(c);
    std::sort(p1.begin(), p1.end());
    std::sort(pn1.begin(), pn1.end());

    // c-value of the composite f o e (0 on the boundary).
    auto cval = [&](size_t e, size_t f) -> Int {
      size_t g = cx.compose(e, f);
      const auto* ei = atlas.edge(g);
      return ei ? ei->c : Int(0);
    };

    // Bipartite components of the nonvanishing relation.
    detail::PlainUF uf(p1.size() + pn1.size());
    for (size_t i = 0; i < p1.size(); ++i)
      for (size_t j = 0; j < pn1.size(); ++j)
        if (cval(p1[i], pn1[j]) != 0) uf.unite(i, p1.size() + j);
    std::map<size_t, std::pair<std::vector<size_t>, std::vector<size_t>>>
        comps;
    for (size_t i = 0; i < p1.size(); ++i)
      comps[uf.find(i)].first.push_back(p1[i]);
    for (size_t j = 0; j < pn1.size(); ++j)
      comps[uf.find(p1.size() + j)].second.push_back(pn1[j]);
    for (auto& [root, pr] : comps) {
      if (pr.first.empty() || pr.second.empty()) continue;
      // keep only components carrying a nonzero invariant
      bool nonzero = false;
      for (size_t e : pr.first)
        for (size_t f : pr.second)
          if (cval(e, f) != 0) nonzero = true;
      if (!nonzero) continue;
      ent.Omega.push_back(pr.first);
      ent.R.push_back(pr.second);
    }
    ent.p = ent.Omega.size();

    if (ent.p > 0) {
      DeltaPolytopes dp = delta_polytopes(atlas, tau);
      // Condition (2): constancy within each group.
      for (size_t i = 0; i < ent.p && ent.ok; ++i) {
        const LatticePolytope& c0 = dp.check_delta.at(ent.Omega[i][0]);
        for (size_t e : ent.Omega[i])
          if (!equal_up_to_translation(c0, dp.check_delta.at(e))) {
            ent.ok = false;
            ent.failure = "condition (2): Delta-check_e varies within a "
                          "group";
          }
        ent.check_delta_i.push_back(c0);
        const LatticePolytope& d0 = dp.delta.at(ent.R[i][0]);
        for (size_t f : ent.R[i])
          if (!equal_up_to_translation(d0, dp.delta.at(f))) {
            ent.ok = false;
            ent.failure = "condition (2): Delta_f varies within a group";
          }
        ent.delta_i.push_back(d0);
      }
      // Condition (3): the joins are elementary simplices.
      if (ent.ok) {
        auto join = [&](const std::vector<LatticePolytope>& parts,
                        size_t rank) {
          std::vector<Vec> pts;
          for (size_t i = 0; i < parts.size(); ++i)
            for (const auto& v : parts[i].vertices) {
              Vec x = v;
              for (size_t k = 0; k < parts.size(); ++k)
                x.push_back(Int(k == i ? 1 : 0));
              pts.push_back(x);
            }
          return make_polytope(rank + parts.size(), pts);
        };
        ent.check_delta_tau = join(ent.check_delta_i, n - size_t(d));
        ent.delta_tau = join(ent.delta_i, size_t(d));
        if (!is_elementary_simplex(ent.check_delta_tau)) {
          ent.ok = false;
          ent.failure = "condition (3): Delta-check(tau) is not an "
                        "elementary simplex";
        } else if (!is_elementary_simplex(ent.delta_tau)) {
          ent.ok = false;
          ent.failure = "condition (3): Delta(tau) is not an elementary "
                        "simplex";
        }
      }
    }
    if (!ent.ok && cert.simple) {
      cert.simple = false;
      cert.witness =
          "cell " + std::to_string(tau) + ": " + ent.failure;
    }
    cert.entries.push_back(ent);
  }
  return cert;
}

}  // namespace afw
