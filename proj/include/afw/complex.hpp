// The central object: an integral affine manifold with singularities given by
// lattice polytopes glued along faces, with a complete fan structure at each
// vertex.  Cells may self-intersect, so all bookkeeping is germ-based: cells
// are equivalence classes of local faces, morphisms and flags are equivalence
// classes of local chains of faces.
//
// Provides the cell category, its barycentric subdivision, the chart atlas
// (wedge isomorphisms into vertex fans), holonomy generators of every flag,
// the discriminant loci, toricity validation, and fibred products of maximal
// cells (maximal pairs).
#pragma once

#include <tuple>

#include "afw/polytope.hpp"

namespace afw {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ComplexErrorKind {
  InvalidSpec,
  NotAManifold,
  FanMismatch,
  NonIntegralIdentification,
};

struct ComplexError : std::runtime_error {
  ComplexErrorKind kind;
  ComplexError(ComplexErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

// ---------------------------------------------------------------------------
// Spec
// ---------------------------------------------------------------------------

struct Identification {
  size_t poly_from = 0;
  std::vector<size_t> verts_from;  // vertex indices of the glued face
  size_t poly_to = 0;
  std::vector<size_t> verts_to;
  AffMapZ map;  // unimodular ambient affine map; restriction to the face is
                // the identification
};

struct VertexFanSpec {
  size_t poly = 0, vertex = 0;  // any representative corner of the class
  FanZ fan;
  // (poly, vertex) corner -> maximal cone index of the fan, for every corner
  // in the class.
  std::vector<std::pair<std::pair<size_t, size_t>, size_t>> corner_to_cone;
};

struct ComplexSpec {
  size_t dim = 0;
  std::vector<LatticePolytope> polytopes;
  std::vector<Identification> identifications;
  std::vector<VertexFanSpec> fans;
  bool allow_boundary = false;
  // Optional explicit wedge isomorphisms, (poly, vertex) -> matrix.  Needed
  // when the assigned cone has automorphisms that the shared-edge constraints
  // cannot tell apart (possible at boundary vertices).
  std::map<std::pair<size_t, size_t>, IntMat> pinned_wedge_iso;
};

// ---------------------------------------------------------------------------
// Local faces / chains
// ---------------------------------------------------------------------------

struct LocalFace {
  size_t poly = 0, face = 0;  // face = index into polytope's face list
  bool operator<(const LocalFace& o) const {
    return std::tie(poly, face) < std::tie(o.poly, o.face);
  }
  bool operator==(const LocalFace& o) const {
    return poly == o.poly && face == o.face;
  }
};

struct LocalChain {
  size_t poly = 0;
  std::vector<size_t> faces;  // strictly increasing in the face order
  bool operator<(const LocalChain& o) const {
    return std::tie(poly, faces) < std::tie(o.poly, o.faces);
  }
  bool operator==(const LocalChain& o) const {
    return poly == o.poly && faces == o.faces;
  }
};

// ---------------------------------------------------------------------------
// AffineComplex
// ---------------------------------------------------------------------------

struct AffineComplex {
  ComplexSpec spec;
  size_t n = 0;  // dimension

  // ----- cells -----
  std::vector<LocalFace> local_faces;         // all dim>=0 local faces, sorted
  std::map<LocalFace, size_t> local_face_id;  // -> index into local_faces
  std::vector<size_t> face_cell;              // local face -> cell class id
  size_t n_cells = 0;
  std::vector<int> cell_dim;                   // per class
  std::vector<LocalFace> cell_rep;             // class -> lex-least local face
  std::vector<std::vector<size_t>> cell_members;  // class -> local face indices
  // Transport to the class representative: for local face i, an affine map of
  // ambient coordinates whose restriction to the face carries it onto the
  // representative local face.
  std::vector<AffMapZ> face_to_rep;

  // ----- chains / flags (Bar(P) simplices, Cat(P) morphisms) -----
  std::vector<LocalChain> chain_reps;          // class -> lex-least local chain
  std::map<LocalChain, size_t> chain_class_of; // local chain -> class
  std::vector<std::vector<size_t>> chain_cells;  // class -> cell ids bottom..top
  size_t n_chains = 0;

  // ----- vertex fans / atlas -----
  std::vector<size_t> fan_of_vertex_class;  // vertex cell id -> index into spec.fans
  struct Corner {
    size_t poly = 0, vertex = 0;  // vertex index in the polytope
    size_t local_face = 0;        // the dim-0 local face index
    size_t vertex_cell = 0;       // cell class of the vertex
    size_t germ_chain = 0;        // chain class of (corner ⊂ top): the maximal germ
    size_t cone = 0;              // assigned maximal cone in the vertex fan
    IntMat wedge_iso;             // tangent wedge (ambient coords) -> fan coords
  };
  std::vector<Corner> corners;                 // sorted by (poly, vertex)
  std::map<std::pair<size_t, size_t>, size_t> corner_id;  // (poly,vertex) -> idx
  std::map<size_t, size_t> corner_of_germ;     // maximal vertex germ chain -> corner
  // Every germ at a vertex: chain class (v ⊂ tau) -> cone index in Sigma_v.
  std::map<size_t, size_t> germ_cone;

  // ----- discriminant -----
  std::vector<size_t> delta_prime;  // chain classes with dims 1..n-1
  std::vector<size_t> delta;        // subset with nontrivial holonomy

  bool has_boundary = false;

  // ------------------------------------------------------------------
  // Chain helpers
  // ------------------------------------------------------------------

  size_t chain_len(size_t c) const { return chain_cells[c].size(); }

  // Class of the subchain of c picking the given positions.
  size_t subchain(size_t c, const std::vector<size_t>& positions) const {
    const LocalChain& rep = chain_reps[c];
    LocalChain sub;
    sub.poly = rep.poly;
    for (size_t p : positions) sub.faces.push_back(rep.faces[p]);
    auto it = chain_class_of.find(sub);
    if (it == chain_class_of.end())
      throw std::logic_error("subchain: missing chain class");
    return it->second;
  }

  size_t chain_top_cell(size_t c) const { return chain_cells[c].back(); }
  size_t chain_bottom_cell(size_t c) const { return chain_cells[c].front(); }

  // All chain classes of length len+1 whose prefix of length len equals c and
  // whose added top cell has the given dimension (-2 = any, n = maximal).
  std::vector<size_t> up_extensions(size_t c, int want_dim) const {
    std::vector<size_t> out;
    size_t L = chain_len(c);
    for (size_t d = 0; d < n_chains; ++d) {
      if (chain_len(d) != L + 1) continue;
      if (want_dim != -2 && cell_dim[chain_cells[d].back()] != want_dim)
        continue;
      std::vector<size_t> pos(L);
      for (size_t i = 0; i < L; ++i) pos[i] = i;
      if (subchain(d, pos) == c) out.push_back(d);
    }
    return out;
  }

  // All chain classes of length len+1 whose suffix of length len equals c and
  // whose prepended bottom cell has dimension 0.
  std::vector<size_t> down_vertex_extensions(size_t c) const {
    std::vector<size_t> out;
    size_t L = chain_len(c);
    for (size_t d = 0; d < n_chains; ++d) {
      if (chain_len(d) != L + 1) continue;
      if (cell_dim[chain_cells[d].front()] != 0) continue;
      std::vector<size_t> pos(L);
      for (size_t i = 0; i < L; ++i) pos[i] = i + 1;
      if (subchain(d, pos) == c) out.push_back(d);
    }
    return out;
  }

  // ------------------------------------------------------------------
  // Morphisms: a morphism tau -> sigma is the chain class of a 2-chain
  // (identity morphisms are the 1-chain classes).
  // ------------------------------------------------------------------

  bool is_identity_morphism(size_t m) const { return chain_len(m) == 1; }

  size_t identity_morphism(size_t cell) const {
    LocalChain c;
    c.poly = cell_rep[cell].poly;
    c.faces = {cell_rep[cell].face};
    return chain_class_of.at(c);
  }

  std::vector<size_t> hom_set(size_t tau, size_t sigma) const {
    if (tau == sigma) return {identity_morphism(tau)};
    std::vector<size_t> out;
    for (size_t c = 0; c < n_chains; ++c) {
      if (chain_len(c) != 2) continue;
      if (chain_cells[c][0] == tau && chain_cells[c][1] == sigma)
        out.push_back(c);
    }
    return out;
  }

  // Compose e1: a->b with e2: b->c giving a->c ("third edge of the unique
  // 2-simplex").
  size_t compose(size_t e1, size_t e2) const {
    if (is_identity_morphism(e1)) return e2;
    if (is_identity_morphism(e2)) return e1;
    if (chain_cells[e1][1] != chain_cells[e2][0])
      throw std::invalid_argument("compose: morphisms not composable");
    // Find a 3-chain class whose (0,1) subchain is e1 and (1,2) subchain e2.
    std::optional<size_t> result;
    for (size_t c = 0; c < n_chains; ++c) {
      if (chain_len(c) != 3) continue;
      if (subchain(c, {0, 1}) != e1 || subchain(c, {1, 2}) != e2) continue;
      size_t r = subchain(c, {0, 2});
      if (result && *result != r)
        throw std::logic_error("compose: ambiguous composition");
      result = r;
    }
    if (!result) throw std::logic_error("compose: no witnessing 2-simplex");
    return *result;
  }

  // ------------------------------------------------------------------
  // Charts and transport
  // ------------------------------------------------------------------

  // Chart of a maximal vertex germ f (2-chain class, bottom a vertex, top
  // maximal): ambient polytope coordinates -> fan coordinates of Sigma_v,
  // x |-> A_f(x - w).
  AffMapZ chart(size_t f) const {
    const Corner& c = corners[corner_of_germ.at(f)];
    const LatticePolytope& P = spec.polytopes[c.poly];
    Vec w = P.vertices[c.vertex];
    return AffMapZ(c.wedge_iso, vec_neg(mat_apply(c.wedge_iso, w)));
  }

  // Transport across a vertex: f1, f2 maximal vertex germs at the same vertex
  // class; returns the affine map from f1's polytope coordinates to f2's.
  AffMapZ cross_via(size_t f1, size_t f2) const {
    const Corner& c1 = corners[corner_of_germ.at(f1)];
    const Corner& c2 = corners[corner_of_germ.at(f2)];
    if (c1.vertex_cell != c2.vertex_cell)
      throw std::invalid_argument("cross_via: germs at different vertices");
    return chart(f2).inverse().compose(chart(f1));
  }

  // The polytope hosting a maximal germ or node chain (top cell maximal).
  size_t poly_of_chain(size_t c) const { return chain_reps[c].poly; }

  // ------------------------------------------------------------------
  // Chamber structure of a flag
  // ------------------------------------------------------------------

  struct Crossing {
    size_t node_a = 0, node_b = 0;  // node chain classes (flag + maximal)
    size_t wall = 0;                // wall chain class (flag, or flag + rho)
    size_t down = 0;                // down chain class (flag, or v + flag)
    AffMapZ transport;              // poly(node_a) coords -> poly(node_b)
  };

  struct ChamberGraph {
    std::vector<size_t> nodes;       // sorted node chain classes
    std::vector<Crossing> crossings; // both directions not duplicated:
                                     // node_a <= node_b as stored
  };

  // Nodes: extensions of the flag by a maximal cell.  Walls: the flag itself
  // if its top is codim 1, plus extensions by a codim-1 cell.  Crossings are
  // enumerated per wall and per downward vertex extension of the flag.
  ChamberGraph chamber_graph(size_t flag) const {
    ChamberGraph G;
    if (cell_dim[chain_top_cell(flag)] == int(n)) {
      // The flag already reaches a maximal cell: its star lies in a single
      // affine chart and carries no holonomy.
      G.nodes = {flag};
      return G;
    }
    G.nodes = up_extensions(flag, int(n));
    std::sort(G.nodes.begin(), G.nodes.end());

    size_t L = chain_len(flag);
    bool flag_starts_at_vertex = cell_dim[chain_bottom_cell(flag)] == 0;
    std::vector<size_t> walls;
    if (cell_dim[chain_top_cell(flag)] == int(n) - 1) walls.push_back(flag);
    else {
      auto w = up_extensions(flag, int(n) - 1);
      walls.insert(walls.end(), w.begin(), w.end());
    }
    std::sort(walls.begin(), walls.end());

    for (size_t W : walls) {
      // Downward contexts: the wall chain with a vertex prepended; if the
      // flag already starts at a vertex, the wall itself is the only context.
      std::vector<size_t> contexts;
      if (flag_starts_at_vertex) contexts.push_back(W);
      else {
        contexts = down_vertex_extensions(W);
        std::sort(contexts.begin(), contexts.end());
      }
      for (size_t D : contexts) {
        // Full chains: D extended by a maximal cell.
        std::vector<size_t> fulls = up_extensions(D, int(n));
        std::sort(fulls.begin(), fulls.end());
        for (size_t i = 0; i < fulls.size(); ++i)
          for (size_t j = i + 1; j < fulls.size(); ++j) {
            size_t YA = fulls[i], YB = fulls[j];
            Crossing c;
            c.wall = W;
            c.down = D;
            size_t FL = chain_len(YA);
            // node = drop the vertex (if prepended) and the wall cell if the
            // wall extends the flag; keep flag positions + top.
            std::vector<size_t> node_pos, germ_pos;
            size_t off = flag_starts_at_vertex ? 0 : 1;
            for (size_t p = 0; p < L; ++p) node_pos.push_back(p + off);
            if (W != flag) {
              // wall cell sits at position off+L; skip it
            }
            node_pos.push_back(FL - 1);
            germ_pos = {0, FL - 1};
            c.node_a = subchain(YA, node_pos);
            c.node_b = subchain(YB, node_pos);
            size_t fA = subchain(YA, germ_pos);
            size_t fB = subchain(YB, germ_pos);
            c.transport = cross_via(fA, fB);
            G.crossings.push_back(c);
          }
      }
    }
    return G;
  }

  // Canonical base germ of a flag: the least node chain class.
  size_t flag_base_node(size_t flag) const {
    auto nodes = up_extensions(flag, int(n));
    if (nodes.empty()) throw std::logic_error("flag has no maximal extension");
    return *std::min_element(nodes.begin(), nodes.end());
  }

  // Tree transports from the base node to every node, plus holonomy
  // generators (loops based at the base node, in its polytope coordinates).
  struct Holonomy {
    size_t base_node = 0;
    std::vector<size_t> nodes;
    std::map<size_t, AffMapZ> to_node;  // base coords -> node coords
    std::vector<AffMapZ> generators;    // non-identity loop monodromies
  };

  Holonomy holonomy(size_t flag) const {
    ChamberGraph G = chamber_graph(flag);
    Holonomy H;
    H.nodes = G.nodes;
    if (G.nodes.empty()) return H;
    H.base_node = G.nodes.front();
    // BFS over crossings (deterministic order).
    std::map<size_t, AffMapZ> P;
    P[H.base_node] = AffMapZ::identity(n);
    std::set<size_t> tree_crossing;  // indices of crossings used in the tree
    bool grew = true;
    while (grew) {
      grew = false;
      for (size_t i = 0; i < G.crossings.size(); ++i) {
        const Crossing& c = G.crossings[i];
        if (P.count(c.node_a) && !P.count(c.node_b)) {
          P[c.node_b] = c.transport.compose(P[c.node_a]);
          tree_crossing.insert(i);
          grew = true;
        } else if (P.count(c.node_b) && !P.count(c.node_a)) {
          P[c.node_a] = c.transport.inverse().compose(P[c.node_b]);
          tree_crossing.insert(i);
          grew = true;
        }
      }
    }
    if (P.size() != G.nodes.size())
      throw ComplexError(ComplexErrorKind::NotAManifold,
                         "disconnected chamber graph at a flag");
    H.to_node = P;
    for (size_t i = 0; i < G.crossings.size(); ++i) {
      if (tree_crossing.count(i)) continue;
      const Crossing& c = G.crossings[i];
      AffMapZ loop =
          P[c.node_b].inverse().compose(c.transport).compose(P[c.node_a]);
      if (!(loop.linear.is_identity() && is_zero(loop.translation)))
        H.generators.push_back(loop);
    }
    return H;
  }

  // Tangent lattice basis of a cell in the coordinates of a node (flag+max)
  // chain's polytope.
  std::vector<Vec> cell_tangent_basis_in(size_t node, size_t position) const {
    const LocalChain& rep = chain_reps[node];
    const LatticePolytope& P = spec.polytopes[rep.poly];
    const auto& f = P.faces[rep.faces[position]];
    std::vector<Vec> basis;
    if (f.verts.size() < 2) return basis;
    std::vector<Vec> diffs;
    for (size_t k = 1; k < f.verts.size(); ++k)
      diffs.push_back(
          vec_sub(P.vertices[f.verts[k]], P.vertices[f.verts[0]]));
    SNF s = smith_normal_form(IntMat::from_columns(diffs));
    size_t r = 0;
    for (size_t i = 0; i < std::min(s.D.rows, s.D.cols); ++i)
      if (s.D(i, i) != 0) ++r;
    IntMat Uinv = unimodular_inverse(s.U);
    for (size_t j = 0; j < r; ++j) basis.push_back(Uinv.col(j));
    return basis;
  }
};

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

namespace detail {

struct MapUF {
  std::vector<size_t> parent;
  std::vector<AffMapZ> to_parent;  // element coords -> parent coords
  explicit MapUF(size_t n, size_t dim) : parent(n), to_parent(n) {
    for (size_t i = 0; i < n; ++i) {
      parent[i] = i;
      to_parent[i] = AffMapZ::identity(dim);
    }
  }
  // find with path compression; returns (root, map element->root)
  std::pair<size_t, AffMapZ> find(size_t x) {
    if (parent[x] == x) return {x, to_parent[x]};
    auto [r, m] = find(parent[x]);
    parent[x] = r;
    to_parent[x] = m.compose(to_parent[x]);
    return {r, to_parent[x]};
  }
};

struct PlainUF {
  std::vector<size_t> parent;
  explicit PlainUF(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = i;
  }
  size_t find(size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(size_t a, size_t b) { parent[find(a)] = find(b); }
};

}  // namespace detail

inline AffineComplex build_complex(const ComplexSpec& spec) {
  AffineComplex cx;
  cx.spec = spec;
  cx.n = spec.dim;
  size_t n = spec.dim;

  // ---- validate polytopes ----
  for (const auto& P : spec.polytopes) {
    if (P.ambient_rank != n || size_t(P.dim) != n)
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "maximal cells must be full-dimensional polytopes of "
                         "the complex dimension");
  }
  if (spec.polytopes.empty())
    throw ComplexError(ComplexErrorKind::InvalidSpec, "no polytopes");

  // ---- local faces ----
  for (size_t p = 0; p < spec.polytopes.size(); ++p)
    for (size_t f = 0; f < spec.polytopes[p].faces.size(); ++f)
      if (spec.polytopes[p].faces[f].dim >= 0)
        cx.local_faces.push_back({p, f});
  std::sort(cx.local_faces.begin(), cx.local_faces.end());
  for (size_t i = 0; i < cx.local_faces.size(); ++i)
    cx.local_face_id[cx.local_faces[i]] = i;

  // ---- local chains ----
  std::vector<LocalChain> all_chains;
  for (size_t p = 0; p < spec.polytopes.size(); ++p) {
    const auto& P = spec.polytopes[p];
    std::vector<size_t> proper;
    for (size_t f = 0; f < P.faces.size(); ++f)
      if (P.faces[f].dim >= 0) proper.push_back(f);
    auto less = [&](size_t a, size_t b) {
      return proper[a] != proper[b] &&
             face_leq(P.faces[proper[a]], P.faces[proper[b]]);
    };
    auto chains = barycentric_subdivision(proper.size(), less);
    for (const auto& ch : chains) {
      LocalChain lc;
      lc.poly = p;
      for (size_t i : ch) lc.faces.push_back(proper[i]);
      all_chains.push_back(lc);
    }
  }
  std::sort(all_chains.begin(), all_chains.end());
  std::map<LocalChain, size_t> chain_idx;
  for (size_t i = 0; i < all_chains.size(); ++i) chain_idx[all_chains[i]] = i;

  // ---- identifications: union-find with transport maps ----
  detail::MapUF face_uf(cx.local_faces.size(), n);
  detail::PlainUF chain_uf(all_chains.size());

  for (const auto& id : spec.identifications) {
    if (id.poly_from >= spec.polytopes.size() ||
        id.poly_to >= spec.polytopes.size())
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "identification references missing polytope");
    const auto& P1 = spec.polytopes[id.poly_from];
    const auto& P2 = spec.polytopes[id.poly_to];
    std::vector<size_t> vf = id.verts_from, vt = id.verts_to;
    std::sort(vf.begin(), vf.end());
    std::sort(vt.begin(), vt.end());
    size_t f1 = P1.face_index(vf);
    size_t f2 = P2.face_index(vt);
    if (f1 == size_t(-1) || f2 == size_t(-1))
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "identification face is not a face of its polytope");
    if (P1.faces[f1].dim != P2.faces[f2].dim)
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "identified faces have different dimensions");
    if (P1.faces[f1].dim == int(n))
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "cannot identify maximal cells");
    {
      Int d = det(id.map.linear);
      if (d != 1 && d != -1)
        throw ComplexError(ComplexErrorKind::NonIntegralIdentification,
                           "identification map is not unimodular");
    }
    // Vertex matching under the map.
    std::map<size_t, size_t> vmatch;  // P1 vertex idx -> P2 vertex idx
    for (size_t a : P1.faces[f1].verts) {
      Vec img = id.map.apply(P1.vertices[a]);
      bool found = false;
      for (size_t b : P2.faces[f2].verts)
        if (P2.vertices[b] == img) {
          vmatch[a] = b;
          found = true;
          break;
        }
      if (!found)
        throw ComplexError(ComplexErrorKind::NonIntegralIdentification,
                           "identification map does not carry the face onto "
                           "the target face");
    }
    if (vmatch.size() != P1.faces[f1].verts.size() ||
        [&] {
          std::set<size_t> img;
          for (auto& [a, b] : vmatch) img.insert(b);
          return img.size() != P2.faces[f2].verts.size();
        }())
      throw ComplexError(ComplexErrorKind::NonIntegralIdentification,
                         "identification vertex matching is not a bijection");
    // Lattice isomorphism on the face: tangent lattice of f1 maps onto
    // tangent lattice of f2 with index 1.
    if (P1.faces[f1].dim > 0) {
      const auto& fc1 = P1.faces[f1];
      std::vector<Vec> d1;
      for (size_t k = 1; k < fc1.verts.size(); ++k)
        d1.push_back(vec_sub(P1.vertices[fc1.verts[k]],
                             P1.vertices[fc1.verts[0]]));
      SNF s1 = smith_normal_form(IntMat::from_columns(d1));
      size_t r = 0;
      for (size_t i = 0; i < std::min(s1.D.rows, s1.D.cols); ++i)
        if (s1.D(i, i) != 0) ++r;
      IntMat U1inv = unimodular_inverse(s1.U);
      std::vector<Vec> basis1, img1;
      for (size_t j = 0; j < r; ++j) basis1.push_back(U1inv.col(j));
      for (const auto& b : basis1) img1.push_back(mat_apply(id.map.linear, b));
      // target tangent lattice
      const auto& fc2 = P2.faces[f2];
      std::vector<Vec> d2;
      for (size_t k = 1; k < fc2.verts.size(); ++k)
        d2.push_back(vec_sub(P2.vertices[fc2.verts[k]],
                             P2.vertices[fc2.verts[0]]));
      IntMat B2 = IntMat::from_columns(d2);
      // each image must be an integral combination after saturation, with the
      // coordinate matrix unimodular
      SNF s2 = smith_normal_form(B2);
      IntMat U2inv = unimodular_inverse(s2.U);
      std::vector<Vec> basis2;
      for (size_t j = 0; j < r; ++j) basis2.push_back(U2inv.col(j));
      IntMat B2s = IntMat::from_columns(basis2);
      std::vector<Vec> coords;
      for (const auto& v : img1) {
        auto c = solve_integral(B2s, v);
        if (!c)
          throw ComplexError(ComplexErrorKind::NonIntegralIdentification,
                             "identification is not integral on the face "
                             "lattice");
        coords.push_back(*c);
      }
      Int dd = det(IntMat::from_columns(coords));
      if (dd != 1 && dd != -1)
        throw ComplexError(ComplexErrorKind::NonIntegralIdentification,
                           "identification is not a lattice isomorphism of "
                           "the face");
    }
    // Union all subfaces of f1 with the corresponding subfaces of f2, and all
    // chains inside f1 with their images.
    auto map_face = [&](size_t g1) -> size_t {
      const auto& G1 = P1.faces[g1];
      std::vector<size_t> img;
      for (size_t a : G1.verts) img.push_back(vmatch.at(a));
      std::sort(img.begin(), img.end());
      size_t g2 = P2.face_index(img);
      if (g2 == size_t(-1))
        throw ComplexError(ComplexErrorKind::NonIntegralIdentification,
                           "face image is not a face of the target polytope");
      return g2;
    };
    for (size_t g1 = 0; g1 < P1.faces.size(); ++g1) {
      const auto& G1 = P1.faces[g1];
      if (G1.dim < 0) continue;
      if (!face_leq(G1, P1.faces[f1])) continue;
      size_t g2 = map_face(g1);
      size_t i1 = cx.local_face_id.at({id.poly_from, g1});
      size_t i2 = cx.local_face_id.at({id.poly_to, g2});
      auto [r1, m1] = face_uf.find(i1);
      auto [r2, m2] = face_uf.find(i2);
      if (r1 == r2) {
        // Consistency: the two transports must agree on the face.
        AffMapZ via = m2.compose(id.map);  // i1 -> root via identification
        for (size_t a : G1.verts) {
          if (via.apply(P1.vertices[a]) != m1.apply(P1.vertices[a]))
            throw ComplexError(
                ComplexErrorKind::NotAManifold,
                "identification cycle does not restrict to the identity on a "
                "face");
        }
      } else {
        // root r1 -> root r2:  m2 ∘ map ∘ m1^{-1}
        face_uf.parent[r1] = r2;
        face_uf.to_parent[r1] = m2.compose(id.map).compose(m1.inverse());
      }
    }
    for (size_t ci = 0; ci < all_chains.size(); ++ci) {
      const LocalChain& ch = all_chains[ci];
      if (ch.poly != id.poly_from) continue;
      if (!face_leq(P1.faces[ch.faces.back()], P1.faces[f1])) continue;
      LocalChain img;
      img.poly = id.poly_to;
      for (size_t g : ch.faces) img.faces.push_back(map_face(g));
      std::sort(img.faces.begin(), img.faces.end());
      auto it = chain_idx.find(img);
      if (it == chain_idx.end())
        throw std::logic_error("chain image missing");
      chain_uf.unite(ci, it->second);
    }
  }

  // ---- cells ----
  {
    std::map<size_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < cx.local_faces.size(); ++i)
      groups[face_uf.find(i).first].push_back(i);
    std::vector<std::pair<std::pair<int, LocalFace>, std::vector<size_t>>>
        ordered;
    for (auto& [root, members] : groups) {
      LocalFace rep = cx.local_faces[members.front()];
      const auto& P = spec.polytopes[rep.poly];
      ordered.push_back({{P.faces[rep.face].dim, rep}, members});
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    cx.face_cell.assign(cx.local_faces.size(), 0);
    cx.face_to_rep.assign(cx.local_faces.size(), AffMapZ::identity(n));
    for (size_t cid = 0; cid < ordered.size(); ++cid) {
      const auto& members = ordered[cid].second;
      size_t rep_local = members.front();
      cx.cell_rep.push_back(cx.local_faces[rep_local]);
      cx.cell_dim.push_back(ordered[cid].first.first);
      cx.cell_members.push_back(members);
      AffMapZ rep_to_root = face_uf.find(rep_local).second;
      for (size_t m : members) {
        cx.face_cell[m] = cid;
        cx.face_to_rep[m] =
            rep_to_root.inverse().compose(face_uf.find(m).second);
      }
    }
    cx.n_cells = ordered.size();
  }

  // ---- chains ----
  {
    std::map<size_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < all_chains.size(); ++i)
      groups[chain_uf.find(i)].push_back(i);
    std::vector<std::pair<LocalChain, std::vector<size_t>>> ordered;
    for (auto& [root, members] : groups)
      ordered.push_back({all_chains[members.front()], members});
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t cid = 0; cid < ordered.size(); ++cid) {
      cx.chain_reps.push_back(ordered[cid].first);
      for (size_t m : ordered[cid].second)
        cx.chain_class_of[all_chains[m]] = cid;
      std::vector<size_t> cells;
      const LocalChain& rep = ordered[cid].first;
      for (size_t f : rep.faces)
        cells.push_back(cx.face_cell[cx.local_face_id.at({rep.poly, f})]);
      cx.chain_cells.push_back(cells);
    }
    cx.n_chains = ordered.size();
  }

  // ---- manifold checks ----
  for (size_t cid = 0; cid < cx.n_cells; ++cid) {
    if (cx.cell_dim[cid] != int(n) - 1) continue;
    size_t germs = cx.cell_members[cid].size();
    if (germs == 2) continue;
    if (germs == 1 && spec.allow_boundary) {
      cx.has_boundary = true;
      continue;
    }
    throw ComplexError(ComplexErrorKind::NotAManifold,
                       "codimension-1 cell germ count is not 2");
  }
  if (!spec.allow_boundary && n >= 1 && n <= 3) {
    // Vertex links must be spheres: at n=1 exactly 2 edge germs per vertex;
    // at n=2 the corner cycle closes; n=3 checked by Euler characteristic of
    // the link below (via germ counts).
    for (size_t cid = 0; cid < cx.n_cells; ++cid) {
      if (cx.cell_dim[cid] != 0) continue;
      // Count germs v -> cell by dimension via chains of length 2.
      std::map<int, size_t> germ_count;
      for (size_t c = 0; c < cx.n_chains; ++c) {
        if (cx.chain_cells[c].size() != 2) continue;
        if (cx.chain_cells[c][0] != cid) continue;
        ++germ_count[cx.cell_dim[cx.chain_cells[c][1]]];
      }
      if (n == 1 && germ_count[1] != 2)
        throw ComplexError(ComplexErrorKind::NotAManifold,
                           "vertex link is not two edge germs");
      if (n == 2 && germ_count[1] != germ_count[2])
        throw ComplexError(ComplexErrorKind::NotAManifold,
                           "vertex link is not a cycle");
      if (n == 3) {
        long chi = long(germ_count[1]) - long(germ_count[2]) +
                   long(germ_count[3]);
        if (chi != 2)
          throw ComplexError(ComplexErrorKind::NotAManifold,
                             "vertex link Euler characteristic is not 2");
      }
    }
  }

  // ---- vertex fans and atlas ----
  // corners
  for (size_t p = 0; p < spec.polytopes.size(); ++p) {
    const auto& P = spec.polytopes[p];
    for (size_t f = 0; f < P.faces.size(); ++f) {
      if (P.faces[f].dim != 0) continue;
      AffineComplex::Corner c;
      c.poly = p;
      c.vertex = P.faces[f].verts[0];
      c.local_face = cx.local_face_id.at({p, f});
      c.vertex_cell = cx.face_cell[c.local_face];
      // maximal germ chain (corner ⊂ top face)
      size_t topf = size_t(-1);
      for (size_t g = 0; g < P.faces.size(); ++g)
        if (P.faces[g].dim == int(n)) topf = g;
      LocalChain lc;
      lc.poly = p;
      lc.faces = {f, topf};
      c.germ_chain = cx.chain_class_of.at(lc);
      cx.corners.push_back(c);
    }
  }
  std::sort(cx.corners.begin(), cx.corners.end(),
            [](const AffineComplex::Corner& a, const AffineComplex::Corner& b) {
              return std::tie(a.poly, a.vertex) < std::tie(b.poly, b.vertex);
            });
  for (size_t i = 0; i < cx.corners.size(); ++i) {
    cx.corner_id[{cx.corners[i].poly, cx.corners[i].vertex}] = i;
    cx.corner_of_germ[cx.corners[i].germ_chain] = i;
  }

  // fan per vertex class
  cx.fan_of_vertex_class.assign(cx.n_cells, size_t(-1));
  for (size_t fi = 0; fi < spec.fans.size(); ++fi) {
    const auto& vf = spec.fans[fi];
    auto it = cx.corner_id.find({vf.poly, vf.vertex});
    if (it == cx.corner_id.end())
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "fan references a missing corner");
    size_t vc = cx.corners[it->second].vertex_cell;
    if (cx.fan_of_vertex_class[vc] != size_t(-1))
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "two fans assigned to one vertex class");
    cx.fan_of_vertex_class[vc] = fi;
  }
  for (size_t cid = 0; cid < cx.n_cells; ++cid)
    if (cx.cell_dim[cid] == 0 && cx.fan_of_vertex_class[cid] == size_t(-1))
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "vertex class without a fan");
  // cone assignment per corner
  for (auto& c : cx.corners) {
    const auto& vf = spec.fans[cx.fan_of_vertex_class[c.vertex_cell]];
    bool found = false;
    for (const auto& [pv, cone] : vf.corner_to_cone)
      if (pv.first == c.poly && pv.second == c.vertex) {
        c.cone = cone;
        found = true;
        break;
      }
    if (!found)
      throw ComplexError(ComplexErrorKind::InvalidSpec,
                         "corner without a cone assignment");
  }
  if (!spec.allow_boundary)
    for (size_t cid = 0; cid < cx.n_cells; ++cid)
      if (cx.cell_dim[cid] == 0 &&
          !fan_is_complete(spec.fans[cx.fan_of_vertex_class[cid]].fan))
        throw ComplexError(ComplexErrorKind::FanMismatch,
                           "vertex fan is not complete");

  // Wedge isomorphisms per corner with shared-edge-germ consistency within
  // each vertex class, resolved by backtracking; lexicographically smallest
  // valid assignment is chosen.
  {
    // Edge germ data: for a corner and a local edge at it, its primitive
    // direction; consistency requires equal fan rays across the germ class.
    struct EdgeAt {
      size_t chain;  // chain class of (corner ⊂ edge)
      Vec dir;       // primitive edge direction in ambient coords
    };
    auto corner_edges = [&](const AffineComplex::Corner& c) {
      std::vector<EdgeAt> out;
      const auto& P = spec.polytopes[c.poly];
      for (size_t g = 0; g < P.faces.size(); ++g) {
        if (P.faces[g].dim != 1) continue;
        const auto& e = P.faces[g].verts;
        size_t vface = size_t(-1);
        for (size_t f = 0; f < P.faces.size(); ++f)
          if (P.faces[f].dim == 0 && P.faces[f].verts[0] == c.vertex)
            vface = f;
        if (std::find(e.begin(), e.end(), c.vertex) == e.end()) continue;
        LocalChain lc;
        lc.poly = c.poly;
        lc.faces = {vface, g};
        EdgeAt ea;
        ea.chain = cx.chain_class_of.at(lc);
        size_t other = (e[0] == c.vertex) ? e[1] : e[0];
        ea.dir = primitive_directed(
            vec_sub(P.vertices[other], P.vertices[c.vertex]));
        out.push_back(ea);
      }
      return out;
    };

    // Group corners by vertex class.
    std::map<size_t, std::vector<size_t>> by_class;
    for (size_t i = 0; i < cx.corners.size(); ++i)
      by_class[cx.corners[i].vertex_cell].push_back(i);

    for (auto& [vc, corner_ids] : by_class) {
      const FanZ& fan = spec.fans[cx.fan_of_vertex_class[vc]].fan;
      // Candidate isomorphisms per corner.
      std::vector<std::vector<IntMat>> cands(corner_ids.size());
      for (size_t k = 0; k < corner_ids.size(); ++k) {
        auto& c = cx.corners[corner_ids[k]];
        const auto& P = spec.polytopes[c.poly];
        size_t vface = size_t(-1);
        for (size_t f = 0; f < P.faces.size(); ++f)
          if (P.faces[f].dim == 0 && P.faces[f].verts[0] == c.vertex)
            vface = f;
        RationalCone wedge = tangent_wedge(P, vface);
        std::vector<Vec> wr = cone_extreme_rays(wedge);
        std::sort(wr.begin(), wr.end(), lex_less);
        std::vector<Vec> kr;
        for (size_t r : fan.cones[c.cone]) kr.push_back(fan.rays[r]);
        if (wr.size() != kr.size()) continue;
        std::vector<size_t> perm(kr.size());
        for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::sort(perm.begin(), perm.end());
        do {
          auto m = wedge_isomorphism(wr, kr, perm);
          if (m) cands[k].push_back(*m);
        } while (std::next_permutation(perm.begin(), perm.end()));
        // Deterministic candidate order.
        std::sort(cands[k].begin(), cands[k].end(),
                  [](const IntMat& a, const IntMat& b) { return a.a < b.a; });
        cands[k].erase(std::unique(cands[k].begin(), cands[k].end()),
                       cands[k].end());
        auto pin = spec.pinned_wedge_iso.find({c.poly, c.vertex});
        if (pin != spec.pinned_wedge_iso.end()) {
          std::vector<IntMat> kept;
          for (const auto& m : cands[k])
            if (m.a == pin->second.a) kept.push_back(m);
          if (kept.empty())
            throw ComplexError(ComplexErrorKind::FanMismatch,
                               "pinned wedge isomorphism does not map the "
                               "tangent wedge onto the assigned cone");
          cands[k] = kept;
        }
        if (cands[k].empty())
          throw ComplexError(ComplexErrorKind::FanMismatch,
                             "no wedge isomorphism onto the assigned cone");
      }
      // Backtracking with shared-edge-germ consistency.
      std::vector<std::vector<EdgeAt>> edges(corner_ids.size());
      for (size_t k = 0; k < corner_ids.size(); ++k)
        edges[k] = corner_edges(cx.corners[corner_ids[k]]);
      std::vector<size_t> choice(corner_ids.size(), 0);
      std::function<bool(size_t)> bt = [&](size_t k) -> bool {
        if (k == corner_ids.size()) return true;
        for (size_t c = 0; c < cands[k].size(); ++c) {
          choice[k] = c;
          bool ok = true;
          // check edge germs shared with already-assigned corners
          for (size_t j = 0; j < k && ok; ++j)
            for (const auto& ea : edges[k]) {
              for (const auto& eb : edges[j])
                if (ea.chain == eb.chain) {
                  Vec ra = primitive_directed(
                      mat_apply(cands[k][choice[k]], ea.dir));
                  Vec rb = primitive_directed(
                      mat_apply(cands[j][choice[j]], eb.dir));
                  if (ra != rb) {
                    ok = false;
                    break;
                  }
                }
              if (!ok) break;
            }
          if (ok && bt(k + 1)) return true;
        }
        return false;
      };
      if (!bt(0))
        throw ComplexError(ComplexErrorKind::FanMismatch,
                           "no consistent wedge isomorphism assignment at a "
                           "vertex class");
      for (size_t k = 0; k < corner_ids.size(); ++k)
        cx.corners[corner_ids[k]].wedge_iso = cands[k][choice[k]];
    }
  }

  // germ -> cone map for every germ at every vertex, with cross-corner
  // consistency check (the germ↔cone bijection must be inclusion-preserving).
  for (const auto& c : cx.corners) {
    const auto& P = spec.polytopes[c.poly];
    const FanZ& fan = spec.fans[cx.fan_of_vertex_class[c.vertex_cell]].fan;
    size_t vface = size_t(-1);
    for (size_t f = 0; f < P.faces.size(); ++f)
      if (P.faces[f].dim == 0 && P.faces[f].verts[0] == c.vertex) vface = f;
    for (size_t g = 0; g < P.faces.size(); ++g) {
      if (P.faces[g].dim < 0) continue;
      const auto& fc = P.faces[g];
      if (std::find(fc.verts.begin(), fc.verts.end(), c.vertex) ==
          fc.verts.end())
        continue;
      LocalChain lc;
      lc.poly = c.poly;
      if (g == vface) lc.faces = {vface};
      else lc.faces = {vface, g};
      size_t germ = cx.chain_class_of.at(lc);
      // Rays of the corresponding cone: images of the extreme rays of the
      // tangent wedge of the face at the corner.
      std::vector<size_t> ray_set;
      if (fc.dim > 0) {
        std::vector<Vec> gens;
        for (size_t a : fc.verts)
          gens.push_back(vec_sub(P.vertices[a], P.vertices[c.vertex]));
        RationalCone w(n, gens);
        for (const auto& r : cone_extreme_rays(w)) {
          Vec img = primitive_directed(mat_apply(c.wedge_iso, r));
          bool found = false;
          for (size_t ri = 0; ri < fan.rays.size(); ++ri)
            if (fan.rays[ri] == img) {
              ray_set.push_back(ri);
              found = true;
              break;
            }
          if (!found)
            throw ComplexError(ComplexErrorKind::FanMismatch,
                               "germ wedge ray is not a ray of the vertex "
                               "fan");
        }
        std::sort(ray_set.begin(), ray_set.end());
      }
      size_t cone = fan.cone_index(ray_set);
      if (cone == size_t(-1))
        throw ComplexError(ComplexErrorKind::FanMismatch,
                           "germ image is not a cone of the vertex fan");
      auto it = cx.germ_cone.find(germ);
      if (it == cx.germ_cone.end()) cx.germ_cone[germ] = cone;
      else if (it->second != cone)
        throw ComplexError(ComplexErrorKind::FanMismatch,
                           "germ-to-cone assignment inconsistent across "
                           "corners");
    }
  }

  // ---- discriminant ----
  // Delta': chain classes with dims exactly 1..n-1 (codim-2 barycentric
  // simplices containing neither a vertex nor a maximal barycenter).
  for (size_t c = 0; c < cx.n_chains; ++c) {
    if (cx.chain_cells[c].size() != (n >= 1 ? n - 1 : 0)) continue;
    bool ok = n >= 2;
    for (size_t i = 0; i < cx.chain_cells[c].size() && ok; ++i)
      if (cx.cell_dim[cx.chain_cells[c][i]] != int(i) + 1) ok = false;
    if (ok) cx.delta_prime.push_back(c);
  }
  for (size_t c : cx.delta_prime) {
    auto H = cx.holonomy(c);
    if (!H.generators.empty()) cx.delta.push_back(c);
  }

  return cx;
}

// ---------------------------------------------------------------------------
// Toricity validation
// ---------------------------------------------------------------------------

struct ToricReport {
  bool toric = true;
  std::string witness;  // description of the first violation
};

// For every cell tau: the holonomy generators of the flag [tau] must satisfy
// (rho(gamma) - I)(Lambda) ⊆ Lambda_tau and fix tau pointwise.
inline ToricReport validate_toric(const AffineComplex& cx) {
  ToricReport rep;
  for (size_t cell = 0; cell < cx.n_cells; ++cell) {
    size_t flag = cx.identity_morphism(cell);
    auto H = cx.holonomy(flag);
    if (H.nodes.empty()) continue;
    std::vector<Vec> basis = cx.cell_tangent_basis_in(H.base_node, 0);
    IntMat B = IntMat::from_columns(basis);
    const LocalChain& noderep = cx.chain_reps[H.base_node];
    const LatticePolytope& P = cx.spec.polytopes[noderep.poly];
    const auto& tf = P.faces[noderep.faces[0]];
    for (const auto& g : H.generators) {
      // fix tau pointwise
      for (size_t a : tf.verts)
        if (g.apply(P.vertices[a]) != P.vertices[a]) {
          rep.toric = false;
          rep.witness = "holonomy does not fix cell " + std::to_string(cell) +
                        " pointwise";
          return rep;
        }
      for (size_t j = 0; j < cx.n; ++j) {
        Vec col(cx.n);
        for (size_t i = 0; i < cx.n; ++i)
          col[i] = g.linear(i, j) - Int(i == j ? 1 : 0);
        if (is_zero(col)) continue;
        if (basis.empty() || !solve_integral(B, col)) {
          rep.toric = false;
          rep.witness = "(rho-1)(Lambda) escapes Lambda_tau at cell " +
                        std::to_string(cell);
          return rep;
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Maximal pairs
// ---------------------------------------------------------------------------

struct MaximalPair {
  // Germ pairs (e1: tau -> sigma1, e2: tau -> sigma2) in this component;
  // morphism chain-class ids.
  std::vector<std::pair<size_t, size_t>> germ_pairs;
  // The maximal nodes of the component (pairs whose source cell has maximal
  // dimension among the component).
  std::vector<std::pair<size_t, size_t>> maximal_nodes;
  // Integral affine identification carrying the source cell of the first
  // maximal node from sigma1's polytope coordinates to sigma2's (restriction
  // to the cell is the meaningful part).
  AffMapZ identification;
};

inline std::vector<MaximalPair> maximal_pairs(const AffineComplex& cx,
                                              size_t sigma1, size_t sigma2) {
  if (cx.cell_dim[sigma1] != int(cx.n) || cx.cell_dim[sigma2] != int(cx.n))
    throw std::invalid_argument("maximal_pairs: cells not maximal");
  // Nodes: pairs (e1, e2) of morphisms with equal source.
  std::vector<std::pair<size_t, size_t>> nodes;
  for (size_t tau = 0; tau < cx.n_cells; ++tau) {
    auto h1 = cx.hom_set(tau, sigma1);
    auto h2 = cx.hom_set(tau, sigma2);
    for (size_t a : h1)
      for (size_t b : h2) nodes.push_back({a, b});
  }
  std::sort(nodes.begin(), nodes.end());
  std::map<std::pair<size_t, size_t>, size_t> node_id;
  for (size_t i = 0; i < nodes.size(); ++i) node_id[nodes[i]] = i;
  detail::PlainUF uf(nodes.size());
  // (e1, e2) over tau ~ (e1∘g, e2∘g) over tau' for g: tau' -> tau.
  for (size_t i = 0; i < nodes.size(); ++i) {
    auto [e1, e2] = nodes[i];
    size_t tau = cx.is_identity_morphism(e1) ? cx.chain_cells[e1][0]
                                             : cx.chain_cells[e1][0];
    for (size_t tp = 0; tp < cx.n_cells; ++tp) {
      for (size_t g : cx.hom_set(tp, tau)) {
        if (cx.is_identity_morphism(g)) continue;
        size_t f1 = cx.compose(g, e1);
        size_t f2 = cx.compose(g, e2);
        auto it = node_id.find({f1, f2});
        if (it != node_id.end()) uf.unite(i, it->second);
      }
    }
  }
  std::map<size_t, std::vector<size_t>> comps;
  for (size_t i = 0; i < nodes.size(); ++i) comps[uf.find(i)].push_back(i);

  std::vector<MaximalPair> out;
  for (auto& [root, members] : comps) {
    MaximalPair mp;
    int maxd = -1;
    for (size_t m : members) {
      auto [e1, e2] = nodes[m];
      mp.germ_pairs.push_back(nodes[m]);
      size_t tau = cx.chain_cells[e1][0];
      maxd = std::max(maxd, cx.cell_dim[tau]);
    }
    for (size_t m : members) {
      auto [e1, e2] = nodes[m];
      size_t tau = cx.chain_cells[e1][0];
      if (cx.cell_dim[tau] == maxd) mp.maximal_nodes.push_back(nodes[m]);
    }
    std::sort(mp.germ_pairs.begin(), mp.germ_pairs.end());
    std::sort(mp.maximal_nodes.begin(), mp.maximal_nodes.end());
    // Identification for the first maximal node: via transports to the cell
    // representative.
    auto [e1, e2] = mp.maximal_nodes.front();
    auto local_of = [&](size_t e) -> size_t {
      const LocalChain& r = cx.chain_reps[e];
      return cx.local_face_id.at({r.poly, r.faces[0]});
    };
    size_t l1 = local_of(e1), l2 = local_of(e2);
    mp.identification =
        cx.face_to_rep[l2].inverse().compose(cx.face_to_rep[l1]);
    out.push_back(mp);
  }
  std::sort(out.begin(), out.end(),
            [](const MaximalPair& a, const MaximalPair& b) {
              return a.germ_pairs < b.germ_pairs;
            });
  return out;
}

}  // namespace afw
