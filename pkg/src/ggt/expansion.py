"""Expansion of a JSJ-like decomposition along a strict map.

Given a bipartite decomposition Delta of L and a strict map rho: L -> M,
``expand`` builds a decomposition of a larger group (the model) together
with an embedding eta of L into it and the natural map mu back to M, so
that mu(eta(x)) = rho(x) for every generator x.  The four phases are

1. rigid vertices become the enclosures of their rho-images in M;
2. edges at a rigid vertex whose centralizers are conjugate are merged;
3. socket boundary roots are extended by the roots that exist in M;
4. abelian vertices become abelianizations of the pieces glued in (2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import gog as G
from . import lattices as lat
from . import oracle as O
from . import words as W


class ExpansionError(RuntimeError):
    pass


class IntertwiningError(ExpansionError):
    pass


@dataclass
class Expansion:
    source: G.GraphOfGroups
    target: O.GroupHandle
    strict_map: G.StrictMapDesc
    result: G.GraphOfGroups
    eta: tuple
    edge_class_map: dict
    vertex_map: dict
    mu: tuple
    log: list = field(default_factory=list)
    aux: dict = field(default_factory=dict, repr=False)

    def eta_word(self, w) -> tuple:
        return W.substitute(w, self.eta)

    def eta_map(self) -> G.StrictMapDesc:
        return G.StrictMapDesc(self.source, self.result.handle, self.eta, check=False)

    def mu_map(self) -> G.StrictMapDesc:
        return G.StrictMapDesc(self.result, self.target, self.mu, check=False)

    def to_json(self) -> dict:
        sa, ra, ma = self.source.alphabet(), self.result.alphabet(), self.target.alphabet
        return {
            "eta": {x: ra.format(w) for x, w in zip(sa.symbols, self.eta)},
            "mu": {x: ma.format(w) for x, w in zip(ra.symbols, self.mu)},
            "edge_class_map": dict(self.edge_class_map),
            "vertex_map": dict(self.vertex_map),
            "phase_log": list(self.log),
        }


@dataclass
class ModularGenerator:
    kind: str  # edge-twist | socket-twist | abelian-automorphism
    data: dict
    decomposition: G.GraphOfGroups
    action: tuple

    def apply(self, w) -> tuple:
        return W.substitute(w, self.action)

    def power(self, k: int) -> "ModularGenerator":
        if k < 0:
            raise ValueError("only nonnegative powers are composed directly")
        act = tuple((i,) for i in range(1, len(self.action) + 1))
        for _ in range(k):
            act = tuple(self.apply(w) for w in act)
        return ModularGenerator(self.kind, dict(self.data, power=k), self.decomposition, act)

    def to_json(self) -> dict:
        alpha = self.decomposition.alphabet()
        return {
            "kind": self.kind,
            "data": {k: v for k, v in self.data.items() if not k.startswith("_")},
            "action": {x: alpha.format(w) for x, w in zip(alpha.symbols, self.action)},
        }


# ------------------------------------------------------------------ helpers


def _inv(w):
    return W.inverse(w)


def _fresh(base: str, taken: set) -> str:
    out, k = base, 1
    while out in taken:
        k += 1
        out = f"{base}_{k}"
    taken.add(out)
    return out


class _Rigid:
    """A rigid vertex of the source together with its enclosure in M."""

    def __init__(self, d, rho, v, budget, taken):
        from .resolve import enclosure

        self.v = v
        m = rho.target
        self.images = [rho.apply(d.to_global(v.id, (i,))) for i in range(1, v.payload.rank + 1)]
        fams = []
        for e in d.incident(v.id):
            end = "target" if e.target == v.id else "source"
            fams.append(tuple(rho.apply(d.image_word(e, v.id, j, end)) for j in range(e.rank)))
        sub = O.SubgroupDesc(m, tuple(self.images), tuple(fams))
        enc = enclosure(m, sub, certificate="rigid-label", budget=budget)
        hg = W.stallings_fold(self.images)
        eg = W.stallings_fold(enc.generators)
        letters = [(i,) for i in range(1, m.rank + 1)]
        if W.same_subgroup(hg, eg) and hg.rank == len(self.images):
            self.mode, self.names, self.basis = "reuse", tuple(v.names), list(self.images)
        elif list(enc.generators) == letters and not (set(m.alphabet.symbols) & (taken - set(v.names))):
            self.mode, self.names, self.basis = "ambient", tuple(m.alphabet.symbols), letters
        else:
            self.fold = eg
            self.basis = eg.basis()
            self.mode = "fresh"
            self.names = tuple(_fresh(f"{v.id}_{j + 1}", taken) for j in range(len(self.basis)))
        taken.update(self.names)
        self.free = O.free_group(self.names)

    def loc(self, w) -> tuple:
        """Local word (in the new names) of the image of a source-local word."""
        if self.mode == "reuse":
            return W.reduce(w)
        x = W.substitute(w, self.images)
        if self.mode == "ambient":
            return x
        c = self.fold.express(x)
        if c is None:
            raise ExpansionError(f"image of vertex {self.v.id} left its enclosure")
        return c

    def mword(self, w) -> tuple:
        return W.substitute(w, self.basis)


# -------------------------------------------------------------------- expand


def expand(d: G.GraphOfGroups, rho: G.StrictMapDesc, o: O.GroupHandle | None = None, budget: int = 2000) -> Expansion:
    m = rho.target if o is None else o
    if m is not rho.target and m.alphabet != rho.target.alphabet:
        raise ValueError("o must be the target of rho")
    kind = m.word_problem_source()
    if kind == "gog" and _is_identity(d, rho, m):
        return _identity_expansion(d, rho, m)
    if kind not in ("free", "abelian"):
        raise O.UnsupportedQuery("expansions are computed over free or free abelian targets")
    if kind == "abelian" and any(not v.abelian for v in d.vertices):
        raise O.UnsupportedQuery("a non-abelian vertex cannot map injectively into an abelian target")
    for e in d.edges:
        if not (d.vertex(e.source).abelian and not d.vertex(e.target).abelian):
            raise ExpansionError(f"edge {e.id} is not in the bipartite convention")
    return _Builder(d, rho, m, budget).run()


def _is_identity(d, rho, m) -> bool:
    if m.gog is None or m.alphabet != d.alphabet():
        return False
    from .formats import emit_gog

    ident = tuple((i,) for i in range(1, len(d.alphabet()) + 1))
    return rho.images == ident and (m.gog is d or emit_gog(m.gog) == emit_gog(d))


def _identity_expansion(d, rho, m) -> Expansion:
    """The trivial resolution: its model is the group itself."""
    ident = rho.images
    return Expansion(
        d, m, rho, d, ident, {e.id: e.id for e in d.edges}, {v.id: v.id for v in d.vertices}, ident,
        ["identity resolution: the model is the source decomposition"], {"identity": True},
    )


class _Builder:
    def __init__(self, d, rho, m, budget):
        self.d, self.rho, self.m, self.budget = d, rho, m, budget
        self.log = []
        self.tree = set(d.tree)

    # phase 1 ---------------------------------------------------------------
    def rigid(self):
        taken = {n for v in self.d.vertices for n in v.names}
        taken |= {s[1] for s in self.d.stable}
        self.rigids = {}
        for v in self.d.vertices:
            if v.kind == "rigid":
                if not v.payload.is_free:
                    raise O.UnsupportedQuery(f"rigid vertex {v.id} is not free")
                r = _Rigid(self.d, self.rho, v, self.budget, taken)
                self.rigids[v.id] = r
                self.log.append(f"phase 1: {v.id} -> enclosure of rank {len(r.basis)} ({r.mode} names)")
        self.taken = taken

    # phase 2 and 3 ---------------------------------------------------------
    def classes(self):
        d = self.d
        self.cls = {}  # edge id -> class key
        self.members = {}  # class key -> [edge ids]
        self.gamma = {}  # edge id -> local conjugator at the non-abelian end
        self.coef = {}  # edge id -> exponent of the edge generator in the class generator
        self.rootword = {}  # class key -> local word of the class generator
        self.socket_q = {}
        for v in d.vertices:
            if v.kind == "rigid":
                r = self.rigids[v.id]
                reps = []
                for e in d.incident(v.id):
                    if e.rank != 1:
                        raise ExpansionError(f"edge {e.id} at rigid {v.id} is not cyclic")
                    c = r.loc(e.target_map[0])
                    re, a = W.root(c)
                    placed = False
                    for key in reps:
                        rep = self.rootword[key]
                        g = O.conjugating_commuter(r.free, [re], [rep], self.budget)
                        if g is None:
                            continue
                        s = 1 if W.conjugate(g, re) == W.reduce(rep) else -1
                        if W.conjugate(g, re) != W.power(rep, s):
                            raise ExpansionError("conjugator does not carry root to root")
                        self.cls[e.id], self.gamma[e.id], self.coef[e.id] = key, g, s * a
                        self.members[key].append(e.id)
                        placed = True
                        break
                    if not placed:
                        key = (v.id, e.id)
                        reps.append(key)
                        self.rootword[key] = re
                        self.members[key] = [e.id]
                        self.cls[e.id], self.gamma[e.id], self.coef[e.id] = key, (), a
                merged = [k for k in reps if len(self.members[k]) > 1]
                self.log.append(f"phase 2: {v.id} has {len(reps)} edge classes, {len(merged)} merged")
            elif v.kind == "socket":
                p = v.payload
                q = []
                for i in range(p.boundary):
                    img = self.rho.apply(d.to_global(v.id, (p.root_letter(i),)))
                    if not img:
                        raise ExpansionError(f"socket {v.id}: boundary root {i + 1} maps to the identity")
                    s, k = W.root(img)
                    q.append((s, k))
                self.socket_q[v.id] = q
                for e in d.incident(v.id):
                    rp = G._socket_root_power(p, e.target_map[0])
                    if rp is None:
                        raise ExpansionError(f"edge {e.id} at socket {v.id} is not attached to a boundary root")
                    i, k = rp
                    key = (v.id, f"boundary {i + 1}")
                    if key in self.members:
                        raise ExpansionError(f"two edges at boundary {i + 1} of socket {v.id}")
                    self.members[key] = [e.id]
                    self.rootword[key] = (p.root_letter(i),)
                    self.cls[e.id], self.gamma[e.id], self.coef[e.id] = key, (), k * q[i][1]
                roots = tuple(n * k for n, (_, k) in zip(p.roots, q))
                self.log.append(f"phase 3: socket {v.id} roots {list(p.roots)} -> {list(roots)}")
        order = {e.id: i for i, e in enumerate(d.edges)}
        self.keys = sorted(self.members, key=lambda k: order[self.members[k][0]])
        for k in self.keys:
            self.members[k].sort(key=order.get)

    # phase 4 ---------------------------------------------------------------
    def abelian(self):
        d = self.d
        nodes, index, arrows = [], {}, []
        for v in d.vertices:
            if v.abelian:
                index[("w", v.id)] = len(nodes)
                nodes.append(lat.Lattice(v.payload.rank))
        for k in self.keys:
            index[("z", k)] = len(nodes)
            nodes.append(lat.Lattice(1))
        for e in d.edges:
            index[("e", e.id)] = len(nodes)
            nodes.append(lat.Lattice(e.rank))
            arrows.append((index[("e", e.id)], index[("w", e.source)], e.source_map))
            arrows.append((index[("e", e.id)], index[("z", self.cls[e.id])], lat.LatticeMap.of([[self.coef[e.id]]], 1, 1)))
        parent = list(range(len(nodes)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        size = [1] * len(nodes)

        def union(a, b):
            a, b = find(a), find(b)
            parent[b] = a
            size[a] += size[b]

        for e in d.edges:
            union(index[("w", e.source)], index[("e", e.id)])
        self.tau = {}
        ordered = [e for e in d.edges if e.id in self.tree] + [e for e in d.edges if e.id not in self.tree]
        for e in ordered:
            a, b = index[("e", e.id)], index[("z", self.cls[e.id])]
            if find(a) == find(b):
                if e.id in self.tree:
                    raise ExpansionError(f"tree edge {e.id} closes a loop among abelian pieces")
                self.tau[e.id] = True
            elif size[find(b)] == 1 or e.id in self.tree:
                union(a, b)
            else:
                raise O.UnsupportedQuery(f"non-tree edge {e.id} joins two abelian pieces")
        comps: dict = {}
        for i in range(len(nodes)):
            comps.setdefault(find(i), []).append(i)
        self.comp_of = {}
        self.pieces = {}
        for v in d.vertices:
            if not v.abelian:
                continue
            root = find(index[("w", v.id)])
            if root in self.pieces:
                self.comp_of[v.id] = self.pieces[root]["id"]
                continue
            members = comps[root]
            local = {n: i for i, n in enumerate(members)}
            taus = [e.id for e in d.edges if e.id in self.tau and find(index[("e", e.id)]) == root]
            sub_arrows = tuple((local[s], local[t], f) for s, t, f in arrows if s in local)
            diagram = lat.AbelianDiagram(tuple(nodes[n] for n in members), sub_arrows)
            lattice, legs = lat.abelianize_diagram(diagram, len(taus))
            piece = {
                "id": v.id,
                "rank": lattice.rank,
                "members": members,
                "local": local,
                "legs": legs,
                "taus": taus,
                "diagram": diagram,
            }
            self.pieces[root] = piece
            self.comp_of[v.id] = v.id
        self.index = index
        self.find = find
        self.piece_by_id = {p["id"]: p for p in self.pieces.values()}
        for p in self.piece_by_id.values():
            self.log.append(f"phase 4: abelian piece {p['id']} of rank {p['rank']} with {len(p['taus'])} loop generators")

    def leg(self, key, col=0) -> tuple:
        """Vector in its piece of column ``col`` of the leg of node ``key``."""
        node = self.index[key]
        p = self.pieces[self.find(node)]
        legm = p["legs"][p["local"][node]]
        return tuple(legm.matrix[i][col] for i in range(legm.rows))

    def piece_of_class(self, key):
        return self.pieces[self.find(self.index[("z", key)])]

    # assembly ------------------------------------------------------------
    def assemble(self):
        d = self.d
        taken = set(self.taken)
        vertices, self.vmap = [], {}
        for v in d.vertices:
            if v.kind == "rigid":
                r = self.rigids[v.id]
                payload = G.RigidPayload(r.names, O.SubgroupDesc(self.m, tuple(r.basis)), v.payload.exceptional)
                vertices.append(G.Vertex(v.id, payload))
                self.vmap[v.id] = v.id
            elif v.kind == "socket":
                p = v.payload
                roots = tuple(n * k for n, (_, k) in zip(p.roots, self.socket_q[v.id]))
                vertices.append(G.Vertex(v.id, G.SocketPayload(p.genus, p.orientable, roots, p.names)))
                self.vmap[v.id] = v.id
            else:
                pid = self.comp_of[v.id]
                self.vmap[v.id] = pid
                if pid != v.id:
                    continue
                p = self.piece_by_id[pid]
                names = []
                for j in range(p["rank"]):
                    unit = tuple(int(i == j) for i in range(p["rank"]))
                    name = None
                    for w in d.vertices:
                        if w.abelian and self.comp_of[w.id] == pid:
                            for c in range(w.payload.rank):
                                if self.leg(("w", w.id), c) == unit and w.names[c] not in names:
                                    name = w.names[c]
                                    break
                        if name:
                            break
                    names.append(name)
                for j, n in enumerate(names):
                    if n is None:
                        names[j] = _fresh("z", taken | set(x for x in names if x))
                    taken.add(names[j])
                vertices.append(G.Vertex(pid, G.AbelianPayload(tuple(names))))
        edges, tree, stable = [], [], []
        self.emap = {}
        for k in self.keys:
            rep = self.members[k][0]
            p = self.piece_of_class(k)
            legm = p["legs"][p["local"][self.index[("z", k)]]]
            edges.append(G.bipartite_edge(rep, p["id"], k[0], legm, [self.rootword[k]]))
            for x in self.members[k]:
                self.emap[x] = rep
            if any(x in self.tree for x in self.members[k]):
                tree.append(rep)
            else:
                stable.append((rep, d.stable_name(rep)))
        try:
            self.R = G.GraphOfGroups(tuple(vertices), tuple(edges), tuple(tree), tuple(stable))
        except G.GogError as exc:
            raise ExpansionError(f"assembled decomposition is invalid: {exc}") from None

    # eta -------------------------------------------------------------------
    def kappa(self, e) -> tuple:
        """Image of the crossing of source edge e from its abelian end."""
        R = self.R
        rep = self.emap[e.id]
        out = ()
        if e.id in self.tau:
            p = self.piece_of_class(self.cls[e.id])
            j = p["taus"].index(e.id)
            free = p["legs"][-1]
            vec = [free.matrix[i][j] for i in range(free.rows)]
            out = R.vector_word(p["id"], vec)
        if rep not in set(R.tree):
            out = W.mul(out, (R.stable_letter(rep),))
        return W.mul(out, R.to_global(e.target, self.gamma[e.id]))

    def eta(self):
        d, R = self.d, self.R
        paths = d.tree_paths()
        self.g = {}
        for vid, path in paths.items():
            g = ()
            for eid, s in path:
                k = self.kappa(d.edge(eid))
                g = W.mul(g, k if s == 1 else _inv(k))
            self.g[vid] = g
        images = []
        for x in d.alphabet().symbols:
            h = d.home(d.alphabet().index(x))
            if h[0] == "stable":
                e = d.edge(h[1])
                images.append(W.mul(self.g[e.source], self.kappa(e), _inv(self.g[e.target])))
                continue
            _, vid, i = h
            v = d.vertex(vid)
            if v.kind == "rigid":
                inner = R.to_global(vid, self.rigids[vid].loc((i,)))
            elif v.kind == "socket":
                p = v.payload
                if i > p.surface_rank:
                    inner = R.to_global(vid, ((i,) * self.socket_q[vid][i - p.surface_rank - 1][1]))
                else:
                    inner = R.to_global(vid, (i,))
            else:
                pid = self.comp_of[vid]
                inner = R.vector_word(pid, self.leg(("w", vid), i - 1))
            images.append(W.mul(self.g[vid], inner, _inv(self.g[vid])))
        self.eta_images = tuple(images)

    # mu --------------------------------------------------------------------
    def mu(self):
        d, R, rho = self.d, self.R, self.rho
        paths = d.tree_paths()
        psi, frame = {}, {}
        for vid in sorted(paths, key=lambda x: len(paths[x])):
            path = paths[vid]
            if not path:
                (frame if d.vertex(vid).abelian else psi)[vid] = ()
                continue
            eid, s = path[-1]
            e = d.edge(eid)
            gm = self._gamma_m(e)
            if s == 1:
                psi[e.target] = _inv(W.mul(frame[e.source], gm))
            else:
                frame[e.source] = _inv(W.mul(psi[e.target], gm))
        self.psi, self.frame = psi, frame
        mu_t, mu_tau = {}, {}
        for e in d.edges:
            if e.id in self.tree:
                continue
            rep = self.emap[e.id]
            target = rho.image_of(d.stable_name(e.id))
            gm = self._gamma_m(e)
            core = W.mul(_inv(frame[e.source]), target, _inv(gm), _inv(psi[e.target]))
            if e.id in self.tau:
                tt = mu_t.get(rep, ())
                mu_tau[e.id] = W.mul(core, _inv(tt))
            else:
                if rep in set(R.tree):
                    raise ExpansionError(f"edge {e.id} has no free parameter")
                mu_t[rep] = core
        images = {}
        for v in R.vertices:
            if v.kind == "rigid":
                r = self.rigids[v.id]
                for j, n in enumerate(v.names):
                    images[n] = W.conjugate(psi[v.id], r.basis[j])
            elif v.kind == "socket":
                p = v.payload
                for j, n in enumerate(v.names):
                    if j < p.surface_rank:
                        val = rho.apply(d.to_global(v.id, (j + 1,)))
                    else:
                        val = self.socket_q[v.id][j - p.surface_rank][0]
                    images[n] = W.conjugate(psi[v.id], val)
        for rep, name in R.stable:
            images[name] = mu_t[rep]
        for piece in self.piece_by_id.values():
            vals = self._piece_values(piece, mu_tau, mu_t)
            for n, val in zip(R.vertex(piece["id"]).names, vals):
                images[n] = val
        self.mu_images = tuple(W.reduce(images[n]) for n in R.alphabet().symbols)

    def _gamma_m(self, e) -> tuple:
        v = self.d.vertex(e.target)
        if v.kind == "rigid":
            return self.rigids[v.id].mword(self.gamma[e.id])
        return ()

    def _class_word_m(self, key) -> tuple:
        v = self.d.vertex(key[0])
        if v.kind == "rigid":
            return self.rigids[v.id].mword(self.rootword[key])
        i = self.rootword[key][0] - v.payload.surface_rank - 1
        return self.socket_q[v.id][i][0]

    def _piece_values(self, piece, mu_tau, mu_t):
        """mu of the basis vectors of an abelian piece."""
        d, rho = self.d, self.rho
        inv_local = {i: n for n, i in piece["local"].items()}
        node_vals = []  # one M-word per coordinate of the direct sum
        for li in range(len(piece["members"])):
            n = inv_local[li]
            key = next(k for k, v in self.index.items() if v == n)
            if key[0] == "w":
                w = d.vertex(key[1])
                f = self.frame[key[1]]
                for c in range(w.payload.rank):
                    node_vals.append(W.conjugate(_inv(f), rho.apply(d.to_global(w.id, (c + 1,)))))
            elif key[0] == "z":
                k = key[1]
                rep = self.members[k][0]
                val = W.conjugate(self.psi[k[0]], self._class_word_m(k))
                if rep in mu_t:
                    val = W.conjugate(mu_t[rep], val)
                node_vals.append(val)
            else:
                e = d.edge(key[1])
                f = self.frame[e.source]
                for j in range(e.rank):
                    node_vals.append(W.conjugate(_inv(f), rho.apply(d.image_word(e, e.source, j, "source"))))
        for eid in piece["taus"]:
            node_vals.append(mu_tau[eid])
        q = [[x for legm in piece["legs"] for x in legm.matrix[i]] for i in range(piece["rank"])]
        ncols = len(node_vals)
        if self.m.word_problem_source() == "free":
            nz = [x for x in node_vals if x]
            sigma = W.root(nz[0])[0] if nz else ()
            lam = []
            for x in node_vals:
                p = W.power_of(x, sigma) if sigma else (0 if not x else None)
                if p is None:
                    raise ExpansionError(f"abelian piece {piece['id']} does not map into a cyclic subgroup")
                lam.append([p])
            coords = lat.transpose(lam, 1)  # 1 x N
        else:
            vecs = [O._abelian_vector(self.m, x) for x in node_vals]
            coords = [[v[i] for v in vecs] for i in range(self.m.rank)]
        self._check_relations(piece, coords)
        if piece["rank"] == 0:
            return []
        s = lat.right_inverse(q, ncols)
        hat = lat.matmul(coords, s, ncols)
        out = []
        for j in range(piece["rank"]):
            if self.m.word_problem_source() == "free":
                out.append(W.power(sigma, hat[0][j]) if sigma else ())
            else:
                vec = [hat[i][j] for i in range(self.m.rank)]
                out.append(W.reduce([x for i, c in enumerate(vec) for x in ([i + 1] * c if c > 0 else [-(i + 1)] * -c)]))
        return out

    def _check_relations(self, piece, coords):
        offs, n = [], 0
        for node in piece["diagram"].nodes:
            offs.append(n)
            n += node.rank
        for s, t, f in piece["diagram"].arrows:
            for j in range(f.cols):
                for row in coords:
                    val = row[offs[s] + j] - sum(row[offs[t] + i] * f.matrix[i][j] for i in range(f.rows))
                    if val:
                        raise ExpansionError(f"rho is not compatible with abelian piece {piece['id']}")

    # checks ----------------------------------------------------------------
    def check(self):
        d, R = self.d, self.R
        for r in d.relators():
            if not O.is_trivial(R.handle, W.substitute(r, self.eta_images)):
                raise ExpansionError(f"eta does not respect relator {d.alphabet().format(r)}")
        mu = G.StrictMapDesc(R, self.m, self.mu_images)
        for x, img in zip(d.alphabet().symbols, self.eta_images):
            if not O.equal(self.m, mu.apply(img), self.rho.image_of(x)):
                raise ExpansionError(f"mu(eta({x})) differs from rho({x})")

    def run(self) -> Expansion:
        self.rigid()
        self.classes()
        self.abelian()
        self.assemble()
        self.eta()
        self.mu()
        self.check()
        return Expansion(
            self.d, self.m, self.rho, self.R, self.eta_images, dict(self.emap), dict(self.vmap), self.mu_images,
            self.log, {"builder": self},
        )


# ------------------------------------------------------------ modular group


def _far_side(d: G.GraphOfGroups, eid: str) -> set:
    """Vertices separated from the base by the tree edge eid."""
    adj: dict = {}
    for x in d.tree:
        if x == eid:
            continue
        e = d.edge(x)
        adj.setdefault(e.source, []).append(e.target)
        adj.setdefault(e.target, []).append(e.source)
    seen, stack = {d.base}, [d.base]
    while stack:
        for y in adj.get(stack.pop(), []):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return {v.id for v in d.vertices} - seen


def _side_twist(d: G.GraphOfGroups, side: set, z) -> tuple:
    """Conjugate the vertex groups in ``side`` by z and fix stable letters
    so that every relator survives."""
    alpha = d.alphabet()
    out = []
    for i in range(1, len(alpha) + 1):
        h = d.home(i)
        if h[0] == "vertex":
            out.append(W.conjugate(z, (i,)) if h[1] in side else (i,))
            continue
        e = d.edge(h[1])
        src, tgt = e.source in side, e.target in side
        pre = z if src else ()
        post = _inv(z) if tgt else ()
        out.append(W.mul(pre, (i,), post))
    return tuple(out)


def _stable_twist(d: G.GraphOfGroups, eid: str, z) -> tuple:
    letter = d.stable_letter(eid)
    return tuple(W.mul(z, (i,)) if i == letter else (i,) for i in range(1, len(d.alphabet()) + 1))


def _matrix_action(d: G.GraphOfGroups, vid: str, x) -> tuple:
    """Automorphism acting on abelian vertex vid by the matrix x (columns are
    images of basis vectors)."""
    k = d.vertex(vid).payload.rank
    images = [tuple(x[i][j] for i in range(k)) for j in range(k)]
    out = []
    for i in range(1, len(d.alphabet()) + 1):
        h = d.home(i)
        if h[0] == "vertex" and h[1] == vid:
            out.append(d.vector_word(vid, images[h[2] - 1]))
        else:
            out.append((i,))
    return tuple(out)


def _socket_action(d: G.GraphOfGroups, vid: str, local: dict) -> tuple:
    out = []
    for i in range(1, len(d.alphabet()) + 1):
        h = d.home(i)
        if h[0] == "vertex" and h[1] == vid and h[2] in local:
            out.append(d.to_global(vid, local[h[2]]))
        else:
            out.append((i,))
    return tuple(out)


def _compose(first: tuple, then: tuple) -> tuple:
    """Action of ``then`` after ``first``."""
    return tuple(W.substitute(w, then) for w in first)


def _check_endomorphism(d: G.GraphOfGroups, action, what: str):
    h = d.handle
    for r in d.relators():
        if not O.is_trivial(h, W.substitute(r, action), log=False):
            raise ExpansionError(f"{what} does not preserve relator {d.alphabet().format(r)}")


def _abelian_generators(p: int, n: int) -> list:
    """Matrices (in adapted coordinates) generating the automorphisms of Z^n
    that fix the first p coordinates pointwise."""
    c = n - p
    out = []

    def elem(i, j):
        m = lat.identity(n)
        m[i][j] += 1
        return m

    for i in range(p):
        for j in range(p, n):
            out.append(elem(i, j))
    if c >= 2:
        for i in range(p, n):
            for j in range(p, n):
                if i != j:
                    out.append(elem(i, j))
    if c >= 1:
        m = lat.identity(n)
        m[n - 1][n - 1] = -1
        out.append(m)
    return out


def modular_generators(d: G.GraphOfGroups, o: O.GroupHandle | None = None) -> list:
    """Generators of the modular group: twists along edges by the adjacent
    abelian vertex group, the standard curve twists of orientable sockets,
    and automorphisms of abelian vertices fixing the peripheral subgroup.

    At each abelian vertex the first tree edge is skipped, since its twist
    is the product of the others with an inner automorphism."""
    gens = []
    tree = set(d.tree)
    first = {}
    for e in d.edges:
        if e.id in tree and d.vertex(e.source).abelian:
            first.setdefault(e.source, e.id)
    for e in d.edges:
        w = e.source
        if not d.vertex(w).abelian or d.vertex(e.target).abelian:
            continue
        if first.get(w) == e.id:
            continue
        k = d.vertex(w).payload.rank
        for j in range(k):
            vec = tuple(int(i == j) for i in range(k))
            z = d.vector_word(w, vec)
            if e.id in tree:
                far = _far_side(d, e.id)
                action = _side_twist(d, far, z)
            else:
                action = _stable_twist(d, e.id, z)
            data = {"edge": e.id, "vertex": w, "vector": list(vec), "element": d.alphabet().format(z)}
            gens.append(ModularGenerator("edge-twist", data, d, action))
    for v in d.vertices:
        if v.kind != "socket" or not v.payload.orientable:
            continue
        for i in range(v.payload.genus):
            a, b = 2 * i + 1, 2 * i + 2
            for curve, local in ((v.names[a - 1], {b: (b, a)}), (v.names[b - 1], {a: (a, b)})):
                action = _socket_action(d, v.id, local)
                gens.append(ModularGenerator("socket-twist", {"vertex": v.id, "curve": curve}, d, action))
    for v in d.vertices:
        if not v.abelian:
            continue
        n = v.payload.rank
        pbar = G.peripheral_subgroup(d, v.id, warn=False)
        if pbar.cols == n:
            continue
        q = lat.complete_basis(pbar)
        qi = lat.inverse_unimodular(q)
        for mx in _abelian_generators(pbar.cols, n):
            x = lat.matmul(lat.matmul(q, mx, n), qi, n)
            action = _matrix_action(d, v.id, x)
            gens.append(ModularGenerator("abelian-automorphism", {"vertex": v.id, "matrix": x}, d, action))
    for g in gens:
        _check_endomorphism(d, g.action, f"{g.kind} {g.data}")
    return gens


def induce_modular(x: Expansion, alpha: ModularGenerator) -> ModularGenerator:
    """The automorphism Phi(alpha) of the model with
    eta(alpha(g)) = Phi(alpha)(eta(g)) for every generator g."""
    d, R = x.source, x.result
    if alpha.decomposition is not d:
        raise ValueError("alpha is not a modular generator of the source decomposition")
    if x.aux.get("identity"):
        return ModularGenerator(alpha.kind, dict(alpha.data), R, alpha.action)
    b = x.aux["builder"]
    kind, data = alpha.kind, dict(alpha.data)
    k = data.pop("power", None)
    if kind == "edge-twist":
        e = d.edge(data["edge"])
        piece = b.piece_by_id[b.comp_of[e.source]]
        zvec = _leg_apply(b, ("w", e.source), data["vector"])
        zhat = R.vector_word(piece["id"], zvec)
        rep = b.emap[e.id]
        if e.id in b.tree:
            far = _far_side(d, e.id)
            anchor = e.target if e.target in far else piece["id"]
            hat_far = _far_side(R, rep)
            side = hat_far if anchor in hat_far else {v.id for v in R.vertices} - hat_far
            action = _side_twist(R, side, zhat)
        elif e.id in b.tau:
            action = _matrix_action(R, piece["id"], _tau_shift(piece, [(e.id, zvec)]))
        else:
            action = _stable_twist(R, rep, zhat)
            others = [(f, [-c for c in zvec]) for f in b.members[b.cls[e.id]] if f in b.tau]
            if others:
                action = _compose(action, _matrix_action(R, piece["id"], _tau_shift(piece, others)))
        data["model_element"] = R.alphabet().format(zhat)
    elif kind == "socket-twist":
        v = d.vertex(data["vertex"])
        names = list(v.names)
        i = names.index(data["curve"])
        a, b_ = (i + 1, i + 2) if i % 2 == 0 else (i, i + 1)
        local = {b_: (b_, a)} if i % 2 == 0 else {a: (a, b_)}
        action = _socket_action(R, b.vmap[v.id], local)
    elif kind == "abelian-automorphism":
        piece = b.piece_by_id[b.comp_of[data["vertex"]]]
        action = _matrix_action(R, piece["id"], _lift_matrix(b, piece, data["vertex"], data["matrix"]))
    else:
        raise ValueError(f"unknown modular generator kind {kind!r}")
    phi = ModularGenerator(kind, data, R, action)
    if k is not None:
        phi = phi.power(k)
    h = R.handle
    for name, g in zip(d.alphabet().symbols, range(1, len(d.alphabet()) + 1)):
        lhs = x.eta_word(alpha.apply((g,)))
        rhs = phi.apply(x.eta[g - 1])
        if not O.equal(h, lhs, rhs):
            raise IntertwiningError(f"intertwining fails for {kind} {alpha.data} at generator {name}")
    return phi


def _leg_apply(b, key, vec) -> list:
    node = b.index[key]
    p = b.pieces[b.find(node)]
    return list(p["legs"][p["local"][node]].apply(vec))


def _tau_shift(piece, shifts) -> list:
    """I + sum z (x) f_tau: adds z times the tau-coordinate of each vector."""
    n = piece["rank"]
    m = n - len(piece["taus"])
    x = lat.identity(n)
    for eid, z in shifts:
        j = m + piece["taus"].index(eid)
        for i in range(n):
            x[i][j] += z[i]
    return x


def _lift_matrix(b, piece, wid, mx) -> list:
    """Q (mx + identity) S for the piece containing the abelian vertex wid."""
    legs = piece["legs"]
    n = piece["rank"]
    q = [[c for legm in legs for c in legm.matrix[i]] for i in range(n)]
    big = len(q[0]) if q else 0
    block = lat.identity(big)
    off = 0
    target = piece["local"][b.index[("w", wid)]]
    for li, node in enumerate(piece["diagram"].nodes):
        if li == target:
            for i in range(node.rank):
                for j in range(node.rank):
                    block[off + i][off + j] = mx[i][j]
        off += node.rank
    s = lat.right_inverse(q, big)
    return lat.matmul(lat.matmul(q, block, big), s, big)


# ------------------------------------------------------------- verification


def verify_embedding(x: Expansion, radius: int = 6, cap: int = 1_000_000, twists: int = 2) -> G.Verdict:
    """Bounded check that eta is injective: no word of length <= radius in
    the source generators is nontrivial in the source but trivial in the
    model.  Candidates are filtered through mu composed with powers of the
    model's modular generators, then decided exactly."""
    d, R = x.source, x.result
    k = len(d.alphabet())
    if R is d and list(x.eta) == [(i,) for i in range(1, k + 1)]:
        return G.Verdict("pass", radius, None, "eta is the identity")
    if x.target.word_problem_source() != "free":
        cap = min(cap, 20_000)
    r = G._ball_radius(k, radius, cap)
    words, lengths = K.ball(k, r)
    if x.target.word_problem_source() == "free":
        mu = x.mu_map()
        mask = K.substitute_trivial(words, lengths, [mu.apply(w) for w in x.eta])
        betas = [g for g in modular_generators(R) if g.kind != "abelian-automorphism"][:6]
        for beta in betas:
            for p in range(1, twists + 1):
                act = beta.power(p)
                imgs = [mu.apply(act.apply(w)) for w in x.eta]
                mask &= K.substitute_trivial(words, lengths, imgs)
        rows = [int(i) for i in np.nonzero(mask)[0]]
    else:
        rows = range(words.shape[0])
    hr, hd = R.handle, d.handle
    for i in rows:
        if lengths[i] == 0:
            continue
        w = tuple(int(c) for c in words[i, : lengths[i]])
        if O.is_trivial(hr, x.eta_word(w), log=False) and not O.is_trivial(hd, w):
            return G.Verdict("fail", r, d.alphabet().format(w), "eta kills a nontrivial element")
    return G.Verdict("bounded-pass", r, None, f"{len(rows)} candidates decided exactly")
