"""Collapsed tree of cylinders of a primary decomposition.

Two edges lie in the same cylinder when some conjugate of one edge group
commutes with the other.  For a decomposition whose underlying graph is a
tree this is the equivalence generated by the local relation at shared
vertices, so every query runs inside a single vertex group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import gog as G
from . import lattices as lat
from . import oracle as O
from . import words as W


class CylinderError(RuntimeError):
    """Raised when the computed partition is inconsistent."""


@dataclass
class CylinderClass:
    edges: list
    representative: str
    centralizer: list | None  # global words generating C(edge group of the representative); None if out of reach
    conjugators: dict = field(default_factory=dict)  # edge id -> global word
    vertex: str = ""

    def to_json(self, alpha: W.Alphabet) -> dict:
        return {
            "edges": list(self.edges),
            "representative": self.representative,
            "centralizer": None if self.centralizer is None else [alpha.format(w) for w in self.centralizer],
            "conjugators": {e: alpha.format(w) for e, w in sorted(self.conjugators.items())},
            "vertex": self.vertex,
        }


@dataclass
class CylinderPartition:
    classes: list
    queries: int = 0

    def class_of(self, eid: str) -> int:
        for i, c in enumerate(self.classes):
            if eid in c.edges:
                return i
        raise KeyError(eid)

    def to_json(self, alpha: W.Alphabet) -> dict:
        return {"classes": [c.to_json(alpha) for c in self.classes], "queries": self.queries}


def _end(e, vid):
    return "source" if e.source == vid else "target"


def _local(lam, e, vid):
    """Edge generator images at vid, as local words."""
    m = e.map_at(vid, _end(e, vid))
    if isinstance(m, lat.LatticeMap):
        return None
    return m


def _local_relation(lam, e, f, vid, budget):
    """delta in G_vid (local word) with delta f delta^-1 commuting with e,
    or None.  Abelian vertices relate every pair with delta = 1."""
    v = lam.vertex(vid)
    if v.abelian:
        return ()
    if v.kind == "socket":
        # distinct boundary roots of a hyperbolic surface are not conjugate
        a = G._socket_root_power(v.payload, _local(lam, e, vid)[0])
        b = G._socket_root_power(v.payload, _local(lam, f, vid)[0])
        if a is not None and b is not None:
            return () if a[0] == b[0] else None
    h = G.local_handle(lam, vid)
    return O.conjugating_commuter(h, _local(lam, f, vid), _local(lam, e, vid), budget)


def _cyclic_coordinate(h, x, z):
    if h.word_problem_source() == "free":
        n = W.power_of(W.reduce(x), z)
        if n is not None:
            return n
    for n in sorted(range(-len(x) - 1, len(x) + 2), key=abs):
        if O.equal(h, x, W.power(z, n), log=False):
            return n
    raise CylinderError("edge image is not a power of the local centralizer generator")


def partition(lam: G.GraphOfGroups, budget: int = 1000) -> CylinderPartition:
    if lam.graph_rank() != 0:
        raise O.UnsupportedQuery("tree of cylinders implemented for decompositions over a tree")
    for e in lam.edges:
        for vid in (e.source, e.target):
            if not lam.vertex(vid).abelian and e.rank != 1:
                raise G.GogError(f"edge {e.id} is not cyclic at non-abelian vertex {vid}")
    eids = sorted(e.id for e in lam.edges)
    parent = {x: x for x in eids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    witness: dict = {}
    queries = 0
    for i, a in enumerate(eids):
        ea = lam.edge(a)
        for b in eids[i + 1 :]:
            eb = lam.edge(b)
            shared = sorted({ea.source, ea.target} & {eb.source, eb.target})
            for vid in shared:
                queries += 1
                d = _local_relation(lam, ea, eb, vid, budget)
                if d is not None:
                    witness[(a, b)] = (vid, d)
                    parent[find(b)] = find(a)
                    break
    groups: dict = {}
    for x in eids:
        groups.setdefault(find(x), []).append(x)
    classes = []
    for members in sorted(groups.values()):
        classes.append(_class(lam, members, witness))
    return CylinderPartition(classes, queries)


def _class(lam, members, witness) -> CylinderClass:
    """Transport every member into the centralizer of the representative
    and check each transport by the global word problem."""
    rep = members[0]
    h = lam.handle
    image = {x: [lam.image_word(lam.edge(x), lam.edge(x).source, j, "source") for j in range(lam.edge(x).rank)]
             for x in members}
    gamma = {rep: ()}
    frontier = [rep]
    while frontier:
        a = frontier.pop(0)
        for (x, y), (vid, d) in sorted(witness.items()):
            if a not in (x, y):
                continue
            b = y if a == x else x
            if b in gamma or b not in members:
                continue
            # d conjugates y's image into the centralizer of x's image at vid
            dg = lam.to_global(vid, d)
            gamma[b] = W.mul(gamma[a], dg) if a == x else W.mul(gamma[a], W.inverse(dg))
            frontier.append(b)
    for x in members:
        if x not in gamma:
            raise CylinderError(f"edge {x} is not connected to {rep} by witnesses")
        for u in image[x]:
            cu = W.conjugate(gamma[x], u)
            for r in image[rep]:
                if not O.commute(h, cu, r):
                    raise CylinderError(f"transitivity failed between {rep} and {x}")
    try:
        cent = O.centralizer(h, image[rep][0])
    except O.UnsupportedQuery:
        # the collapsed cylinder vertex still carries this group
        cent = None
    return CylinderClass(list(members), rep, cent, {x: gamma[x] for x in members if x != rep})


def _touched(lam, members):
    ab, nonab = [], []
    for x in members:
        e = lam.edge(x)
        for vid in (e.source, e.target):
            target = ab if lam.vertex(vid).abelian else nonab
            if vid not in target:
                target.append(vid)
    order = {v.id: i for i, v in enumerate(lam.vertices)}
    return sorted(ab, key=order.get), sorted(nonab, key=order.get)


def _fresh(base: str, taken: set) -> str:
    out, k = base, 1
    while out in taken:
        k += 1
        out = f"{base}_{k}"
    taken.add(out)
    return out


def tree_of_cylinders(lam: G.GraphOfGroups, o: O.GroupHandle | None = None, budget: int = 1000):
    """Returns ``(decomposition, partition)``.  ``o`` defaults to the
    fundamental group of ``lam``; queries run in its vertex groups."""
    part = partition(lam, budget)
    taken_names = {n for v in lam.vertices for n in v.names}
    taken_ids = {v.id for v in lam.vertices} | {e.id for e in lam.edges}
    built = {}  # class index -> (vertex, edges)
    for k, cls in enumerate(part.classes):
        built[k] = _build_class(lam, k, cls, taken_names, taken_ids)
    first_ab = {}
    for k, cls in enumerate(part.classes):
        ab, _ = _touched(lam, cls.edges)
        if ab:
            first_ab[ab[0]] = k
    vertices, placed = [], set()
    for v in lam.vertices:
        if not v.abelian:
            vertices.append(v)
        elif v.id in first_ab:
            k = first_ab[v.id]
            vertices.append(built[k][0])
            placed.add(k)
        elif not lam.incident(v.id):
            vertices.append(v)
    for k in sorted(built):
        if k not in placed:
            vertices.append(built[k][0])
    edges = [e for k in sorted(built) for e in built[k][1]]
    for k, cls in enumerate(part.classes):
        cls.vertex = built[k][0].id
    out = G.GraphOfGroups(tuple(vertices), tuple(edges), tuple(e.id for e in edges))
    return out, part


def _build_class(lam, k, cls, taken_names, taken_ids):
    ab, nonab = _touched(lam, cls.edges)
    nodes, index, arrows = [], {}, []
    for w in ab:
        index[("w", w)] = len(nodes)
        nodes.append(lat.Lattice(lam.vertex(w).payload.rank))
    cent = {}
    for v in nonab:
        first = next(x for x in cls.edges if v in (lam.edge(x).source, lam.edge(x).target))
        e0 = lam.edge(first)
        h = G.local_handle(lam, v)
        z = O.centralizer(h, _local(lam, e0, v)[0])
        if len(z) != 1:
            raise CylinderError(f"centralizer at {v} is not cyclic")
        cent[v] = (h, z[0], e0)
        index[("c", v)] = len(nodes)
        nodes.append(lat.Lattice(1))
    for x in cls.edges:
        e = lam.edge(x)
        index[("e", x)] = len(nodes)
        nodes.append(lat.Lattice(e.rank))
        for vid in (e.source, e.target):
            m = e.map_at(vid, _end(e, vid))
            if isinstance(m, lat.LatticeMap):
                arrows.append((index[("e", x)], index[("w", vid)], m))
            else:
                h, z, e0 = cent[vid]
                d = _local_relation(lam, e0, e, vid, 10**6) if e is not e0 else ()
                if d is None:
                    raise CylinderError(f"edges {e0.id} and {x} are not related at {vid}")
                n = _cyclic_coordinate(h, W.conjugate(d, m[0]), z)
                arrows.append((index[("e", x)], index[("c", vid)], lat.LatticeMap.of([[n]], 1, 1)))
    diagram = lat.AbelianDiagram(tuple(nodes), tuple(arrows))
    rank_l, legs = lat.abelianize_diagram(diagram, 0)
    n = rank_l.rank
    reuse = None
    if len(ab) == 1:
        leg = legs[index[("w", ab[0])]]
        if leg.rows == leg.cols and abs(lat.det(leg.as_list())) == 1:
            reuse = ab[0]
            inv = lat.LatticeMap.of(lat._unimodular_inverse(leg.as_list()), n, n)
            legs = [inv.compose(x) for x in legs]
    if reuse is not None:
        vertex = lam.vertex(reuse)
    else:
        vid = _fresh(f"C{k + 1}", taken_ids)
        names = tuple(_fresh(f"z{k + 1}_{i + 1}", taken_names) for i in range(n))
        vertex = G.Vertex(vid, G.AbelianPayload(names))
    edges = []
    for v in nonab:
        h, z, e0 = cent[v]
        at_v = [x for x in cls.edges if v in (lam.edge(x).source, lam.edge(x).target)]
        if reuse is not None and len(at_v) == 1 and reuse in (lam.edge(at_v[0]).source, lam.edge(at_v[0]).target):
            eid = at_v[0]
        else:
            eid = _fresh(f"{cls.representative}_{v}", taken_ids)
        edges.append(G.bipartite_edge(eid, vertex.id, v, legs[index[("c", v)]], [z]))
    return vertex, edges
