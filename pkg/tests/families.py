"""Hand-built decompositions for the cylinder tests, and a brute-force
partition of their edges."""

from ggt import gog as G
from oracles import brute_commuting_conjugator, divisors, rank

# local words in a free group F(x, y)
X, Y = (1,), (2,)
XY = (1, 2)
XXY = (1, 1, 2)
DW = (1, 1, 2, 2, -1, -2)
COMM = (1, 2, -1, -2)


def _rigid(i):
    return G.Vertex(f"u{i}", G.RigidPayload((f"x{i}", f"y{i}")))


def _ab(i, k=1):
    names = ("c", "d", "s")[:k]
    return G.Vertex(f"w{i}", G.AbelianPayload(tuple(f"{n}{i}" for n in names)))


def star(words, cols):
    """One abelian centre joined to a free vertex per word."""
    k = len(cols[0])
    w = _ab(0, k)
    us = [_rigid(i + 1) for i in range(len(words))]
    es = [G.bipartite_edge(f"e{i + 1}", "w0", f"u{i + 1}", [[c] for c in cols[i]], [words[i]]) for i in range(len(words))]
    return G.GraphOfGroups((w, *us), tuple(es), tuple(e.id for e in es))


def chain(left, right):
    """u1 - w1 - u2 - w2 - u3 with u2 meeting the edges along left and right."""
    vs = (_rigid(1), _ab(1), _rigid(2), _ab(2), _rigid(3))
    es = (
        G.bipartite_edge("e1", "w1", "u1", [[1]], [X]),
        G.bipartite_edge("e2", "w1", "u2", [[1]], [left]),
        G.bipartite_edge("e3", "w2", "u2", [[1]], [right]),
        G.bipartite_edge("e4", "w2", "u3", [[1]], [Y]),
    )
    return G.GraphOfGroups(vs, es, tuple(e.id for e in es))


def hub(words):
    """One free vertex with a cyclic vertex hanging off each word."""
    u = _rigid(0)
    ws = [_ab(i + 1) for i in range(len(words))]
    es = [G.bipartite_edge(f"e{i + 1}", f"w{i + 1}", "u0", [[1]], [words[i]]) for i in range(len(words))]
    return G.GraphOfGroups((u, *ws), tuple(es), tuple(e.id for e in es))


def decompositions():
    out = {}
    out["star2_z"] = star([X, XY], [(1,), (1,)])
    out["star3_z"] = star([X, DW, COMM], [(1,), (1,), (1,)])
    out["star2_z2"] = star([X, Y], [(1, 0), (0, 1)])
    out["star2_z2_diag"] = star([XY, XXY], [(1, 0), (1, 1)])
    out["star3_z3"] = star([X, Y, DW], [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    out["star_z2_double_index"] = star([X, Y], [(2, 0), (0, 1)])
    out["star_z2_shared"] = star([X, XY, Y], [(1, 0), (0, 1), (1, 1)])
    pairs = {
        "x_y": (X, Y),
        "x_conj": (X, (2, 1, -2)),
        "x_conj_inv": (X, (2, -1, -2)),
        "x_square_conj": (X, (2, 1, 1, -2)),
        "xy_yx": (XY, (2, 1)),
        "dw_comm": (DW, COMM),
        "dw_dw_conj": (DW, (1,) + DW + (-1,)),
        "xxy_x": (XXY, X),
        "comm_comm_inv": (COMM, (2, 1, -2, -1)),
    }
    for name, (a, b) in pairs.items():
        out[f"chain_{name}"] = chain(a, b)
    out["hub_x_y_xy"] = hub([X, Y, XY])
    out["hub_x_conj_y"] = hub([X, (2, 1, -2), Y])
    out["hub_x_x_inv_conj"] = hub([X, (2, -1, -2), (2, 2, 1, -2, -2)])
    out["hub_dw_family"] = hub([DW, COMM, (2,) + DW + (-2,)])
    out["hub_single"] = hub([DW])
    return out


def _local(g, e, vid):
    end = "source" if e.source == vid else "target"
    return e.map_at(vid, end)


def brute_partition(g, length=4):
    """Classes of edge ids under the relation generated by: sharing an
    abelian vertex, or sharing a free vertex where a word of length <= length
    conjugates one image to commute with the other."""
    ids = sorted(e.id for e in g.edges)
    parent = {x: x for x in ids}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for i, a in enumerate(ids):
        ea = g.edge(a)
        for b in ids[i + 1 :]:
            eb = g.edge(b)
            for vid in {ea.source, ea.target} & {eb.source, eb.target}:
                v = g.vertex(vid)
                if v.abelian:
                    related = True
                else:
                    k = v.payload.rank
                    related = brute_commuting_conjugator(_local(g, ea, vid)[0], _local(g, eb, vid)[0], k, length) is not None
                if related:
                    parent[find(b)] = find(a)
    groups = {}
    for x in ids:
        groups.setdefault(find(x), []).append(x)
    return sorted(sorted(c) for c in groups.values())


def abelian_invariants(g):
    """(free rank, torsion divisors) of pi_1 from the exponent-sum matrix."""
    n = len(g.alphabet())
    rows = []
    for r in g.relators():
        v = [0] * n
        for x in r:
            v[abs(x) - 1] += 1 if x > 0 else -1
        rows.append(v)
    if not rows:
        return n, []
    return n - rank(rows), sorted(d for d in divisors(rows) if abs(d) > 1)
