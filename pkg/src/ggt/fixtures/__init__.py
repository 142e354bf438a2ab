"""Shipped fixtures: small groups, decompositions and strict maps.

The text files next to this module are produced by :func:`write_all` and
are checked against the builders by the test suite.
"""

from __future__ import annotations

import os

from .. import formats as F
from .. import gog as G
from .. import oracle as O

HERE = os.path.dirname(os.path.abspath(__file__))

DOUBLE_WORD = "a a b b a^-1 b^-1"


def free_ab() -> O.GroupHandle:
    return O.free_group(["a", "b"])


def free_xy() -> O.GroupHandle:
    return O.free_group(["x", "y"])


def z2() -> O.GroupHandle:
    return O.free_abelian_group(["a", "b"])


def rigid_ab() -> G.GraphOfGroups:
    return G.single_vertex("u", G.RigidPayload(("a", "b")))


def abelian_ab() -> G.GraphOfGroups:
    return G.single_vertex("w", G.AbelianPayload(("a", "b")))


def double() -> G.GraphOfGroups:
    f = free_ab()
    return G.build_double(f, f.parse(DOUBLE_WORD))


def extension() -> G.GraphOfGroups:
    """F(a,b) with a commuting letter adjoined to the centralizer of w."""
    f = free_ab()
    u = G.Vertex("u", G.RigidPayload(("a", "b")))
    w = G.Vertex("w", G.AbelianPayload(("c", "t")))
    e = G.bipartite_edge("e", "w", "u", [[1], [0]], [f.parse(DOUBLE_WORD)])
    return G.GraphOfGroups((u, w), (e,), ("e",))


def naive_gluing() -> G.GraphOfGroups:
    """F(x,y) *_{x^2 = c} Z^2(c,t): the edge group is not root-closed."""
    u = G.Vertex("u", G.RigidPayload(("x", "y")))
    w = G.Vertex("w", G.AbelianPayload(("c", "t")))
    e = G.bipartite_edge("e", "w", "u", [[1], [0]], [(1, 1)])
    return G.GraphOfGroups((u, w), (e,), ("e",))


def toy() -> G.GraphOfGroups:
    """F(p,q,r) *_{p = c} Z^2(c,t)."""
    u = G.Vertex("G2", G.RigidPayload(("p", "q", "r")))
    w = G.Vertex("A", G.AbelianPayload(("c", "t")))
    e = G.bipartite_edge("e", "A", "G2", [[1], [0]], [(1,)])
    return G.GraphOfGroups((u, w), (e,), ("e",))


TOY_MAP = {"p": "x x", "q": "y", "r": "x y x^-1", "c": "x x", "t": "x x x"}


def merged_edge() -> G.GraphOfGroups:
    """Two cyclic vertices attached to F(a,b) along a and b a b^-1."""
    u = G.Vertex("F", G.RigidPayload(("a", "b")))
    w1 = G.Vertex("w1", G.AbelianPayload(("c1",)))
    w2 = G.Vertex("w2", G.AbelianPayload(("c2",)))
    e1 = G.bipartite_edge("e1", "w1", "F", [[1]], [(1,)])
    e2 = G.bipartite_edge("e2", "w2", "F", [[1]], [(2, 1, -2)])
    return G.GraphOfGroups((u, w1, w2), (e1, e2), ("e1", "e2"))


def merged_nontree() -> G.GraphOfGroups:
    """Z^2(c,t) and F(p,q) joined by a tree edge c = p and a loop s^-1 c s = q."""
    w = G.Vertex("w", G.AbelianPayload(("c", "t")))
    u = G.Vertex("u", G.RigidPayload(("p", "q")))
    e1 = G.bipartite_edge("e1", "w", "u", [[1], [0]], [(1,)])
    e2 = G.bipartite_edge("e2", "w", "u", [[1], [0]], [(2,)])
    return G.GraphOfGroups((w, u), (e1, e2), ("e1",), (("e2", "s"),))


MERGED_NONTREE_MAP = {"c": "a", "t": "a a", "p": "a", "q": "b a b^-1", "s": "b^-1"}


def socket() -> G.GraphOfGroups:
    """Once-punctured torus with its boundary glued to a cyclic vertex."""
    s = G.Vertex("S", G.SocketPayload(1, True, (1,)))
    z = G.Vertex("Z", G.AbelianPayload(("z",)))
    e = G.bipartite_edge("e", "Z", "S", [[1]], [(3,)])
    return G.GraphOfGroups((s, z), (e,), ("e",))


SOCKET_MAP = {"a1": "a", "b1": "b", "r1": "b a b^-1 a^-1", "z": "b a b^-1 a^-1"}


def strict_map(d: G.GraphOfGroups, target: O.GroupHandle, images: dict) -> G.StrictMapDesc:
    alpha = d.alphabet()
    return G.StrictMapDesc(d, target, tuple(target.parse(images[x]) for x in alpha.symbols))


def identity_map(d: G.GraphOfGroups, target: O.GroupHandle | None = None) -> G.StrictMapDesc:
    target = target or d.handle
    return G.StrictMapDesc(d, target, tuple((i,) for i in range(1, len(d.alphabet()) + 1)))


def double_map() -> G.StrictMapDesc:
    d = double()
    names = {"a": "a", "b": "b", "a'": "a", "b'": "b", "z": DOUBLE_WORD}
    return strict_map(d, free_ab(), names)


def extension_map() -> G.StrictMapDesc:
    d = extension()
    return strict_map(d, free_ab(), {"a": "a", "b": "b", "c": DOUBLE_WORD, "t": DOUBLE_WORD})


def gammas() -> dict:
    """Shipped groups given as decompositions, with the target of their
    trivial resolution."""
    return {
        "free_ab": (rigid_ab(), free_ab()),
        "z2": (abelian_ab(), z2()),
        "double": (double(), None),
        "extension": (extension(), None),
        "socket": (socket(), None),
    }


def expansions() -> dict:
    """Strict maps shipped as expansion fixtures."""
    return {
        "toy": strict_map(toy(), free_xy(), TOY_MAP),
        "double": double_map(),
        "extension": extension_map(),
        "merged_edge": strict_map(merged_edge(), free_ab(), {"a": "a", "b": "b", "c1": "a", "c2": "b a b^-1"}),
        "merged_nontree": strict_map(merged_nontree(), free_ab(), MERGED_NONTREE_MAP),
        "socket": strict_map(socket(), free_ab(), SOCKET_MAP),
    }


def write_all(path: str = HERE) -> list:
    """Write the text form of every fixture; returns the file names."""
    out = {}
    for name, h in (("free_ab", free_ab()), ("free_xy", free_xy()), ("z2", z2())):
        out[f"{name}.pres"] = F.emit_pres(h)
    for name, (d, _) in gammas().items():
        out[f"{name}.gog"] = F.emit_gog(d)
    out["naive_gluing.gog"] = F.emit_gog(naive_gluing())
    shared = gammas()
    for name, m in expansions().items():
        if name not in shared:
            out[f"{name}_source.gog"] = F.emit_gog(m.source)
        out[f"{name}.map"] = F.emit_map(m.source.alphabet(), m.target.alphabet, m.images)
    for fname, text in sorted(out.items()):
        with open(os.path.join(path, fname), "w", encoding="utf-8") as fh:
            fh.write(text)
    return sorted(out)


def source_file(name: str) -> str:
    """File holding the source decomposition of expansion fixture name."""
    return f"{name}.gog" if name in gammas() else f"{name}_source.gog"


def load_text(name: str) -> str:
    with open(os.path.join(HERE, name), encoding="utf-8") as fh:
        return fh.read()
