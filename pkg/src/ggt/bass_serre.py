"""Normal forms in fundamental groups of graphs of groups.

The decomposition is first flattened: each socket becomes a free vertex on
its surface generators and all boundary curves but the last, plus one
infinite cyclic vertex per boundary curve carrying a proper root.  The
result is a graph of free and free abelian groups (plus opaque vertices
with no incident edges), on which elements are paths

    g_0 e_1 g_1 ... e_k g_k

reduced by pinching ``e g e^-1`` whenever ``g`` lies in the edge group.
A reduced path with k > 0 is never trivial.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lattices as lat
from . import oracle as O
from . import words as W


@dataclass
class FlatVertex:
    kind: str  # free | abelian | opaque
    rank: int
    owner: str  # original vertex id
    handle: object = None  # opaque: ambient handle
    images: tuple = ()  # opaque: local letter -> ambient word


@dataclass
class FlatEdge:
    src: int
    tgt: int
    rank: int
    src_side: object  # free: word; abelian: LatticeMap; opaque: words
    tgt_side: object
    origin: str | None  # original edge id, None for socket internals


class Solver:
    def __init__(self, g):
        self.g = g
        self.verts: list = []
        self.edges: list = []
        self.center: dict = {}  # original vertex id -> flat index
        self.locate: dict = {}  # global letter -> (flat vertex, local element)
        self.global_of: list = []  # flat vertex -> callable(element) -> global word
        self.tree: set = set()
        self.stable_edge: dict = {}  # flat edge index -> global stable letter
        self._flatten()
        self._paths()

    # ----------------------------------------------------------- flattening

    def _add_vertex(self, fv: FlatVertex, to_global) -> int:
        self.verts.append(fv)
        self.global_of.append(to_global)
        return len(self.verts) - 1

    def _flatten(self) -> None:
        g = self.g
        socket_parts: dict = {}
        for v in g.vertices:
            p = v.payload
            if p.kind == "abelian":
                i = self._add_vertex(FlatVertex("abelian", p.rank, v.id), self._vec_global(v.id))
                self.center[v.id] = i
                for j in range(p.rank):
                    unit = tuple(int(t == j) for t in range(p.rank))
                    self.locate[g.to_global(v.id, (j + 1,))[0]] = (i, unit)
            elif p.kind == "rigid":
                if p.is_free:
                    i = self._add_vertex(FlatVertex("free", p.rank, v.id), self._word_global(v.id))
                else:
                    fv = FlatVertex("opaque", p.rank, v.id, p.ambient, p.images)
                    i = self._add_vertex(fv, self._word_global(v.id))
                self.center[v.id] = i
                for j in range(p.rank):
                    self.locate[g.to_global(v.id, (j + 1,))[0]] = (i, (j + 1,))
            else:
                socket_parts[v.id] = self._flatten_socket(v)
        for e in g.edges:
            ends = []
            for end, vid in (("source", e.source), ("target", e.target)):
                v = g.vertex(vid)
                m = e.map_at(vid, end)
                if v.kind == "socket":
                    ends.append(self._socket_attach(v, socket_parts[vid], m[0]))
                elif v.abelian:
                    ends.append((self.center[vid], m))
                elif v.payload.is_free:
                    if e.rank != 1:
                        raise O.UnsupportedQuery(f"edge {e.id}: free vertex with edge of rank {e.rank}")
                    ends.append((self.center[vid], W.reduce(m[0])))
                else:
                    raise O.UnsupportedQuery(f"vertex {vid}: opaque vertex with incident edges")
            k = len(self.edges)
            self.edges.append(FlatEdge(ends[0][0], ends[1][0], e.rank, ends[0][1], ends[1][1], e.id))
            if e.id in set(g.tree):
                self.tree.add(k)
            else:
                self.stable_edge[k] = g.stable_letter(e.id)

    def _vec_global(self, vid):
        return lambda vec: self.g.vector_word(vid, vec)

    def _word_global(self, vid):
        return lambda w: self.g.to_global(vid, w)

    def _flatten_socket(self, v):
        g, p = self.g, v.payload
        s, b = p.surface_rank, p.boundary
        # global words of the free letters of the surface vertex
        letters = [g.to_global(v.id, (j,)) for j in range(1, s + 1)]
        letters += [g.to_global(v.id, p.boundary_word(i)) for i in range(b - 1)]
        # d_b = (surface word * d_1 ... d_{b-1})^-1 in local letters of S
        last = W.inverse(W.mul(p.surface_word(), tuple(range(s + 1, s + b))))

        def to_global(w, letters=letters):
            out = []
            for x in w:
                piece = letters[abs(x) - 1]
                out += list(piece if x > 0 else W.inverse(piece))
            return W.reduce(out)

        centre = self._add_vertex(FlatVertex("free", s + b - 1, v.id), to_global)
        self.center[v.id] = centre
        for j in range(1, s + 1):
            self.locate[g.to_global(v.id, (j,))[0]] = (centre, (j,))
        boundary = [(s + i + 1,) for i in range(b - 1)] + [last]
        roots = {}
        for i, n in enumerate(p.roots):
            letter = g.to_global(v.id, (p.root_letter(i),))[0]
            if n == 1:
                self.locate[letter] = (centre, boundary[i])
                roots[i] = None
                continue
            r = self._add_vertex(FlatVertex("abelian", 1, v.id), self._root_global(letter))
            self.locate[letter] = (r, (1,))
            k = len(self.edges)
            self.edges.append(FlatEdge(centre, r, 1, boundary[i], lat.LatticeMap.of([[n]]), None))
            self.tree.add(k)
            roots[i] = r
        return centre, boundary, roots

    @staticmethod
    def _root_global(letter):
        return lambda vec: (letter,) * vec[0] if vec[0] >= 0 else (-letter,) * (-vec[0])

    def _socket_attach(self, v, parts, word):
        """Flat endpoint of a socket edge with image ``word`` (local)."""
        centre, boundary, roots = parts
        p = v.payload
        s = p.surface_rank
        w = W.reduce(word)
        used = {abs(x) for x in w}
        if used and all(x > s for x in used) and len(used) == 1:
            i = abs(w[0]) - s - 1
            k = len(w) if w[0] > 0 else -len(w)
            if roots[i] is not None:
                return roots[i], lat.LatticeMap.of([[k]])
            return centre, W.power(boundary[i], k)
        if all(x <= s for x in used):
            return centre, w
        raise O.UnsupportedQuery(f"socket {v.id}: edge image must be a root power or a surface word")

    def _paths(self) -> None:
        adj: dict = {}
        for k in sorted(self.tree):
            e = self.edges[k]
            adj.setdefault(e.src, []).append((k, 1, e.tgt))
            adj.setdefault(e.tgt, []).append((k, -1, e.src))
        self.base = self.center[self.g.base]
        self.path = {self.base: []}
        stack = [self.base]
        while stack:
            x = stack.pop()
            for k, s, y in adj.get(x, []):
                if y not in self.path:
                    self.path[y] = self.path[x] + [("e", k, s)]
                    stack.append(y)
        if len(self.path) != len(self.verts):
            raise O.UnsupportedQuery("flattened tree does not span")

    # ---------------------------------------------------- vertex algebra

    def identity(self, x: int):
        fv = self.verts[x]
        return (0,) * fv.rank if fv.kind == "abelian" else ()

    def vmul(self, x: int, a, b):
        if self.verts[x].kind == "abelian":
            return tuple(p + q for p, q in zip(a, b))
        return W.mul(a, b)

    def vinv(self, x: int, a):
        if self.verts[x].kind == "abelian":
            return tuple(-p for p in a)
        return W.inverse(a)

    def vtrivial(self, x: int, a) -> bool:
        fv = self.verts[x]
        if fv.kind == "abelian":
            return not any(a)
        if fv.kind == "free":
            return not W.reduce(a)
        return O.is_trivial(fv.handle, W.substitute(a, fv.images), log=False)

    def side(self, k: int, x: int, s: int):
        e = self.edges[k]
        return e.src_side if s == 1 else e.tgt_side

    def preimage(self, x: int, side, a):
        """Edge coordinates of a vertex element, or None."""
        if self.verts[x].kind == "abelian":
            sol = side.preimage(a)
            return None if sol is None else tuple(sol)
        j = W.power_of(a, side)
        return None if j is None else (j,)

    def image(self, x: int, side, c):
        if self.verts[x].kind == "abelian":
            return side.apply(c)
        return W.power(side, c[0])

    # ---------------------------------------------------------- reduction

    def tokens_of_letter(self, letter: int) -> list:
        a = abs(letter)
        if a in self.locate:
            x, elem = self.locate[a]
            p = self.path[x]
            toks = p + [("v", x, elem)] + _inverse_tokens(p, self)
        else:
            k = next(k for k, t in self.stable_edge.items() if t == a)
            e = self.edges[k]
            toks = self.path[e.src] + [("e", k, 1)] + _inverse_tokens(self.path[e.tgt], self)
        return toks if letter > 0 else _inverse_tokens(toks, self)

    def tokens(self, w) -> list:
        out = []
        for x in w:
            out += self.tokens_of_letter(x)
        return out

    def reduce_tokens(self, toks, start: int | None = None):
        """Reduced path ``(verts, elems, crossings)`` for a token list."""
        x0 = self.base if start is None else start
        verts, elems, cross = [x0], [self.identity(x0)], []
        for t in toks:
            if t[0] == "v":
                _, x, a = t
                if x != verts[-1]:
                    raise RuntimeError("token path is not connected")
                elems[-1] = self.vmul(x, elems[-1], a)
                continue
            _, k, s = t
            e = self.edges[k]
            frm, to = (e.src, e.tgt) if s == 1 else (e.tgt, e.src)
            if frm != verts[-1]:
                raise RuntimeError("token path is not connected")
            if cross and cross[-1] == (k, -s):
                c = self.preimage(frm, self.side(k, frm, s), elems[-1])
                if c is not None:
                    cross.pop()
                    elems.pop()
                    verts.pop()
                    h = self.image(to, self.side(k, to, -s), c)
                    elems[-1] = self.vmul(to, elems[-1], h)
                    continue
            cross.append((k, s))
            verts.append(to)
            elems.append(self.identity(to))
        return verts, elems, cross

    def normal_form(self, w):
        return self.reduce_tokens(self.tokens(w))

    def is_identity(self, nf) -> bool:
        verts, elems, cross = nf
        return not cross and self.vtrivial(verts[0], elems[0])

    def describe(self, nf) -> dict:
        verts, elems, cross = nf
        return {"length": len(cross), "vertices": list(verts)}

    # ----------------------------------------------------- back to words

    def path_word(self, verts, elems, cross) -> tuple:
        """Global word of a loop at the base given as a reduced path."""
        out = []
        for i, x in enumerate(verts):
            out += list(self.global_of[x](elems[i]))
            if i < len(cross):
                k, s = cross[i]
                if k in self.stable_edge:
                    out.append(self.stable_edge[k] * s)
        return W.reduce(out)

    def token_word(self, toks) -> tuple:
        """Global word of a token loop at the base."""
        return self.path_word(*self.reduce_tokens(toks))

    # -------------------------------------------------- conjugacy, centralizers

    def elliptic(self, w):
        """``(P, x, a)``: w = P a P^-1 with a at flat vertex x, P a token
        path from the base; None when w is hyperbolic."""
        verts, elems, cross = self.normal_form(w)
        conj: list = []
        while cross:
            k1, s1 = cross[0]
            k2, s2 = cross[-1]
            if not (k1 == k2 and s1 == -s2):
                return None
            x = verts[0]
            junction = self.vmul(x, elems[-1], elems[0])
            if self.preimage(x, self.side(k1, x, s1), junction) is None:
                return None
            # conjugate by g_0 e_1
            conj += [("v", verts[0], elems[0]), ("e", k1, s1)]
            toks = []
            for i in range(1, len(verts)):
                if i > 1:
                    toks.append(("e",) + cross[i - 1])
                toks.append(("v", verts[i], elems[i]))
            toks[-1] = ("v", verts[-1], junction)
            toks.append(("e", k1, s1))
            verts, elems, cross = self.reduce_tokens(toks, start=verts[1])
        return conj, verts[0], elems[0]

    def loop_word(self, conj, x, a) -> tuple:
        toks = list(conj) + [("v", x, a)] + _inverse_tokens(conj, self)
        return self.token_word(toks)

    def centralizer(self, w) -> list:
        ell = self.elliptic(w)
        if ell is None:
            raise O.UnsupportedQuery("centralizers of hyperbolic elements are not computed")
        conj, x, a = ell
        if self.vtrivial(x, a):
            raise ValueError("centralizer of the identity requested")
        gens = self._centralizer_at(conj, x, a, set(), set())
        out: list = []
        for g in gens:
            if self.is_identity(self.normal_form(g)):
                continue
            if any(self.is_identity(self.normal_form(W.mul(g, W.inverse(h)))) or
                   self.is_identity(self.normal_form(W.mul(g, h))) for h in out):
                continue
            out.append(g)
        return out

    def _incident(self, x: int):
        for k, e in enumerate(self.edges):
            if e.src == x:
                yield k, 1, e.tgt
            if e.tgt == x:
                yield k, -1, e.src

    def _centralizer_at(self, conj, x, a, seen, visited) -> list:
        """Generators of the centralizer; ``visited`` guards against loops
        in the fixed subtree, which would need extra generators."""
        if x in visited:
            raise O.UnsupportedQuery("fixed subtree of the element wraps around a loop")
        visited.add(x)
        fv = self.verts[x]
        if fv.kind == "opaque":
            raise O.UnsupportedQuery("centralizer inside an opaque vertex")
        if fv.kind == "abelian":
            self._closed_at(x, a, seen)
            out = []
            for j in range(fv.rank):
                unit = tuple(int(t == j) for t in range(fv.rank))
                out.append(self.loop_word(conj, x, unit))
            return out
        r, _ = W.root(a)
        out = [self.loop_word(conj, x, r)]
        for k, s, y in self._incident(x):
            c = self.side(k, x, s)
            cr = W.root(c)[0]
            g = W.free_conjugator(cr, r)
            if g is None:
                g = W.free_conjugator(cr, W.inverse(r))
            if g is None:
                continue
            if W.is_proper_power(c):
                raise O.UnsupportedQuery("edge group is not root-closed")
            if k in seen:
                continue
            # a = g c^j g^-1
            j = W.power_of(W.mul(W.inverse(g), a, g), c)
            b = self.image(y, self.side(k, y, -s), (j,))
            newconj = list(conj) + [("v", x, g), ("e", k, s)]
            out += self._centralizer_at(newconj, y, b, seen | {k}, visited)
        return out

    def _closed_at(self, x, a, seen) -> None:
        """Raise unless the centralizer of ``a`` stays inside abelian vertex x."""
        for k, sg, y in self._incident(x):
            if k in seen:
                continue
            c = self.preimage(x, self.side(k, x, sg), a)
            if c is None:
                continue
            far = self.side(k, y, -sg)
            kind = self.verts[y].kind
            if kind == "free" and not W.is_proper_power(far) and not self._shares_root(y, k, far):
                continue
            if kind == "abelian" and far.rows == far.cols and abs(lat.det(far.as_list())) == 1:
                self._closed_at(y, far.apply(c), seen | {k})
                continue
            raise O.UnsupportedQuery("centralizer extends across a non-malnormal edge")

    def _shares_root(self, y, k, c) -> bool:
        r = W.root(c)[0]
        for k2, s2, _ in self._incident(y):
            if k2 == k:
                continue
            c2 = self.side(k2, y, s2)
            r2 = W.root(c2)[0]
            if W.are_conjugate(r, r2) or W.are_conjugate(r, W.inverse(r2)):
                return True
        return False


def _inverse_tokens(toks, solver) -> list:
    out = []
    for t in reversed(toks):
        if t[0] == "v":
            out.append(("v", t[1], solver.vinv(t[1], t[2])))
        else:
            out.append(("e", t[1], -t[2]))
    return out
