"""Words in free groups, conjugacy, and Stallings subgroup graphs.

A word is a tuple of nonzero ints: ``i`` is the i-th generator (1-based) and
``-i`` its inverse.  Functions here return freely reduced tuples.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

Word = tuple


class UnknownSymbol(ValueError):
    pass


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_.']*)(?:\^(-?\d+))?$")


class Alphabet:
    """Ordered generator names with formal inverses."""

    def __init__(self, symbols: Iterable[str]):
        self.symbols = tuple(symbols)
        self._index = {s: i + 1 for i, s in enumerate(self.symbols)}
        if len(self._index) != len(self.symbols):
            raise ValueError(f"duplicate generator names in {self.symbols}")
        for s in self.symbols:
            if not _TOKEN.match(s) or "^" in s:
                raise ValueError(f"bad generator name {s!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and other.symbols == self.symbols

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __repr__(self) -> str:
        return f"Alphabet({' '.join(self.symbols)})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSymbol(f"unknown symbol {name!r}") from None

    def letter(self, name: str) -> Word:
        return (self.index(name),)

    def parse(self, text: str) -> Word:
        """Parse ``a b^-1 a^2``; ``1`` or blank is the empty word."""
        out: list = []
        for tok in text.split():
            if tok == "1":
                continue
            m = _TOKEN.match(tok)
            if not m:
                raise UnknownSymbol(f"cannot parse token {tok!r}")
            i = self.index(m.group(1))
            e = int(m.group(2)) if m.group(2) is not None else 1
            out.extend([i if e > 0 else -i] * abs(e))
        return reduce(out)

    def format(self, w: Sequence[int]) -> str:
        if not w:
            return "1"
        parts = []
        for x in w:
            name = self.symbols[abs(x) - 1]
            parts.append(name if x > 0 else name + "^-1")
        return " ".join(parts)

    def check(self, w: Sequence[int]) -> None:
        n = len(self.symbols)
        for x in w:
            if x == 0 or abs(x) > n:
                raise UnknownSymbol(f"letter {x} outside alphabet of size {n}")


# ------------------------------------------------------------------ basics


def reduce(letters: Iterable[int], k: int | None = None) -> Word:
    """Freely reduce by a single stack pass."""
    stack: list = []
    for x in letters:
        if k is not None and (x == 0 or abs(x) > k):
            raise UnknownSymbol(f"letter {x} outside alphabet of size {k}")
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def mul(*ws: Sequence[int]) -> Word:
    stack: list = []
    for w in ws:
        for x in w:
            if stack and stack[-1] == -x:
                stack.pop()
            else:
                stack.append(x)
    return tuple(stack)


def power(w: Sequence[int], n: int) -> Word:
    if n < 0:
        return power(inverse(w), -n)
    core, conj = cyclic_reduce(tuple(w))
    return mul(conj, tuple(core) * n, inverse(conj))


def conjugate(g: Sequence[int], w: Sequence[int]) -> Word:
    """g w g^-1"""
    return mul(g, w, inverse(g))


def commutator(u: Sequence[int], v: Sequence[int]) -> Word:
    return mul(u, v, inverse(u), inverse(v))


def commute(u: Sequence[int], v: Sequence[int]) -> bool:
    return not commutator(u, v)


def letter_key(x: int) -> int:
    return 2 * (x - 1) if x > 0 else 2 * (-x - 1) + 1


def shortlex_key(w: Sequence[int]):
    return (len(w), tuple(letter_key(x) for x in w))


def substitute(w: Sequence[int], images: Sequence[Sequence[int]]) -> Word:
    """Image of w under gen i -> images[i-1]."""
    stack: list = []
    for x in w:
        seg = images[x - 1] if x > 0 else inverse(images[-x - 1])
        for y in seg:
            if stack and stack[-1] == -y:
                stack.pop()
            else:
                stack.append(y)
    return tuple(stack)


# ---------------------------------------------------------------- conjugacy


def cyclic_reduce(w: Sequence[int]):
    """Return ``(core, conjugator)`` with w = conjugator core conjugator^-1."""
    w = tuple(w)
    i, n = 0, len(w)
    while 2 * i + 1 < n and w[i] == -w[n - 1 - i]:
        i += 1
    return w[i : n - i], w[:i]


def _period(core: Word) -> int:
    n = len(core)
    for d in range(1, n + 1):
        if n % d == 0 and core == core[:d] * (n // d):
            return d
    return n


def root(w: Sequence[int]):
    """Maximal root: ``(r, m)`` with w = r^m and r not a proper power."""
    w = reduce(w)
    if not w:
        raise ValueError("the trivial word has no root")
    core, conj = cyclic_reduce(w)
    d = _period(core)
    return mul(conj, core[:d], inverse(conj)), len(core) // d


def is_proper_power(w: Sequence[int]) -> bool:
    return bool(w) and root(w)[1] > 1


def power_of(x: Sequence[int], r: Sequence[int]):
    """Exponent j with x = r^j, or None.  r must be nontrivial."""
    x = reduce(x)
    if not x:
        return 0
    core_r, conj = cyclic_reduce(r)
    xc = mul(inverse(conj), x, conj)
    lr = len(core_r)
    if len(xc) % lr:
        return None
    j = len(xc) // lr
    if xc == core_r * j:
        return j
    if xc == inverse(core_r) * j:
        return -j
    return None


def rotations(core: Word):
    return [core[k:] + core[:k] for k in range(len(core))]


def free_conjugator(u: Sequence[int], v: Sequence[int]):
    """Canonical gamma with gamma u gamma^-1 = v (shortest, then shortlex
    least), or None when u and v are not conjugate."""
    u, v = reduce(u), reduce(v)
    if not u or not v:
        return () if u == v else None
    cu, pu = cyclic_reduce(u)
    cv, pv = cyclic_reduce(v)
    if len(cu) != len(cv):
        return None
    shifts = [k for k in range(len(cu)) if cu[k:] + cu[:k] == cv]
    if not shifts:
        return None
    rho = cu[: _period(cu)]
    best = None
    for k in shifts:
        x = cu[:k]
        span = (len(x) + len(pu) + len(pv)) // len(rho) + 2
        for j in range(-span, span + 1):
            g = mul(pv, inverse(x), power(rho, j), inverse(pu))
            if best is None or shortlex_key(g) < shortlex_key(best):
                best = g
    return best


def are_conjugate(u: Sequence[int], v: Sequence[int]) -> bool:
    return free_conjugator(u, v) is not None


# ------------------------------------------------------------- primitivity


def _whitehead_images(k: int):
    """Images of the generators under every Whitehead automorphism that
    multiplies the other generators by one letter x on either side."""
    for x in [s * i for i in range(1, k + 1) for s in (1, -1)]:
        others = [j for j in range(1, k + 1) if j != abs(x)]
        for choice in product(range(4), repeat=len(others)):
            imgs = [(j,) for j in range(1, k + 1)]
            for j, c in zip(others, choice):
                imgs[j - 1] = ((j,), (j, x), (-x, j), (-x, j, x))[c]
            yield imgs


def is_primitive(w: Sequence[int], k: int) -> bool:
    """True when w is part of a basis of F_k.

    Greedy Whitehead reduction of the cyclic word: a primitive word of
    cyclic length > 1 always admits a strictly shortening automorphism,
    so getting stuck above length 1 proves w is not primitive."""
    core = cyclic_reduce(reduce(w))[0]
    if not core:
        return False
    while len(core) > 1:
        for imgs in _whitehead_images(k):
            nxt = cyclic_reduce(substitute(core, imgs))[0]
            if len(nxt) < len(core):
                core = nxt
                break
        else:
            return False
    return True


# ------------------------------------------------------------ Stallings graphs


@dataclass(frozen=True)
class SubgroupGraph:
    """Folded core graph; vertex 0 is the base.  ``edges`` holds one
    ``(source, label > 0, target)`` triple per geometric edge."""

    nvertices: int
    edges: tuple
    _adj: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        adj: dict = {}
        for v, l, w in self.edges:
            adj[(v, l)] = w
            adj[(w, -l)] = v
        object.__setattr__(self, "_adj", adj)

    def step(self, v: int, letter: int):
        return self._adj.get((v, letter))

    @property
    def rank(self) -> int:
        return len(self.edges) - self.nvertices + 1

    def read(self, g: Sequence[int]):
        """End vertex of the path labelled g from the base, or None."""
        v = 0
        for x in g:
            v = self._adj.get((v, x))
            if v is None:
                return None
        return v

    def spanning_tree(self):
        """BFS tree from the base in letter order; returns (paths, tree edge set)."""
        paths = {0: ()}
        tree = set()
        labels = sorted({abs(l) for _, l, _ in self.edges})
        order = []
        for l in labels:
            order.extend([l, -l])
        q = deque([0])
        while q:
            v = q.popleft()
            for l in order:
                w = self._adj.get((v, l))
                if w is not None and w not in paths:
                    paths[w] = paths[v] + (l,)
                    tree.add((v, l, w) if l > 0 else (w, -l, v))
                    q.append(w)
        return paths, tree

    def basis(self):
        """Free basis of the subgroup, one element per non-tree edge."""
        paths, tree = self.spanning_tree()
        out = []
        for e in self.edges:
            if e in tree:
                continue
            v, l, w = e
            out.append(mul(paths[v], (l,), inverse(paths[w])))
        return out

    def express(self, g: Sequence[int]):
        """Coordinates of g in the free basis from :meth:`basis`, or None."""
        _, tree = self.spanning_tree()
        index = {}
        for e in self.edges:
            if e not in tree:
                index[e] = len(index) + 1
        out = []
        v = 0
        for x in g:
            w = self._adj.get((v, x))
            if w is None:
                return None
            e = (v, x, w) if x > 0 else (w, -x, v)
            if e in index:
                out.append(index[e] if x > 0 else -index[e])
            v = w
        if v != 0:
            return None
        return reduce(out)


def stallings_fold(generators: Sequence[Sequence[int]]) -> SubgroupGraph:
    """Folded, cored, canonically numbered subgroup graph."""
    gens = [reduce(g) for g in generators]
    gens = [g for g in gens if g]
    parent: list = [0]
    adj: list = [{}]

    def new_vertex() -> int:
        parent.append(len(parent))
        adj.append({})
        return len(parent) - 1

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    pending: list = []
    for g in gens:
        v = 0
        for i, x in enumerate(g):
            w = 0 if i == len(g) - 1 else new_vertex()
            pending.append((v, x, w))
            v = w

    while pending:
        v, l, w = pending.pop()
        v, w = find(v), find(w)
        u = adj[v].get(l)
        if u is not None:
            u = find(u)
            if u != w:
                # merge w into u (keep smaller index as root for determinism)
                a, b = (u, w) if u < w else (w, u)
                parent[b] = a
                for lab, t in adj[b].items():
                    pending.append((b, lab, t))
                adj[b] = {}
                pending.append((v, l, a))
            continue
        x = adj[w].get(-l)
        if x is not None:
            x = find(x)
            if x != v:
                a, b = (x, v) if x < v else (v, x)
                parent[b] = a
                for lab, t in adj[b].items():
                    pending.append((b, lab, t))
                adj[b] = {}
                pending.append((a, l, w))
                continue
        adj[v][l] = w
        adj[w][-l] = v

    # collect geometric edges between roots
    edges = set()
    for v in range(len(parent)):
        if find(v) != v:
            continue
        for l, w in adj[v].items():
            w = find(w)
            if l > 0:
                edges.add((v, l, w))
            else:
                edges.add((w, -l, v))
    # make folded (re-check after find) and prune to the core
    edges = _prune(edges)
    return _canonical(edges)


def _prune(edges: set) -> set:
    edges = set(edges)
    while True:
        deg: dict = {}
        for v, _, w in edges:
            deg[v] = deg.get(v, 0) + 1
            deg[w] = deg.get(w, 0) + 1
        leaves = {v for v, d in deg.items() if d == 1 and v != 0}
        if not leaves:
            return edges
        edges = {e for e in edges if e[0] not in leaves and e[2] not in leaves}


def _canonical(edges: set) -> SubgroupGraph:
    adj: dict = {}
    for v, l, w in edges:
        adj.setdefault(v, []).append((l, w))
        adj.setdefault(w, []).append((-l, v))
    if not edges:
        return SubgroupGraph(1, ())
    number = {0: 0}
    q = deque([0])
    while q:
        v = q.popleft()
        for l, w in sorted(adj.get(v, []), key=lambda t: letter_key(t[0])):
            if w not in number:
                number[w] = len(number)
                q.append(w)
    out = tuple(sorted((number[v], l, number[w]) for v, l, w in edges))
    return SubgroupGraph(len(number), out)


def member(g: Sequence[int], h: SubgroupGraph) -> bool:
    return h.read(reduce(g)) == 0


def subgroup_contains(h: SubgroupGraph, gens: Sequence[Sequence[int]]) -> bool:
    return all(member(g, h) for g in gens)


def same_subgroup(a: SubgroupGraph, b: SubgroupGraph) -> bool:
    return a == b


def cyclic_intersection_exponent(h: SubgroupGraph, r: Sequence[int], bound: int):
    """Least j in 1..bound with r^j in H, or None."""
    for j in range(1, bound + 1):
        if member(power(r, j), h):
            return j
    return None
