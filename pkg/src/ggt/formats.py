"""Text formats: ``.pres`` presentations, ``.gog`` decompositions and
``.map`` homomorphisms.  Every file starts with ``format: ggt/1``.

Emitters are canonical, so ``emit(parse(text)) == text`` for any file an
emitter produced.
"""

from __future__ import annotations

from . import gog as G
from . import lattices as lat
from . import oracle as O
from . import words as W

HEADER = "format: ggt/1"


class FormatError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


def _lines(text: str):
    """(lineno, stripped text) for content lines, header checked."""
    out = []
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        out.append((i, s))
    if not out or out[0][1] != HEADER:
        raise FormatError(f"expected header {HEADER!r}", out[0][0] if out else 1, 1)
    return out[1:]


def _split(n: int, s: str):
    key, sep, val = s.partition(":")
    if not sep:
        raise FormatError("expected 'key: value'", n, 1)
    return key.strip(), val.strip()


def _word(alpha: W.Alphabet, val: str, n: int, col: int = 1):
    try:
        return alpha.parse(val)
    except (W.UnknownSymbol, ValueError) as exc:
        raise FormatError(str(exc), n, col) from None


def _ints(val: str, n: int):
    try:
        return [int(x) for x in val.split()]
    except ValueError:
        raise FormatError(f"expected integers, got {val!r}", n, 1) from None


# ------------------------------------------------------------------ .pres


def parse_pres(text: str) -> O.GroupHandle:
    gens = None
    rels = []
    backend = None
    for n, s in _lines(text):
        key, val = _split(n, s)
        if key == "gens":
            try:
                gens = W.Alphabet(val.split())
            except ValueError as exc:
                raise FormatError(str(exc), n, 7) from None
        elif key == "rels":
            if gens is None:
                raise FormatError("rels before gens", n, 1)
            rels.append((n, val))
        elif key == "backend":
            backend = val
        else:
            raise FormatError(f"unknown key {key!r}", n, 1)
    if gens is None:
        raise FormatError("missing gens line")
    if backend not in ("free", "abelian", "certified"):
        raise FormatError(f"unsupported backend {backend!r} (a gog group is read from a .gog file)")
    words = tuple(_word(gens, v, n, 7) for n, v in rels)
    if backend == "free" and any(words):
        raise FormatError("a free presentation has no relators")
    if backend == "abelian":
        h = O.free_abelian_group(gens.symbols)
        if set(words) - set(h.relators) - {()}:
            raise FormatError("abelian presentations list exactly the commutators")
        return h
    return O.GroupHandle(gens, words, backend)


def emit_pres(h: O.GroupHandle) -> str:
    lines = [HEADER, "gens: " + " ".join(h.alphabet.symbols)]
    if h.backend != "free":
        lines += ["rels: " + h.format(r) for r in h.relators]
    lines.append(f"backend: {h.backend}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- .gog


def _vertex(n, head, body):
    if len(head) != 3 or head[2] not in ("rigid", "socket", "abelian"):
        raise FormatError("expected [vertex <id> rigid|socket|abelian]", n, 1)
    vid, kind = head[1], head[2]
    kv: dict = {}
    rels = []
    for m, s in body:
        key, val = _split(m, s)
        if key == "rels":
            rels.append((m, val))
        else:
            kv[key] = (m, val)
    if "names" not in kv:
        raise FormatError(f"vertex {vid} has no names line", n, 1)
    names = tuple(kv.pop("names")[1].split())
    try:
        if kind == "abelian":
            payload = G.AbelianPayload(names)
        elif kind == "socket":
            genus = _ints(kv.pop("genus", (n, ""))[1], n)
            orient = kv.pop("orientable", (n, "yes"))[1]
            roots = _ints(kv.pop("roots", (n, ""))[1], n)
            if len(genus) != 1 or orient not in ("yes", "no"):
                raise FormatError(f"socket {vid} needs genus, orientable and roots", n, 1)
            payload = G.SocketPayload(genus[0], orient == "yes", tuple(roots), names)
        else:
            exc = kv.pop("exceptional", (n, "no"))[1]
            sub = None
            if rels:
                alpha = W.Alphabet(names)
                amb = O.GroupHandle(alpha, tuple(_word(alpha, v, m, 7) for m, v in rels), "certified")
                sub = O.SubgroupDesc(amb, tuple((i,) for i in range(1, len(names) + 1)))
            payload = G.RigidPayload(names, sub, exc == "yes")
    except (G.GogError, ValueError) as err:
        if isinstance(err, FormatError):
            raise
        raise FormatError(str(err), n, 1) from None
    if kv:
        key, (m, _) = next(iter(kv.items()))
        raise FormatError(f"unknown key {key!r}", m, 1)
    return G.Vertex(vid, payload)


def _edge(n, head, body, vertices):
    if len(head) != 4:
        raise FormatError("expected [edge <id> <source> <target>]", n, 1)
    eid, src, tgt = head[1:]
    for vid in (src, tgt):
        if vid not in vertices:
            raise FormatError(f"edge {eid} names unknown vertex {vid}", n, 1)
    sv, tv = vertices[src], vertices[tgt]
    bip = sv.abelian and not tv.abelian
    keys = ("into_abelian", "into_nonabelian") if bip else ("into_source", "into_target")
    raw: dict = {keys[0]: [], keys[1]: []}
    for m, s in body:
        key, val = _split(m, s)
        if key not in raw:
            raise FormatError(f"unknown key {key!r} for this edge", m, 1)
        raw[key].append((m, val))
    maps = []
    for key, v in zip(keys, (sv, tv)):
        if v.abelian:
            rows = [_ints(val, m) for m, val in raw[key]]
            if len(rows) != v.payload.rank or len({len(r) for r in rows}) != 1:
                raise FormatError(f"edge {eid}: {key} needs {v.payload.rank} rows of equal length", n, 1)
            maps.append(lat.LatticeMap.of(rows, len(rows), len(rows[0])))
        else:
            alpha = W.Alphabet(v.names)
            maps.append(tuple(_word(alpha, val, m, len(key) + 3) for m, val in raw[key]))
    rank = maps[0].cols if isinstance(maps[0], lat.LatticeMap) else len(maps[0])
    return G.EdgeData(eid, src, tgt, rank, maps[0], maps[1])


def parse_gog(text: str) -> G.GraphOfGroups:
    sections = []
    for n, s in _lines(text):
        if s.startswith("["):
            close = s.find("]")
            if close < 0:
                raise FormatError("unterminated section header", n, len(s))
            head = s[1:close].split()
            rest = s[close + 1 :].strip()
            sections.append((n, head, rest, []))
        else:
            if not sections:
                raise FormatError("content before the first section", n, 1)
            sections[-1][3].append((n, s))
    vertices: dict = {}
    order, edges, tree, stable = [], [], None, []
    for n, head, rest, body in sections:
        kind = head[0] if head else ""
        if kind == "vertex":
            v = _vertex(n, head, body)
            if v.id in vertices:
                raise FormatError(f"duplicate vertex {v.id}", n, 1)
            vertices[v.id] = v
            order.append(v)
        elif kind == "edge":
            edges.append(_edge(n, head, body, vertices))
        elif kind == "tree":
            tree = []
            for m, s in body:
                key, val = _split(m, s)
                if key != "edges":
                    raise FormatError(f"unknown key {key!r}", m, 1)
                tree += val.split()
        elif kind == "stable":
            if len(head) != 2 or not rest:
                raise FormatError("expected [stable <edge-id>] <name>", n, 1)
            stable.append((head[1], rest))
        else:
            raise FormatError(f"unknown section {kind!r}", n, 2)
        if kind in ("vertex", "edge") and rest:
            raise FormatError("unexpected text after section header", n, 1)
    try:
        return G.GraphOfGroups(tuple(order), tuple(edges), tuple(tree or ()), tuple(stable))
    except (G.GogError, ValueError) as exc:
        raise FormatError(str(exc)) from None


def _emit_map(lines, key, m, alpha):
    if isinstance(m, lat.LatticeMap):
        lines += [f"{key}: " + " ".join(str(x) for x in row) for row in m.matrix]
    else:
        lines += [f"{key}: " + alpha.format(w) for w in m]


def emit_gog(g: G.GraphOfGroups) -> str:
    lines = [HEADER]
    for v in g.vertices:
        p = v.payload
        lines.append(f"[vertex {v.id} {p.kind}]")
        if p.kind == "socket":
            lines.append(f"genus: {p.genus}")
            lines.append("orientable: " + ("yes" if p.orientable else "no"))
            lines.append("roots: " + " ".join(str(n) for n in p.roots))
        lines.append("names: " + " ".join(p.names))
        if p.kind == "rigid":
            if p.exceptional:
                lines.append("exceptional: yes")
            if not p.is_free and p.images == tuple((i,) for i in range(1, p.rank + 1)):
                lines += ["rels: " + p.ambient.format(r) for r in p.ambient.relators]
    for e in g.edges:
        sv, tv = g.vertex(e.source), g.vertex(e.target)
        keys = ("into_abelian", "into_nonabelian") if sv.abelian and not tv.abelian else ("into_source", "into_target")
        lines.append(f"[edge {e.id} {e.source} {e.target}]")
        _emit_map(lines, keys[0], e.source_map, W.Alphabet(sv.names))
        _emit_map(lines, keys[1], e.target_map, W.Alphabet(tv.names))
    lines.append("[tree]")
    lines.append(("edges: " + " ".join(g.tree)).rstrip())
    for eid, name in g.stable:
        lines.append(f"[stable {eid}] {name}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- .map


def parse_map(text: str, source: W.Alphabet, target: W.Alphabet) -> tuple:
    """Images of the source generators, in source order."""
    images: dict = {}
    for n, s in _lines(text):
        name, sep, val = s.partition("->")
        if not sep:
            raise FormatError("expected '<name> -> <word>'", n, 1)
        name = name.strip()
        if name not in source.symbols:
            raise FormatError(f"unknown source generator {name!r}", n, 1)
        if name in images:
            raise FormatError(f"second image for {name!r}", n, 1)
        images[name] = _word(target, val.strip(), n, s.find("->") + 3)
    missing = [x for x in source.symbols if x not in images]
    if missing:
        raise FormatError("no image for " + " ".join(missing))
    return tuple(images[x] for x in source.symbols)


def emit_map(source: W.Alphabet, target: W.Alphabet, images) -> str:
    lines = [HEADER] + [f"{x} -> {target.format(w)}" for x, w in zip(source.symbols, images)]
    return "\n".join(lines) + "\n"


def load_map(text: str, source: G.GraphOfGroups, target: O.GroupHandle) -> G.StrictMapDesc:
    return G.StrictMapDesc(source, target, parse_map(text, source.alphabet(), target.alphabet))
