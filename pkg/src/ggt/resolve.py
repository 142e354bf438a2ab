"""Hierarchies, enclosures, effective pairs of resolutions and the
enumeration engine."""

from __future__ import annotations

import hashlib
import json
import os
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

from . import gog as G
from . import oracle as O
from . import words as W


class EnclosureError(RuntimeError):
    pass


# -------------------------------------------------------------- hierarchy


@dataclass
class HierarchyNode:
    subgroup: O.SubgroupDesc
    kind: str = "leaf"  # leaf | grushko | jsj | unresolved | failed
    children: list = field(default_factory=list)
    note: str = ""

    def label(self) -> str:
        gens = sorted(self.subgroup.ambient.format(g) for g in self.subgroup.generators)
        return hashlib.sha256("|".join(gens).encode()).hexdigest()[:16]

    def leaves(self) -> list:
        if not self.children:
            return [self]
        return [x for c in self.children for x in c.leaves()]

    def to_json(self) -> dict:
        fmt = self.subgroup.ambient.format
        return {
            "generators": [fmt(g) for g in self.subgroup.generators],
            "kind": self.kind,
            "note": self.note,
            "children": [c.to_json() for c in self.children],
        }


def free_factor_splitter(g: O.GroupHandle, s: O.SubgroupDesc):
    """Exhaustive small search: Grushko splitting of a free subgroup
    relative to its distinguished families, found by Nielsen moves."""
    src = g.word_problem_source()
    if src == "abelian":
        return None
    if src != "free":
        raise O.UnsupportedQuery("free_factor_splitter needs a free ambient")
    h = W.stallings_fold(s.generators)
    if h.rank < 2:
        return None
    basis = h.basis()
    if not s.distinguished:
        return "grushko", [O.SubgroupDesc(g, (b,)) for b in basis]
    found, _ = O.free_splitting_search(h, s.distinguished, 200)
    if found is None:
        return None
    images = [tuple(x) for x in found["automorphism"]]
    kids = []
    for block in found["blocks"]:
        gens = tuple(W.substitute(images[i - 1], basis) for i in block)
        fams = tuple(f for f in s.distinguished if W.subgroup_contains(W.stallings_fold(gens), list(f)))
        kids.append(O.SubgroupDesc(g, gens, fams))
    return "grushko", kids


def attested_splitter(g: O.GroupHandle, s: O.SubgroupDesc):
    """Splittings read off shipped data: the JSJ of a gog group is its own
    decomposition, and attested immutable subgroups are leaves."""
    if O._attested(s) is not None:
        return None
    if g.word_problem_source() == "gog" and g.gog is not None:
        whole = [g.format(x) for x in s.generators] == list(g.alphabet.symbols)
        if whole:
            d = g.gog
            kids = []
            for v in d.vertices:
                if v.kind == "rigid":
                    env = G.envelope(d, v.id)
                    gens = tuple(d.to_global(v.id, (i,)) for i in range(1, v.payload.rank + 1))
                    kids.append(O.SubgroupDesc(g, gens, env.distinguished))
            if kids:
                return "jsj", kids
        return None
    return free_factor_splitter(g, s)


def hierarchy(g: O.GroupHandle, s: O.SubgroupDesc, splitter=attested_splitter, depth: int = 4) -> HierarchyNode:
    root = HierarchyNode(s)
    _expand_node(g, root, splitter, depth, set())
    return root


def _expand_node(g, node, splitter, depth, path_labels):
    lab = node.label()
    if lab in path_labels:
        node.kind, node.note = "failed", "label repeats on its root path"
        return
    if depth <= 0:
        node.kind, node.note = "unresolved", "depth exhausted"
        return
    try:
        res = splitter(g, node.subgroup)
    except (O.UnsupportedQuery, O.BudgetExhausted, ValueError) as exc:
        node.kind, node.note = "failed", str(exc)
        return
    if res is None:
        node.kind = "leaf"
        return
    node.kind, kids = res
    for sub in kids:
        child = HierarchyNode(sub)
        node.children.append(child)
        _expand_node(g, child, splitter, depth - 1, path_labels | {lab})


# -------------------------------------------------------------- enclosure


def _finite_index(h: W.SubgroupGraph, k: int) -> bool:
    return all(h.step(v, x) is not None for v in range(h.nvertices) for x in range(-k, k + 1) if x)


def _hull_certified(coords, k: int) -> bool:
    h = W.stallings_fold(coords)
    if k <= 1:
        return True
    if W.same_subgroup(h, W.stallings_fold([(i,) for i in range(1, k + 1)])):
        return True
    if _finite_index(h, k):
        return True
    # proper free factors of F_2 are cyclic and root-closed
    if k == 2 and h.rank == 1:
        return not W.is_primitive(W.root(h.basis()[0])[0], 2)
    return k == 2 and h.rank >= 2


def _proper_factor(coords, k: int, budget: int):
    """Basis (words in 1..k) of a proper free factor containing coords,
    found by breadth-first Nielsen search, or None.  Returns (basis, used)."""
    start = tuple((i,) for i in range(1, k + 1))
    seen = {start}
    queue = deque([start])
    used = 0
    while queue and used < budget:
        basis = queue.popleft()
        used += 1
        for drop in range(k):
            sub = [b for i, b in enumerate(basis) if i != drop]
            if W.subgroup_contains(W.stallings_fold(sub), coords):
                return sub, used
        for mv in O._nielsen_moves(k):
            nxt = O._apply_move(basis, mv)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return None, used


def free_factor_hull(g: O.GroupHandle, gens, budget: int = 2000) -> list:
    """Basis of the smallest free factor of the free group g containing
    gens.  Raises EnclosureError when minimality cannot be certified."""
    k = g.rank
    basis = [(i,) for i in range(1, k + 1)]
    coords = [W.reduce(x) for x in gens if W.reduce(x)]
    while True:
        if _hull_certified(coords, k):
            return basis
        sub, used = _proper_factor(coords, k, budget)
        if sub is None:
            raise EnclosureError(f"free factor hull not certified after {used} Nielsen states")
        budget -= used
        fold = W.stallings_fold(sub)
        new_coords = [fold.express(x) for x in coords]
        # express() uses the fold's own basis; rewrite sub in that basis
        fb = fold.basis()
        basis = [W.substitute(b, basis) for b in fb]
        coords = new_coords
        k = len(fb)


def enclosure(g: O.GroupHandle, h: O.SubgroupDesc, certificate=None, budget: int = 2000) -> O.SubgroupDesc:
    """Quasiconvex enclosure of h in g.

    Over a free g the hierarchy starts with the Grushko level, so the walk
    first descends to the free factor hull.  The JSJ level below it is
    accepted only with a rigidity certificate: an ImmutabilityCertificate
    with verdict "immutable", or the string "rigid-label" when the caller
    vouches for it (a validated rigid vertex of the source decomposition).
    """
    src = g.word_problem_source()
    if src == "abelian":
        return O.SubgroupDesc(g, tuple((i,) for i in range(1, g.rank + 1)), h.distinguished)
    if src != "free":
        raise O.UnsupportedQuery("enclosures are computed over free ambients")
    basis = free_factor_hull(g, h.generators, budget)
    out = O.SubgroupDesc(g, tuple(basis), h.distinguished)
    if certificate == "rigid-label":
        return out
    if certificate is None:
        if not h.distinguished:
            raise EnclosureError("missing certificate: no distinguished families")
        certificate = O.relatively_immutable(out)
    if getattr(certificate, "verdict", None) != "immutable":
        raise EnclosureError("missing certificate: enclosure is not known to be rigid")
    return out


# ---------------------------------------------------------- effective pairs


def _is_gog(obj) -> bool:
    return isinstance(obj, G.GraphOfGroups)


def _handle(obj) -> O.GroupHandle:
    return obj.handle if _is_gog(obj) else obj


def _alpha(obj) -> W.Alphabet:
    return obj.alphabet() if _is_gog(obj) else obj.alphabet


def _level_json(obj) -> dict:
    from . import formats as F

    if _is_gog(obj):
        return {"format": "gog", "text": F.emit_gog(obj)}
    return {"format": "pres", "text": F.emit_pres(obj)}


def _level_load(data):
    from . import formats as F

    if data["format"] == "gog":
        return F.parse_gog(data["text"])
    return F.parse_pres(data["text"])


def _identity(alpha: W.Alphabet) -> tuple:
    return tuple((i,) for i in range(1, len(alpha) + 1))


@dataclass
class EffectivePair:
    """A commutative ladder L_i -> M_i (eta) over L_i -> L_{i+1} (lambda)
    and M_i -> M_{i+1} (mu).  Length -1 is the identity Gamma -> Gamma."""

    length: int
    models: list
    limits: list
    eta: list
    mu: list
    lambda_: list
    certificates: list = field(default_factory=list)
    datum: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def words(src, tgt, imgs):
            return [_alpha(tgt).format(w) for w in imgs]

        n = len(self.models)
        return {
            "format": "ggt/1",
            "length": self.length,
            "models": [_level_json(m) for m in self.models],
            "limits": [_level_json(m) for m in self.limits],
            "eta": [words(self.limits[i], self.models[i], self.eta[i]) for i in range(n)],
            "mu": [words(self.models[i], self.models[i + 1], self.mu[i]) for i in range(n - 1)],
            "lambda": [words(self.limits[i], self.limits[i + 1], self.lambda_[i]) for i in range(n - 1)],
            "certificates": list(self.certificates),
            "datum": dict(self.datum),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, data) -> "EffectivePair":
        if isinstance(data, str):
            data = json.loads(data)
        models = [_level_load(m) for m in data["models"]]
        limits = [_level_load(m) for m in data["limits"]]
        if len(models) != len(limits):
            raise ValueError("models and limits differ in length")

        def load(rows, tgt):
            return [tuple(_alpha(t).parse(x) for x in row) for row, t in zip(rows, tgt)]

        return cls(
            data["length"],
            models,
            limits,
            load(data["eta"], models),
            load(data["mu"], models[1:]),
            load(data["lambda"], limits[1:]),
            list(data.get("certificates", [])),
            dict(data.get("datum", {})),
        )


@dataclass
class PairReport:
    verdict: str
    lines: list  # (check, verdict, detail)
    witness: object = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": self.witness,
            "checks": [{"check": c, "verdict": v, "detail": d} for c, v, d in self.lines],
        }


def verify_pair(p: EffectivePair, radius: int = 4) -> PairReport:
    from .expansion import Expansion, verify_embedding

    lines = []
    witness = None
    n = len(p.models)
    if len(p.limits) != n or len(p.eta) != n or len(p.mu) != n - 1 or len(p.lambda_) != n - 1:
        return PairReport("fail", [("shape", "fail", "ladder arrays have inconsistent lengths")], "shape")
    for i in range(n):
        src, tgt = _alpha(p.limits[i]), _alpha(p.models[i])
        if len(p.eta[i]) != len(src):
            lines.append((f"eta {i}", "fail", "wrong number of images"))
            continue
        if list(p.eta[i]) == list(_identity(src)) and src == tgt:
            lines.append((f"eta {i}", "pass", "identity"))
        elif _is_gog(p.limits[i]) and _is_gog(p.models[i]) and i + 1 < n:
            x = Expansion(p.limits[i], _handle(p.models[i + 1]), None, p.models[i], tuple(p.eta[i]), {}, {}, tuple(p.mu[i]))
            try:
                v = verify_embedding(x, radius)
                lines.append((f"eta {i}", v.verdict, v.detail if v.witness is None else f"witness {v.witness}"))
            except O.UnsupportedQuery as exc:
                lines.append((f"eta {i}", "unchecked", str(exc)))
        else:
            lines.append((f"eta {i}", "unchecked", "no embedding check for this level"))
    for i in range(n - 1):
        h_next = _handle(p.models[i + 1])
        src = _alpha(p.limits[i])
        bad = None
        for j, s in enumerate(src.symbols):
            lhs = W.substitute(p.eta[i][j], p.mu[i])
            rhs = W.substitute(p.lambda_[i][j], p.eta[i + 1])
            try:
                if not O.equal(h_next, lhs, rhs):
                    bad = s
                    break
            except O.UnsupportedQuery as exc:
                bad = f"unchecked: {exc}"
                break
        if bad is None:
            lines.append((f"ladder {i}", "pass", "mu eta = eta lambda on every generator"))
        elif bad.startswith("unchecked"):
            lines.append((f"ladder {i}", "unchecked", bad))
        else:
            lines.append((f"ladder {i}", "fail", f"generator {bad}"))
            witness = witness or bad
        for name, srcobj, tgtobj, imgs in (
            ("mu", p.models[i], p.models[i + 1], p.mu[i]),
            ("lambda", p.limits[i], p.limits[i + 1], p.lambda_[i]),
        ):
            if not _is_gog(srcobj):
                lines.append((f"strict {name} {i}", "unchecked", "source is not a decomposition"))
                continue
            try:
                m = G.StrictMapDesc(srcobj, _handle(tgtobj), tuple(imgs))
                rep = G.check_strict(m, radius)
                lines.append((f"strict {name} {i}", rep.verdict, ""))
            except G.GogError as exc:
                lines.append((f"strict {name} {i}", "fail", str(exc)))
                witness = witness or str(exc)
        if _is_gog(p.models[i]):
            rep = G.validate_jsj_like(p.models[i], radius=radius)
            lines.append((f"jsj model {i}", rep.verdict, ""))
    verdicts = [v for _, v, _ in lines]
    if "fail" in verdicts:
        verdict = "fail"
    elif any(v in ("bounded-pass", "unchecked") for v in verdicts):
        verdict = "bounded-pass"
    else:
        verdict = "pass"
    return PairReport(verdict, lines, witness)


def identity_pair(gamma: O.GroupHandle) -> EffectivePair:
    ident = _identity(gamma.alphabet)
    return EffectivePair(-1, [gamma], [gamma], [ident], [], [], [], {"serial": -1, "family": "identity"})


# ------------------------------------------------------------- enumeration


FIXTURE_ENV = "GGT_FIXTURES"


def load_attestations(path=None) -> list:
    """Attestations from every ``*.json`` file in the fixture directory
    (``$GGT_FIXTURES`` by default).  Each file holds one attestation or a
    list of them."""
    path = path if path is not None else os.environ.get(FIXTURE_ENV)
    if not path:
        return []
    out = []
    for name in sorted(os.listdir(path)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(path, name), encoding="utf-8") as fh:
            data = json.load(fh)
        for item in data if isinstance(data, list) else [data]:
            out.append(O.Attestation.from_json(item))
    return out


def _canonical_word(w) -> bool:
    """w is cyclically reduced, not a proper power, and shortlex-least among
    the rotations of w and of its inverse."""
    if not w or W.cyclic_reduce(w)[1] or W.is_proper_power(w):
        return False
    key = W.shortlex_key(w)
    inv = W.inverse(w)
    return all(key <= W.shortlex_key(r) for c in (w, inv) for r in W.rotations(c))


def _word_stream(k: int):
    """Canonical words over k generators in shortlex order."""
    letters = sorted([x for i in range(1, k + 1) for x in (i, -i)], key=W.letter_key)
    n = 1
    while True:
        frontier = [()]
        for _ in range(n):
            frontier = [w + (x,) for w in frontier for x in letters if not (w and w[-1] == -x)]
        for w in frontier:
            if _canonical_word(w):
                yield w
        n += 1


FAMILIES = ("double", "extension")


@dataclass
class CandidateDatum:
    """One point of the candidate grammar: a family and a word w.  ``double``
    is Gamma *_<w> Gamma; ``extension`` adjoins a commuting letter to <w>."""

    serial: int
    family: str
    word: tuple
    item_budget: int = 8

    def to_json(self, alpha: W.Alphabet) -> dict:
        return {"serial": self.serial, "family": self.family, "word": alpha.format(self.word)}


def _build_candidate(gamma: O.GroupHandle, c: CandidateDatum):
    """(L_0, rho) for a candidate."""
    names = list(gamma.alphabet.symbols)
    ident = _identity(gamma.alphabet)
    if c.family == "double":
        d = G.build_double(gamma, c.word)
        images = ident + (c.word,) + ident
        return d, G.StrictMapDesc(d, gamma, images)
    cn = G._fresh("c", names)
    tn = G._fresh("t", names + [cn])
    u = G.Vertex("u", G.RigidPayload(tuple(names)))
    a = G.Vertex("w", G.AbelianPayload((cn, tn)))
    e = G.bipartite_edge("e", "w", "u", [[1], [0]], [c.word])
    d = G.GraphOfGroups((u, a), (e,), ("e",))
    return d, G.StrictMapDesc(d, gamma, ident + (c.word, c.word))


def _passes(rep) -> bool:
    return rep.verdict in ("pass", "bounded-pass")


class Enumerator:
    """Deterministic dovetailing over candidates.  Fresh candidates and
    deferred ones (immutability unknown, retried with doubled budget)
    alternate, so every candidate is revisited infinitely often."""

    def __init__(self, gamma: O.GroupHandle, radius: int = 4, attestations=None, log=None):
        if gamma.word_problem_source() != "free":
            raise O.UnsupportedQuery("enumeration is implemented over free gamma")
        atts = tuple(gamma.attestations) + tuple(load_attestations() if attestations is None else attestations)
        self.gamma = O.GroupHandle(gamma.alphabet, gamma.relators, gamma.backend, gamma.gog, atts, gamma.ref)
        self.radius = radius
        self.consumed = 0
        self.emitted = 0
        self.last_index = -1
        self.steps = 0
        self.log = log if log is not None else []
        self._words = _word_stream(gamma.rank)
        self._fresh: deque = deque()
        self._deferred: deque = deque()
        self._serial = 0
        self._started = False
        self._certs: dict = {}

    def state(self) -> dict:
        return {
            "budget_consumed": self.consumed,
            "last_candidate_index": self.last_index,
            "emitted": self.emitted,
            "steps": self.steps,
        }

    def _due(self, c: CandidateDatum) -> bool:
        """A candidate retried j times waits until 4^j fresh candidates
        have been drawn, so retries never starve the fresh stream."""
        level = (c.item_budget // 8).bit_length() - 1
        return self._serial >= 4 ** level

    def _certificate(self, c: CandidateDatum):
        key = (c.word, c.item_budget)
        if key not in self._certs:
            g = self.gamma
            sub = O.SubgroupDesc(g, _identity(g.alphabet), ((c.word,),))
            cert = O.relatively_immutable(sub, c.item_budget)
            used = cert.evidence.get("budget_consumed", 0) if cert.verdict != "immutable" else 0
            self.consumed += used
            self._certs = {k: v for k, v in self._certs.items() if k[0] == c.word}
            self._certs[key] = cert
        return self._certs[key]

    def _next_fresh(self):
        if self.gamma.rank == 0:
            return None
        if not self._fresh:
            w = next(self._words)
            for fam in FAMILIES:
                self._fresh.append(CandidateDatum(self._serial, fam, w))
                self._serial += 1
        return self._fresh.popleft()

    def run(self, budget: int, skip: int = 0):
        """Yield pairs until ``budget`` work units are consumed in total.
        The first ``skip`` emissions are replayed silently."""
        while self.consumed < budget:
            self.steps += 1
            if not self._started:
                self._started = True
                self.consumed += 1
                self.last_index = -1
                self.emitted += 1
                if self.emitted > skip:
                    yield identity_pair(self.gamma)
                continue
            if self._deferred and self._due(self._deferred[0]):
                c = self._deferred.popleft()
            else:
                c = self._next_fresh()
            if c is None:
                return
            pair = self._try(c)
            if pair is not None:
                self.emitted += 1
                if self.emitted > skip:
                    yield pair

    def _try(self, c: CandidateDatum):
        self.consumed += 1
        self.last_index = c.serial
        g = self.gamma
        cert = self._certificate(c)
        fmt = g.alphabet.format(c.word)
        if cert.verdict == "not-immutable":
            self.log.append(f"candidate {c.serial} ({c.family} {fmt}): gamma splits freely relative to w")
            return None
        if cert.verdict == "unknown":
            c.item_budget *= 2
            self._deferred.append(c)
            return None
        self.consumed += 10
        try:
            return self._assemble(c, cert)
        except (G.GogError, O.UnsupportedQuery, RuntimeError, ValueError) as exc:
            self.log.append(f"candidate {c.serial} ({c.family} {fmt}): {exc}")
            return None

    def _assemble(self, c: CandidateDatum, cert):
        from .expansion import expand, verify_embedding

        g = self.gamma
        d, rho = _build_candidate(g, c)
        if not _passes(G.validate_jsj_like(d, radius=self.radius)):
            raise ValueError("L_0 is not JSJ-like")
        if not _passes(G.check_strict(rho, self.radius)):
            raise ValueError("rho is not strict at the emission radius")
        x = expand(d, rho)
        if not _passes(verify_embedding(x, self.radius)):
            raise ValueError("eta is not injective")
        certs = [{"vertex": v.id, "verdict": cert.verdict, "evidence": cert.evidence}
                 for v in d.vertices if v.kind == "rigid"]
        pair = EffectivePair(
            0,
            [x.result, g],
            [d, g],
            [x.eta, _identity(g.alphabet)],
            [x.mu],
            [rho.images],
            certs,
            c.to_json(g.alphabet),
        )
        rep = verify_pair(pair, self.radius)
        if not _passes(rep):
            raise ValueError(f"assembled pair fails verification: {rep.witness}")
        return pair


def enumerate_pairs(gamma: O.GroupHandle, budget: int, radius: int = 4, attestations=None, resume=None):
    """Stream of EffectivePair.  ``resume`` is a state dict from
    ``Enumerator.state()``; the stream then continues after the pairs
    already emitted, with ``budget`` counted on top of the consumed units."""
    eng = Enumerator(gamma, radius, attestations)
    skip = 0
    total = budget
    if resume:
        skip = int(resume.get("emitted", 0))
        total = int(resume.get("budget_consumed", 0)) + budget
    yield from eng.run(total, skip)
