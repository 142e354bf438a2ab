"""Acceptance suite.  Each test prints one [PASS]/[FAIL] line; the lines are
repeated in the terminal summary.  The oracle-honesty check must stay last
in this file, and conftest sorts this file after every other test module."""

import random
import time

import sympy

from families import brute_partition, decompositions
from ggt import cylinders as C
from ggt import expansion as E
from ggt import fixtures as X
from ggt import formats as FM
from ggt import gog as G
from ggt import lattices as lat
from ggt import oracle as O
from ggt import resolve as R
from oracles import divisors, is_saturation, rank
from test_lattices import check_pushout

LM = lat.LatticeMap.of
RNG_SEED = 20260418
INSTANCES = 200


def _injective(rnd, n, k):
    while True:
        m = [[rnd.randint(-5, 5) for _ in range(k)] for _ in range(n)]
        if rank(m, k) == k:
            return m


def test_lattice_pushout_suite(criterion):
    rnd = random.Random(RNG_SEED)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(INSTANCES):
        c = rnd.randint(1, 3)
        i1 = LM(_injective(rnd, rnd.randint(c, 4), c))
        i2 = LM(_injective(rnd, rnd.randint(c, 4), c))
        m, j1, j2 = lat.pushout_free_abelian(i1, i2)
        try:
            check_pushout(i1, i2, m, j1, j2)
        except AssertionError:
            failures += 1
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 10
    criterion("1 lattice pushouts", ok, f"{INSTANCES} instances, {failures} failures, {dt:.2f}s (limit 10s)")
    assert ok


def test_saturation_suite(criterion):
    rnd = random.Random(RNG_SEED + 1)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(INSTANCES):
        n = rnd.randint(1, 4)
        k = rnd.randint(1, n)
        m = _injective(rnd, n, k)
        sub = LM(m)
        sat = lat.saturate(sub)
        cols = [list(x) for x in sat.columns()]
        good = is_saturation([list(x) for x in sub.columns()], cols, n)
        # the index of sub in its saturation is the product of the divisors
        coords = [sat.preimage(x) for x in sub.columns()]
        good = good and abs(sympy.Matrix(coords).det()) == abs(sympy.prod(divisors(m)))
        # torsion-free quotient: every divisor of the saturation is 1
        good = good and lat.elementary_divisors(sat.as_list(), k) == [1] * k
        failures += not good
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 5
    criterion("2 saturation", ok, f"{INSTANCES} instances, {failures} failures, {dt:.2f}s (limit 5s)")
    assert ok


def test_tree_of_cylinders_suite(criterion):
    t0 = time.perf_counter()
    cases = decompositions()
    bad = []
    for name, g in cases.items():
        out, part = C.tree_of_cylinders(g)
        rep = G.validate_jsj_like(out)
        again, _ = C.tree_of_cylinders(out)
        if not (
            out.is_bipartite()
            and all(rep[k].verdict == "pass" for k in "abc")
            and FM.emit_gog(again) == FM.emit_gog(out)
            and sorted(sorted(c.edges) for c in part.classes) == brute_partition(g)
        ):
            bad.append(name)
    merged = X.merged_edge()
    _, part = C.tree_of_cylinders(merged)
    if sorted(sorted(c.edges) for c in part.classes) != brute_partition(merged):
        bad.append("merged_edge")
    dt = time.perf_counter() - t0
    ok = len(cases) >= 20 and not bad and dt < 30
    criterion("3 tree of cylinders", ok, f"{len(cases)} decompositions + merged edge, failing {bad}, {dt:.2f}s (limit 30s)")
    assert ok


def test_model_identity(criterion):
    bad = []
    for name, (d, _) in X.gammas().items():
        x = E.expand(d, X.identity_map(d))
        text = FM.emit_gog(x.result)
        if text != FM.emit_gog(d) or FM.emit_gog(FM.parse_gog(text)) != text:
            bad.append(name)
    ok = not bad
    criterion("4 model identity", ok, f"{len(X.gammas())} fixtures, differing {bad}")
    assert ok


def test_naive_gluing_regression(criterion):
    t0 = time.perf_counter()
    rep = G.validate_jsj_like(X.naive_gluing())
    naive_ok = rep["b"].verdict == "fail" and "edge e" in rep["b"].detail
    src = X.toy()
    x = E.expand(src, X.strict_map(src, X.free_xy(), X.TOY_MAP))
    out = G.validate_jsj_like(x.result)
    structural = all(out[k].verdict == "pass" for k in "abc")
    emb = E.verify_embedding(x, radius=6)
    dt = time.perf_counter() - t0
    ok = naive_ok and structural and emb.verdict in ("pass", "bounded-pass") and emb.radius == 6 and dt < 60
    criterion(
        "5 naive gluing",
        ok,
        f"naive b={rep['b'].verdict} ({rep['b'].detail}); expanded a-c "
        f"{''.join(out[k].verdict[0] for k in 'abc')}, embedding {emb.verdict} r={emb.radius}, {dt:.2f}s (limit 60s)",
    )
    assert ok


def test_intertwining(criterion):
    checked = failures = 0
    for name, m in X.expansions().items():
        x = E.expand(m.source, m)
        d, res = x.source, x.result
        for alpha in E.modular_generators(d):
            phi = E.induce_modular(x, alpha)
            for i in range(1, len(d.alphabet()) + 1):
                checked += 1
                lhs = x.eta_word(alpha.apply((i,)))
                rhs = phi.apply(x.eta[i - 1])
                failures += not O.equal(res.handle, lhs, rhs)
    ok = failures == 0 and checked > 0
    criterion("6 intertwining", ok, f"{checked} generator images over {len(X.expansions())} fixtures, {failures} failures")
    assert ok


def test_enumeration(criterion):
    F = X.free_ab()
    atts = R.load_attestations(X.HERE)
    t0 = time.perf_counter()
    runs = ["\n".join(p.dumps() for p in R.enumerate_pairs(F, 10_000, attestations=atts)) for _ in range(3)]
    pairs = [R.EffectivePair.from_json(line) for line in runs[0].splitlines()]
    verdicts = [R.verify_pair(p).verdict for p in pairs]
    dt = time.perf_counter() - t0
    ok = (
        len(set(runs)) == 1
        and pairs
        and pairs[0].length == -1
        and all(v in ("pass", "bounded-pass") for v in verdicts)
        and dt < 300
    )
    criterion("7 enumeration", ok, f"{len(pairs)} pairs, identical runs {len(set(runs)) == 1}, verdicts {verdicts}, {dt:.2f}s (limit 300s)")
    assert ok


def test_oracle_honesty(criterion):
    # drive one more round of every query kind so the log is never empty
    F = X.free_ab()
    p = F.parse
    O.is_trivial(F, p("a b b^-1 a^-1"))
    O.centralizer(F, p("a b a b"))
    O.conjugating_commuter(F, [p("a b a^-1")], [p("b")])
    O.is_root_closed(F, [p("a")])
    records = list(O.REGISTRY.records)
    bad = O.reverify(records)
    kinds = sorted({k for k, _ in records})
    ok = not bad and len(records) > 0
    criterion("8 oracle honesty", ok, f"{len(records)} definite answers of kinds {kinds}, {len(bad)} unverified")
    assert ok
