import dataclasses
import json

import pytest

from ggt import fixtures as X
from ggt import gog as G
from ggt import oracle as O
from ggt import resolve as R
from ggt import words as W
from oracles import subgroup_closure

F = X.free_ab()
p = F.parse
ATTS = R.load_attestations(X.HERE)
FULL = 10_000


@pytest.fixture(scope="module")
def stream():
    return list(R.enumerate_pairs(F, FULL, attestations=ATTS))


# ---------------------------------------------------------------- hierarchy


def test_abelian_input_is_a_leaf():
    z2 = X.z2()
    node = R.hierarchy(z2, O.SubgroupDesc(z2, (z2.parse("a"), z2.parse("b"))))
    assert node.kind == "leaf" and node.children == []


def test_free_group_splits_into_cyclic_leaves():
    node = R.hierarchy(F, O.SubgroupDesc(F, (p("a"), p("b"))))
    assert node.kind == "grushko"
    assert [leaf.subgroup.generators for leaf in node.leaves()] == [(p("a"),), (p("b"),)]


def test_double_has_a_jsj_level():
    d = X.double()
    h = d.handle
    node = R.hierarchy(h, O.SubgroupDesc(h, tuple((i,) for i in range(1, 6))))
    assert node.kind == "jsj"
    assert len(node.children) == 2
    assert all(c.kind == "leaf" for c in node.children)
    assert [c.subgroup.distinguished for c in node.children] == [((p(X.DOUBLE_WORD),),), ((d.alphabet().parse("a' a' b' b' a'^-1 b'^-1"),),)]


def test_repeated_label_is_reported():
    def loop(g, s):
        return "grushko", [s]

    node = R.hierarchy(F, O.SubgroupDesc(F, (p("a"),)), loop)
    assert node.children[0].kind == "failed"


def test_depth_limit():
    node = R.hierarchy(F, O.SubgroupDesc(F, (p("a"), p("b"))), depth=0)
    assert node.kind == "unresolved"
    assert json.loads(json.dumps(node.to_json()))["kind"] == "unresolved"


# ---------------------------------------------------------------- enclosures


def test_free_factor_hull_of_a_primitive_conjugate():
    hull = R.free_factor_hull(F, [p("a b a^-1")])
    assert len(hull) == 1
    assert W.free_conjugator(hull[0], p("b")) is not None or W.free_conjugator(hull[0], p("b^-1")) is not None


def test_free_factor_hull_of_a_commutator_is_everything():
    hull = R.free_factor_hull(F, [p("a b a^-1 b^-1")])
    assert W.stallings_fold(hull) == W.stallings_fold([p("a"), p("b")])


@pytest.mark.parametrize("gens", [["a a", "b"], ["a b"], ["a", "b a b^-1"]])
def test_hull_contains_the_input(gens):
    gens = [p(x) for x in gens]
    hull = R.free_factor_hull(F, gens)
    closure = subgroup_closure(hull, 8)
    for g in gens:
        assert W.member(g, W.stallings_fold(hull))
        assert g in closure


def test_enclosure_examples():
    s = O.SubgroupDesc(F, (p("a"),), ((p("a"),),))
    assert R.enclosure(F, s).generators == (p("a"),)
    with pytest.raises(R.EnclosureError, match="missing certificate"):
        R.enclosure(F, O.SubgroupDesc(F, (p("a"), p("b"))))
    out = R.enclosure(F, O.SubgroupDesc(F, (p("a a"), p("b"))), "rigid-label")
    assert W.stallings_fold(out.generators) == W.stallings_fold([p("a"), p("b")])
    z2 = X.z2()
    assert len(R.enclosure(z2, O.SubgroupDesc(z2, (z2.parse("a a"),))).generators) == 2


def test_enclosure_with_attested_rigidity():
    g = O.GroupHandle(F.alphabet, (), "free", attestations=tuple(ATTS))
    s = O.SubgroupDesc(g, (p("a"), p("b")), ((p(X.DOUBLE_WORD),),))
    out = R.enclosure(g, s)
    assert len(out.generators) == 2
    # without the attestation the same request is refused
    bare = O.SubgroupDesc(F, (p("a"), p("b")), ((p("a b"),),))
    with pytest.raises(R.EnclosureError):
        R.enclosure(F, bare)


# ------------------------------------------------------------ effective pairs


def test_identity_pair_passes():
    pair = R.identity_pair(F)
    rep = R.verify_pair(pair)
    assert rep.verdict == "pass"
    assert pair.length == -1


def test_pair_json_round_trip(stream):
    for pair in stream:
        text = pair.dumps()
        back = R.EffectivePair.from_json(text)
        assert back.dumps() == text
        assert R.EffectivePair.from_json(json.loads(text)).dumps() == text


def test_budget_zero_is_empty():
    assert list(R.enumerate_pairs(F, 0, attestations=ATTS)) == []


def test_first_emission_is_the_identity(stream):
    assert stream[0].length == -1 and stream[0].datum["family"] == "identity"


def test_double_pair_is_found(stream):
    fams = {x.datum.get("family"): x for x in stream}
    assert {"double", "extension"} <= set(fams)
    pair = fams["double"]
    assert pair.datum["word"] == X.DOUBLE_WORD
    assert G.validate_jsj_like(pair.models[0]).passed()
    assert R.verify_pair(pair).verdict in ("pass", "bounded-pass")


def test_all_pairs_verify(stream):
    for pair in stream:
        assert R.verify_pair(pair).verdict in ("pass", "bounded-pass"), pair.datum


def test_corrupted_lambda_fails(stream):
    pair = next(x for x in stream if x.datum.get("family") == "double")
    lam = [list(row) for row in pair.lambda_]
    lam[0][0] = W.mul(lam[0][0], (2,))
    bad = dataclasses.replace(pair, lambda_=[tuple(r) for r in lam])
    rep = R.verify_pair(bad)
    assert rep.verdict == "fail"
    assert rep.witness is not None


def test_shape_mismatch_fails(stream):
    pair = stream[1]
    bad = dataclasses.replace(pair, mu=[])
    assert R.verify_pair(bad).verdict == "fail"


def test_enumeration_is_deterministic(stream):
    again = list(R.enumerate_pairs(F, FULL, attestations=ATTS))
    assert [x.dumps() for x in again] == [x.dumps() for x in stream]


def test_prefix_monotone(stream):
    small = list(R.enumerate_pairs(F, 2_000, attestations=ATTS))
    assert [x.dumps() for x in small] == [x.dumps() for x in stream[: len(small)]]


def test_resume_matches_a_single_run():
    eng = R.Enumerator(F, 4, ATTS)
    first = list(eng.run(1_000))
    state = eng.state()
    rest = list(R.enumerate_pairs(F, 3_000, attestations=ATTS, resume=state))
    whole = list(R.enumerate_pairs(F, state["budget_consumed"] + 3_000, attestations=ATTS))
    assert [x.dumps() for x in first + rest] == [x.dumps() for x in whole]


def test_attestations_come_from_the_fixture_directory(monkeypatch, tmp_path):
    assert ATTS and all(isinstance(a, O.Attestation) for a in ATTS)
    monkeypatch.setenv(R.FIXTURE_ENV, X.HERE)
    assert len(R.load_attestations()) == len(ATTS)
    monkeypatch.setenv(R.FIXTURE_ENV, str(tmp_path))
    assert R.load_attestations() == []
