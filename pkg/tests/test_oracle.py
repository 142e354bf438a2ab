import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggt import fixtures as X
from ggt import lattices as lat
from ggt import oracle as O
from ggt import resolve as R
from ggt import words as W
from oracles import amalgam_trivial, brute_commuting_conjugator, naive_conj, naive_mul, naive_inverse, words

F = X.free_ab()
Z2 = X.z2()
p = F.parse


def test_handle_invariants():
    with pytest.raises(ValueError):
        O.GroupHandle(F.alphabet, (p("a"),), "free")
    with pytest.raises(ValueError):
        O.GroupHandle(F.alphabet, (), "gog")
    assert Z2.relators == (p("a b a^-1 b^-1"),)


def test_word_problem_examples():
    assert O.is_trivial(F, p("a a^-1"))
    assert not O.is_trivial(F, p("a b"))
    assert O.is_trivial(Z2, p("a b a^-1 b^-1"))
    assert not O.is_trivial(Z2, p("a b a"))


def test_certified_backend_without_data_is_unsupported():
    h = O.GroupHandle(F.alphabet, (p("a a"),), "certified")
    with pytest.raises(O.UnsupportedQuery):
        O.is_trivial(h, p("a"))
    with pytest.raises(O.UnsupportedQuery):
        O.centralizer(h, p("a"))


# the double D = F(a,b) *_<w> F(a',b'); D's alphabet is a b z a' b'
D = X.double().handle
TO_D = {1: 1, 2: 2, 3: 4, 4: 5}
WORD = p(X.DOUBLE_WORD)


def _to_d(w):
    return tuple(TO_D[abs(x)] * (1 if x > 0 else -1) for x in w)


def _trivial_words(rng, n):
    """Products of conjugates of w w'^-1, in the four letters a b a' b'."""
    rel = WORD + tuple(-(abs(x) + 2) * (1 if x > 0 else -1) for x in reversed(WORD))
    out = []
    for _ in range(n):
        w = ()
        for _ in range(rng.randint(1, 2)):
            g = tuple(rng.choice([1, -1, 2, -2, 3, -3, 4, -4]) for _ in range(rng.randint(0, 3)))
            r = rel if rng.random() < 0.5 else naive_inverse(rel)
            w = naive_mul(w, naive_conj(g, r))
        out.append(w)
    return out


def test_double_word_problem_agrees_with_syllable_rewriting():
    rng = random.Random(17)
    samples = [tuple(rng.choice([1, -1, 2, -2, 3, -3, 4, -4]) for _ in range(8)) for _ in range(300)]
    samples += _trivial_words(rng, 60)
    seen = set()
    for w in samples:
        expect = amalgam_trivial(w, {1, 2}, {3, 4}, WORD)
        assert O.is_trivial(D, _to_d(w)) == expect, w
        seen.add(expect)
    assert seen == {True, False}


def test_centralizer_examples():
    assert O.centralizer(F, p("a a b")) == [p("a a b")]
    assert O.centralizer(F, p("a b a b")) == [p("a b")]
    assert O.centralizer(Z2, p("a b")) == [p("a"), p("b")]
    with pytest.raises(ValueError):
        O.centralizer(F, ())


def test_centralizer_in_the_extension_of_centralizers():
    e = X.extension()
    h = e.handle
    u = h.parse(X.DOUBLE_WORD)
    cent = O.centralizer(h, u)
    assert len(cent) == 2
    # the centralizer is generated by the root of u and the new letter t
    assert all(O.commute(h, x, u) for x in cent)
    assert h.parse("t") in cent
    assert any(O.equal(h, x, u) for x in cent)


def test_conjugating_commuter_examples():
    assert O.conjugating_commuter(F, [p("a")], [p("a")]) == ()
    assert O.conjugating_commuter(F, [p("a")], [p("b")]) is None
    g = O.conjugating_commuter(F, [p("a b a^-1")], [p("b")])
    assert g == p("a^-1")
    assert W.free_conjugator(p("a b a^-1"), p("b")) == g


@given(words(2, min_size=1, max_size=5), words(2, max_size=4))
def test_conjugating_commuter_symmetry(x, g):
    x = W.reduce(x)
    if not x:
        return
    y = W.conjugate(g, x)
    fwd = O.conjugating_commuter(F, [x], [y])
    back = O.conjugating_commuter(F, [y], [x])
    assert fwd is not None and back is not None
    assert O.commute(F, W.conjugate(fwd, x), y)
    # inverting a witness for (x, y) gives one for (y, x)
    assert O.commute(F, W.conjugate(W.inverse(fwd), y), x)


def test_conjugating_commuter_matches_brute_force():
    rng = random.Random(23)
    for _ in range(60):
        x = W.reduce(tuple(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 3))))
        y = W.reduce(tuple(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 3))))
        if not x or not y:
            continue
        got = O.conjugating_commuter(F, [x], [y])
        brute = brute_commuting_conjugator(x, y, 2, len(x) + len(y))
        assert (got is None) == (brute is None), (x, y)


def test_root_closure_examples():
    assert O.is_root_closed(F, [p("a")])
    assert not O.is_root_closed(F, [p("a a")])
    assert not O.is_root_closed(Z2, [p("a a")])
    sat = lat.saturate(lat.LatticeMap.of([[2], [0]]))
    assert sat.columns() == [(1, 0)]
    assert O.is_root_closed(Z2, [p("a")])


@given(words(2, min_size=1, max_size=8))
def test_centralizers_are_root_closed(w):
    w = W.reduce(w)
    if not w:
        return
    assert O.is_root_closed(F, O.centralizer(F, w))
    if any(O._abelian_vector(Z2, w)):
        assert O.is_root_closed(Z2, O.centralizer(Z2, w))


def test_cyclic_subgroup_is_immutable_relative_to_itself():
    s = O.SubgroupDesc(F, (p("a b a"),), ((p("a b a"),),))
    assert O.relatively_immutable(s).verdict == "immutable"


def test_free_splitting_witness():
    s = O.SubgroupDesc(F, (p("a"), p("b")), ((p("a"),),))
    cert = O.relatively_immutable(s)
    assert cert.verdict == "not-immutable"
    assert O.verify_splitting(s, cert.evidence)
    assert cert.evidence["blocks"] == [[1], [2]]


def test_attested_rigid_word():
    atts = R.load_attestations(X.HERE)
    assert atts
    g = O.GroupHandle(F.alphabet, (), "free", attestations=tuple(atts))
    s = O.SubgroupDesc(g, (p("a"), p("b")), ((p(X.DOUBLE_WORD),),))
    cert = O.relatively_immutable(s)
    assert cert.verdict == "immutable" and "attestation" in cert.evidence
    # without the attestation the search finds no splitting and stays honest
    bare = O.SubgroupDesc(F, (p("a"), p("b")), ((p(X.DOUBLE_WORD),),))
    assert O.relatively_immutable(bare, 200).verdict == "unknown"


def test_relatively_immutable_rejects_bad_families():
    with pytest.raises(ValueError):
        O.relatively_immutable(O.SubgroupDesc(F, (p("a"),), ()))
    with pytest.raises(ValueError):
        O.SubgroupDesc(F, (p("a"), p("b")), ((p("a"), p("b")),))


def _random_desc(rng):
    gens = [p("a"), p("b")]
    w = ()
    while not w:
        w = W.reduce(tuple(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 5))))
    return O.SubgroupDesc(F, tuple(gens), ((w,),))


def test_verdicts_are_monotone_in_budget():
    rng = random.Random(29)
    for _ in range(30):
        s = _random_desc(rng)
        small = O.relatively_immutable(s, 10)
        big = O.relatively_immutable(s, 80)
        if small.verdict != "unknown":
            assert big.verdict == small.verdict


def test_normalize_distinguished_examples():
    s = O.SubgroupDesc(F, (p("a"), p("b")), ((p("a"),), (p("b a b^-1"),)))
    assert O.normalize_distinguished(s).distinguished == ((p("a"),),)
    s = O.SubgroupDesc(F, (p("a"), p("b")), ((p("a a"),),))
    assert O.normalize_distinguished(s).distinguished == ((p("a"),),)


def test_normalization_keeps_verdicts():
    rng = random.Random(31)
    for _ in range(30):
        s = _random_desc(rng)
        before = O.relatively_immutable(s, 40).verdict
        after = O.relatively_immutable(O.normalize_distinguished(s), 40).verdict
        assert before == after


@settings(max_examples=40)
@given(st.lists(words(2, min_size=1, max_size=6), min_size=1, max_size=2))
def test_splitting_witnesses_always_verify(fam):
    fam = [W.reduce(x) for x in fam if W.reduce(x)]
    if not fam or not all(O.commute(F, x, y, log=False) for x in fam for y in fam):
        return
    s = O.SubgroupDesc(F, (p("a"), p("b")), (tuple(fam),))
    found, _ = O.free_splitting_search(W.stallings_fold(s.generators), s.distinguished, 60)
    if found is not None:
        images = [tuple(x) for x in found["automorphism"]]
        # the images form a basis of F(a,b)
        assert W.stallings_fold(images) == W.stallings_fold([p("a"), p("b")])
        assert O.verify_splitting(s, found)


def test_claims_round_trip():
    s = O.SubgroupDesc(F, (p("a"), p("b")), ((p(X.DOUBLE_WORD),),))
    claim = O.format_claim(F, s)
    assert claim == "relatively-immutable H=<a; b> P={<a a b b a^-1 b^-1>}"
    assert O.parse_claim(claim) == (["a", "b"], [["a a b b a^-1 b^-1"]])
    assert O.parse_claim("something else") is None


def test_attestation_needs_all_fields():
    with pytest.raises(ValueError):
        O.Attestation.from_json({"claim": "x"})


def test_reverify_flags_forged_answers():
    forged = [
        ("trivial-free", {"word": p("a"), "answer": True, "witness": ()}),
        ("trivial-abelian", {"word": p("a b"), "answer": True, "witness": (0, 0)}),
        ("centralizer-free", {"word": p("a a"), "answer": [p("a a")], "witness": 1}),
        ("root-closed-free", {"sub": (p("a a"),), "answer": True, "witness": (p("a"), (2,))}),
        ("commuter", {"handle": F, "e1": [p("a")], "e2": [p("b")], "answer": ()}),
    ]
    s = O.SubgroupDesc(F, (p("a"), p("b")), ((p("a a b b"),),))
    bogus = O.ImmutabilityCertificate(
        "not-immutable", {"basis": [[1], [2]], "automorphism": [[1, 2], [1, 2]], "blocks": [[1], [2]]}
    )
    forged.append(("not-immutable", {"desc": s, "certificate": bogus}))
    forged.append(("mystery", {}))
    assert len(O.reverify(forged)) == len(forged)


def test_reverify_accepts_genuine_answers():
    reg = O.Registry()
    saved = O.REGISTRY
    O.REGISTRY = reg
    try:
        O.is_trivial(F, p("a a^-1"))
        O.is_trivial(Z2, p("a b a^-1 b^-1"))
        O.centralizer(F, p("a b a b"))
        O.conjugating_commuter(F, [p("a b a^-1")], [p("b")])
        O.is_root_closed(F, [p("a a")])
        O.is_root_closed(Z2, [p("a a")])
        O.relatively_immutable(O.SubgroupDesc(F, (p("a"), p("b")), ((p("a"),),)))
    finally:
        O.REGISTRY = saved
    assert len(reg.records) >= 7
    assert O.reverify(reg.records) == []
    saved.records.extend(reg.records)
