import dataclasses

import pytest
import sympy

from families import decompositions
from ggt import expansion as E
from ggt import fixtures as X
from ggt import formats as FM
from ggt import gog as G
from ggt import oracle as O
from ggt import words as W
from oracles import brute_commuting_conjugator, stabilizer_brute

FIXTURES = X.expansions()
F = X.free_ab()


@pytest.fixture(scope="module")
def built():
    return {n: E.expand(m.source, m) for n, m in FIXTURES.items()}


def _relators_survive(g, action):
    h = g.handle
    return all(O.is_trivial(h, W.substitute(r, action), log=False) for r in g.relators())


# -------------------------------------------------------------------- expand


@pytest.mark.parametrize("name", sorted(X.gammas()))
def test_identity_expansion_reproduces_the_input(name):
    d, _ = X.gammas()[name]
    x = E.expand(d, X.identity_map(d))
    assert FM.emit_gog(x.result) == FM.emit_gog(d)
    assert x.eta == x.mu == tuple((i,) for i in range(1, len(d.alphabet()) + 1))
    assert E.verify_embedding(x).verdict == "pass"


def test_toy_expansion(built):
    x = built["toy"]
    js = x.to_json()
    assert js["eta"]["c"] == "z z"
    assert js["mu"]["z"] == "x"
    assert [v.id for v in x.result.vertices] == ["G2", "A"]
    assert x.result.vertex("G2").payload.rank == 2


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_mu_after_eta_is_the_strict_map(built, name):
    x, m = built[name], FIXTURES[name]
    for i, img in enumerate(m.images):
        assert O.equal(m.target, x.mu_map().apply(x.eta[i]), img)


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_model_satisfies_the_conditions(built, name):
    rep = G.validate_jsj_like(built[name].result)
    assert rep.passed(), rep.to_json()


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_eta_is_a_homomorphism(built, name):
    x = built[name]
    h = x.result.handle
    for r in x.source.relators():
        assert O.is_trivial(h, x.eta_word(r))


def _hub_map(g):
    imgs = {"x0": "a", "y0": "b"}
    for e in g.edges:
        imgs[g.vertex(e.source).names[0]] = F.alphabet.format(e.target_map[0])
    return X.strict_map(g, F, imgs)


@pytest.mark.parametrize("name", ["hub_x_y_xy", "hub_x_conj_y", "hub_x_x_inv_conj", "hub_dw_family", "hub_single"])
def test_edge_classes_follow_conjugacy_in_the_target(name):
    g = decompositions()[name]
    m = _hub_map(g)
    x = E.expand(g, m)
    ids = sorted(e.id for e in g.edges)
    for a in ids:
        for b in ids:
            ia = m.apply(g.to_global(g.edge(a).source, (1,)))
            ib = m.apply(g.to_global(g.edge(b).source, (1,)))
            related = brute_commuting_conjugator(ia, ib, 2, 4) is not None
            assert (x.edge_class_map[a] == x.edge_class_map[b]) == related, (a, b)


def test_merged_edge_classes(built):
    x = built["merged_edge"]
    assert x.edge_class_map == {"e1": "e1", "e2": "e1"}
    assert x.vertex_map["w2"] == "w1"
    assert brute_commuting_conjugator((1,), (2, 1, -2), 2, 4) is not None


def test_abelian_or_gog_targets_are_refused():
    d = X.double()
    with pytest.raises(O.UnsupportedQuery):
        E.expand(d, X.strict_map(d, X.z2(), {"a": "a", "b": "b", "a'": "a", "b'": "b", "z": "a b"}))
    ext = X.extension()
    twisted = X.strict_map(ext, ext.handle, {"a": "a", "b": "b", "c": "c", "t": "c t"})
    with pytest.raises(O.UnsupportedQuery):
        E.expand(ext, twisted)


# ----------------------------------------------------------------- embedding


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_embedding_is_bounded_pass(built, name):
    v = E.verify_embedding(built[name], radius=6)
    assert v.verdict == "bounded-pass" and v.witness is None


def test_corrupted_eta_is_caught(built):
    x = built["toy"]
    eta = list(x.eta)
    eta[1] = ()  # q dies in the model
    bad = dataclasses.replace(x, eta=tuple(eta))
    v = E.verify_embedding(bad, radius=4)
    assert v.verdict == "fail"
    w = x.source.alphabet().parse(v.witness)
    assert not O.is_trivial(x.source.handle, w)
    assert O.is_trivial(x.result.handle, bad.eta_word(w))


# ------------------------------------------------------------ modular group


def test_single_vertex_has_no_modular_generators():
    assert E.modular_generators(X.rigid_ab()) == []


def test_double_has_one_edge_twist():
    (g,) = E.modular_generators(X.double())
    assert g.kind == "edge-twist" and g.data["element"] == "z"
    d = X.double()
    # the twist conjugates the far factor by z and fixes the near one
    z = d.alphabet().parse("z")
    for name in ("a", "b", "z"):
        assert g.apply(d.alphabet().parse(name)) == d.alphabet().parse(name)
    for name in ("a'", "b'"):
        w = d.alphabet().parse(name)
        assert O.equal(d.handle, g.apply(w), W.conjugate(z, w)) or O.equal(d.handle, g.apply(w), W.conjugate(W.inverse(z), w))


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_modular_generators_are_endomorphisms(name):
    d = FIXTURES[name].source
    for g in E.modular_generators(d):
        assert _relators_survive(d, g.action), g.data


def _mat(m):
    return tuple(tuple(int(v) for v in row) for row in m)


def test_abelian_stabilizer_matches_brute_force():
    d = X.extension()
    gens = [g for g in E.modular_generators(d) if g.kind == "abelian-automorphism"]
    mats = [sympy.Matrix(g.data["matrix"]) for g in gens]
    pcols = [list(c) for c in G.peripheral_subgroup(d, "w").columns()]
    brute = set(stabilizer_brute(2, pcols, 2))
    for m in mats:
        assert _mat(m.tolist()) in brute
    # closure of the generators (entries kept small) reaches every brute element
    seen = {_mat(sympy.eye(2).tolist())}
    frontier = list(seen)
    pool = mats + [m.inv() for m in mats]
    while frontier:
        nxt = []
        for t in frontier:
            for m in pool:
                u = _mat((sympy.Matrix(t) * m).tolist())
                if u not in seen and all(abs(v) <= 4 for row in u for v in row):
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    assert brute <= seen


def test_socket_twists():
    d = X.socket()
    gens = E.modular_generators(d)
    assert sorted(g.data["curve"] for g in gens) == ["a1", "b1"]
    h = d.handle
    for g in gens:
        # the boundary is fixed
        r = d.alphabet().parse("r1")
        assert O.equal(h, g.apply(r), r)


# --------------------------------------------------------------- induction


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_induced_automorphisms_intertwine(built, name):
    x = built[name]
    d, R = x.source, x.result
    for alpha in E.modular_generators(d):
        phi = E.induce_modular(x, alpha)
        assert phi.decomposition is R
        assert _relators_survive(R, phi.action)
        for i in range(1, len(d.alphabet()) + 1):
            assert O.equal(R.handle, x.eta_word(alpha.apply((i,))), phi.apply(x.eta[i - 1]))


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_induction_respects_composition(built, name):
    x = built[name]
    R = x.result
    for alpha in E.modular_generators(x.source):
        phi = E.induce_modular(x, alpha)
        phi2 = E.induce_modular(x, alpha.power(2))
        for w in x.eta:
            assert O.equal(R.handle, phi2.apply(w), phi.apply(phi.apply(w)))


def test_induce_rejects_foreign_generators(built):
    alien = E.modular_generators(X.double())[0]
    with pytest.raises(ValueError):
        E.induce_modular(built["double"], alien)


def test_socket_roots_stay_maximal(built):
    x = built["socket"]
    s = x.result.vertex(x.vertex_map["S"])
    assert s.kind == "socket" and s.payload.roots == (1,)
    assert G.validate_jsj_like(x.result)["b"].verdict == "pass"
