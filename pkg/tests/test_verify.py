import pytest

from dualforge import catalog, verify
from dualforge.core import FiniteStructure, StructureError, encode, power, substructure
from dualforge.hom import hom_maps, is_hom

from oracles import naive_homs


@pytest.fixture(scope="module")
def dm4():
    return catalog.problem("DM4")


def test_lift_is_pointwise(dm4):
    M, Mt = dm4.M, dm4.Mt
    D = verify.dual(M, M, Mt)
    assert D.carrier == naive_homs(M, M)
    u = Mt.table("u")
    for i, x in enumerate(D.carrier):
        assert D.carrier[D.structure.table("u")[i]] == tuple(u[v] for v in x)
    prec = Mt.rel("prec")
    for i, x in enumerate(D.carrier):
        for j, y in enumerate(D.carrier):
            pointwise = all((a, b) in set(prec.tuples) for a, b in zip(x, y))
            assert ((i, j) in set(D.structure.rel("prec").tuples)) == pointwise


def test_lift_rejects_unclosed_carrier(dm4):
    with pytest.raises(verify.CompatibilityError):
        verify.lift([(0, 0, 1, 1)], 4, dm4.Mt)


def test_lift_of_empty_base_is_one_point(dm4):
    S = verify.lift([()], 0, dm4.Mt)
    assert S.size == 1 and S.rel("prec").tuples == ((0, 0),)


def test_evaluation_on_generator(dm4):
    ok, info = verify.evaluation_check(dm4.M, dm4.M, dm4.Mt)
    assert ok and info["size"] == info["bidual_size"] == 4 and info["dual_size"] == 2
    ok, info = verify.evaluation_check(dm4.Mt, dm4.M, dm4.Mt, "coduality")
    assert ok


def test_evaluation_map_is_embedding_for_products(dm4):
    P = power(dm4.M, 2)
    D = verify.dual(P, dm4.M, dm4.Mt)
    ED = verify.dual(D.structure, dm4.Mt, dm4.M)
    e = verify.evaluation_map(P, D, ED)
    assert None not in e and len(set(e)) == P.size


def test_impoverished_ego_fails():
    # drop u: the order alone does not dualise DM4
    ego = catalog.structure("DM4_EGO")
    bare = FiniteStructure(4, {}, {"prec": ego.rel("prec")})
    r = verify.verify_bruteforce(catalog.structure("DM4"), bare, depth=1)
    assert r["verdict"] == "fail" and r["failures"] == r["checked"] == 4
    assert all("witness" in e for e in r["instances"])


def test_verify_strong_dm4(dm4):
    r = verify.verify_bruteforce(dm4.M, dm4.Mt, depth=2, mode="strong")
    assert r["verdict"] == "pass" and r["failures"] == 0
    assert r["named_constants"]["verdict"] == "pass"


def test_orbit_dedupe_matches_direct_checks(dm4):
    M, Mt = dm4.M, dm4.Mt
    r = verify.verify_bruteforce(M, Mt, depth=2, mode="full")
    assert r["checked"] == len(verify.test_family(M, 2)) + len(verify.test_family(Mt, 2, include_empty=True))
    for e in r["instances"]:
        base = M if e["side"] == "A" else Mt
        S = substructure(power(base, e["n"]), e["carrier"]) if e["n"] else verify.empty_structure(base.sig)
        ok, info = verify.evaluation_check(S, M, Mt, "duality" if e["side"] == "A" else "coduality")
        assert ok == (e["verdict"] == "pass")
        assert info["dual_size"] == e["dual_size"]


def test_unnamed_constant_refutes_coduality():
    semi = catalog.structure("SEMI")
    k = FiniteStructure(2, {"k": (1, [1, 1])}, {"le": [(0, 0), (0, 1), (1, 1)]})
    r = verify.verify_bruteforce(semi, k, depth=1, mode="coduality")
    gate = r["named_constants"]
    assert r["verdict"] == "fail" and gate["verdict"] == "fail" and gate["constants"] == [1]
    w = gate["witness"]
    assert w["empty"] == {"size": 0, "bidual_size": 2, "verdict": "fail"}
    assert w["one_element"] == {"size": 1, "bidual_size": 2, "verdict": "fail"}


def test_bad_arguments(dm4):
    with pytest.raises(ValueError):
        verify.verify_bruteforce(dm4.M, dm4.Mt, mode="nope")
    with pytest.raises(ValueError):
        verify.verify_bruteforce(dm4.M, dm4.Mt, depth=4)
    with pytest.raises(ValueError):
        verify.evaluation_check(dm4.M, dm4.M, dm4.Mt, "sideways")


def test_phi_and_joint_surjectivity(dm4):
    w = dm4.Omega[0]
    DA, H, img = verify.phi(w, dm4.M, dm4.M, dm4.reduct, dm4.N)
    assert sorted(img) == list(range(len(H))) and len(DA) == len(H) == 2
    assert verify.joint_surjectivity(dm4.Omega, dm4.M, dm4.M, dm4.reduct, dm4.N) == (True, None)


def test_commuting_triangle(dm4):
    rep = verify.commuting_triangle_check(dm4.Omega, power(dm4.M, 2), dm4.M, dm4.Mt,
                                          dm4.reduct, dm4.N, dm4.Nt)
    assert rep["verdict"] == "pass"


def test_naturality(dm4):
    M = dm4.M
    P = power(M, 2)
    diag = [encode((a, a), 4) for a in range(4)]
    assert is_hom(diag, M, P)
    assert verify.naturality_check(dm4.Omega[0], diag, M, P, M)
    for f in hom_maps(P, M):
        assert verify.naturality_check(dm4.Omega[0], f, P, M, M)
    with pytest.raises(StructureError):
        verify.naturality_check(dm4.Omega[0], [1, 0, 0, 0], M, M, M)


def test_coincidence_dm4(dm4):
    r = verify.coincidence_check(dm4.Omega[0], dm4.M, dm4.Mt, dm4.reduct, dm4.Mt_reduct,
                                 dm4.N, dm4.Nt, depth=1, objects=[dm4.M])
    assert r["verdict"] == "pass"
    first = r["instances"][0]
    assert first["dual_size"] == first["base_dual_size"] == 2


def test_family_sizes():
    D = catalog.structure("D")
    fam = verify.test_family(D, 2)
    assert [len(s) for n, s, _ in fam if n == 1] == [2]
    assert all(S.size == len(s) for _, s, S in fam)
