import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualforge import catalog
from dualforge.core import FiniteStructure, ResourceLimitError, SignatureError, limits, power, substructure
from dualforge.hom import (
    Hom,
    check_compatible,
    color_refinement,
    count_search_nodes,
    enumerate_homs,
    find_isomorphism,
    hom_maps,
    in_prevariety,
    is_embedding,
    is_hom,
    is_isomorphism,
    separates_points,
    separates_structure,
)

from oracles import naive_homs

SMALL = ["D", "TWOPOS", "S", "SEMI", "SEMI01", "DM4", "DM4_EGO", "STONE3", "KLEENE3",
         "E", "E_EGO", "C4", "M3", "N5", "N5_EGO", "OCK1", "STONE3_EGO", "KLEENE3_EGO"]


@pytest.mark.parametrize("name", SMALL)
def test_endomorphisms_match_naive(name):
    M = catalog.structure(name)
    assert hom_maps(M, M) == naive_homs(M, M)


@pytest.mark.parametrize("a,b", [("DM4", "D"), ("STONE3", "D"), ("KLEENE3", "D"), ("D", "DM4"),
                                 ("N5", "E"), ("M3", "N5"), ("E_EGO", "N5_EGO")])
def test_cross_homs_match_naive(a, b):
    A, B = catalog.structure(a), catalog.structure(b)
    if A.sig != B.sig:
        with pytest.raises(SignatureError):
            hom_maps(A, B)
        return
    assert hom_maps(A, B) == naive_homs(A, B)


def test_carriers_of_dm4_lattice_reduct():
    from dualforge.core import apply_reduct

    Mf = apply_reduct(catalog.structure("DM4"), catalog.reduct("lattice"))
    assert hom_maps(Mf, catalog.structure("D")) == [(0, 0, 1, 1), (0, 1, 0, 1)]


def test_plan_search_on_larger_domains_matches_small_search():
    # substructures of DM4^2 are large enough for the vectorised search
    M = catalog.structure("DM4")
    P = power(M, 2)
    from dualforge.core import all_substructures

    for sub in all_substructures(P)[::7]:
        A = substructure(P, sub)
        got = hom_maps(A, M)
        assert all(is_hom(h, A, M) for h in got)
        assert len(got) == len(set(got))
        if A.size <= 6:
            assert got == naive_homs(A, M)


def test_hom_search_is_order_independent():
    M = catalog.structure("N5")
    P = power(M, 2)
    with limits(seed_order=0):
        a = hom_maps(P, M)
    with limits(seed_order=1):
        b = hom_maps(P, M)
    assert a == b


def test_node_limit():
    M = catalog.structure("N5")
    P = power(M, 2)
    with limits(max_nodes=5):
        with pytest.raises(ResourceLimitError):
            hom_maps(P, M)


def test_hom_object():
    D = catalog.structure("D")
    h = Hom.verified([0, 1], D, D)
    assert h(1) == 1 and h.compose([1, 0]).map == (1, 0)
    with pytest.raises(SignatureError):
        Hom.verified([1, 0], D, D)
    assert [x.map for x in enumerate_homs(D, D)] == [(0, 1)]
    assert count_search_nodes(D, D) >= 1


def test_separation():
    assert separates_points([(0, 0, 1, 1), (0, 1, 0, 1)], 4)[0]
    ok, wit = separates_points([(0, 0, 1, 1)], 4)
    assert not ok and wit == {"kind": "points", "pair": [0, 1]}
    T = catalog.structure("TWOPOS")
    ok, wit = separates_structure([(0, 1)], FiniteStructure(2, {}, {"le": [(0, 0), (1, 1)]}), T)
    assert not ok and wit["kind"] == "relation"


def test_prevariety_membership():
    from dualforge.core import apply_reduct

    D = catalog.structure("D")
    assert in_prevariety(apply_reduct(catalog.structure("KLEENE3"), catalog.reduct("lattice")), D)
    # the diamond M3 lattice is not distributive
    join = [0, 1, 2, 3, 4, 1, 1, 4, 4, 4, 2, 4, 2, 4, 4, 3, 4, 4, 3, 4, 4, 4, 4, 4, 4]
    meet = [0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 2, 0, 2, 0, 0, 0, 3, 3, 0, 1, 2, 3, 4]
    diamond = FiniteStructure(5, {"join": (2, join), "meet": (2, meet), "bot": (0, [0]), "top": (0, [4])})
    assert not in_prevariety(diamond, D)


def test_isomorphism_tools():
    A = catalog.structure("OCK2")
    B = catalog.structure("DM4")
    h = find_isomorphism(A, B)
    assert h is not None and is_isomorphism(h, A, B)
    assert find_isomorphism(catalog.structure("M3"), catalog.structure("N5")) is None
    D = catalog.structure("D")
    assert is_embedding((0, 3), D, power(D, 2))


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(5)))
def test_color_refinement_invariant_under_relabelling(perm):
    M = catalog.structure("N5")
    inv = [0] * 5
    for a, b in enumerate(perm):
        inv[b] = a
    ops = {}
    for op, (arity, table) in M.ops.items():
        ops[op] = (arity, [perm[table[sum(inv[x] * 5 ** (arity - 1 - i) for i, x in enumerate(args))]]
                           for args in itertools.product(range(5), repeat=arity)])
    N = FiniteStructure(5, ops)
    cm, cn = color_refinement(M), color_refinement(N)
    assert [cm[inv[b]] for b in range(5)] == cn
    h = find_isomorphism(M, N)
    assert h is not None and is_isomorphism(h, M, N)


@pytest.mark.parametrize("m,mt", [("DM4", "DM4_EGO"), ("D", "TWOPOS"), ("N5", "N5_EGO"), ("N5_1", "N5_1"),
                                  ("E", "E_EGO"), ("OCK3", "OCK3_EGO"), ("STONE3", "STONE3_EGO"),
                                  ("KLEENE3", "KLEENE3_EGO"), ("S", "STILDE")])
def test_catalog_pairs_compatible(m, mt):
    assert check_compatible(catalog.structure(m), catalog.structure(mt))[0]


def test_incompatible_pair_has_witness():
    M = catalog.structure("DM4")
    bad = FiniteStructure(4, {"f": (1, [1, 1, 1, 1])})
    ok, wit = check_compatible(M, bad)
    assert not ok and wit
