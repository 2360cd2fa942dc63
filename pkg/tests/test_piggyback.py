import dataclasses

import pytest

from dualforge import catalog
from dualforge.core import FiniteStructure, Relation, apply_reduct, limits, relation_is_subuniverse
from dualforge.hom import check_compatible, hom_maps
from dualforge.piggyback import (
    ConditionReport,
    MissingField,
    PiggybackProblem,
    build_alter_ego_D,
    build_alter_ego_S,
    carriers,
    check_theorem,
    derive_delta_entailment,
    entails,
    entails_bruteforce,
    is_maximal_in,
    omega_max,
    omega_max_detailed,
    strong_part,
)
from dualforge.verify import dual

from oracles import maximal_subuniverses_exhaustive, preimage

LE = catalog.structure("TWOPOS").rel("le")
PREC_DM4 = ((0, 0), (0, 2), (1, 0), (1, 1), (1, 2), (1, 3), (2, 2), (3, 2), (3, 3))


def flat(name):
    return apply_reduct(catalog.structure(name), catalog.reduct("lattice"))


# ---------------------------------------------------------------- carriers


def test_carriers():
    D = catalog.structure("D")
    assert carriers(flat("DM4"), D) == [(0, 0, 1, 1), (0, 1, 0, 1)]
    assert carriers(flat("KLEENE3"), D) == [(0, 0, 1), (0, 1, 1)]
    assert carriers(D, D) == [(0, 1)]


# ---------------------------------------------------------------- Omega_max


def test_omega_max_dm4_is_alternating_order():
    M = catalog.structure("DM4")
    got = omega_max(M, [(0, 0, 1, 1)], LE)
    assert [r.tuples for r in got] == [PREC_DM4]
    oracle = maximal_subuniverses_exhaustive(M, preimage([(0, 0, 1, 1)] * 2, LE.tuples), 2)
    assert [sorted(s) for s in oracle] == [list(PREC_DM4)]


def test_omega_max_of_a_subuniverse_preimage_is_itself():
    D = catalog.structure("D")
    assert omega_max(D, [(0, 1)], LE) == [LE]


def test_stone3_golden():
    M = catalog.structure("STONE3")
    got = omega_max(M, [(0, 0, 1)], LE)
    assert [r.tuples for r in got] == [((0, 0), (1, 1), (1, 2), (2, 2))]
    oracle = maximal_subuniverses_exhaustive(M, preimage([(0, 0, 1)] * 2, LE.tuples), 2)
    assert [sorted(s) for s in oracle] == [list(got[0].tuples)]


def test_kleene3_golden_with_provenance():
    M = catalog.structure("KLEENE3")
    found = omega_max_detailed(M, [(0, 0, 1), (0, 1, 1)], LE)
    assert [(r.tuples, src) for r, src in found] == [
        (((0, 0), (2, 2)), [[(0, 1, 1), (0, 0, 1)]]),
        (((0, 0), (0, 1), (1, 1), (2, 1), (2, 2)), [[(0, 1, 1), (0, 1, 1)]]),
        (((0, 0), (1, 0), (1, 1), (1, 2), (2, 2)), [[(0, 0, 1), (0, 0, 1)]]),
        (((0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)), [[(0, 0, 1), (0, 1, 1)]]),
    ]
    by_pair = {}
    for r, src in found:
        for pair in src:
            by_pair.setdefault(tuple(pair), []).append(r.tuples)
    for pair, rels in by_pair.items():
        oracle = maximal_subuniverses_exhaustive(M, preimage(list(pair), LE.tuples), 2)
        assert sorted(tuple(sorted(s)) for s in oracle) == sorted(rels)


@pytest.mark.parametrize("name", ["DM4", "STONE3", "KLEENE3", "OCK2", "OCK3", "E", "N5", "M3"])
def test_omega_max_strategies_agree_and_outputs_are_maximal(name):
    P = catalog.problem(name)
    rels = [LE, Relation.diagonal(2)] if P.N.name == "D" else [Relation.diagonal(2), LE]
    for r in rels:
        a = omega_max(P.M, P.Omega, r, drop_diagonal=False)
        b = omega_max(P.M, P.Omega, r, drop_diagonal=False, strategy="extension")
        assert a == b
        for s in a:
            assert relation_is_subuniverse(P.M, s)
            assert any(is_maximal_in(P.M, s, Relation.of(preimage([w1, w2], r.tuples), 2))
                       for w1 in P.Omega for w2 in P.Omega)


def test_omega_max_independent_of_branch_order():
    M = catalog.structure("KLEENE3")
    with limits(seed_order=0):
        a = omega_max(M, [(0, 0, 1), (0, 1, 1)], LE)
    with limits(seed_order=1):
        b = omega_max(M, [(0, 0, 1), (0, 1, 1)], LE)
    assert a == b


def test_diagonal_drop():
    M = catalog.structure("OCK3")
    w = tuple(catalog.projection(3))
    assert omega_max(M, [w], LE) == []
    assert omega_max(M, [w], LE, drop_diagonal=False) == [Relation.diagonal(8)]


def test_omega_max_bad_strategy():
    with pytest.raises(ValueError):
        omega_max(catalog.structure("D"), [(0, 1)], LE, strategy="greedy")


# ---------------------------------------------------------------- entailment


def test_entails_type_relation_and_diagonal():
    M, Mt = catalog.structure("DM4"), catalog.structure("DM4_EGO")
    assert entails(M, Mt, Relation.of(PREC_DM4))[0]
    for m, mt in [("DM4", "DM4_EGO"), ("N5", "N5_EGO"), ("KLEENE3", "KLEENE3_EGO"), ("D", "TWOPOS")]:
        A = catalog.structure(m)
        assert entails(A, catalog.structure(mt), Relation.diagonal(A.size))[0]


def test_converse_order_entailed_and_confirmed():
    D, T = catalog.structure("D"), catalog.structure("TWOPOS")
    ge = LE.converse()
    assert entails(D, T, ge) == (True, None)
    assert entails_bruteforce(D, T, ge) == (True, None)


def test_impoverished_ego_does_not_entail():
    M = catalog.structure("DM4")
    weak = FiniteStructure(4, {"u": (1, [0, 2, 1, 3])})
    prec = Relation.of(PREC_DM4)
    ok, wit = entails(M, weak, prec)
    assert not ok and tuple(wit["image"]) not in prec
    assert not entails_bruteforce(M, weak, prec)[0]


def test_entails_requires_subuniverse():
    from dualforge.core import DualforgeError

    with pytest.raises(DualforgeError):
        entails(catalog.structure("DM4"), catalog.structure("DM4_EGO"), Relation.of([(0, 1)]))


def test_adding_an_entailed_relation_keeps_morphisms():
    M, Mt = catalog.structure("KLEENE3"), catalog.structure("KLEENE3_EGO")
    extra = Relation.of([(0, 0), (0, 1), (1, 1), (2, 1), (2, 2)]).converse()
    assert entails(M, Mt, extra)[0]
    richer = Mt.with_relations({"extra": extra})
    from dualforge.core import all_substructures, power, substructure

    P = power(M, 2)
    for sub in all_substructures(P)[::5]:
        A = substructure(P, sub)
        assert hom_maps(dual(A, M, Mt).structure, Mt) == hom_maps(dual(A, M, richer).structure, richer)


def test_semilattice_forcing():
    # a binary operation of the alter ego that is a homomorphism M^2 -> M must be the meet
    for name in ("E", "N5", "M3", "C4"):
        M, Mt = catalog.structure(name), catalog.structure(f"{name}_EGO")
        assert Mt.table("meet") == M.table("meet")
        assert check_compatible(M, Mt)[0]


# ---------------------------------------------------------------- order-based decomposition


def test_delta_decomposition_dm4():
    P = catalog.problem("DM4")
    ok, info = derive_delta_entailment(P.M, P.Mt, P.Omega, LE)
    assert ok
    (part,) = info["decomposition"]
    assert [tuple(t) for t in part["t1"]] == list(PREC_DM4)
    assert Relation.of(part["t2"]) == Relation.of(PREC_DM4).converse()


@pytest.mark.parametrize("name,size", [("N5", 5), ("E", 3), ("M3", 5), ("C4", 4)])
def test_delta_decomposition_semilattice_golden(name, size):
    P = catalog.problem(name)
    ok, info = derive_delta_entailment(P.M, P.Mt, P.Omega, LE, 2)
    assert ok
    (part,) = info["decomposition"]
    assert part["s"] == [[a, a] for a in range(size)]


def test_delta_decomposition_rejects_non_order():
    from dualforge.core import DualforgeError

    P = catalog.problem("DM4")
    with pytest.raises(DualforgeError):
        derive_delta_entailment(P.M, P.Mt, P.Omega, Relation.full(2, 2))


# ---------------------------------------------------------------- builders


def test_build_d_for_dm4():
    P = catalog.problem("DM4")
    Mt, rep = build_alter_ego_D(P.M, P.reduct, P.Omega)
    assert [r.tuples for r in Mt.rels.values()] == [PREC_DM4]
    # the coordinate swap is the shift of the period-two shift algebra
    assert list(Mt.ops.values()) == [(1, (0, 2, 1, 3))]
    assert rep.verdict == "pass" and rep.conditions[0]["note"] == "vacuous (discrete topology)"


def test_build_d_for_stone3_and_kleene3():
    Mt, rep = build_alter_ego_D(catalog.structure("STONE3"), catalog.reduct("lattice"), [(0, 0, 1)])
    assert rep.verdict == "pass"
    Mt, rep = build_alter_ego_D(catalog.structure("KLEENE3"), catalog.reduct("lattice"))
    assert rep.verdict == "pass" and len(Mt.rels) == 4


@pytest.mark.parametrize("w", [(0, 0, 1), (0, 1, 1)])
def test_kleene3_single_carrier_fails_separation(w):
    Mt, rep = build_alter_ego_D(catalog.structure("KLEENE3"), catalog.reduct("lattice"), [w])
    assert [c["id"] for c in rep.conditions if c["verdict"] == "fail"] == ["1"]


def test_build_d_rejects_other_signatures():
    from dualforge.core import DualforgeError

    with pytest.raises(DualforgeError):
        build_alter_ego_D(catalog.structure("E"), catalog.reduct("meet"))


@pytest.mark.parametrize("name", ["E", "N5", "M3", "C4"])
def test_build_s_default_is_the_self_alter_ego(name):
    P = catalog.problem(name)
    Mt, rep = build_alter_ego_S(P.M, P.reduct, P.Omega[0])
    assert rep.verdict == "pass"
    assert Mt.same_data(catalog.structure(f"{name}_EGO"))


def test_build_s_with_given_alter_ego():
    P = catalog.problem("E")
    Mt, rep = build_alter_ego_S(P.M, P.reduct, P.Omega[0], Mt=P.Mt, Mt_reduct=P.Mt_reduct)
    assert Mt is P.Mt and rep.verdict == "pass"


# ---------------------------------------------------------------- theorem checkers


def ids_failing(rep: ConditionReport):
    return [c["id"] for c in rep.conditions if c["verdict"] == "fail"]


@pytest.mark.parametrize("theorem", ["pig-simple", "pig-general", "copig-simple", "copig-general",
                                     "strong-I", "two-for-one"])
def test_dm4_theorems_pass(theorem):
    rep = check_theorem(catalog.problem("DM4"), theorem)
    assert rep.verdict == "pass", rep.to_json()


def test_dm4_strong_shape_mismatch():
    P = catalog.problem("DM4")
    assert strong_part(P) == "I"
    assert ids_failing(check_theorem(P, "strong-II")) == ["1"]


@pytest.mark.parametrize("name", ["E", "N5", "M3", "C4"])
def test_semilattice_theorems(name):
    P = catalog.problem(name)
    for th in ("pig-simple", "copig-simple", "strong-III", "two-for-one"):
        assert check_theorem(P, th).verdict == "pass"


def test_sq_variant():
    rep = check_theorem(catalog.problem("DM4"), "pig-simple", sq="le")
    assert rep.conditions[-1]["id"] == "3.ii'" and rep.verdict == "pass"
    with pytest.raises(MissingField):
        check_theorem(catalog.problem("DM4"), "pig-simple", sq="nope")


def test_missing_fields():
    P = catalog.problem("KLEENE3")
    with pytest.raises(MissingField, match="exactly one carrier"):
        check_theorem(P, "pig-simple")
    bare = dataclasses.replace(catalog.problem("STONE3"), Mt=None, Mt_reduct=None)
    with pytest.raises(MissingField, match="alter ego"):
        check_theorem(bare, "pig-simple")
    no_red = dataclasses.replace(catalog.problem("STONE3"), Mt_reduct=None)
    with pytest.raises(MissingField):
        check_theorem(no_red, "strong-I")


def test_unknown_theorem():
    from dualforge.core import DualforgeError

    with pytest.raises(DualforgeError):
        check_theorem(catalog.problem("DM4"), "strong-IV")


def test_copig_gate_rejects_unnamed_constant():
    S = catalog.structure("SEMI")
    k = FiniteStructure(2, {"meet": (2, [0, 0, 0, 1]), "k": (1, [1, 1])}, name="K")
    from dualforge.core import keep_reduct

    P = PiggybackProblem(S, keep_reduct(S.sig), S, catalog.structure("SEMI01"), [(0, 1)], k,
                         keep_reduct(S.sig))
    rep = check_theorem(P, "copig-simple")
    assert rep.conditions[0]["id"] == "named-constants" and rep.conditions[0]["verdict"] == "fail"


def test_problem_validation():
    from dualforge.core import DualforgeError

    with pytest.raises(DualforgeError):
        dataclasses.replace(catalog.problem("DM4"), Omega=[(0, 1, 1, 1)])


def test_report_json_shape():
    rep = check_theorem(catalog.problem("STONE3"), "strong-I").to_json()
    assert set(rep) == {"theorem", "conditions", "verdict"}
    assert all(set(c) <= {"id", "verdict", "witness", "note"} for c in rep["conditions"])
    r = ConditionReport("x")
    r.add("a", True)
    r.add("b", None)
    assert r.verdict == "pass"
    r.add("c", False, {"why": 1})
    assert r.verdict == "fail"
