from dualforge import catalog
from dualforge.clone import clo1, clo1_maps, compose_family, endomorphisms, named_constants, render_clone
from dualforge.core import FiniteStructure, eval_term


def test_clo1_terms_evaluate_to_their_maps():
    for name in ("DM4", "KLEENE3", "N5", "E_EGO"):
        M = catalog.structure(name)
        for m, t in clo1(M):
            assert tuple(eval_term(M, t, [a]) for a in range(M.size)) == m


def test_clo1_of_n5_contains_u_and_u_squared():
    maps = clo1_maps(catalog.structure("N5"))
    assert (0, 1, 2, 3, 4) in maps
    assert (0, 2, 1, 0, 4) in maps
    assert (0, 1, 2, 0, 4) in maps


def naive_clo1(M):
    import itertools

    from oracles import apply

    found = {tuple(range(M.size))}
    while True:
        new = set()
        for op, (arity, _) in M.ops.items():
            for args in itertools.product(found, repeat=arity):
                new.add(tuple(apply(M, op, [f[x] for f in args]) if arity else apply(M, op, [])
                              for x in range(M.size)))
        if new <= found:
            return sorted(found)
        found |= new


def test_clo1_matches_naive_fixpoint():
    for name in ("DM4", "STONE3", "KLEENE3", "N5", "M3", "C4", "E", "OCK3"):
        M = catalog.structure(name)
        assert clo1_maps(M) == naive_clo1(M)


def test_clo1_is_closed_under_composition():
    maps = set(clo1_maps(catalog.structure("M3")))
    for f in maps:
        for g in maps:
            assert tuple(f[x] for x in g) in maps


def test_compose_family():
    assert compose_family([(0, 0, 1, 1)], [(0, 1, 2, 3), (0, 2, 1, 3)]) == [(0, 0, 1, 1), (0, 1, 0, 1)]


def test_endomorphisms_of_dm4_are_identity_and_swap():
    assert endomorphisms(catalog.structure("DM4")) == [(0, 1, 2, 3), (0, 2, 1, 3)]


def test_named_constants():
    assert named_constants(catalog.structure("STILDE"))[0]
    assert named_constants(catalog.structure("E_EGO"))[0]
    k = FiniteStructure(2, {"meet": (2, [0, 0, 0, 1]), "k": (1, [1, 1])})
    ok, info = named_constants(k)
    assert not ok and info["witness"] == {"unnamed_constant": 1}


def test_render_clone():
    out = render_clone(catalog.structure("KLEENE3"))
    assert {"map": [2, 1, 0], "term": "(neg x0)"} in out
