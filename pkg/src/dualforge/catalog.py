"""Built-in structures, reducts and piggyback problems.

Semilattice-based algebras are generated from their origin as sets of 0/1
sequences: meet is pointwise and ``u`` is the left shift.  Every element
here is eventually periodic with short pre-period and period, so comparing
sequences on a fixed window identifies them exactly.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Callable, Sequence

from .core import (
    DualforgeError,
    FiniteStructure,
    ReductSpec,
    Relation,
    Signature,
    keep_reduct,
)

_WINDOW = 32


class UnknownEntry(DualforgeError):
    pass


# ---------------------------------------------------------------- bases

LATTICE = Signature.of({"join": 2, "meet": 2, "bot": 0, "top": 0})
ORDER = Signature.of({}, {"le": 2})


def two_lattice() -> FiniteStructure:
    return FiniteStructure(2, {"join": (2, [0, 1, 1, 1]), "meet": (2, [0, 0, 0, 1]),
                               "bot": (0, [0]), "top": (0, [1])}, name="D")


def two_chain() -> FiniteStructure:
    return FiniteStructure(2, {}, {"le": [(0, 0), (0, 1), (1, 1)]}, name="TWOPOS")


def semilattice(nullaries: Sequence[str] = ("top",), name: str = "S") -> FiniteStructure:
    ops = {"meet": (2, [0, 0, 0, 1])}
    if "bot" in nullaries:
        ops["bot"] = (0, [0])
    if "top" in nullaries:
        ops["top"] = (0, [1])
    return FiniteStructure(2, ops, name=name)


# ---------------------------------------------------------------- lattice-based algebras


def ockham(p: int) -> FiniteStructure:
    """Period-``p`` Ockham algebra on ``{0,1}^p``; index bit ``p-1-i`` holds ``a(i)``."""
    n = 2**p

    def bits(x):
        return [(x >> (p - 1 - i)) & 1 for i in range(p)]

    def num(bs):
        return sum(b << (p - 1 - i) for i, b in enumerate(bs))

    neg = [num([1 - bits(x)[(i + 1) % p] for i in range(p)]) for x in range(n)]
    join = [a | b for a in range(n) for b in range(n)]
    meet = [a & b for a in range(n) for b in range(n)]
    labels = ["".join(map(str, bits(x))) for x in range(n)]
    return FiniteStructure(n, {"join": (2, join), "meet": (2, meet), "neg": (1, neg),
                               "bot": (0, [0]), "top": (0, [n - 1])},
                           name=f"OCK{p}", labels=labels)


def ockham_shift(p: int) -> list[int]:
    n = 2**p
    out = []
    for x in range(n):
        bs = [(x >> (p - 1 - i)) & 1 for i in range(p)]
        sh = [bs[(i + 1) % p] for i in range(p)]
        out.append(sum(b << (p - 1 - i) for i, b in enumerate(sh)))
    return out


def alternating_order(p: int) -> Relation:
    """``a <= b`` on even positions and ``a >= b`` on odd ones, positions taken mod ``p``."""
    n = 2**p

    def bit(x, i):
        return (x >> (p - 1 - i % p)) & 1

    pairs = []
    for a, b in itertools.product(range(n), repeat=2):
        ok = True
        for k in range(2 * p):
            if k % 2 == 0 and bit(a, k) > bit(b, k):
                ok = False
            if k % 2 == 1 and bit(a, k) < bit(b, k):
                ok = False
        if ok:
            pairs.append((a, b))
    return Relation(2, tuple(pairs))


def ockham_ego(p: int) -> FiniteStructure:
    return FiniteStructure(2**p, {"u": (1, ockham_shift(p))}, {"prec": alternating_order(p)},
                           name=f"OCK{p}_EGO", labels=ockham(p).labels)


def chain3(unary: Sequence[int], uname: str, name: str) -> FiniteStructure:
    join = [max(a, b) for a in range(3) for b in range(3)]
    meet = [min(a, b) for a in range(3) for b in range(3)]
    return FiniteStructure(3, {"join": (2, join), "meet": (2, meet), uname: (1, [*unary]),
                               "bot": (0, [0]), "top": (0, [2])}, name=name, labels=["0", "e", "1"])


def projection(p: int, i: int = 0) -> list[int]:
    return [(x >> (p - 1 - i)) & 1 for x in range(2**p)]


# ---------------------------------------------------------------- semilattice-based algebras

Seq = Callable[[int], int]


def sequence_algebra(elements: Sequence[tuple[str, Seq]], nullaries: Sequence[str] = (),
                     name: str = "") -> FiniteStructure:
    """Subalgebra of ``<{0,1}^N0; meet, u>`` spanned by the given sequences."""
    windows = [tuple(f(i) for i in range(_WINDOW)) for _, f in elements]
    index = {w: i for i, w in enumerate(windows)}
    if len(index) != len(windows):
        raise DualforgeError("sequence elements are not distinct")
    n = len(windows)
    # shifted windows lose their last entry; compare on the common prefix
    short = {w[: _WINDOW - 1]: i for w, i in index.items()}
    meet = []
    for a, b in itertools.product(range(n), repeat=2):
        meet.append(index[tuple(x & y for x, y in zip(windows[a], windows[b]))])
    u = [short[tuple(elements[a][1](i + 1) for i in range(_WINDOW - 1))] for a in range(n)]
    ops = {"meet": (2, meet), "u": (1, u)}
    zero = index.get((0,) * _WINDOW)
    one = index.get((1,) * _WINDOW)
    if "bot" in nullaries:
        ops["bot"] = (0, [zero])
    if "top" in nullaries:
        ops["top"] = (0, [one])
    return FiniteStructure(n, ops, name=name, labels=[lab for lab, _ in elements])


def _zero(i):
    return 0


def _one(i):
    return 1


def chain_elements(n: int) -> list[tuple[str, Seq]]:
    # a_k(l) = 1 iff l >= k
    mids = [(f"a{k}", (lambda k: lambda i: int(i >= k))(k)) for k in range(n - 2, 0, -1)]
    return [("0", _zero)] + mids + [("1", _one)]


def m_elements(n: int) -> list[tuple[str, Seq]]:
    # b_k = u^k(b) with b(l) = 1 iff n | l
    atoms = [(f"b{k}", (lambda k: lambda i: int((i + k) % n == 0))(k)) for k in range(n)]
    return [("0", _zero)] + atoms + [("1", _one)]


def n5_elements() -> list[tuple[str, Seq]]:
    return [("0", _zero), ("a", lambda i: i % 2), ("b", lambda i: 1 - i % 2),
            ("c", lambda i: int(i == 0)), ("1", _one)]


def e_elements() -> list[tuple[str, Seq]]:
    return chain_elements(3)


def pi0(elements: Sequence[tuple[str, Seq]]) -> list[int]:
    """First coordinate of each generating sequence."""
    return [f(0) for _, f in elements]


# ---------------------------------------------------------------- reducts

REDUCTS: dict[str, Callable[[], ReductSpec]] = {
    "lattice": lambda: keep_reduct(LATTICE),
    "meet": lambda: keep_reduct(Signature.of({"meet": 2})),
    "meet_top": lambda: keep_reduct(Signature.of({"meet": 2, "top": 0})),
    "meet_bounds": lambda: keep_reduct(Signature.of({"meet": 2, "bot": 0, "top": 0})),
    "prec": lambda: ReductSpec(ORDER, {}, {"le": (("rel", "prec", (0, 1)),)}),
}


# ---------------------------------------------------------------- problems


@lru_cache(maxsize=None)
def _structures() -> dict[str, Callable[[], FiniteStructure]]:
    table: dict[str, Callable[[], FiniteStructure]] = {
        "D": two_lattice,
        "TWOPOS": two_chain,
        "S": lambda: semilattice(("top",), "S"),
        "STILDE": lambda: semilattice(("top",), "STILDE"),
        "SEMI": lambda: semilattice((), "SEMI"),
        "SEMI01": lambda: semilattice(("bot", "top"), "SEMI01"),
        "DM4": lambda: ockham(2).renamed("DM4"),
        "DM4_EGO": lambda: ockham_ego(2).renamed("DM4_EGO"),
        "STONE3": lambda: chain3([2, 0, 0], "star", "STONE3"),
        "KLEENE3": lambda: chain3([2, 1, 0], "neg", "KLEENE3"),
    }
    for key in ("STONE3", "KLEENE3"):
        table[f"{key}_EGO"] = (lambda k: lambda: _built_ego(k))(key)
    for p in (1, 2, 3):
        table[f"OCK{p}"] = (lambda p: lambda: ockham(p))(p)
        table[f"OCK{p}_EGO"] = (lambda p: lambda: ockham_ego(p))(p)
    for key, elems in _semilattice_sources().items():
        table[key] = (lambda e, k: lambda: sequence_algebra(e, (), k))(elems, key)
        table[f"{key}_EGO"] = (lambda e, k: lambda: sequence_algebra(e, ("bot", "top"), f"{k}_EGO"))(elems, key)
        table[f"{key}_1"] = (lambda e, k: lambda: sequence_algebra(e, ("top",), f"{k}_1"))(elems, key)
    return table


def _built_ego(key: str) -> FiniteStructure:
    from .piggyback import build_alter_ego_D

    spec = _problems()[key]
    Mt, _ = build_alter_ego_D(structure(spec["M"]), reduct(spec["reduct"]), spec["omega"], name=f"{key}_EGO")
    return Mt


def _semilattice_sources() -> dict[str, list[tuple[str, Seq]]]:
    return {"E": e_elements(), "C4": chain_elements(4), "M3": m_elements(3),
            "N5": n5_elements()}


def _problems() -> dict[str, dict]:
    out = {
        "DM4": {"M": "DM4", "Mt": "DM4_EGO", "reduct": "lattice", "Mt_reduct": "prec",
                "N": "D", "Nt": "TWOPOS", "omega": [[0, 0, 1, 1]]},
        "STONE3": {"M": "STONE3", "Mt": "STONE3_EGO", "reduct": "lattice", "Mt_reduct": "order",
                   "N": "D", "Nt": "TWOPOS", "omega": [[0, 0, 1]]},
        "KLEENE3": {"M": "KLEENE3", "Mt": "KLEENE3_EGO", "reduct": "lattice", "Mt_reduct": "order",
                    "N": "D", "Nt": "TWOPOS", "omega": [[0, 0, 1], [0, 1, 1]]},
    }
    for p in (1, 2, 3):
        out[f"OCK{p}"] = {"M": f"OCK{p}", "Mt": f"OCK{p}_EGO", "reduct": "lattice",
                          "Mt_reduct": "prec", "N": "D", "Nt": "TWOPOS",
                          "omega": [projection(p)]}
    for key, elems in _semilattice_sources().items():
        w = pi0(elems)
        out[key] = {"M": key, "Mt": f"{key}_EGO", "reduct": "meet", "Mt_reduct": "meet_bounds",
                    "N": "SEMI", "Nt": "SEMI01", "omega": [w]}
        out[f"{key}_1"] = {"M": f"{key}_1", "Mt": f"{key}_1", "reduct": "meet_top",
                           "Mt_reduct": "meet_top", "N": "S", "Nt": "STILDE", "omega": [w]}
    return out


_BASES = {
    LATTICE: ("D", "TWOPOS"),
    ORDER: ("TWOPOS", "D"),
    Signature.of({"meet": 2, "top": 0}): ("S", "STILDE"),
    Signature.of({"meet": 2}): ("SEMI", "SEMI01"),
    Signature.of({"meet": 2, "bot": 0, "top": 0}): ("SEMI01", "SEMI"),
}


def infer_base(sig: Signature) -> tuple[FiniteStructure, FiniteStructure]:
    """Base structure and its alter ego for a reduct target signature."""
    try:
        n, nt = _BASES[sig]
    except KeyError:
        raise UnknownEntry(f"no built-in base for signature {sig.to_json()}") from None
    return structure(n), structure(nt)


def structure(name: str) -> FiniteStructure:
    try:
        return _structures()[name]()
    except KeyError:
        raise UnknownEntry(f"unknown catalog structure {name!r}") from None


def reduct(name: str) -> ReductSpec:
    try:
        return REDUCTS[name]()
    except KeyError:
        raise UnknownEntry(f"unknown catalog reduct {name!r}") from None


def problem(name: str):
    """A :class:`~dualforge.piggyback.PiggybackProblem` with every field resolved."""
    from .piggyback import PiggybackProblem

    try:
        spec = _problems()[name]
    except KeyError:
        raise UnknownEntry(f"unknown catalog problem {name!r}") from None
    return PiggybackProblem(
        M=structure(spec["M"]),
        reduct=reduct(spec["reduct"]),
        N=structure(spec["N"]),
        Nt=structure(spec["Nt"]),
        Omega=[tuple(w) for w in spec["omega"]],
        Mt=structure(spec["Mt"]) if "Mt" in spec else None,
        Mt_reduct=_ego_reduct(spec),
    )


def _ego_reduct(spec: dict) -> ReductSpec | None:
    if "Mt_reduct" not in spec:
        return None
    if spec["Mt_reduct"] == "order":
        from .piggyback import order_reduct

        return order_reduct(structure(spec["Mt"]))
    return reduct(spec["Mt_reduct"])


def get(name: str):
    """Look a name up among structures, then reducts, then problems."""
    if name in _structures():
        return structure(name)
    if name in REDUCTS:
        return reduct(name)
    return problem(name)


def list_names() -> dict[str, list[str]]:
    return {"structures": sorted(_structures()), "reducts": sorted(REDUCTS),
            "problems": sorted(_problems())}


list = list_names  # noqa: A001  catalog.list() mirrors the CLI verb
