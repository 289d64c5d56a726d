"""Majorana monomials and fermion-to-qubit mappings.

``MajoranaMonomial.support`` is a 2n-bit mask where bit ``a-1`` marks ``c_a``
(modes are 1-indexed in text, as in ``G[1,2]``). The monomial denotes the
Hermitian operator ``i**(d(d-1)/2) c_{a_1} ... c_{a_d}`` with ``a_1 < ... < a_d``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from math import comb

from .pauli import PauliOp, commutes, multiply, popcount

TERNARY = "ternary_tree"
JORDAN_WIGNER = "jordan_wigner"


@dataclass(frozen=True, order=True)
class MajoranaMonomial:
    n_modes: int
    support: int
    coefficient: float = field(default=1.0, compare=False)

    def __post_init__(self):
        if not 0 <= self.support < (1 << (2 * self.n_modes)):
            raise ValueError("support out of range for the mode count")

    @classmethod
    def from_indices(cls, n_modes: int, indices, coefficient: float = 1.0):
        mask = 0
        for a in indices:
            if not 1 <= a <= 2 * n_modes:
                raise ValueError(f"Majorana index {a} outside 1..{2 * n_modes}")
            if mask >> (a - 1) & 1:
                raise ValueError(f"repeated Majorana index {a}")
            mask |= 1 << (a - 1)
        return cls(n_modes, mask, coefficient)

    @classmethod
    def from_string(cls, text: str, n_modes: int) -> MajoranaMonomial:
        m = re.fullmatch(r"\s*G\[([0-9,\s]*)\]\s*(?:\*\s*(\S+))?\s*", text)
        if m is None:
            raise ValueError(f"cannot parse monomial {text!r}")
        body = m.group(1).strip()
        idx = [int(t) for t in body.split(",")] if body else []
        coef = float(m.group(2)) if m.group(2) is not None else 1.0
        return cls.from_indices(n_modes, idx, coef)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(a + 1 for a in range(2 * self.n_modes) if self.support >> a & 1)

    @property
    def degree(self) -> int:
        return popcount(self.support)

    def __str__(self) -> str:
        body = "G[" + ",".join(map(str, self.indices)) + "]"
        if self.coefficient != 1.0:
            body += f"*{self.coefficient!r}"
        return body


def hermitian_phase(degree: int) -> int:
    """Z4 exponent of the factor making an ordered Majorana product Hermitian."""
    return (degree * (degree - 1) // 2) % 4


def ordered_product_sign(x: int, y: int) -> int:
    """Sign s with C(x) C(y) = s C(x ^ y) for ordered Majorana products C."""
    swaps = 0
    rest = y
    while rest:
        low = rest & -rest
        b = low.bit_length() - 1
        swaps += popcount(x >> (b + 1))
        rest ^= low
    return -1 if swaps & 1 else 1


def monomial_commutes(x: int, y: int) -> bool:
    return (popcount(x) * popcount(y) + popcount(x & y)) % 2 == 0


@dataclass(frozen=True)
class FermionMapping:
    n_modes: int
    majorana_paulis: tuple[PauliOp, ...]
    mapping_kind: str

    def __post_init__(self):
        ops = self.majorana_paulis
        if len(ops) != 2 * self.n_modes:
            raise ValueError("need exactly 2n Majorana images")
        for i, p in enumerate(ops):
            if not p.is_hermitian:
                raise ValueError(f"Majorana image {p} is not Hermitian")
            for q in ops[i + 1:]:
                if commutes(p, q):
                    raise ValueError(f"Majorana images {p} and {q} commute")

    @property
    def n_qubits(self) -> int:
        return self.majorana_paulis[0].n

    def majorana(self, a: int) -> PauliOp:
        return self.majorana_paulis[a - 1]


def jordan_wigner_mapping(n_modes: int) -> FermionMapping:
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    ops = []
    for j in range(n_modes):
        prefix = "Z" * j
        suffix = "I" * (n_modes - j - 1)
        ops.append(PauliOp.from_string(prefix + "X" + suffix))
        ops.append(PauliOp.from_string(prefix + "Y" + suffix))
    return FermionMapping(n_modes, tuple(ops), JORDAN_WIGNER)


def ternary_depth(n_modes: int) -> int:
    depth = 0
    while 3**depth < 2 * n_modes + 1:
        depth += 1
    return depth


def ternary_tree_mapping(n_modes: int) -> FermionMapping:
    """Root-to-leaf Pauli strings of the smallest complete ternary tree.

    Internal nodes are qubits numbered breadth-first from the root; the edges
    to a node's children carry X, Y, Z in that order. Leaf paths are taken in
    lexicographic order and the surplus trailing paths are dropped.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    depth = ternary_depth(n_modes)
    n_qubits = (3**depth - 1) // 2
    ops = []
    for path in itertools.product("XYZ", repeat=depth):
        node = 0
        letters = ["I"] * n_qubits
        for letter in path:
            letters[node] = letter
            node = 3 * node + 1 + "XYZ".index(letter)
        ops.append(PauliOp.from_string("".join(letters)))
        if len(ops) == 2 * n_modes:
            break
    return FermionMapping(n_modes, tuple(ops), TERNARY)


def make_mapping(kind: str, n_modes: int) -> FermionMapping:
    kind = {"ternary": TERNARY, "jw": JORDAN_WIGNER}.get(kind, kind)
    if kind == TERNARY:
        return ternary_tree_mapping(n_modes)
    if kind == JORDAN_WIGNER:
        return jordan_wigner_mapping(n_modes)
    raise ValueError(f"unknown mapping {kind!r}")


def support_to_pauli(support: int, mapping: FermionMapping) -> PauliOp:
    """Hermitian Pauli image of the bare monomial with the given support."""
    result = PauliOp.identity(mapping.n_qubits)
    rest = support
    degree = 0
    while rest:
        low = rest & -rest
        result = multiply(result, mapping.majorana_paulis[low.bit_length() - 1])
        rest ^= low
        degree += 1
    out = PauliOp(result.n, result.x, result.z, result.phase + hermitian_phase(degree))
    assert out.is_hermitian
    return out


def monomial_to_pauli(m: MajoranaMonomial, mapping: FermionMapping) -> PauliOp:
    """Image of the bare monomial; the coefficient is not applied."""
    if m.n_modes != mapping.n_modes:
        raise ValueError("monomial and mapping disagree on the mode count")
    return support_to_pauli(m.support, mapping)


def enumerate_kbody(n_modes: int, k: int) -> list[MajoranaMonomial]:
    if not 1 <= 2 * k <= 2 * n_modes:
        raise ValueError(f"need 1 <= 2k <= 2n, got k={k}, n={n_modes}")
    return enumerate_degree(n_modes, 2 * k)


def enumerate_degree(n_modes: int, degree: int) -> list[MajoranaMonomial]:
    out = [
        MajoranaMonomial.from_indices(n_modes, idx)
        for idx in itertools.combinations(range(1, 2 * n_modes + 1), degree)
    ]
    assert len(out) == comb(2 * n_modes, degree)
    return out
