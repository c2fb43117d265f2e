"""Logical unitary representations and a small word language for them.

A word is written as space separated factors, each optionally raised to an
integer power, with parentheses for grouping and a leading ``-`` for an
overall sign, e.g. ``"Phi F^-1"``, ``"-F"``, ``"(U S)^-1"``, ``"B^2 A^3"``.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np


class WordError(ValueError):
    """Raised for malformed words or unknown symbols."""


def qudit_pauli(d: int) -> dict[str, np.ndarray]:
    """Shift ``X|j> = |j+1>`` and clock ``Z|j> = w^j |j>`` with w = e^{2 pi i/d}."""
    w = cmath.exp(2j * math.pi / d)
    X = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    Z = np.diag([w**j for j in range(d)])
    Omega = X @ Z @ np.linalg.inv(X) @ np.linalg.inv(Z)
    return {"X": X, "Z": Z, "Omega": Omega, "I": np.eye(d, dtype=complex)}


def clifford_generators() -> dict[str, np.ndarray]:
    e = cmath.exp(1j * math.pi / 4)
    S = np.diag([e, e.conjugate()])
    U = np.array([[e, e], [-e.conjugate(), e.conjugate()]]) / math.sqrt(2)
    return {"S": S, "U": U, "I": np.eye(2, dtype=complex)}


def binary_icosahedral_generators() -> dict[str, np.ndarray]:
    phi = (1 + math.sqrt(5)) / 2
    F = cmath.exp(-1j * math.pi / 4) / math.sqrt(2) * np.array([[1, -1j], [1, 1j]])
    Phi = 0.5 * np.array([[phi + 1j / phi, 1], [-1, phi - 1j / phi]])
    return {"F": F, "Phi": Phi, "I": np.eye(2, dtype=complex)}


FAMILIES = {
    "pauli": lambda d: qudit_pauli(d),
    "clifford": lambda d: clifford_generators(),
    "binary-icosahedral": lambda d: binary_icosahedral_generators(),
}

_TOKEN = re.compile(r"\s*(?:(\()|(\))|(\^\s*-?\d+)|(-)|([A-Za-z_][A-Za-z_0-9]*))")


def parse_word(text: str) -> list:
    """Parse a word into a nested list of ``(symbol | sublist, power)`` factors.

    The leading sign is encoded as the factor ``("-", 1)``.
    """
    pos = 0
    stack: list[list] = [[]]
    text = text.strip()
    if text in ("", "1", "e"):
        return []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise WordError(f"cannot parse word {text!r} at position {pos}")
        pos = m.end()
        lp, rp, power, minus, name = m.groups()
        if lp:
            stack.append([])
        elif rp:
            if len(stack) == 1:
                raise WordError(f"unbalanced parenthesis in {text!r}")
            inner = stack.pop()
            stack[-1].append((inner, 1))
        elif power:
            if not stack[-1]:
                raise WordError(f"dangling exponent in {text!r}")
            base, k = stack[-1].pop()
            stack[-1].append((base, k * int(power[1:].replace(" ", ""))))
        elif minus:
            stack[-1].append(("-", 1))
        else:
            stack[-1].append((name, 1))
    if len(stack) != 1:
        raise WordError(f"unbalanced parenthesis in {text!r}")
    return stack[0]


def evaluate_word(word, symbols: dict[str, np.ndarray], dim: int) -> np.ndarray:
    """Ordered product of the factors of a parsed word."""
    out = np.eye(dim, dtype=complex)
    for base, k in word:
        if base == "-":
            out = -out
            continue
        if isinstance(base, list):
            m = evaluate_word(base, symbols, dim)
        else:
            if base not in symbols:
                raise WordError(f"unknown symbol {base!r}; known: {sorted(symbols)}")
            m = symbols[base]
        out = out @ np.linalg.matrix_power(m, k) if k >= 0 else out @ np.linalg.matrix_power(np.linalg.inv(m), -k)
    return out


def flatten_word(word, generators: dict[str, tuple]) -> tuple[str, ...]:
    """Expand a parsed word over the letters ``A a B b`` (lower case = inverse).

    ``generators`` maps each symbol to its expansion as a letter tuple.
    """
    out: list[str] = []
    for base, k in word:
        if base == "-":
            raise WordError("signs are not allowed in relation words")
        piece = flatten_word(base, generators) if isinstance(base, list) else generators.get(base)
        if piece is None:
            raise WordError(f"unknown generator {base!r}")
        if k < 0:
            piece = invert_letters(piece)
        out.extend(piece * abs(k))
    return tuple(out)


def invert_letters(letters) -> tuple[str, ...]:
    return tuple(c.swapcase() for c in reversed(letters))


def is_unitary(M: np.ndarray, tol: float = 1e-12) -> bool:
    M = np.asarray(M)
    return bool(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0]))) < tol)


@dataclass
class LogicalRep:
    """Logical images of the three vertex rotations."""

    dim: int
    family: str
    identifications: dict[str, str]
    explicit: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.constants = FAMILIES[self.family](self.dim) if self.family in FAMILIES else {}
        self.constants = {**self.constants, **{k: np.asarray(v, dtype=complex) for k, v in self.explicit.items()}}
        self.gens = {}
        for g in ("A", "B", "C"):
            expr = self.identifications[g]
            self.gens[g] = evaluate_word(parse_word(expr), self.constants, self.dim)
            if not is_unitary(self.gens[g]):
                raise WordError(f"logical image of r_{g} is not unitary")

    def letter_matrix(self, letter: str) -> np.ndarray:
        M = self.gens[letter.upper()]
        return M if letter.isupper() else M.conj().T


def matrix_key(M: np.ndarray, grid: float = 1e-6) -> tuple:
    """Hashable key for a unitary; the small offset keeps exact grid values
    such as 0.5 away from rounding boundaries."""
    v = np.asarray(M).ravel()
    return tuple(np.round(np.concatenate([v.real, v.imag]) / grid + 0.1234567).astype(np.int64))


def matrix_closure(gens, limit: int = 100000) -> list[np.ndarray]:
    """All products of the given unitaries (the finite group they generate)."""
    gens = [np.asarray(g, dtype=complex) for g in gens]
    d = gens[0].shape[0]
    seen = {matrix_key(np.eye(d)): np.eye(d, dtype=complex)}
    frontier = [np.eye(d, dtype=complex)]
    while frontier:
        nxt = []
        for M in frontier:
            for g in gens:
                P = M @ g
                k = matrix_key(P)
                if k not in seen:
                    seen[k] = P
                    nxt.append(P)
        if len(seen) > limit:
            raise WordError(f"closure exceeded {limit} elements; group is not finite or too large")
        frontier = nxt
    return list(seen.values())
