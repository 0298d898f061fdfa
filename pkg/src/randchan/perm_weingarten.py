"""Permutations, cycle statistics and the unitary Weingarten function.

Permutations are 1-indexed: ``Permutation((2, 1, 3))`` sends 1 -> 2, 2 -> 1
and fixes 3.  Composition follows the usual right-to-left rule,
``(s * t)(i) == s(t(i))``.

Exact Weingarten values are rationals obtained by inverting the
``|S_p| x |S_p|`` Gram matrix ``n^{#(s^-1 t)}`` (orders up to 4) or the
equivalent linear system over conjugacy classes (orders 5 and 6).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Dict, Iterator, List, Sequence, Tuple

DEFAULT_ORDER_CAP = 4
MAX_ORDER = 6


class OrderTooLargeError(ValueError):
    """Requested Weingarten order exceeds the configured cap."""


class SingularGramError(ValueError):
    """Dimension smaller than the order; the Gram matrix may be singular."""


@dataclass(frozen=True)
class CycleType:
    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(sorted((int(x) for x in self.parts), reverse=True))
        if any(x < 1 for x in parts):
            raise ValueError("cycle type parts must be positive")
        object.__setattr__(self, "parts", parts)

    @property
    def degree(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def representative(self) -> "Permutation":
        """The permutation with consecutive cycles ``(1..l1)(l1+1..)...``."""
        images = []
        start = 1
        for ell in self.parts:
            block = list(range(start, start + ell))
            images.extend(block[1:] + block[:1])
            start += ell
        return Permutation(tuple(images))


@dataclass(frozen=True)
class Permutation:
    images: Tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"not a permutation of 1..{len(images)}: {images}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, p: int) -> "Permutation":
        return cls(tuple(range(1, p + 1)))

    @classmethod
    def from_cycles(cls, p: int, *cycles: Sequence[int]) -> "Permutation":
        """Build from disjoint cycles, e.g. ``from_cycles(4, (1, 2), (3, 4))``."""
        images = list(range(1, p + 1))
        seen = set()
        for cyc in cycles:
            for i, a in enumerate(cyc):
                if a in seen or not 1 <= a <= p:
                    raise ValueError(f"invalid cycle {cyc}")
                seen.add(a)
                images[a - 1] = cyc[(i + 1) % len(cyc)]
        return cls(tuple(images))

    @classmethod
    def transposition(cls, p: int, i: int, j: int) -> "Permutation":
        return cls.from_cycles(p, (i, j))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return Permutation(tuple(self.images[j - 1] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.degree
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    def cycles(self) -> List[Tuple[int, ...]]:
        out = []
        seen = [False] * self.degree
        for start in range(1, self.degree + 1):
            if seen[start - 1]:
                continue
            cyc = []
            a = start
            while not seen[a - 1]:
                seen[a - 1] = True
                cyc.append(a)
                a = self.images[a - 1]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> CycleType:
        return CycleType(tuple(len(c) for c in self.cycles()))

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images, start=1))

    def __repr__(self) -> str:
        nontrivial = [c for c in self.cycles() if len(c) > 1]
        body = "".join("(" + " ".join(map(str, c)) + ")" for c in nontrivial) or "()"
        return f"Permutation<{self.degree}>{body}"


def all_permutations(p: int) -> Iterator[Permutation]:
    for images in itertools.permutations(range(1, p + 1)):
        yield Permutation(images)


def partitions(p: int) -> List[CycleType]:
    """All cycle types of S_p, in reverse lexicographic order."""

    def gen(rest, largest):
        if rest == 0:
            yield ()
            return
        for part in range(min(rest, largest), 0, -1):
            for tail in gen(rest - part, part):
                yield (part,) + tail

    return [CycleType(parts) for parts in gen(p, p)]


def cycle_count(sigma: Permutation) -> int:
    """Number of cycles of ``sigma``, fixed points included."""
    return len(sigma.cycles())


def length(sigma: Permutation) -> int:
    """Minimal number of transpositions whose product is ``sigma``."""
    return sigma.degree - cycle_count(sigma)


def catalan(m: int) -> int:
    return comb(2 * m, m) // (m + 1)


def moebius(sigma: Permutation) -> int:
    """Moebius function: product of ``(-1)^(l-1) Cat_{l-1}`` over cycle lengths ``l``."""
    out = 1
    for ell in sigma.cycle_type().parts:
        out *= (-1) ** (ell - 1) * catalan(ell - 1)
    return out


def weingarten_asymptotic(n: float, sigma: Permutation) -> float:
    """Leading large-``n`` term ``n^(-p-|sigma|) * Moeb(sigma)``."""
    if n <= 0:
        raise ValueError("n must be positive")
    return moebius(sigma) * float(n) ** (-(sigma.degree + length(sigma)))


# ---------------------------------------------------------------------------
# exact tables


@dataclass(frozen=True)
class WeingartenTable:
    order: int
    dimension: int
    entries: Dict[CycleType, Fraction] = field(repr=False)

    def __call__(self, sigma: Permutation) -> Fraction:
        if sigma.degree != self.order:
            raise ValueError(f"expected a permutation of degree {self.order}")
        return self.entries[sigma.cycle_type()]

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "dimension": self.dimension,
            "entries": [
                {
                    "cycle_type": list(ct.parts),
                    "numerator": val.numerator,
                    "denominator": val.denominator,
                }
                for ct, val in self.entries.items()
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "WeingartenTable":
        entries = {
            CycleType(tuple(e["cycle_type"])): Fraction(e["numerator"], e["denominator"])
            for e in data["entries"]
        }
        return cls(int(data["order"]), int(data["dimension"]), entries)


def _solve_exact(matrix: List[List[int]], rhs: List[int]) -> List[Fraction]:
    """Gauss-Jordan elimination over the rationals."""
    size = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularGramError("Gram matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        prow = [x * inv for x in aug[col]]
        aug[col] = prow
        for r in range(size):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                row = aug[r]
                aug[r] = [a - factor * b for a, b in zip(row, prow)]
    return [row[-1] for row in aug]


@lru_cache(maxsize=None)
def _perm_tuples(p: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(p)))


def _cycles0(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    count = 0
    for s in range(len(perm)):
        if not seen[s]:
            count += 1
            a = s
            while not seen[a]:
                seen[a] = True
                a = perm[a]
    return count


def _check_args(p: int, n: int, cap: int) -> None:
    if p < 1:
        raise ValueError("order must be >= 1")
    if p > min(cap, MAX_ORDER):
        raise OrderTooLargeError(
            f"order too large: p={p} exceeds the cap {min(cap, MAX_ORDER)}"
        )
    if n < p:
        raise SingularGramError(
            f"Gram matrix may be singular for n={n} < p={p}; pass n >= p"
        )


@lru_cache(maxsize=256)
def _weingarten_exact_cached(p: int, n: int) -> WeingartenTable:
    perms = _perm_tuples(p)
    if p <= 4:
        # full Gram system: sum_t Wg(t) n^{#(s t)} = [s = id]
        index = {perm: i for i, perm in enumerate(perms)}
        matrix = [
            [n ** _cycles0(tuple(s[t[i]] for i in range(p))) for t in perms]
            for s in perms
        ]
        rhs = [1 if s == perms[0] else 0 for s in perms]
        sol = _solve_exact(matrix, rhs)
        entries: Dict[CycleType, Fraction] = {}
        for ct in partitions(p):
            rep = tuple(x - 1 for x in ct.representative().images)
            entries[ct] = sol[index[rep]]
        return WeingartenTable(p, n, entries)

    # class-function reduction: one unknown per cycle type
    classes = partitions(p)
    cls_index = {ct: i for i, ct in enumerate(classes)}
    perm_class = [
        cls_index[Permutation(tuple(x + 1 for x in t)).cycle_type()] for t in perms
    ]
    matrix = []
    for ct in classes:
        s = tuple(x - 1 for x in ct.representative().images)
        row = [0] * len(classes)
        for t, c in zip(perms, perm_class):
            row[c] += n ** _cycles0(tuple(s[t[i]] for i in range(p)))
        matrix.append(row)
    rhs = [1 if ct.parts == (1,) * p else 0 for ct in classes]
    sol = _solve_exact(matrix, rhs)
    return WeingartenTable(p, n, dict(zip(classes, sol)))


def weingarten_exact(p: int, n: int, cap: int = DEFAULT_ORDER_CAP) -> WeingartenTable:
    """Exact table of ``Wg(n, .)`` on ``S_p`` as rationals keyed by cycle type.

    Raises ``OrderTooLargeError`` above ``cap`` (never above 6) and
    ``SingularGramError`` when ``n < p``.
    """
    p, n = int(p), int(n)
    _check_args(p, n, cap)
    return _weingarten_exact_cached(p, n)


def convolution_residual(table: WeingartenTable) -> Dict[Permutation, Fraction]:
    """``sum_t Wg(s^-1 t) n^{#t}`` for every ``s`` by full enumeration of S_p.

    For a correct table this is 1 at the identity and 0 elsewhere.
    """
    p, n = table.order, table.dimension
    perms = list(all_permutations(p))
    ncyc = {t: cycle_count(t) for t in perms}
    out = {}
    for s in perms:
        s_inv = s.inverse()
        out[s] = sum((table(s_inv * t) * n ** ncyc[t] for t in perms), Fraction(0))
    return out
