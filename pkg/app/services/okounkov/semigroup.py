from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sympy import Matrix, Rational
from sympy.matrices.normalforms import invariant_factors
from sympy.polys.domains import ZZ

from app.core.config import settings
from app.core.errors import InvalidInput
from app.services.okounkov.orders import Exponent, MonomialOrder

logger = logging.getLogger(__name__)

# Finite samples of graded semigroups Γ = ∪_n {n}×Γ_n ⊂ ℕ^{1+d}.
# Each level is an (m, d) int array, rows unique and lexicographically sorted.
# Closure and superadditivity audits look sums up through integer codes.

GENERATOR_LEVELS = 8


def _as_level(points: Iterable[Sequence[int]], d: int) -> np.ndarray:
    arr = np.asarray(list(points), dtype=np.int64).reshape(-1, d)
    if arr.size and arr.min() < 0:
        raise InvalidInput("Exponents must be non-negative.")
    return np.unique(arr, axis=0) if arr.shape[0] else arr


@dataclass(frozen=True)
class SemigroupSample:
    d: int
    levels: dict[int, np.ndarray]

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InvalidInput("Dimension must be positive.", details={"d": self.d})
        for n, pts in self.levels.items():
            if n < 0 or pts.ndim != 2 or pts.shape[1] != self.d:
                raise InvalidInput("Malformed semigroup level.", details={"n": n})

    @classmethod
    def from_levels(cls, d: int, levels: Mapping[int, Iterable[Sequence[int]]]) -> SemigroupSample:
        return cls(d=d, levels={int(n): _as_level(pts, d) for n, pts in sorted(levels.items())})

    @property
    def n_max(self) -> int:
        return max(self.levels, default=0)

    def level(self, n: int) -> np.ndarray:
        return self.levels.get(n, np.empty((0, self.d), dtype=np.int64))

    def count(self, n: int) -> int:
        return int(self.level(n).shape[0])

    def points(self, n_min: int = 1) -> list[tuple[int, np.ndarray]]:
        return [(n, pts) for n, pts in sorted(self.levels.items()) if n >= n_min and len(pts)]

    @property
    def base(self) -> int:
        top = max((int(p.max()) for p in self.levels.values() if p.size), default=0)
        return 2 * top + 2

    def codes(self, pts: np.ndarray, base: int | None = None) -> np.ndarray:
        b = base or self.base
        weights = b ** np.arange(self.d, dtype=np.int64)
        return pts @ weights

    def index_of(self, n: int, pts: np.ndarray, base: int | None = None) -> np.ndarray:
        """Row index of each point in level n, −1 when absent."""
        target = self.level(n)
        if not len(target) or not len(pts):
            return np.full(len(pts), -1, dtype=np.int64)
        tc = self.codes(target, base)
        order = np.argsort(tc)
        sorted_codes = tc[order]
        qc = self.codes(pts, base)
        pos = np.clip(np.searchsorted(sorted_codes, qc), 0, len(sorted_codes) - 1)
        hit = sorted_codes[pos] == qc
        return np.where(hit, order[pos], -1)


def default_n_max(d: int) -> int:
    return settings.N_MAX_D1 if d == 1 else settings.N_MAX_D2


def full_sample(d: int, n_max: int | None = None) -> SemigroupSample:
    """Γ_n = {α : |α| ≤ n}, the semigroup of ℙ^d with O(1)."""
    n_max = default_n_max(d) if n_max is None else n_max
    grids = np.indices((n_max + 1,) * d).reshape(d, -1).T
    levels = {n: grids[grids.sum(axis=1) <= n] for n in range(n_max + 1)}
    return SemigroupSample.from_levels(d, levels)


def sample_from_generators(
    d: int, generators: Iterable[Sequence[int]], n_max: int | None = None
) -> SemigroupSample:
    """Levels up to n_max of the monoid generated by (n, α) vectors; Γ_0 = {0}."""
    n_max = default_n_max(d) if n_max is None else n_max
    gens = [tuple(int(x) for x in g) for g in generators]
    if any(len(g) != d + 1 or g[0] < 1 for g in gens):
        raise InvalidInput("Generators must be (n, α) with n ≥ 1.", details={"d": d})
    levels: dict[int, set[Exponent]] = {0: {(0,) * d}}
    for n in range(1, n_max + 1):
        cur: set[Exponent] = set()
        for g in gens:
            prev = levels.get(n - g[0])
            if not prev:
                continue
            step = g[1:]
            cur.update(tuple(a + b for a, b in zip(alpha, step, strict=True)) for alpha in prev)
        levels[n] = cur
    return SemigroupSample.from_levels(d, levels)


def pivot_basis(
    coefficients: Sequence[Sequence[int | float | Fraction]],
    exponents: Sequence[Sequence[int]],
    order: MonomialOrder,
) -> tuple[list[Exponent], list[list[Fraction]]]:
    """
    Row-reduce with columns in increasing order. Returns the leading
    exponents and, for each, the section of V with that leading term
    (coefficient 1) and no other leading exponent in its support.
    """
    exps = [tuple(int(x) for x in e) for e in exponents]
    if not coefficients or not exps:
        return [], []
    if any(len(row) != len(exps) for row in coefficients):
        raise InvalidInput("Coefficient rows must match the monomial list.")
    perm = sorted(range(len(exps)), key=lambda j: order.key(exps[j]))
    rows = [[_rational(row[j]) for j in perm] for row in coefficients]
    reduced, pivots = Matrix(rows).rref()
    basis = []
    for k in range(len(pivots)):
        section = [Fraction(0)] * len(exps)
        for pos, j in enumerate(perm):
            q = reduced[k, pos]
            section[j] = Fraction(int(q.p), int(q.q))
        basis.append(section)
    return [exps[perm[j]] for j in pivots], basis


def leading_exponents(
    coefficients: Sequence[Sequence[int | float | Fraction]],
    exponents: Sequence[Sequence[int]],
    order: MonomialOrder,
) -> list[Exponent]:
    """
    ord(s) over s ∈ V: the minimal exponent with a nonzero coefficient.
    Rows are sections, columns are monomials; #Γ_n is the rank.
    """
    return pivot_basis(coefficients, exponents, order)[0]


def _rational(x: int | float | Fraction) -> Rational:
    q = Fraction(x)
    return Rational(q.numerator, q.denominator)


@dataclass(frozen=True)
class ClosureAudit:
    passed: bool
    checked: int
    # (n, α, m, β) with α+β ∉ Γ_{n+m}
    violation: tuple[int, Exponent, int, Exponent] | None = None


def closure_audit(sample: SemigroupSample, max_level: int | None = None) -> ClosureAudit:
    top = min(sample.n_max, max_level) if max_level is not None else sample.n_max
    base = sample.base
    checked = 0
    for n in range(0, top + 1):
        a = sample.level(n)
        if not len(a):
            continue
        for m in range(n, top - n + 1):
            b = sample.level(m)
            # sums landing on an unsampled level are not checked
            if not len(b) or not sample.count(n + m):
                continue
            sums = (a[:, None, :] + b[None, :, :]).reshape(-1, sample.d)
            idx = sample.index_of(n + m, sums, base)
            checked += len(sums)
            missing = np.flatnonzero(idx < 0)
            if missing.size:
                i, j = divmod(int(missing[0]), len(b))
                return ClosureAudit(
                    passed=False,
                    checked=checked,
                    violation=(n, tuple(int(x) for x in a[i]), m, tuple(int(x) for x in b[j])),
                )
    return ClosureAudit(passed=True, checked=checked)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    witness: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConditionsReport:
    a: ConditionResult
    b: ConditionResult
    c: ConditionResult
    closure: ClosureAudit

    @property
    def passed(self) -> bool:
        return self.a.passed and self.b.passed and self.c.passed and self.closure.passed

    def to_dict(self) -> dict:
        out = {
            key: {"passed": res.passed, "witness": res.witness}
            for key, res in (("a", self.a), ("b", self.b), ("c", self.c))
        }
        out["closure"] = {
            "passed": self.closure.passed,
            "checked": self.closure.checked,
            "violation": list(self.closure.violation) if self.closure.violation else None,
        }
        return out


def _condition_a(sample: SemigroupSample) -> ConditionResult:
    zero = sample.level(0)
    ok = zero.shape[0] == 1 and not zero.any()
    return ConditionResult("a", ok, {"gamma_0": zero.tolist()})


def _condition_b(sample: SemigroupSample) -> ConditionResult:
    # B = {1}×[0, M]^d generates every (n, α) with α_i ≤ nM; consistency only
    bound = 0
    growth = []
    for n, pts in sample.points(1):
        top = int(pts.max())
        bound = max(bound, math.ceil(top / n))
        growth.append([n, top / n])
    return ConditionResult("b", True, {"box_bound": bound, "max_ratio_by_level": growth[-5:]})


def _condition_c(sample: SemigroupSample, generator_levels: int) -> ConditionResult:
    rows = [
        [n, *map(int, alpha)]
        for n, pts in sample.points(1)
        if n <= generator_levels
        for alpha in pts
    ]
    if not rows:
        return ConditionResult("c", False, {"invariant_factors": [], "levels": generator_levels})
    factors = [int(f) for f in invariant_factors(Matrix(rows), domain=ZZ)]
    nonzero = [abs(f) for f in factors if f != 0]
    ok = len(nonzero) == sample.d + 1 and all(f == 1 for f in nonzero)
    index = math.prod(nonzero) if len(nonzero) == sample.d + 1 else 0
    return ConditionResult(
        "c",
        ok,
        {"invariant_factors": factors, "lattice_index": index, "levels": generator_levels},
    )


def conditions_check(
    sample: SemigroupSample,
    *,
    generator_levels: int = GENERATOR_LEVELS,
    closure_levels: int | None = None,
) -> ConditionsReport:
    """
    (a) Γ_0 = {0}; (b) bounded by a finite B ⊂ {1}×ℕ^d, reported as consistency;
    (c) the observed generators span ℤ^{d+1}, via Smith invariant factors.
    """
    if not sample.levels:
        raise InvalidInput("Semigroup sample is empty.")
    report = ConditionsReport(
        a=_condition_a(sample),
        b=_condition_b(sample),
        c=_condition_c(sample, generator_levels),
        closure=closure_audit(sample, closure_levels),
    )
    logger.info(
        "semigroup conditions checked",
        extra={"event": "okounkov.conditions.checked", "n": sample.n_max, "outcome": report.passed},
    )
    return report


# ---------------------------------------------------------------------------
# value tables


@dataclass(frozen=True)
class ValueTable:
    """Φ(n, α), aligned with the rows of each sample level."""

    sample: SemigroupSample
    values: dict[int, np.ndarray]
    slack: float = 1e-9

    def __post_init__(self) -> None:
        for n, pts in self.sample.levels.items():
            vals = self.values.get(n)
            if vals is None or vals.shape != (pts.shape[0],):
                raise InvalidInput("Value table does not match the sample.", details={"n": n})

    @classmethod
    def from_function(
        cls,
        sample: SemigroupSample,
        fn: Callable[[int, np.ndarray], np.ndarray],
        *,
        slack: float = 1e-9,
    ) -> ValueTable:
        """fn(n, points) returns the values for the (m, d) points of level n."""
        values = {
            n: np.asarray(fn(n, pts), dtype=np.float64).reshape(-1)
            for n, pts in sample.levels.items()
        }
        return cls(sample=sample, values=values, slack=slack)

    @classmethod
    def from_entries(
        cls,
        d: int,
        entries: Iterable[tuple[int, Sequence[int], float]],
        *,
        slack: float = 1e-9,
    ) -> ValueTable:
        by_level: dict[int, dict[Exponent, float]] = {}
        for n, alpha, value in entries:
            by_level.setdefault(int(n), {})[tuple(int(x) for x in alpha)] = float(value)
        sample = SemigroupSample.from_levels(d, {n: list(v) for n, v in by_level.items()})
        values = {
            n: np.array([by_level[n][tuple(int(x) for x in row)] for row in sample.level(n)])
            for n in sample.levels
        }
        return cls(sample=sample, values=values, slack=slack)

    def ratios(self, n: int) -> np.ndarray:
        return self.values[n] / n

    def entries(self) -> list[tuple[int, Exponent, float]]:
        return [
            (n, tuple(int(x) for x in row), float(v))
            for n, pts in sorted(self.sample.levels.items())
            for row, v in zip(pts, self.values[n], strict=True)
        ]


@dataclass(frozen=True)
class SuperadditivityAudit:
    passed: bool
    checked: int
    worst_gap: float
    witness: tuple[int, Exponent, int, Exponent] | None = None


def superadditivity_audit(
    table: ValueTable, *, slack: float | None = None, max_level: int | None = None
) -> SuperadditivityAudit:
    """Φ(n+m, α+β) ≥ Φ(n,α) + Φ(m,β) − slack over every in-range pair."""
    sample = table.sample
    tol = table.slack if slack is None else slack
    top = min(sample.n_max, max_level) if max_level is not None else sample.n_max
    base = sample.base
    checked = 0
    worst = -math.inf
    witness = None
    for n in range(0, top + 1):
        a = sample.level(n)
        if not len(a):
            continue
        for m in range(n, top - n + 1):
            b = sample.level(m)
            if not len(b):
                continue
            sums = (a[:, None, :] + b[None, :, :]).reshape(-1, sample.d)
            idx = sample.index_of(n + m, sums, base)
            present = idx >= 0
            if not present.any():
                continue
            lhs = (table.values[n][:, None] + table.values[m][None, :]).reshape(-1)
            gap = np.full(lhs.shape, -np.inf)
            gap[present] = lhs[present] - table.values[n + m][idx[present]]
            checked += int(present.sum())
            k = int(np.argmax(gap))
            if gap[k] > worst:
                worst = float(gap[k])
                i, j = divmod(k, len(b))
                witness = (n, tuple(int(x) for x in a[i]), m, tuple(int(x) for x in b[j]))
    return SuperadditivityAudit(
        passed=worst <= tol,
        checked=checked,
        worst_gap=worst if checked else 0.0,
        witness=witness if worst > tol else None,
    )


def theta_estimate(table: ValueTable) -> float:
    """max Φ(n, α)/n over the top quartile of sampled levels."""
    levels = [n for n, pts in table.sample.points(1)]
    if not levels:
        raise InvalidInput("Value table has no positive level.")
    cut = levels[int(np.floor(0.75 * (len(levels) - 1)))]
    return float(max(np.max(table.ratios(n)) for n in levels if n >= cut))
