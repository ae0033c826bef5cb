"""Reproducible random inputs: lattice obstacle fields, Poisson point samples,
and exact / Monte-Carlo evaluation of the drifted-maximum expectation that
decides whether a barrier construction succeeds.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .rng import (
    TAG_FIELD,
    TAG_MC,
    TAG_POISSON,
    CounterStream,
    hash_key,
    u53_from_key,
)

MINUS_INF = float("-inf")

#: Reserved token for the minus-infinity atom in config files.
MINUS_INF_TOKEN = "minus_inf"


def is_minus_inf(x) -> bool:
    return x == MINUS_INF


class DistributionSpecError(ValueError):
    pass


class MeanMaxDiverges(ArithmeticError):
    """The requested expectation is -inf (no finite atom carries mass)."""


class MeanMaxBudgetError(ArithmeticError):
    """Support span exceeds the configured scan budget."""


def _as_fraction(p) -> Fraction:
    # Fraction accepts ints, Fractions and decimal strings exactly.
    return Fraction(p)


@dataclass(frozen=True)
class DistributionSpec:
    """Law of a single obstacle strength: integer atoms plus optional mass at -inf.

    ``atoms`` is canonical: the -inf atom (if any) first, finite values strictly
    ascending, probabilities exact rationals summing to one.
    """

    atoms: tuple[tuple[float | int, Fraction], ...]
    upper_bound: int
    minus_infinity_mass: Fraction
    # Derived, precomputed for fast sampling / CDF queries.
    finite_values: tuple[int, ...]
    finite_cum: tuple[Fraction, ...]       # cumulative over finite atoms only
    thresholds: tuple[int, ...]            # ceil(cum * 2^53) over all atoms

    @classmethod
    def make(cls, pairs: Sequence[tuple], upper_bound: int | None = None) -> "DistributionSpec":
        """Build a validated spec from (value, probability) pairs.

        Values are ints or ``MINUS_INF``; probabilities anything ``Fraction``
        accepts exactly (int, Fraction, decimal string).
        """
        merged: dict[float | int, Fraction] = {}
        for value, prob in pairs:
            p = _as_fraction(prob)
            if p < 0:
                raise DistributionSpecError(f"negative probability {p} for value {value}")
            if is_minus_inf(value):
                key: float | int = MINUS_INF
            else:
                if not isinstance(value, int) or isinstance(value, bool):
                    raise DistributionSpecError(f"finite atom value must be an int, got {value!r}")
                key = value
            merged[key] = merged.get(key, Fraction(0)) + p
        total = sum(merged.values(), Fraction(0))
        if total != 1:
            raise DistributionSpecError(f"probabilities sum to {total}, expected exactly 1")
        q_inf = merged.pop(MINUS_INF, Fraction(0))
        finite = sorted((v, p) for v, p in merged.items() if p > 0)
        if not finite:
            raise DistributionSpecError("no finite atom with positive probability")
        v_max = finite[-1][0]
        if upper_bound is None:
            upper_bound = v_max
        elif v_max > upper_bound:
            raise DistributionSpecError(f"atom value {v_max} exceeds upper_bound {upper_bound}")

        atoms: list[tuple[float | int, Fraction]] = []
        if q_inf > 0:
            atoms.append((MINUS_INF, q_inf))
        atoms.extend(finite)

        cum = Fraction(0)
        thresholds = []
        for _, p in atoms:
            cum += p
            # ceil(cum * 2^53), exact
            num, den = (cum.numerator << 53), cum.denominator
            thresholds.append(-((-num) // den))
        fin_cum: list[Fraction] = []
        acc = Fraction(0)
        for _, p in finite:
            acc += p
            fin_cum.append(acc)
        return cls(
            atoms=tuple(atoms),
            upper_bound=upper_bound,
            minus_infinity_mass=q_inf,
            finite_values=tuple(v for v, _ in finite),
            finite_cum=tuple(fin_cum),
            thresholds=tuple(thresholds),
        )

    @classmethod
    def point_mass(cls, value: int) -> "DistributionSpec":
        return cls.make([(value, Fraction(1))])

    @classmethod
    def bernoulli(cls, p, hi: int = 1, lo: int = -1) -> "DistributionSpec":
        """Two-point law: ``hi`` with probability p, ``lo`` otherwise."""
        p = _as_fraction(p)
        return cls.make([(hi, p), (lo, 1 - p)])

    @classmethod
    def from_config(cls, pairs: Sequence[Sequence], upper_bound: int | None = None) -> "DistributionSpec":
        """Parse config-file pairs: values as ints or the ``minus_inf`` token,
        probabilities as decimal strings.

        Probabilities must sum to 1 within 1e-12; an inexact sum within that
        tolerance is renormalized exactly so the invariant holds.
        """
        parsed: list[tuple[float | int, Fraction]] = []
        for item in pairs:
            if len(item) != 2:
                raise DistributionSpecError(f"atom entry must be (value, probability), got {item!r}")
            raw_v, raw_p = item
            if raw_v == MINUS_INF_TOKEN:
                v: float | int = MINUS_INF
            else:
                try:
                    v = int(raw_v)
                except (TypeError, ValueError):
                    raise DistributionSpecError(f"bad atom value {raw_v!r}") from None
            try:
                p = _as_fraction(raw_p)
            except (TypeError, ValueError):
                raise DistributionSpecError(f"bad probability {raw_p!r}") from None
            parsed.append((v, p))
        total = sum((p for _, p in parsed), Fraction(0))
        if total <= 0 or abs(total - 1) > Fraction(1, 10**12):
            raise DistributionSpecError(f"probabilities sum to {float(total)}, outside 1 +/- 1e-12")
        if total != 1:
            parsed = [(v, p / total) for v, p in parsed]
        return cls.make(parsed, upper_bound=upper_bound)

    # -- law queries ---------------------------------------------------------

    @property
    def has_minus_inf(self) -> bool:
        return self.minus_infinity_mass > 0

    @property
    def min_finite(self) -> int:
        return self.finite_values[0]

    @property
    def max_finite(self) -> int:
        return self.finite_values[-1]

    def cdf(self, t: int) -> Fraction:
        """P(Z <= t) for integer t (mass at -inf always included)."""
        idx = bisect_right(self.finite_values, t)
        if idx == 0:
            return self.minus_infinity_mass
        return self.minus_infinity_mass + self.finite_cum[idx - 1]

    def value_from_u53(self, u: int) -> float | int:
        """Map a uniform 53-bit integer to an atom value (inverse CDF)."""
        return self.atoms[bisect_right(self.thresholds, u)][0]


@dataclass(frozen=True)
class SeededField:
    """Deterministic i.i.d. obstacle field: site (i, j) -> strength.

    Values are pure functions of (seed, i, j, spec); distinct sites are
    decorrelated by the counter-based hash, so any window can be queried
    lazily and concurrently with consistent results.
    """

    seed: int
    spec: DistributionSpec

    def site_value(self, i: int, j: int) -> float | int:
        u = u53_from_key(hash_key(self.seed, TAG_FIELD, i, j))
        return self.spec.value_from_u53(u)


def site_value(field: SeededField, i: int, j: int) -> float | int:
    return field.site_value(i, j)


# ---------------------------------------------------------------------------
# Poisson point samples
# ---------------------------------------------------------------------------


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class PointSample:
    """Poisson points on a half-open window [x_min,x_max) x [y_min,y_max)."""

    window: tuple[float, float, float, float]
    points: tuple[tuple[float, float], ...]
    intensity: float


def sample_poisson_points(
    window: tuple[float, float, float, float],
    intensity: float,
    seed: int,
    stream: int = 0,
) -> PointSample:
    """Sample a homogeneous Poisson process on a rectangle.

    Points are generated per unit cell of the integer grid, keyed on
    (seed, stream, cell), then filtered to the half-open window.  Sampling
    two adjacent windows therefore yields exactly the union of the two
    samples, and re-sampling any window reproduces it bit for bit.
    """
    x_min, x_max, y_min, y_max = (float(v) for v in window)
    if not (x_max > x_min and y_max > y_min):
        raise WindowError(f"window must have positive area, got {window}")
    if not intensity > 0:
        raise WindowError(f"intensity must be > 0, got {intensity}")

    points: list[tuple[float, float]] = []
    m_lo, m_hi = math.floor(x_min), math.ceil(x_max)
    n_lo, n_hi = math.floor(y_min), math.ceil(y_max)
    for m in range(m_lo, m_hi):
        for n in range(n_lo, n_hi):
            cs = CounterStream(hash_key(seed, TAG_POISSON, stream, m, n))
            count = cs.next_poisson(intensity)
            for _ in range(count):
                x = m + cs.next_uniform()
                y = n + cs.next_uniform()
                if x_min <= x < x_max and y_min <= y < y_max:
                    points.append((x, y))
    return PointSample(window=(x_min, x_max, y_min, y_max), points=tuple(points), intensity=intensity)


# ---------------------------------------------------------------------------
# Drifted-maximum expectation  E[ max_k (Z_k - k) ]
# ---------------------------------------------------------------------------


class MeanMaxResult(NamedTuple):
    value: float
    error_bound: float


def truncated_max_cdf(spec: DistributionSpec, depth: int, t: int) -> Fraction:
    """P(M_depth <= t) with M_depth = max_{0<=k<=depth} (Z_k - k), exact.

    Only finitely many factors differ from 1 because Z is bounded above:
    the product runs over k <= min(depth, v_max - t).
    """
    v_max = spec.max_finite
    if t >= v_max:
        return Fraction(1)
    prod = Fraction(1)
    for k in range(0, min(depth, v_max - t) + 1):
        prod *= spec.cdf(t + k)
        if prod == 0:
            break
    return prod


def _infinite_max_cdf(spec: DistributionSpec, t: int) -> Fraction:
    return truncated_max_cdf(spec, spec.max_finite - t, t)


def _mean_from_cdf(spec: DistributionSpec, depth: int | None, scan_budget: int) -> Fraction:
    """Exact E[max_k (Z_k - k)] for k up to ``depth`` (None = infinite horizon).

    Uses E[M] = v_max - sum_{t < v_max} P(M <= t).  With mass q at -inf the
    lower tail below v_min is geometric, q^{v_min - t} * C, and is summed in
    closed form; it only converges on the infinite horizon.
    """
    v_min, v_max = spec.min_finite, spec.max_finite
    span = v_max - v_min
    if span > scan_budget:
        raise MeanMaxBudgetError(f"support span {span} exceeds scan budget {scan_budget}")
    q = spec.minus_infinity_mass

    total = Fraction(0)
    for t in range(v_min, v_max):
        if depth is None:
            total += _infinite_max_cdf(spec, t)
        else:
            total += truncated_max_cdf(spec, depth, t)
    if q > 0:
        if depth is not None:
            # P(M_depth <= t) -> q^{depth+1} > 0 as t -> -inf: the tail sum
            # diverges and the truncated mean is -inf for every finite depth.
            raise MeanMaxDiverges(
                "finite-horizon mean diverges to -inf when the law has mass at -inf"
            )
        # Tail t < v_min: P(M <= t) = q^{v_min - t} * C with constant C.
        c = Fraction(1)
        for s in range(v_min, v_max):
            c *= spec.cdf(s)
        total += c * q / (1 - q)
    return v_max - total


def mean_max_exact(
    spec: DistributionSpec,
    depth: int = 64,
    *,
    scan_budget: int = 1_000_000,
) -> MeanMaxResult:
    """Exact expectation of the drifted maximum, with a truncation error bound.

    Returns (value, error_bound) where ``value`` is a certified lower bound of
    the infinite-horizon mean E[sup_k (Z_k - k)] and
    ``value + error_bound`` equals that mean exactly.

    For laws without mass at -inf, ``value`` is E[M_depth] (it equals the
    infinite-horizon mean once depth covers the support span, so the bound is
    then zero).  For laws with mass at -inf the depth-truncated mean is -inf
    at every finite depth, while the infinite-horizon mean stays finite; in
    that case the infinite-horizon value is returned directly (error 0), its
    geometric lower tail summed in closed form.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    e_inf = _mean_from_cdf(spec, None, scan_budget)
    if spec.has_minus_inf:
        return MeanMaxResult(float(e_inf), 0.0)
    e_depth = _mean_from_cdf(spec, depth, scan_budget)
    return MeanMaxResult(float(e_depth), float(e_inf - e_depth))


def _mean_max_lower_fraction(spec: DistributionSpec, depth: int) -> Fraction:
    """Exact rational lower bound matching mean_max_exact's ``value``."""
    if spec.has_minus_inf:
        return _mean_from_cdf(spec, None, 1_000_000)
    return _mean_from_cdf(spec, depth, 1_000_000)


def sample_drifted_max(spec: DistributionSpec, depth: int, stream: CounterStream) -> float | int:
    """One sample of max_{0<=k<=depth} (Z_k - k), drawing lazily.

    Stops as soon as no later term can beat the current best
    (Z_k - k <= v_max - k).  Returns -inf iff every drawn Z was -inf.
    """
    v_max = spec.max_finite
    best: float | int = MINUS_INF
    k = 0
    while k <= depth and (best == MINUS_INF or v_max - k > best):
        z = spec.value_from_u53(stream.next_u53())
        if not is_minus_inf(z):
            cand = z - k
            if best == MINUS_INF or cand > best:
                best = cand
        k += 1
    return best


def mean_max_mc(
    spec: DistributionSpec,
    samples: int,
    depth: int = 64,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the truncated drifted-maximum mean.

    Returns (estimate, std_error).  If a sample is degenerate (all depth+1
    draws at -inf, probability q^(depth+1)) the estimate is honestly -inf.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    total = 0
    total_sq = 0
    for n in range(samples):
        m = sample_drifted_max(spec, depth, CounterStream(hash_key(seed, TAG_MC, n)))
        if is_minus_inf(m):
            return MINUS_INF, float("inf")
        total += m
        total_sq += m * m
    mean = total / samples
    if samples == 1:
        return float(mean), 0.0
    var = (total_sq - samples * mean * mean) / (samples - 1)
    return float(mean), math.sqrt(max(var, 0.0) / samples)


class PinningResult(NamedTuple):
    satisfied: bool
    margin: float


def pinning_condition(spec: DistributionSpec, F: int, depth: int = 64) -> PinningResult:
    """Whether the certified lower bound of E[max_k (Z_k - k)] exceeds F.

    The comparison is done in exact rational arithmetic; ``margin`` is the
    (float of the) exact difference, and ``satisfied`` is strict positivity.
    """
    lower = _mean_max_lower_fraction(spec, depth)
    margin = lower - F
    return PinningResult(margin > 0, float(margin))
