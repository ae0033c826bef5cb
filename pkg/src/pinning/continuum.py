"""Continuum barrier pipeline over signed Poisson obstacles.

Scale selection fixes box geometry (l, d_gap, h), clearance thickness b,
negative-count cap N, obstacle size rho and the pinned force F_star so that
the openness probability of a box beats the percolation threshold.  Open
boxes supply positive-obstacle cores; a Lipschitz surface of open boxes is
turned into a piecewise-quadratic barrier: steep upward parabolas inside the
cores, flat downward parabolas (curvature -F, F in [F_star, 2 F_star])
connecting consecutive core corners while dodging every negative obstacle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Callable, NamedTuple, Sequence

import numpy as np

from .media import sample_poisson_points
from .percolation import LipschitzSurface, SiteGrid, critical_probability, minimal_open_surface

SQRT2 = math.sqrt(2.0)

#: Distinguished return of `eval_force` when the point is within alpha*rho of a
#: negative obstacle center (the force there is minus infinity).
NEG_PROXIMITY = float("-inf")


class ScaleSelectionError(ValueError):
    pass


class InfeasibleConnector(RuntimeError):
    """Negative obstacles block every admissible curvature for this pair."""

    def __init__(self, message: str, corner_a=None, corner_b=None):
        super().__init__(message)
        self.corner_a = corner_a
        self.corner_b = corner_b


class ClearanceViolation(RuntimeError):
    """An assembled barrier came within alpha*rho of a negative center."""


class AssemblyError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Scales
# ---------------------------------------------------------------------------


def force_floor(k: float, l: float) -> float:
    """Pinned force for box length l at strength floor k: k / (18 l)."""
    return k / (18.0 * l)


@dataclass(frozen=True)
class ScaleParams:
    k: float
    alpha: float
    lambda_plus: float
    lambda_minus: float
    l: float
    d_gap: float
    h: float
    b: float
    N: int
    rho: float
    F_star: float
    p0: float

    @property
    def S(self) -> float:
        """Full core strength 2k/rho (derived, so rho overrides stay coherent)."""
        return 2.0 * self.k / self.rho

    @property
    def count_volume(self) -> float:
        """Area of the negative-count rectangle: 6 h (l + d_gap)."""
        return 6.0 * self.h * (self.l + self.d_gap)

    def validate(self) -> list[str]:
        """All structural constraints; empty list iff coherent."""
        eps = 1e-12
        bad: list[str] = []
        if not 0 < self.k <= 1:
            bad.append(f"k={self.k} outside (0, 1]")
        if not self.alpha > SQRT2:
            bad.append(f"alpha={self.alpha} must exceed sqrt(2)")
        if not (self.lambda_plus > 0 and self.lambda_minus > 0):
            bad.append("intensities must be positive")
        if not self.k * self.d_gap > 2.0 * self.h:
            bad.append(f"k*d_gap={self.k * self.d_gap} must exceed 2h={2 * self.h}")
        if not self.b < self.h:
            bad.append(f"b={self.b} must be < h={self.h}")
        if not self.b < self.d_gap / 2.0:
            bad.append(f"b={self.b} must be < d_gap/2={self.d_gap / 2}")
        if not self.b >= (1.0 + self.alpha) * self.rho:
            bad.append(f"b={self.b} below (1+alpha)*rho={(1 + self.alpha) * self.rho}")
        if not self.h > (self.alpha - 1.0) * self.rho:
            bad.append(f"h={self.h} must exceed (alpha-1)*rho")
        if not min(self.l, self.h) >= 4.0 * self.rho:
            bad.append(f"l, h must be >= 4*rho={4 * self.rho}")
        expected_f = force_floor(self.k, self.l)
        if abs(self.F_star - expected_f) > eps * max(expected_f, 1e-300):
            bad.append(f"F_star={self.F_star} != k/(18 l)={expected_f}")
        if not 2.0 * self.F_star <= self.S / 2.0:
            bad.append("2 F_star must not exceed S/2")
        rho_cap = self.k * self.b * (self.l - self.b) / (288.0 * self.alpha * self.N * self.l)
        if self.rho > rho_cap * (1.0 + 1e-12):
            bad.append(f"rho={self.rho} exceeds clearance cap {rho_cap}")
        if self.N < 1:
            bad.append("N must be >= 1")
        return bad


def _smallest_satisfying(pred: Callable[[float], bool], start: float = 1.0) -> float:
    """Smallest x with pred(x) true, for pred monotone (false then true):
    doubling then bisection to 1e-12 relative."""
    hi = start
    doublings = 0
    while not pred(hi):
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise ScaleSelectionError("threshold search did not terminate")
    lo = 0.0 if hi == start else hi / 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def select_scales(
    k: float,
    alpha: float,
    lambda_plus: float,
    lambda_minus: float,
) -> ScaleParams:
    """Choose coherent scales for the given strengths and intensities.

    d_gap = l and h = k l / 4 throughout.  l is the smallest length whose
    positive-core probability beats p0^(1/3); b the largest clearance
    thickness keeping the strip probability above p0^(1/3) (capped below h);
    N the smallest count cap doing the same for the Poisson tail; rho the
    clearance-derived obstacle size (the theorem value halved, which is what
    keeps half of every border line reachable); F_star = k/(18 l).
    """
    if not 0 < k <= 1:
        raise ScaleSelectionError(f"k={k} outside (0, 1]")
    if not alpha > SQRT2:
        raise ScaleSelectionError(f"alpha={alpha} must exceed sqrt(2)")
    if lambda_plus <= 0 or lambda_minus <= 0:
        raise ScaleSelectionError("intensities must be positive")

    p0 = critical_probability(1, 6)
    log_p0 = math.log(p0)
    p0_third = math.exp(log_p0 / 3.0)
    one_minus_p0_third = -math.expm1(log_p0 / 3.0)

    def core_prob_ok(l: float) -> bool:
        # 1 - exp(-lambda_plus * h * l / 4) >= p0^(1/3) with h = k l / 4
        x = lambda_plus * k * l * l / 16.0
        return -math.expm1(-x) >= p0_third

    l = _smallest_satisfying(core_prob_ok)
    d_gap = l
    h = k * d_gap / 4.0

    b_strip = math.sqrt(-log_p0 / (48.0 * lambda_minus))
    b = min(0.99 * h, b_strip)

    x_count = 6.0 * lambda_minus * h * (l + d_gap)
    log_limit = math.log(one_minus_p0_third)
    N = None
    for cand in range(1, 10_000_000):
        if cand * math.log(x_count) - math.lgamma(cand + 1) < log_limit:
            N = cand
            break
    if N is None:
        raise ScaleSelectionError("no admissible negative-count cap below 1e7")

    rho = k * b * (l - b) / (144.0 * alpha * N * l) / 2.0
    rho = min(rho, b / (2.0 * (1.0 + alpha)))

    fs_height = 4.0 * h / (2.0 * l + d_gap) ** 2
    fs_slope = 2.0 * (k * d_gap - 2.0 * h) / (2.0 * l + d_gap) ** 2
    if abs(fs_height - fs_slope) > 1e-12 * fs_height:
        raise ScaleSelectionError(
            f"force-cap branches disagree: {fs_height} vs {fs_slope}"
        )
    F_star = 0.5 * min(fs_height, fs_slope)

    scales = ScaleParams(
        k=k,
        alpha=alpha,
        lambda_plus=lambda_plus,
        lambda_minus=lambda_minus,
        l=l,
        d_gap=d_gap,
        h=h,
        b=b,
        N=N,
        rho=rho,
        F_star=F_star,
        p0=p0,
    )
    problems = scales.validate()
    if problems:
        raise ScaleSelectionError("; ".join(problems))
    return scales


def open_probability_bound(scales: ScaleParams) -> float:
    """Product lower bound for the probability that a box is open."""
    s = scales
    core = -math.expm1(-s.lambda_plus * (s.l - 2 * s.rho) * (s.h - 2 * s.rho))
    strip = math.exp(-4.0 * s.lambda_minus * (s.b + (1.0 + s.alpha) * s.rho) ** 2)
    x = s.lambda_minus * s.count_volume
    tail = 1.0 - math.exp(s.N * math.log(x) - math.lgamma(s.N + 1)) if x > 0 else 1.0
    return core * strip * tail


def box_rect(i: int, j: int, scales: ScaleParams) -> tuple[float, float, float, float]:
    """Box (i, j): x in [i(l+d) - l/2, i(l+d) + l/2], y in [j h, (j+1) h]; j >= 1."""
    if j < 1:
        raise ValueError("box row j must be >= 1")
    cx = i * (scales.l + scales.d_gap)
    return (cx - scales.l / 2.0, cx + scales.l / 2.0, j * scales.h, (j + 1) * scales.h)


# ---------------------------------------------------------------------------
# Obstacles
# ---------------------------------------------------------------------------


class ObstacleSet:
    """Signed obstacle centers with x-sorted arrays for fast range queries.

    Must be generated on a window covering every queried box plus an
    alpha*rho margin (`continuum_window` takes care of that for pipelines).
    """

    def __init__(self, positives, negatives, rho: float, window=None):
        pos = np.asarray(list(positives), dtype=float).reshape(-1, 2)
        neg = np.asarray(list(negatives), dtype=float).reshape(-1, 2)
        pos = pos[np.argsort(pos[:, 0], kind="stable")] if len(pos) else pos
        neg = neg[np.argsort(neg[:, 0], kind="stable")] if len(neg) else neg
        self.positives = pos
        self.negatives = neg
        self.rho = float(rho)
        self.window = window

    @classmethod
    def empty(cls, rho: float) -> "ObstacleSet":
        return cls([], [], rho)

    def _in_rect(self, arr: np.ndarray, x0: float, x1: float, y0: float, y1: float) -> np.ndarray:
        if not len(arr):
            return arr
        lo = np.searchsorted(arr[:, 0], x0, side="left")
        hi = np.searchsorted(arr[:, 0], x1, side="right")
        chunk = arr[lo:hi]
        if not len(chunk):
            return chunk
        mask = (chunk[:, 1] >= y0) & (chunk[:, 1] <= y1)
        return chunk[mask]

    def positives_in_rect(self, x0, x1, y0, y1) -> np.ndarray:
        return self._in_rect(self.positives, x0, x1, y0, y1)

    def negatives_in_rect(self, x0, x1, y0, y1) -> np.ndarray:
        return self._in_rect(self.negatives, x0, x1, y0, y1)

    def count_negatives_in_rect(self, x0, x1, y0, y1) -> int:
        return len(self.negatives_in_rect(x0, x1, y0, y1))

    def has_negative_near_sup(self, x: float, y: float, half_side: float) -> bool:
        """Any negative center within sup-distance half_side of (x, y)?"""
        return len(self.negatives_in_rect(x - half_side, x + half_side, y - half_side, y + half_side)) > 0

    def negatives_in_xrange(self, x0: float, x1: float) -> np.ndarray:
        arr = self.negatives
        if not len(arr):
            return arr
        lo = np.searchsorted(arr[:, 0], x0, side="left")
        hi = np.searchsorted(arr[:, 0], x1, side="right")
        return arr[lo:hi]

    def negative_within_disk(self, x: float, y: float, radius: float) -> bool:
        near = self.negatives_in_rect(x - radius, x + radius, y - radius, y + radius)
        if not len(near):
            return False
        d2 = (near[:, 0] - x) ** 2 + (near[:, 1] - y) ** 2
        return bool((d2 <= radius * radius).any())

    def positives_near(self, x: float, y: float, radius: float) -> np.ndarray:
        return self.positives_in_rect(x - radius, x + radius, y - radius, y + radius)


def continuum_window(scales: ScaleParams, n_columns: int, height: int) -> tuple[float, float, float, float]:
    """Window covering boxes i in [0, n_columns), j in [1, height] plus the
    count rectangles and an alpha*rho margin."""
    s = scales
    pitch = s.l + s.d_gap
    margin = pitch + s.alpha * s.rho
    return (
        -s.l / 2.0 - margin,
        (n_columns - 1) * pitch + s.l / 2.0 + margin,
        0.0,
        (height + 4) * s.h,
    )


def sample_obstacles(
    window: tuple[float, float, float, float],
    scales: ScaleParams,
    seed: int,
) -> ObstacleSet:
    """Independent Poisson samples of positive (stream 0) and negative
    (stream 1) obstacle centers on the window."""
    pos = sample_poisson_points(window, scales.lambda_plus, seed, stream=0)
    neg = sample_poisson_points(window, scales.lambda_minus, seed, stream=1)
    return ObstacleSet(pos.points, neg.points, rho=scales.rho, window=window)


def write_obstacles_csv(obstacles: ObstacleSet, fh: IO[str]) -> None:
    fh.write("x,y,sign\n")
    for x, y in obstacles.positives:
        fh.write(f"{float(x)!r},{float(y)!r},1\n")
    for x, y in obstacles.negatives:
        fh.write(f"{float(x)!r},{float(y)!r},-1\n")


def read_obstacles_csv(fh: IO[str], rho: float) -> ObstacleSet:
    header = fh.readline()
    if not header.startswith("x,y,sign"):
        raise ValueError("bad obstacle CSV header")
    pos, neg = [], []
    for line in fh:
        if not line.strip():
            continue
        xs, ys, ss = line.strip().split(",")
        (pos if int(ss) > 0 else neg).append((float(xs), float(ys)))
    return ObstacleSet(pos, neg, rho=rho)


# ---------------------------------------------------------------------------
# Site classification
# ---------------------------------------------------------------------------


class SiteClass(NamedTuple):
    open_: bool
    core: tuple[float, float] | None
    negative_count: int


def classify_site(i: int, j: int, obstacles: ObstacleSet, scales: ScaleParams) -> SiteClass:
    """Openness of box (i, j).

    Open iff (1) some positive center lies in the box shrunk by rho (its core
    fits), (2) among those, one has no negative center within sup-distance
    b + (1+alpha) rho (clean clearance strip; the lowest-y, then lowest-x
    such center becomes the core), and (3) the (l+d) x 6h rectangle centered
    on the box holds fewer than N negative centers.
    """
    s = scales
    x0, x1, y0, y1 = box_rect(i, j, s)
    cands = obstacles.positives_in_rect(x0 + s.rho, x1 - s.rho, y0 + s.rho, y1 - s.rho)

    cx = i * (s.l + s.d_gap)
    cy = (j + 0.5) * s.h
    half_w = (s.l + s.d_gap) / 2.0
    n_neg = obstacles.count_negatives_in_rect(cx - half_w, cx + half_w, cy - 3.0 * s.h, cy + 3.0 * s.h)

    core = None
    if len(cands):
        order = np.lexsort((cands[:, 0], cands[:, 1]))  # lowest y, then lowest x
        clearance = s.b + (1.0 + s.alpha) * s.rho
        for idx in order:
            x, y = float(cands[idx, 0]), float(cands[idx, 1])
            if not obstacles.has_negative_near_sup(x, y, clearance):
                core = (x, y)
                break
    return SiteClass(open_=core is not None and n_neg < s.N, core=core, negative_count=n_neg)


def classification_grid(
    obstacles: ObstacleSet,
    scales: ScaleParams,
    n_columns: int,
    height: int,
    seed: int = -1,
) -> SiteGrid:
    """Percolation grid whose site (z, j) is the openness of box (z, j).

    The count rectangles of rows j, j' overlap for |j - j'| < 6, so the site
    family has vertical dependence range 6.
    """
    open_sites = np.empty((n_columns, height), dtype=bool)
    for z in range(n_columns):
        for j in range(1, height + 1):
            open_sites[z, j - 1] = classify_site(z, j, obstacles, scales).open_
    return SiteGrid(
        width=n_columns,
        height=height,
        d=6,
        open_sites=open_sites,
        p=open_probability_bound(scales),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Piecewise-quadratic barriers
# ---------------------------------------------------------------------------


class QuadPiece(NamedTuple):
    """One quadratic piece a t^2 + b t + c in the local coordinate
    t = x - x_lo (local form keeps core coefficients ~k/rho from shredding
    precision at global x)."""

    x_lo: float
    x_hi: float
    a: float
    b: float
    c: float

    def value(self, x: float) -> float:
        t = x - self.x_lo
        return (self.a * t + self.b) * t + self.c

    def slope(self, x: float) -> float:
        return 2.0 * self.a * (x - self.x_lo) + self.b

    def extrema(self) -> tuple[float, float]:
        """(min, max) of the piece over [x_lo, x_hi], exactly."""
        vals = [self.value(self.x_lo), self.value(self.x_hi)]
        if self.a != 0.0:
            t_v = -self.b / (2.0 * self.a)
            if 0.0 < t_v < self.x_hi - self.x_lo:
                vals.append(self.value(self.x_lo + t_v))
        return min(vals), max(vals)


@dataclass(frozen=True)
class PiecewiseQuadratic:
    """Continuous piecewise parabola: segment s lives on
    [breakpoints[s], breakpoints[s+1]] with coefficients local to its left
    breakpoint."""

    breakpoints: tuple[float, ...]
    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if len(self.breakpoints) != len(self.segments) + 1:
            raise ValueError("need exactly one more breakpoint than segments")
        if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @classmethod
    def from_pieces(cls, pieces: Sequence[QuadPiece]) -> "PiecewiseQuadratic":
        for left, right in zip(pieces, pieces[1:]):
            if left.x_hi != right.x_lo:
                raise ValueError(f"pieces not contiguous at {left.x_hi} vs {right.x_lo}")
        return cls(
            breakpoints=tuple([p.x_lo for p in pieces] + [pieces[-1].x_hi]),
            segments=tuple((p.a, p.b, p.c) for p in pieces),
        )

    @property
    def x_min(self) -> float:
        return self.breakpoints[0]

    @property
    def x_max(self) -> float:
        return self.breakpoints[-1]

    def piece(self, s: int) -> QuadPiece:
        a, b, c = self.segments[s]
        return QuadPiece(self.breakpoints[s], self.breakpoints[s + 1], a, b, c)

    def segment_index(self, x: float) -> int:
        if not self.x_min <= x <= self.x_max:
            raise ValueError(f"x={x} outside [{self.x_min}, {self.x_max}]")
        lo, hi = 0, len(self.segments) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if x <= self.breakpoints[mid + 1]:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def value(self, x: float) -> float:
        return self.piece(self.segment_index(x)).value(x)

    def slope(self, x: float) -> float:
        return self.piece(self.segment_index(x)).slope(x)

    def left_slope(self, bp: int) -> float:
        return self.piece(bp - 1).slope(self.breakpoints[bp])

    def right_slope(self, bp: int) -> float:
        return self.segments[bp][1]

    def min_value(self) -> float:
        return min(self.piece(s).extrema()[0] for s in range(len(self.segments)))

    def max_value(self) -> float:
        return max(self.piece(s).extrema()[1] for s in range(len(self.segments)))

    def continuity_defects(self) -> list[float]:
        """|value jump| at each interior breakpoint."""
        out = []
        for bp in range(1, len(self.breakpoints) - 1):
            left = self.piece(bp - 1).value(self.breakpoints[bp])
            right = self.segments[bp][2]
            out.append(abs(left - right))
        return out

    def validate(self, rel_tol: float = 1e-12) -> None:
        scale = max(1.0, max(abs(c) for _, _, c in self.segments))
        for bp, jump in enumerate(self.continuity_defects(), start=1):
            if jump > rel_tol * scale:
                raise ValueError(f"discontinuity {jump} at breakpoint {bp}")
        for bp in range(1, len(self.breakpoints) - 1):
            if self.left_slope(bp) < self.right_slope(bp) - 1e-12:
                raise ValueError(f"kink at breakpoint {bp} bends the wrong way")

    def to_json_dict(self, f_star: float | None = None, rho: float | None = None) -> dict:
        """Segments are (A, B, C) with v(x) = A t^2 + B t + C, t measured from
        the segment's left breakpoint."""
        doc = {
            "coords": "left-local",
            "breakpoints": list(self.breakpoints),
            "segments": [list(seg) for seg in self.segments],
        }
        if f_star is not None:
            doc["F_star"] = f_star
        if rho is not None:
            doc["rho"] = rho
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PiecewiseQuadratic":
        if doc.get("coords", "left-local") != "left-local":
            raise ValueError("unsupported segment coordinate convention")
        return cls(
            breakpoints=tuple(doc["breakpoints"]),
            segments=tuple(tuple(seg) for seg in doc["segments"]),
        )


def write_piecewise_json(pq: PiecewiseQuadratic, scales: ScaleParams, fh: IO[str]) -> None:
    json.dump(pq.to_json_dict(f_star=scales.F_star, rho=scales.rho), fh, sort_keys=True)
    fh.write("\n")


def read_piecewise_json(fh: IO[str]) -> PiecewiseQuadratic:
    return PiecewiseQuadratic.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Core and connector parabolas
# ---------------------------------------------------------------------------


def core_parabola(core_center: tuple[float, float], scales: ScaleParams) -> QuadPiece:
    """Upward parabola through the upper corners of the core square.

    Curvature S/2 = k/rho, corner slopes +-k, vertex k rho / 2 below the top
    edge (inside the core whenever k < 4).
    """
    if not scales.k < 4.0:
        raise ValueError("core parabola requires k < 4")
    xc, yc = core_center
    rho, k = scales.rho, scales.k
    return QuadPiece(
        x_lo=xc - rho,
        x_hi=xc + rho,
        a=k / (2.0 * rho),
        b=-k,
        c=yc + rho,
    )


def max_pinned_force(k: float, m: float, n: float) -> float:
    """Largest curvature admissible between corner offsets (m, n): the
    corner-slope conditions give F <= 2 (k m - |n|) / m^2."""
    return 2.0 * (k * m - abs(n)) / (m * m)


class Interval(NamedTuple):
    lo: float
    hi: float


def merge_intervals(intervals: Sequence[Interval]) -> list[Interval]:
    """Union of closed intervals, merged and sorted."""
    items = sorted((iv for iv in intervals if iv.hi >= iv.lo), key=lambda iv: iv.lo)
    out: list[Interval] = []
    for iv in items:
        if out and iv.lo <= out[-1].hi:
            if iv.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(Interval(iv.lo, iv.hi))
    return out


def blocked_intervals(
    border_x: float,
    negatives: Sequence[tuple[float, float]] | np.ndarray,
    scales: ScaleParams,
) -> list[Interval]:
    """Heights blocked on a vertical border line by nearby negative centers.

    Each relevant center (horizontal distance at most 2 alpha rho from the
    line) blocks [y - 2 alpha rho, y + 2 alpha rho]: a unit-inclination curve
    crossing the line outside that interval misses the obstacle's support.
    Returns the merged union; total measure is at most 4 * count * alpha*rho.
    """
    reach = 2.0 * scales.alpha * scales.rho
    raw = [
        Interval(float(y) - reach, float(y) + reach)
        for x, y in np.asarray(negatives, dtype=float).reshape(-1, 2)
        if abs(x - border_x) <= reach
    ]
    return merge_intervals(raw)


def total_measure(intervals: Sequence[Interval]) -> float:
    return sum(iv.hi - iv.lo for iv in intervals)


class ConnectorResult(NamedTuple):
    piece: QuadPiece
    F_used: float


def connect_cores(
    corner_a: tuple[float, float],
    corner_b: tuple[float, float],
    negatives: Sequence[tuple[float, float]] | np.ndarray,
    scales: ScaleParams,
) -> ConnectorResult:
    """Downward parabola joining the exit corner of one core to the entry
    corner of the next while avoiding every listed negative obstacle.

    In corner-relative coordinates the curve is
    v(t) = (F m / 2 + n / m) t - F t^2 / 2 with curvature -F.  At a center
    with abscissa t0, heights within 2 alpha rho of the center are fatal
    (the curve's inclination is below one), and v_F(t0) is linear in F, so
    each obstacle blocks one F-interval.  The curvature is chosen as the
    midpoint of the largest surviving sub-interval of [F_star, 2 F_star];
    if nothing survives the pair is infeasible and the caller must pick a
    different site.
    """
    s = scales
    xa, ya = corner_a
    xb, yb = corner_b
    m = xb - xa
    n = yb - ya
    if not m > 0:
        raise ValueError("corner_b must lie strictly right of corner_a")
    if m < s.d_gap - 1e-9 * s.d_gap or m >= 2.0 * s.l + s.d_gap:
        raise ValueError(f"corner gap m={m} outside [d_gap, 2l + d_gap)")
    if abs(n) >= 2.0 * s.h:
        raise ValueError(f"corner rise |n|={abs(n)} must be < 2h")

    f_lo, f_hi = s.F_star, 2.0 * s.F_star
    reach = 2.0 * s.alpha * s.rho
    blocked: list[Interval] = []
    for row in np.asarray(negatives, dtype=float).reshape(-1, 2):
        x0, y0 = float(row[0]), float(row[1])
        t0 = x0 - xa
        if not 0.0 < t0 < m:
            continue
        gain = t0 * (m - t0) / 2.0  # d v_F(t0) / dF
        base = n * t0 / m
        y_rel = y0 - ya
        if gain <= 0.0:
            if abs(base - y_rel) <= reach:
                blocked.append(Interval(f_lo, f_hi))
            continue
        blocked.append(Interval((y_rel - reach - base) / gain, (y_rel + reach - base) / gain))

    merged = merge_intervals(
        [Interval(max(iv.lo, f_lo), min(iv.hi, f_hi)) for iv in blocked]
    )
    gaps: list[Interval] = []
    cursor = f_lo
    for iv in merged:
        if iv.lo > cursor:
            gaps.append(Interval(cursor, iv.lo))
        cursor = max(cursor, iv.hi)
    if cursor < f_hi:
        gaps.append(Interval(cursor, f_hi))
    if not gaps:
        raise InfeasibleConnector(
            f"negative obstacles block all F in [{f_lo}, {f_hi}] between {corner_a} and {corner_b}",
            corner_a,
            corner_b,
        )
    widest = max(gaps, key=lambda iv: iv.hi - iv.lo)
    F = 0.5 * (widest.lo + widest.hi)

    slope_in = F * m / 2.0 + n / m
    slope_out_neg = F * m / 2.0 - n / m  # -v'(m)
    tol = 1e-9 * s.k
    if slope_in > s.k + tol or slope_out_neg > s.k + tol:
        raise InfeasibleConnector(
            f"corner slopes {slope_in}, {-slope_out_neg} exceed k={s.k} at F={F}",
            corner_a,
            corner_b,
        )
    piece = QuadPiece(x_lo=xa, x_hi=xb, a=-F / 2.0, b=slope_in, c=ya)
    peak = piece.extrema()[1]
    if peak > ya + max(0.0, n) + 2.0 * s.h + 1e-9 * s.h:
        raise InfeasibleConnector(
            f"connector peak {peak - ya} above the 2h cap", corner_a, corner_b
        )
    return ConnectorResult(piece=piece, F_used=F)


# ---------------------------------------------------------------------------
# Obstacle force field
# ---------------------------------------------------------------------------


def default_shape(x: float, y: float, alpha: float) -> float:
    """Radial profile: 1.05 on the disk of radius sqrt(2) (so at least 1 on
    the unit square), smooth exponential-bump decay to 0 at radius alpha."""
    r = math.hypot(x, y)
    if r <= SQRT2:
        return 1.05
    if r >= alpha:
        return 0.0
    t = (r - SQRT2) / (alpha - SQRT2)
    rise = math.exp(-1.0 / (1.0 - t))
    fall = math.exp(-1.0 / t)
    return 1.05 * rise / (rise + fall)


def eval_force(
    x: float,
    y: float,
    obstacles: ObstacleSet,
    scales: ScaleParams,
    shape: Callable[[float, float, float], float] = default_shape,
) -> float:
    """Medium response at (x, y): NEG_PROXIMITY (-inf) within alpha*rho of a
    negative center, otherwise the sum of positive-obstacle bumps of peak
    strength S = 2k/rho."""
    s = scales
    radius = s.alpha * s.rho
    if obstacles.negative_within_disk(x, y, radius):
        return NEG_PROXIMITY
    total = 0.0
    for xj, yj in obstacles.positives_near(x, y, radius):
        total += shape((x - xj) / s.rho, (y - yj) / s.rho, s.alpha)
    return s.S * total


# ---------------------------------------------------------------------------
# Assembly and verification
# ---------------------------------------------------------------------------


def graph_min_distance(
    pq: PiecewiseQuadratic,
    x0: float,
    y0: float,
    radius: float,
    step: float,
) -> float:
    """Minimum distance from the graph of pq to (x0, y0), searched within
    horizontal reach ``radius``; returns inf when the graph stays outside
    that reach (so the true distance exceeds it).

    Sampling never undershoots the true minimum by more than
    sqrt(2)/2 * step on graphs with inclination below one, so a sampled
    value > alpha*rho + step certifies clearance."""
    best2 = math.inf
    for s in range(len(pq.segments)):
        piece = pq.piece(s)
        lo = max(piece.x_lo, x0 - radius)
        hi = min(piece.x_hi, x0 + radius)
        if lo > hi:
            continue
        n = max(1, int(math.ceil((hi - lo) / step)))
        for idx in range(n + 1):
            x = lo + (hi - lo) * idx / n
            dy = piece.value(x) - y0
            d2 = (x - x0) ** 2 + dy * dy
            if d2 < best2:
                best2 = d2
    return math.sqrt(best2)


def refined_graph_distance(
    pq: PiecewiseQuadratic,
    x0: float,
    y0: float,
    radius: float,
    levels: int = 3,
    samples: int = 128,
) -> float:
    """Distance from the graph to (x0, y0) by multiscale zoom, for reporting.

    A coarse scan over [x0 - radius, x0 + radius] narrows onto the best
    abscissa, shrinking the window by samples/4 per level; inf when the graph
    is horizontally farther than ``radius``."""
    lo = max(pq.x_min, x0 - radius)
    hi = min(pq.x_max, x0 + radius)
    if lo > hi:
        return math.inf
    best_x, best2 = lo, math.inf
    width = hi - lo
    center = 0.5 * (lo + hi)
    for _ in range(levels):
        scan_lo = max(pq.x_min, center - width / 2.0)
        scan_hi = min(pq.x_max, center + width / 2.0)
        n = max(1, samples)
        for idx in range(n + 1):
            x = scan_lo + (scan_hi - scan_lo) * idx / n
            dy = pq.value(x) - y0
            d2 = (x - x0) ** 2 + dy * dy
            if d2 < best2:
                best2, best_x = d2, x
        center = best_x
        width = max(width * 4.0 / samples, 1e-300)
    return math.sqrt(best2)


def assemble(
    surface: LipschitzSurface,
    obstacles: ObstacleSet,
    scales: ScaleParams,
    x_range: tuple[float, float],
) -> PiecewiseQuadratic:
    """Barrier along a surface of open boxes: core parabolas joined by
    clearance-checked connectors, one surface row per column inside x_range.

    Raises AssemblyError if a surface box fails to classify open (the
    surface must come from the same obstacles), propagates
    InfeasibleConnector with the offending pair, and re-checks as a runtime
    assertion that the finished graph keeps distance > alpha*rho from every
    negative center in the raw obstacle list.
    """
    s = scales
    pitch = s.l + s.d_gap
    x_lo, x_hi = x_range
    i_min = math.ceil((x_lo + s.l / 2.0) / pitch - 1e-9)
    i_max = math.floor((x_hi - s.l / 2.0) / pitch + 1e-9)
    n_cols = i_max - i_min + 1
    if n_cols < 2:
        raise AssemblyError(f"x_range {x_range} spans {n_cols} box columns; need >= 2")
    if len(surface.phi) != n_cols:
        raise AssemblyError(
            f"surface covers {len(surface.phi)} columns, x_range needs {n_cols}"
        )

    cores: list[tuple[float, float]] = []
    for z in range(n_cols):
        i = i_min + z
        j = surface.phi[z]
        site = classify_site(i, j, obstacles, scales)
        if not site.open_ or site.core is None:
            raise AssemblyError(f"surface box ({i}, {j}) is not open with a core")
        cores.append(site.core)
    for left, right in zip(surface.phi, surface.phi[1:]):
        if abs(left - right) > 1:
            raise AssemblyError("surface rows jump by more than one between columns")

    pieces: list[QuadPiece] = []
    for z, core in enumerate(cores):
        core_piece = core_parabola(core, s)
        pieces.append(core_piece)
        if z + 1 < len(cores):
            xa, ya = core[0] + s.rho, core[1] + s.rho
            xb, yb = cores[z + 1][0] - s.rho, cores[z + 1][1] + s.rho
            negatives = obstacles.negatives_in_xrange(xa, xb)
            connector = connect_cores((xa, ya), (xb, yb), negatives, s).piece
            pieces.append(connector)

    pq = PiecewiseQuadratic.from_pieces(pieces)
    pq.validate()
    if not pq.min_value() > 0.0:
        raise AssemblyError(f"assembled barrier dips to {pq.min_value()} <= 0")

    clearance = s.alpha * s.rho
    step = s.rho / 40.0
    for x0, y0 in obstacles.negatives:
        d = graph_min_distance(pq, x0, y0, radius=2.0 * clearance, step=step)
        if d <= clearance:
            raise ClearanceViolation(
                f"barrier within {d} <= alpha*rho of negative center ({x0}, {y0})"
            )
    return pq


@dataclass
class ViscosityReport:
    max_residual: float
    kink_violations: list[tuple[float, float, float]]
    residual_violations: list[tuple[float, float]]
    min_v: float
    min_neg_clearance: float

    @property
    def clean(self) -> bool:
        return not self.kink_violations and not self.residual_violations

    def to_json_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "kink_violations": [list(v) for v in self.kink_violations],
            "residual_violations": [list(v) for v in self.residual_violations],
            "min_v": self.min_v,
            "min_neg_clearance": self.min_neg_clearance,
        }


def verify_viscosity(
    pq: PiecewiseQuadratic,
    obstacles: ObstacleSet,
    scales: ScaleParams,
    grid_step: float,
    *,
    f_star: float | None = None,
) -> ViscosityReport:
    """Check the barrier inequality v'' - f(x, v(x)) + F_star <= 0 piecewise.

    On concave pieces (2A + F_star <= tol) the inequality holds everywhere the
    force is non-negative, which is everywhere outside negative supports, so
    those pieces reduce to the clearance check; convex pieces (cores) are
    sampled at grid_step.  Kinks must bend downward (left slope >= right
    slope).  Proximity to a negative center (force -inf) is reported both as
    a residual violation and through min_neg_clearance.
    """
    s = scales
    if grid_step > s.rho / 20.0:
        raise ValueError(f"grid_step {grid_step} exceeds rho/20 = {s.rho / 20}")
    F = s.F_star if f_star is None else f_star
    tol = 1e-9 * s.S

    kink_violations: list[tuple[float, float, float]] = []
    for bp in range(1, len(pq.breakpoints) - 1):
        left, right = pq.left_slope(bp), pq.right_slope(bp)
        if left < right - 1e-12:
            kink_violations.append((pq.breakpoints[bp], left, right))

    residual_violations: list[tuple[float, float]] = []
    max_residual = -math.inf
    max_samples = 200_001
    for si in range(len(pq.segments)):
        piece = pq.piece(si)
        base = 2.0 * piece.a + F
        if base <= tol:
            max_residual = max(max_residual, base)
            continue
        n = int(math.ceil((piece.x_hi - piece.x_lo) / grid_step))
        if n + 1 > max_samples:
            raise ValueError(
                f"segment {si} needs {n + 1} samples at grid_step {grid_step}"
            )
        for idx in range(n + 1):
            x = piece.x_lo + (piece.x_hi - piece.x_lo) * idx / n
            f_val = eval_force(x, piece.value(x), obstacles, s)
            residual = base - f_val  # -inf force => +inf residual
            max_residual = max(max_residual, residual)
            if residual > tol:
                residual_violations.append((x, residual))

    clearance = s.alpha * s.rho
    min_clear = math.inf
    step = min(grid_step, s.rho / 80.0)
    report_radius = max(8.0 * clearance, 2.0 * s.b)
    for x0, y0 in obstacles.negatives:
        # certification pass: fine sampling, but only within horizontal reach
        # 2 alpha*rho of the center (beyond that the distance exceeds it)
        d_fine = graph_min_distance(pq, x0, y0, radius=2.0 * clearance, step=step)
        if d_fine <= clearance:
            residual_violations.append((x0, math.inf))
        # reporting pass: multiscale zoom over a wider reach
        d_report = min(d_fine, refined_graph_distance(pq, x0, y0, radius=report_radius))
        if d_report < min_clear:
            min_clear = d_report

    return ViscosityReport(
        max_residual=max_residual,
        kink_violations=kink_violations,
        residual_violations=residual_violations,
        min_v=pq.min_value(),
        min_neg_clearance=min_clear,
    )


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------


@dataclass
class ContinuumBuildResult:
    scales: ScaleParams
    obstacles: ObstacleSet
    grid: SiteGrid
    surface: LipschitzSurface | None
    piecewise: PiecewiseQuadratic | None
    report: ViscosityReport | None
    failure: str | None

    @property
    def success(self) -> bool:
        return self.piecewise is not None and self.failure is None


def build_continuum_barrier(
    scales: ScaleParams,
    n_columns: int,
    seed: int,
    height: int = 12,
) -> ContinuumBuildResult:
    """Sample obstacles, classify boxes, find a surface, assemble and verify."""
    window = continuum_window(scales, n_columns, height)
    obstacles = sample_obstacles(window, scales, seed)
    grid = classification_grid(obstacles, scales, n_columns, height, seed=seed)
    surface = minimal_open_surface(grid)
    if surface is None:
        return ContinuumBuildResult(
            scales, obstacles, grid, None, None, None,
            failure=f"no open Lipschitz surface within height {height}",
        )
    pitch = scales.l + scales.d_gap
    x_range = (-scales.l / 2.0, (n_columns - 1) * pitch + scales.l / 2.0)
    try:
        pq = assemble(surface, obstacles, scales, x_range)
    except (InfeasibleConnector, ClearanceViolation, AssemblyError) as exc:
        return ContinuumBuildResult(
            scales, obstacles, grid, surface, None, None, failure=str(exc)
        )
    report = verify_viscosity(pq, obstacles, scales, grid_step=scales.rho / 20.0)
    return ContinuumBuildResult(scales, obstacles, grid, surface, pq, report, failure=None)
