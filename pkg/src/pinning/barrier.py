"""Greedy construction of a non-negative discrete barrier over a random field,
plus exact verification and summary statistics.

The construction walks outward from the start column, keeping a provisional
frontier value and at each new column dropping by the amount that maximizes
the next provisional increment.  The resulting path satisfies
``v(i+1) + v(i-1) - 2 v(i) <= f(i, v(i)) - F`` at every interior site by
construction; `verify_discrete` re-checks that inequality in exact integer
arithmetic and is the regression oracle for the constructor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, NamedTuple

from .media import MINUS_INF, SeededField, is_minus_inf


class VerticalSearchExhausted(RuntimeError):
    """A column scan ran past its budget without the required finite value."""


@dataclass(frozen=True)
class SupersolutionPath:
    """Barrier heights on [-W, W] with the construction's bookkeeping.

    ``v_bar`` holds provisional values for i != 0 including the two frontier
    columns +-(W+1); ``argmax_m`` the greedy drop chosen at each i != 0;
    ``d_fwd[n] = v_bar[n] - v[n-1]`` for n in [1, W+1] and mirrored ``d_bwd``.
    Hand-built paths (for tests and comparison runs) may leave the
    bookkeeping maps empty.
    """

    half_width: int
    F: int
    N_start: int
    v: dict[int, int]
    v_bar: dict[int, int] = field(default_factory=dict)
    argmax_m: dict[int, int] = field(default_factory=dict)
    d_fwd: dict[int, int] = field(default_factory=dict)
    d_bwd: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_values(cls, values: dict[int, int], F: int = 0, N_start: int = 0) -> "SupersolutionPath":
        w = max(abs(i) for i in values)
        if sorted(values) != list(range(-w, w + 1)):
            raise ValueError("values must cover a contiguous symmetric range [-W, W]")
        return cls(half_width=w, F=F, N_start=N_start, v=dict(values))


def _argmax_drop(
    field_: SeededField,
    column: int,
    bar: int,
    upper_bound: int,
    budget: int,
) -> tuple[int, int]:
    """Maximize f(column, bar - m) - m over m >= 0; ties go to the smallest m.

    Once some finite candidate ``best`` is found, no m > upper_bound - best can
    win (f <= upper_bound), so the scan terminates.  The budget guards laws so
    heavy in -inf that no finite value appears in time.
    """
    best = MINUS_INF
    best_m = 0
    m = 0
    site = field_.site_value
    while True:
        if not is_minus_inf(best) and m > upper_bound - best:
            return best_m, best
        if m >= budget:
            raise VerticalSearchExhausted(
                f"no maximizing drop within {budget} rows below column {column} frontier"
            )
        f = site(column, bar - m)
        if not is_minus_inf(f):
            cand = f - m
            if is_minus_inf(best) or cand > best:
                best = cand
                best_m = m
        m += 1


def construct_supersolution(
    field_: SeededField,
    N_start: int = 0,
    F: int = 0,
    half_width: int = 1,
    *,
    vertical_budget: int = 100_000,
) -> SupersolutionPath:
    """Build the greedy barrier on [-W, W] over the given field.

    Start: v(0) is the lowest row >= N_start where the field is finite.  Both
    frontiers get the provisional value v(0) + floor((f(0, v(0)) - F) / 2)
    (floor toward -inf, which is what `//` does), and each direction then
    alternates the greedy drop with the provisional update
    ``v_bar(n+2) = 2 v(n+1) - v(n) + f(n+1, v(n+1)) - F``.
    """
    if half_width < 1:
        raise ValueError("half_width must be >= 1")
    spec = field_.spec
    site = field_.site_value

    v0 = None
    for step in range(vertical_budget):
        row = N_start + step
        if not is_minus_inf(site(0, row)):
            v0 = row
            break
    if v0 is None:
        raise VerticalSearchExhausted(
            f"no finite field value in column 0 within {vertical_budget} rows above {N_start}"
        )

    f0 = site(0, v0)
    bar1 = v0 + (f0 - F) // 2

    v = {0: v0}
    v_bar: dict[int, int] = {}
    argmax_m: dict[int, int] = {}
    d_fwd: dict[int, int] = {}
    d_bwd: dict[int, int] = {}
    ub = spec.upper_bound

    for direction, d_map in ((1, d_fwd), (-1, d_bwd)):
        prev = v0
        bar = bar1
        for n in range(1, half_width + 1):
            i = direction * n
            v_bar[i] = bar
            d_map[n] = bar - prev
            m_star, best = _argmax_drop(field_, i, bar, ub, vertical_budget)
            argmax_m[i] = m_star
            cur = bar - m_star
            v[i] = cur
            # best = f(i, cur) - m_star, so f(i, cur) = best + m_star
            bar, prev = 2 * cur - prev + (best + m_star) - F, cur
        frontier = direction * (half_width + 1)
        v_bar[frontier] = bar
        d_map[half_width + 1] = bar - prev

    return SupersolutionPath(
        half_width=half_width,
        F=F,
        N_start=N_start,
        v=v,
        v_bar=v_bar,
        argmax_m=argmax_m,
        d_fwd=d_fwd,
        d_bwd=d_bwd,
    )


class Violation(NamedTuple):
    site: int
    lhs: float
    rhs: float


def verify_discrete(path: SupersolutionPath, field_: SeededField, F: int) -> list[Violation]:
    """Exact integer check of the barrier inequality at every site of the path.

    Interior sites use v(i+-1); the two outermost sites use the retained
    frontier provisional values when present (a barrier that holds against
    its provisional frontier still holds after any later drop).  Returns the
    empty list iff the path is a barrier for force F.
    """
    w = path.half_width
    v = path.v
    violations: list[Violation] = []

    def check(i: int, left: int, right: int) -> None:
        f = field_.site_value(i, v[i])
        lhs = left + right - 2 * v[i]
        rhs_f = f - F if not is_minus_inf(f) else MINUS_INF
        if is_minus_inf(rhs_f) or lhs > rhs_f:
            violations.append(Violation(i, lhs, rhs_f))

    for i in range(-w + 1, w):
        check(i, v[i - 1], v[i + 1])
    for edge in (w, -w):
        frontier = edge + (1 if edge > 0 else -1)
        if frontier in path.v_bar:
            inner = edge - (1 if edge > 0 else -1)
            check(edge, v[inner], path.v_bar[frontier])
    return violations


class PathStats(NamedTuple):
    min_v: int
    forward_slope: float
    backward_slope: float
    nonnegative: bool
    forward_drift: float
    backward_drift: float


def path_stats(path: SupersolutionPath) -> PathStats:
    """Summary statistics of a constructed path.

    ``forward_slope`` is the literal mean slope of v over the outer half
    window (the path itself grows quadratically once pinning holds), while
    ``forward_drift`` is the mean increment of the provisional differences
    D(n) over the same range, which is the quantity that converges to the
    drifted-maximum mean minus F.
    """
    w = path.half_width
    if w < 2:
        raise ValueError("path_stats needs half_width >= 2")
    v = path.v
    mid = math.ceil(w / 2)
    span = w - mid
    fwd = (v[w] - v[mid]) / span
    bwd = (v[-w] - v[-mid]) / span
    min_v = min(v.values())

    def drift(d_map: dict[int, int]) -> float:
        if not d_map:
            return float("nan")
        hi = max(d_map)
        lo = math.ceil(hi / 2)
        if hi == lo:
            return float("nan")
        return (d_map[hi] - d_map[lo]) / (hi - lo)

    return PathStats(
        min_v=min_v,
        forward_slope=fwd,
        backward_slope=bwd,
        nonnegative=min_v >= 0,
        forward_drift=drift(path.d_fwd),
        backward_drift=drift(path.d_bwd),
    )


def barrier_on_window(path: SupersolutionPath, width: int) -> list[int]:
    """Re-index the path onto a periodic simulation window [0, width).

    Window site i maps to path coordinate i - width // 2; the path must be
    wide enough to cover the window.
    """
    w = path.half_width
    offset = width // 2
    if width - 1 - offset > w or -offset < -w:
        raise ValueError(f"path half_width {w} cannot cover window width {width}")
    return [path.v[i - offset] for i in range(width)]


# ---------------------------------------------------------------------------
# Columnar text serialization
# ---------------------------------------------------------------------------

_NA = "NA"


def write_path_text(path: SupersolutionPath, fh: IO[str]) -> None:
    """One row per column: ``i v v_bar argmax_m`` (NA where undefined).

    Frontier rows +-(W+1) carry only the provisional value.
    """
    fh.write(f"# half_width={path.half_width} F={path.F} N_start={path.N_start}\n")
    fh.write("i\tv\tv_bar\targmax_m\n")
    w = path.half_width
    for i in range(-w - 1, w + 2):
        v = path.v.get(i)
        vb = path.v_bar.get(i)
        am = path.argmax_m.get(i)
        row = [str(i)] + [_NA if x is None else str(x) for x in (v, vb, am)]
        fh.write("\t".join(row) + "\n")


def read_path_text(fh: IO[str]) -> SupersolutionPath:
    header = fh.readline()
    if not header.startswith("#"):
        raise ValueError("missing path header line")
    meta = dict(part.split("=") for part in header[1:].split())
    w, F, n_start = int(meta["half_width"]), int(meta["F"]), int(meta["N_start"])
    fh.readline()  # column names
    v: dict[int, int] = {}
    v_bar: dict[int, int] = {}
    argmax_m: dict[int, int] = {}
    for line in fh:
        if not line.strip():
            continue
        si, sv, svb, sam = line.split()
        i = int(si)
        if sv != _NA:
            v[i] = int(sv)
        if svb != _NA:
            v_bar[i] = int(svb)
        if sam != _NA:
            argmax_m[i] = int(sam)
    d_fwd = {n: v_bar[n] - v[n - 1] for n in range(1, w + 2) if n in v_bar and n - 1 in v}
    d_bwd = {n: v_bar[-n] - v[-(n - 1)] for n in range(1, w + 2) if -n in v_bar and -(n - 1) in v}
    return SupersolutionPath(
        half_width=w, F=F, N_start=n_start,
        v=v, v_bar=v_bar, argmax_m=argmax_m, d_fwd=d_fwd, d_bwd=d_bwd,
    )
