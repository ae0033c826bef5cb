"""Continuous-time jump dynamics of the interface over a quenched field.

Each site carries an exponential clock at its current |rate|; when a site
jumps, its own and both neighbours' rates are recomputed and their clocks
re-drawn (exact by memorylessness).  A positive rate permits only upward
jumps, a negative one only downward.  The horizontal boundary is periodic.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

from .barrier import SupersolutionPath, barrier_on_window
from .media import SeededField, is_minus_inf
from .rng import TAG_DYNAMICS, CounterStream, hash_key


class UnsupportedFieldValue(ValueError):
    """The dynamics only supports fields with finite values at visited sites."""


@dataclass(frozen=True)
class RateRule:
    """Monotone rate response: strictly increasing, zero at zero, bounded.

    ``default_bounded`` is sign(x) * (1 - 2^-|x|); a ``user_table`` rule is a
    finite integer->rate table validated at construction and must cover every
    argument the dynamics queries.
    """

    kind: str = "default_bounded"
    table: dict[int, float] | None = None

    def __post_init__(self):
        if self.kind == "default_bounded":
            if self.table is not None:
                raise ValueError("default_bounded takes no table")
        elif self.kind == "user_table":
            t = self.table
            if not t:
                raise ValueError("user_table requires a table")
            if t.get(0) != 0:
                raise ValueError("rate rule must map 0 to 0")
            keys = sorted(t)
            vals = [t[k] for k in keys]
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError("rate table must be strictly increasing")
        else:
            raise ValueError(f"unknown rate rule kind {self.kind!r}")


DEFAULT_RULE = RateRule()


def lambda_eval(rule: RateRule, x: int) -> float:
    """Evaluate the rate response at an integer argument.

    The default rule is exact in binary floating point for |x| <= 53 and
    saturates at +-1.0 beyond (1 - 2^-54 is not representable); the dynamics
    only ever sees small arguments, and only the sign affects which moves
    are possible.
    """
    if rule.kind == "default_bounded":
        if x == 0:
            return 0.0
        mag = 1.0 - 2.0 ** (-abs(x)) if abs(x) <= 1074 else 1.0
        return mag if x > 0 else -mag
    try:
        return rule.table[x]  # type: ignore[index]
    except KeyError:
        raise ValueError(f"rate table does not cover argument {x}") from None


@dataclass
class InterfaceState:
    """Interface snapshot on a periodic window: heights u[0..width) at a time."""

    width: int
    u: list[int]
    time: float = 0.0
    boundary: str = "periodic"


def rate_at(
    state: InterfaceState,
    field_: SeededField,
    i: int,
    F: int,
    rule: RateRule = DEFAULT_RULE,
) -> float:
    """Signed jump rate at site i: Lambda(laplacian - f(i, u(i)) + F)."""
    u = state.u
    w = state.width
    f = field_.site_value(i, u[i])
    if is_minus_inf(f):
        raise UnsupportedFieldValue(f"field value at ({i}, {u[i]}) is -inf")
    lap = u[(i + 1) % w] + u[(i - 1) % w] - 2 * u[i]
    return lambda_eval(rule, lap - f + F)


class Event(NamedTuple):
    time: float
    site: int
    new_height: int


@dataclass
class TrajectorySummary:
    seed: int
    width: int
    F: int
    horizon: float
    final_state: InterfaceState
    jump_count: int
    sup_height: int
    #: times at which the running sup over (t, sites) increased, with new value
    sup_height_events: list[tuple[float, int]]
    #: downsampled (t, max_i u_t(i)) series
    height_series: list[tuple[float, int]]
    budget_exhausted: bool
    observer_outputs: dict[str, object] = field(default_factory=dict)
    events: list[Event] | None = None

    def sup_height_at(self, t: float) -> int:
        """Running sup of max_i u_s(i) over s <= t."""
        value = 0
        for et, ev in self.sup_height_events:
            if et > t:
                break
            value = ev
        return value

    def to_json_dict(self) -> dict:
        comparison = self.observer_outputs.get("comparison")
        return {
            "seed": self.seed,
            "params": {"width": self.width, "F": self.F, "horizon": self.horizon},
            "jump_count": self.jump_count,
            "sup_height": self.sup_height,
            "max_height_series": [[t, h] for t, h in self.height_series],
            "comparison": comparison,
            "budget_exhausted": self.budget_exhausted,
        }


class ComparisonObserver:
    """Online check that the interface stays below a fixed barrier.

    Only the jumped site can newly violate, so the check is O(1) per event.
    """

    name = "comparison"

    def __init__(self, barrier: Sequence[int]):
        self.barrier = list(barrier)
        self.ok = True
        self.first_violation: tuple[float, int] | None = None

    def on_start(self, state: InterfaceState) -> None:
        if len(self.barrier) != state.width:
            raise ValueError("barrier length must equal window width")
        for i, (ui, vi) in enumerate(zip(state.u, self.barrier)):
            if ui > vi:
                raise ValueError(f"initial state exceeds barrier at site {i}")

    def on_event(self, t: float, i: int, new_height: int, state: InterfaceState) -> None:
        if self.ok and new_height > self.barrier[i]:
            self.ok = False
            self.first_violation = (t, i)

    def result(self):
        return {"ok": self.ok, "first_violation": self.first_violation}


def simulate(
    field_: SeededField,
    F: int = 0,
    rule: RateRule = DEFAULT_RULE,
    width: int = 64,
    horizon: float = 100.0,
    seed: int = 0,
    observers: Sequence = (),
    *,
    origin: int = 0,
    jump_budget: int = 5_000_000,
    series_interval: float | None = None,
    record_events: bool = False,
) -> TrajectorySummary:
    """Run the event-driven dynamics from the flat zero interface.

    Exact in law: per-site exponential clocks with lazy heap invalidation;
    every event recomputes and re-arms the jumped site and its neighbours.
    Deterministic given (field, seed, parameters).

    Window site i reads the field at column origin + i.  Comparison against
    a constructed barrier needs origin = -(width // 2), which lines the
    window up with `barrier_on_window`'s re-indexing so each site is capped
    by a barrier value built over the same field column.
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if width < 2:
        raise ValueError("width must be >= 2")
    if series_interval is None:
        series_interval = horizon / 512.0

    u = [0] * width
    state = InterfaceState(width=width, u=u)
    field_cache: dict[tuple[int, int], int] = {}
    streams = [CounterStream(hash_key(seed, TAG_DYNAMICS, i)) for i in range(width)]
    lam: Callable[[int], float] = lambda x: lambda_eval(rule, x)

    def f_at(i: int, j: int) -> int:
        key = (i, j)
        val = field_cache.get(key)
        if val is None:
            raw = field_.site_value(origin + i, j)
            if is_minus_inf(raw):
                raise UnsupportedFieldValue(f"field value at ({origin + i}, {j}) is -inf")
            val = field_cache[key] = raw
        return val

    def current_rate(i: int) -> float:
        lap = u[(i + 1) % width] + u[(i - 1) % width] - 2 * u[i]
        return lam(lap - f_at(i, u[i]) + F)

    rates = [0.0] * width
    versions = [0] * width
    heap: list[tuple[float, int, int]] = []

    def arm(i: int, now: float) -> None:
        r = current_rate(i)
        rates[i] = r
        versions[i] += 1
        if r != 0.0:
            delay = streams[i].next_exponential(abs(r))
            heapq.heappush(heap, (now + delay, i, versions[i]))

    for i in range(width):
        arm(i, 0.0)

    for obs in observers:
        obs.on_start(state)

    jump_count = 0
    sup_height = 0
    sup_events: list[tuple[float, int]] = []
    series: list[tuple[float, int]] = [(0.0, 0)]
    next_sample = series_interval
    cur_max = 0
    events: list[Event] | None = [] if record_events else None
    budget_exhausted = False
    t = 0.0

    while heap:
        t_fire, i, ver = heapq.heappop(heap)
        if ver != versions[i]:
            continue
        if t_fire > horizon:
            heapq.heappush(heap, (t_fire, i, ver))
            break
        if jump_count >= jump_budget:
            budget_exhausted = True
            break
        t = t_fire
        # Samples strictly before this event see the pre-event state.
        while next_sample < t and next_sample <= horizon:
            series.append((next_sample, cur_max))
            next_sample += series_interval
        r = rates[i]
        # Sign discipline: the armed rate must match the live state.
        live = current_rate(i)
        assert live == r, f"stale rate at site {i}: armed {r}, live {live}"
        assert r != 0.0
        step = 1 if r > 0.0 else -1
        u[i] += step
        jump_count += 1
        state.time = t

        if step > 0:
            if u[i] > cur_max:
                cur_max = u[i]
                if cur_max > sup_height:
                    sup_height = cur_max
                    sup_events.append((t, sup_height))
        elif u[i] + 1 == cur_max:
            # the site may have been the unique maximum
            cur_max = max(u)

        if events is not None:
            events.append(Event(t, i, u[i]))
        for obs in observers:
            obs.on_event(t, i, u[i], state)

        arm(i, t)
        arm((i - 1) % width, t)
        arm((i + 1) % width, t)

    end_time = horizon if not budget_exhausted else t
    while next_sample <= end_time:
        series.append((next_sample, cur_max))
        next_sample += series_interval
    state.time = end_time

    outputs = {}
    for obs in observers:
        outputs[getattr(obs, "name", type(obs).__name__)] = obs.result()

    return TrajectorySummary(
        seed=seed,
        width=width,
        F=F,
        horizon=horizon,
        final_state=state,
        jump_count=jump_count,
        sup_height=sup_height,
        sup_height_events=sup_events,
        height_series=series,
        budget_exhausted=budget_exhausted,
        observer_outputs=outputs,
        events=events,
    )


class ComparisonReport(NamedTuple):
    ok: bool
    first_violation: tuple[float, int] | None


def check_comparison(
    trajectory: TrajectorySummary,
    path: SupersolutionPath | Sequence[int],
) -> ComparisonReport:
    """Replay a recorded trajectory against a barrier.

    The trajectory must have been run with ``record_events=True``.  The
    barrier is a constructed path (re-indexed onto the window, site i at
    path coordinate i - width//2) or an explicit height list.
    """
    if trajectory.events is None:
        raise ValueError("trajectory was not recorded with record_events=True")
    width = trajectory.width
    if isinstance(path, SupersolutionPath):
        barrier = barrier_on_window(path, width)
    else:
        barrier = list(path)
        if len(barrier) != width:
            raise ValueError("barrier length must equal window width")
    if any(0 > b for b in barrier):
        # flat start u0 == 0 must sit below the barrier
        i = next(i for i, b in enumerate(barrier) if b < 0)
        raise ValueError(f"barrier below the initial interface at site {i}")
    for t, i, new_height in trajectory.events:
        if new_height > barrier[i]:
            return ComparisonReport(False, (t, i))
    return ComparisonReport(True, None)
