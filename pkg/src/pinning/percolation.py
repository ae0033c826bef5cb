"""Site percolation on a finite (1+1)-lattice with vertical dependence range,
minimal open Lipschitz surfaces, and the quantitative admissible-path bounds
backing the surface-existence threshold.

The lattice is periodic in the horizontal coordinate z and spans rows
h = 1..H.  A Lipschitz surface is a height function phi with
|phi(z) - phi(z+-1)| <= 1 passing through open sites only.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import IO

import numpy as np

from .rng import TAG_GRID, hash_key, uniform_from_key


class PathBudgetExceeded(RuntimeError):
    pass


class BruteForceBudgetExceeded(RuntimeError):
    pass


class DivergentBound(ArithmeticError):
    """The expected-count bound's geometric series does not converge."""


@dataclass(frozen=True)
class SiteGrid:
    """Open/closed sites on [0, W) x [1, H], periodic in z, with the vertical
    dependence range d and generation metadata."""

    width: int
    height: int
    d: int
    open_sites: np.ndarray  # bool, shape (width, height); row h stored at h-1
    p: float
    seed: int

    def is_open(self, z: int, h: int) -> bool:
        if not 1 <= h <= self.height:
            raise IndexError(f"row {h} outside [1, {self.height}]")
        return bool(self.open_sites[z % self.width, h - 1])


@dataclass(frozen=True)
class LipschitzSurface:
    phi: tuple[int, ...]

    def validate(self, grid: SiteGrid) -> None:
        w = grid.width
        if len(self.phi) != w:
            raise ValueError("surface width mismatch")
        for z, h in enumerate(self.phi):
            if not grid.is_open(z, h):
                raise ValueError(f"surface passes through closed site ({z}, {h})")
            if abs(h - self.phi[(z + 1) % w]) > 1:
                raise ValueError(f"Lipschitz condition fails between {z} and {z + 1}")


def generate_grid_blocked(width: int, height: int, p: float, d: int, seed: int) -> SiteGrid:
    """d-dependent field from aligned vertical blocks: within a column, rows
    sharing a block of length d share one Bernoulli(p) value; blocks and
    columns are independent, so sites at vertical distance >= d are too."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if d < 1:
        raise ValueError("d must be >= 1")
    open_sites = np.empty((width, height), dtype=bool)
    for z in range(width):
        for block in range((height + d - 1) // d):
            val = uniform_from_key(hash_key(seed, TAG_GRID, z, block)) < p
            lo = block * d
            open_sites[z, lo:lo + d] = val
    return SiteGrid(width=width, height=height, d=d, open_sites=open_sites, p=p, seed=seed)


def generate_grid_iid(width: int, height: int, p: float, seed: int) -> SiteGrid:
    """Independent Bernoulli(p) sites (dependence range 1)."""
    return generate_grid_blocked(width, height, p, 1, seed)


def grid_from_open_array(open_sites: np.ndarray, d: int = 1, p: float = float("nan"), seed: int = -1) -> SiteGrid:
    arr = np.asarray(open_sites, dtype=bool)
    return SiteGrid(width=arr.shape[0], height=arr.shape[1], d=d, open_sites=arr, p=p, seed=seed)


# ---------------------------------------------------------------------------
# Minimal open Lipschitz surface
# ---------------------------------------------------------------------------


def _next_open_tables(grid: SiteGrid) -> list[list[int]]:
    """next_open[z][h] = smallest open row >= h in column z (height+1 if none);
    index h runs 1..height+1."""
    w, hmax = grid.width, grid.height
    tables = []
    for z in range(w):
        col = grid.open_sites[z]
        nxt = [hmax + 1] * (hmax + 2)
        for h in range(hmax, 0, -1):
            nxt[h] = h if col[h - 1] else nxt[h + 1]
        tables.append(nxt)
    return tables


def minimal_open_surface(grid: SiteGrid, *, sweep_order: list[int] | None = None) -> LipschitzSurface | None:
    """Pointwise-minimal open Lipschitz surface within [1, H], or None.

    Monotone push-up iteration from phi == 1: raise each phi(z) to the next
    open row, then to max(phi(z), phi(z-1)-1, phi(z+1)-1), until stable.
    Both moves only increase phi, so the iteration converges to the least
    fixed point; any sweep order reaches the same result.
    """
    w, hmax = grid.width, grid.height
    nxt = _next_open_tables(grid)
    order = sweep_order if sweep_order is not None else list(range(w))
    phi = [1] * w
    changed = True
    while changed:
        changed = False
        for z in order:
            target = phi[z]
            left = phi[(z - 1) % w] - 1
            right = phi[(z + 1) % w] - 1
            if left > target:
                target = left
            if right > target:
                target = right
            target = nxt[z][target]
            if target > hmax:
                return None
            if target != phi[z]:
                phi[z] = target
                changed = True
    return LipschitzSurface(phi=tuple(phi))


def brute_force_minimal_surface(grid: SiteGrid, *, budget: int = 1_000_000) -> LipschitzSurface | None:
    """Exhaustive oracle: scan all H^W height functions, keep the open
    Lipschitz ones, and return their pointwise minimum.

    Asserts along the way that the pointwise minimum of the surviving
    candidates is itself open and Lipschitz (the candidate set is closed
    under pointwise minimum).
    """
    w, hmax = grid.width, grid.height
    if hmax ** w > budget:
        raise BruteForceBudgetExceeded(f"{hmax}^{w} exceeds budget {budget}")
    open_sites = grid.open_sites
    best: list[int] | None = None
    for phi in product(range(1, hmax + 1), repeat=w):
        if not all(open_sites[z, phi[z] - 1] for z in range(w)):
            continue
        if any(abs(phi[z] - phi[(z + 1) % w]) > 1 for z in range(w)):
            continue
        if best is None:
            best = list(phi)
        else:
            best = [min(a, b) for a, b in zip(best, phi)]
    if best is None:
        return None
    surface = LipschitzSurface(phi=tuple(best))
    surface.validate(grid)  # closure of the candidate set under pointwise min
    return surface


# ---------------------------------------------------------------------------
# Quantitative bounds
# ---------------------------------------------------------------------------


def critical_probability(n: int, d: int) -> float:
    """Sufficient openness probability for surface existence: 1 - (8n)^-d."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    return 1.0 - (8.0 * n) ** (-d)


def admissible_path_bound(h: int, z_abs: int, q: float, n: int, d: int) -> float:
    """Expected-count upper bound for admissible paths from (z, 0) to (0, h):
    2^h q^{h/d} (8n q^{1/d})^{|z|} / (1 - 8n q^{1/d}), valid when
    8n q^{1/d} < 1; raises DivergentBound otherwise."""
    if h < 1 or z_abs < 0:
        raise ValueError("need h >= 1 and z_abs >= 0")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    root = q ** (1.0 / d)
    ratio = 8.0 * n * root
    if ratio >= 1.0:
        raise DivergentBound(f"8 n q^(1/d) = {ratio} >= 1")
    return (2.0 ** h) * q ** (h / d) * ratio ** z_abs / (1.0 - ratio)


def enumerate_admissible_paths(
    grid: SiteGrid,
    z_start: int,
    h_target: int,
    *,
    budget: int = 1_000_000,
) -> int:
    """Exact count of admissible paths from (z_start, 0) to (0, h_target)
    within the grid window.

    Steps are up (z, y) -> (z, y+1) or diagonally down (z, y) -> (z+-1, y-1);
    vertices are distinct, stay within y in [0, H], and every up-step must
    land on a closed site.  Counting is a depth-first scan with a visit
    budget."""
    if h_target < 1:
        raise ValueError("h_target must be >= 1")
    if h_target > grid.height:
        raise ValueError("h_target exceeds grid height")
    w = grid.width
    start = (z_start % w, 0)
    goal = (0, h_target)
    visited: set[tuple[int, int]] = {start}
    visits = 0

    def dfs(z: int, y: int) -> int:
        nonlocal visits
        visits += 1
        if visits > budget:
            raise PathBudgetExceeded(f"DFS visit budget {budget} exceeded")
        count = 0
        # step upwards: endpoint must be closed
        ny = y + 1
        if ny <= grid.height and not grid.is_open(z, ny):
            node = (z, ny)
            if node not in visited:
                if node == goal:
                    count += 1  # paths have distinct vertices: nothing past the goal counts
                else:
                    visited.add(node)
                    count += dfs(z, ny)
                    visited.remove(node)
        # steps down-diagonal: endpoint state unconstrained
        ny = y - 1
        if ny >= 0:
            for nz in ((z - 1) % w, (z + 1) % w):
                node = (nz, ny)
                if node in visited:
                    continue
                if node == goal:
                    count += 1
                else:
                    visited.add(node)
                    count += dfs(nz, ny)
                    visited.remove(node)
        return count

    return dfs(*start)


# ---------------------------------------------------------------------------
# Serialization: run-length-encoded grids, integer-array surfaces
# ---------------------------------------------------------------------------


def write_grid_rle(grid: SiteGrid, fh: IO[str]) -> None:
    """Header ``W H d p seed`` then run-length tokens ``<bit>x<len>`` over the
    row-major (z outer, h inner) bit sequence."""
    fh.write(f"{grid.width} {grid.height} {grid.d} {grid.p!r} {grid.seed}\n")
    flat = grid.open_sites.reshape(-1)
    runs: list[str] = []
    idx = 0
    n = flat.size
    while idx < n:
        bit = flat[idx]
        j = idx + 1
        while j < n and flat[j] == bit:
            j += 1
        runs.append(f"{int(bit)}x{j - idx}")
        idx = j
    fh.write(" ".join(runs) + "\n")


def read_grid_rle(fh: IO[str]) -> SiteGrid:
    header = fh.readline().split()
    w, hmax, d = int(header[0]), int(header[1]), int(header[2])
    p, seed = float(header[3]), int(header[4])
    bits: list[bool] = []
    for token in fh.readline().split():
        bit, count = token.split("x")
        bits.extend([bit == "1"] * int(count))
    arr = np.array(bits, dtype=bool).reshape(w, hmax)
    return SiteGrid(width=w, height=hmax, d=d, open_sites=arr, p=p, seed=seed)


def write_surface(surface: LipschitzSurface | None, fh: IO[str]) -> None:
    if surface is None:
        fh.write("NOSURFACE\n")
    else:
        fh.write(" ".join(str(h) for h in surface.phi) + "\n")


def read_surface(fh: IO[str]) -> LipschitzSurface | None:
    line = fh.readline().strip()
    if line == "NOSURFACE":
        return None
    return LipschitzSurface(phi=tuple(int(tok) for tok in line.split()))
