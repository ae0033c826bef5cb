import io
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinning.percolation import (
    BruteForceBudgetExceeded,
    DivergentBound,
    LipschitzSurface,
    admissible_path_bound,
    brute_force_minimal_surface,
    critical_probability,
    enumerate_admissible_paths,
    generate_grid_blocked,
    generate_grid_iid,
    grid_from_open_array,
    minimal_open_surface,
    read_grid_rle,
    read_surface,
    write_grid_rle,
    write_surface,
)


class TestGenerators:
    def test_extreme_probabilities(self):
        assert generate_grid_iid(6, 6, 1.0, seed=0).open_sites.all()
        assert not generate_grid_iid(6, 6, 0.0, seed=0).open_sites.any()

    def test_open_fraction(self):
        grid = generate_grid_iid(100, 100, 0.7, seed=3)
        frac = grid.open_sites.mean()
        assert abs(frac - 0.7) <= 3 * math.sqrt(0.21 / 10**4)

    def test_blocked_d1_equals_iid(self):
        a = generate_grid_iid(20, 15, 0.6, seed=9)
        b = generate_grid_blocked(20, 15, 0.6, 1, seed=9)
        assert (a.open_sites == b.open_sites).all()

    def test_blocks_share_value_within_column(self):
        grid = generate_grid_blocked(30, 9, 0.5, 3, seed=4)
        for z in range(30):
            col = grid.open_sites[z]
            assert col[0] == col[1] == col[2]
            assert col[3] == col[4] == col[5]
            assert col[6] == col[7] == col[8]

    def test_cross_block_independence(self):
        # open(z, 1) and open(z, 4) sit in distinct blocks for d = 3
        grid = generate_grid_blocked(4000, 6, 0.5, 3, seed=11)
        a = grid.open_sites[:, 0].astype(float)
        b = grid.open_sites[:, 3].astype(float)
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) <= 3 / math.sqrt(len(a))


class TestMinimalSurface:
    def test_all_open_is_floor(self):
        grid = grid_from_open_array(np.ones((5, 4), dtype=bool))
        assert minimal_open_surface(grid).phi == (1, 1, 1, 1, 1)

    def test_single_closed_site_pushes_up(self):
        arr = np.ones((3, 3), dtype=bool)
        arr[0, 0] = False
        surface = minimal_open_surface(grid_from_open_array(arr))
        assert surface.phi == (2, 1, 1)

    def test_all_closed_has_no_surface(self):
        grid = grid_from_open_array(np.zeros((4, 3), dtype=bool))
        assert minimal_open_surface(grid) is None
        assert brute_force_minimal_surface(grid) is None

    @pytest.mark.parametrize("p", [0.5, 0.7, 0.9])
    def test_matches_brute_force(self, p):
        rng = random.Random(hash(p) & 0xFFFF)
        for _ in range(80):
            w, h = rng.randint(1, 5), rng.randint(1, 5)
            d = rng.choice([1, 3])
            grid = generate_grid_blocked(w, h, p, d, seed=rng.randrange(2**30))
            fast = minimal_open_surface(grid)
            slow = brute_force_minimal_surface(grid)
            assert (fast is None) == (slow is None)
            if fast is not None:
                assert fast.phi == slow.phi

    def test_opening_sites_never_raises_surface(self):
        rng = random.Random(8)
        grid = generate_grid_iid(8, 8, 0.75, seed=5)
        before = minimal_open_surface(grid)
        arr = grid.open_sites.copy()
        closed = np.argwhere(~arr)
        for z, hidx in rng.sample(list(map(tuple, closed)), min(5, len(closed))):
            arr[z, hidx] = True
        after = minimal_open_surface(grid_from_open_array(arr))
        if before is not None:
            assert after is not None
            assert all(a <= b for a, b in zip(after.phi, before.phi))

    def test_sweep_order_does_not_matter(self):
        rng = random.Random(13)
        for trial in range(30):
            grid = generate_grid_iid(7, 6, 0.7, seed=trial)
            base = minimal_open_surface(grid)
            order = list(range(7))
            rng.shuffle(order)
            shuffled = minimal_open_surface(grid, sweep_order=order)
            assert (base is None) == (shuffled is None)
            if base is not None:
                assert base.phi == shuffled.phi

    def test_budget_guard(self):
        grid = generate_grid_iid(30, 30, 0.5, seed=0)
        with pytest.raises(BruteForceBudgetExceeded):
            brute_force_minimal_surface(grid)

    def test_success_frequency_grows_with_p(self):
        # sufficient-threshold statement only: the found-rate over a fixed
        # seed set must be nondecreasing across p within 2 SE
        rates = []
        n = 60
        for p in (0.80, 0.875, 0.95):
            found = sum(
                1 for s in range(n)
                if minimal_open_surface(generate_grid_iid(100, 50, p, seed=s)) is not None
            )
            rates.append(found / n)
        for a, b in zip(rates, rates[1:]):
            se = math.sqrt(a * (1 - a) / n + b * (1 - b) / n)
            assert b >= a - 2 * se, rates
        assert rates[-1] == 1.0

    def test_surface_validate(self):
        grid = grid_from_open_array(np.ones((4, 3), dtype=bool))
        LipschitzSurface((1, 2, 3, 2)).validate(grid)
        with pytest.raises(ValueError):
            LipschitzSurface((1, 3, 1, 1)).validate(grid)


class TestBounds:
    def test_critical_probability_goldens(self):
        assert critical_probability(1, 1) == 0.875
        assert critical_probability(1, 6) == 1.0 - 8.0 ** -6
        assert critical_probability(2, 1) == 0.9375

    def test_path_bound_hand_values(self):
        assert admissible_path_bound(1, 0, 0.01, 1, 1) == pytest.approx(0.02 / 0.92, rel=1e-12)
        assert admissible_path_bound(1, 0, 0.0, 1, 1) == 0.0
        expected = 2.0 ** 2 * 0.01 ** 2 * (8 * 0.01) ** 1 / (1 - 8 * 0.01)
        assert admissible_path_bound(2, 1, 0.01, 1, 1) == pytest.approx(expected, rel=1e-12)

    def test_path_bound_divergent(self):
        with pytest.raises(DivergentBound):
            admissible_path_bound(1, 0, 0.2, 1, 1)

    def test_counts_all_open_grid(self):
        grid = grid_from_open_array(np.ones((5, 4), dtype=bool))
        assert enumerate_admissible_paths(grid, 0, 2) == 0

    def test_counts_straight_vertical(self):
        arr = np.ones((5, 4), dtype=bool)
        arr[0, :] = False
        grid = grid_from_open_array(arr)
        assert enumerate_admissible_paths(grid, 0, 3) == 1

    @pytest.mark.parametrize("q,d", [(0.01, 1), (0.001, 3)])
    def test_mc_mean_below_bound(self, q, d):
        p = 1.0 - q
        trials = 400
        for h, z in [(1, 0), (2, 0), (1, 1)]:
            bound = admissible_path_bound(h, z, q, 1, d)
            counts = [
                enumerate_admissible_paths(generate_grid_blocked(7, 5, p, d, seed=s), z, h)
                for s in range(trials)
            ]
            mean = sum(counts) / trials
            var = sum((c - mean) ** 2 for c in counts) / max(trials - 1, 1)
            se = math.sqrt(var / trials)
            assert mean <= bound + 3 * se + 1e-12


class TestSerialization:
    def test_grid_round_trip(self):
        grid = generate_grid_blocked(17, 9, 0.45, 3, seed=21)
        buf = io.StringIO()
        write_grid_rle(grid, buf)
        buf.seek(0)
        loaded = read_grid_rle(buf)
        assert (loaded.open_sites == grid.open_sites).all()
        assert (loaded.width, loaded.height, loaded.d) == (17, 9, 3)
        assert loaded.p == grid.p and loaded.seed == grid.seed

    def test_surface_round_trip(self):
        buf = io.StringIO()
        write_surface(LipschitzSurface((1, 2, 1)), buf)
        write_surface(None, buf)
        buf.seek(0)
        assert read_surface(buf).phi == (1, 2, 1)
        assert read_surface(buf) is None


@settings(max_examples=50)
@given(
    st.integers(min_value=1, max_value=4),
    st.integers(min_value=1, max_value=4),
    st.sampled_from([0.4, 0.7, 0.9]),
    st.sampled_from([1, 2, 3]),
    st.integers(min_value=0, max_value=2**30),
)
def test_push_up_is_minimal(width, height, p, d, seed):
    grid = generate_grid_blocked(width, height, p, d, seed=seed)
    fast = minimal_open_surface(grid)
    slow = brute_force_minimal_surface(grid)
    assert (fast is None) == (slow is None)
    if fast is not None:
        assert fast.phi == slow.phi
        fast.validate(grid)
