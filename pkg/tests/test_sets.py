from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simplexlab.errors import InfeasibleDensity
from simplexlab.sets import (GridSet, build, empty, encode_runs, explicit, full, membership,
                             random_set, shell, subcube)
from simplexlab.simplex import ProductShape

S1 = ProductShape((1,))
S11 = ProductShape((1, 1))


def test_full_and_empty():
    assert full(S1, 8).measure == 1
    assert empty(S1, 8).measure == 0
    assert full(S11, 4).cells.shape == (4, 4, 4, 4)


def test_subcube_side():
    A = subcube(S1, 64, 0.3)
    assert A.measure == Fraction(35 * 35, 64 * 64)
    assert membership(A, [0.5, 0.5])
    assert not membership(A, [0.56, 0.1])


def test_density_out_of_range():
    with pytest.raises(InfeasibleDensity):
        subcube(S1, 8, 1.5)
    with pytest.raises(InfeasibleDensity):
        random_set(S1, 8, 0.0)


def test_cell_boundary_semantics():
    A = subcube(S1, 16, 0.25)
    assert A.count == 64 and A.measure == Fraction(1, 4)
    assert membership(A, [0.5 - 1e-9, 0.2])
    assert not membership(A, [0.5 + 1e-6, 0.2])
    assert membership(full(S1, 4), [0.3, 0.3])
    assert not membership(full(S1, 4), [-0.1, 0.3])


def test_random_density_binomial_band():
    from scipy import stats
    tail = stats.binom.cdf(round((0.3 - 0.09) * 256) - 1, 256, 0.3) + stats.binom.sf(round((0.3 + 0.09) * 256), 256, 0.3)
    assert tail < 0.01
    out = [abs(random_set(S1, 16, 0.3, seed=s).density - 0.3) > 0.09 for s in range(400)]
    assert np.mean(out) <= 0.01


def test_disjoint_union_additive():
    a = explicit(S1, 8, runs=[[0, 10]])
    b = explicit(S1, 8, runs=[[20, 7]])
    assert (a | b).measure == a.measure + b.measure


def test_hit_rate_matches_density():
    A = random_set(S1, 16, 0.3, seed=9)
    N = 100_000
    pts = np.random.default_rng(0).random((N, 2))
    rate = A.contains(pts).mean()
    assert abs(rate - A.density) <= 4 * np.sqrt(A.density * (1 - A.density) / N)


def test_outside_cube_is_not_member():
    A = full(S1, 4)
    pts = np.array([[0.5, 1.0], [1.0, 1.0], [-1e-12, 0.3], [0.2, 1.0000001], [np.nan, 0.5]])
    assert A.contains(pts).tolist() == [True, True, False, False, False]


def test_random_set_reproducible():
    a = random_set(S1, 32, 0.3, seed=4)
    b = random_set(S1, 32, 0.3, seed=4)
    c = random_set(S1, 32, 0.3, seed=5)
    assert np.array_equal(a.cells, b.cells)
    assert not np.array_equal(a.cells, c.cells)
    assert abs(a.density - 0.3) < 0.05


def test_explicit_and_runs_roundtrip():
    A = random_set(S1, 16, 0.4, seed=1)
    B = explicit(S1, 16, runs=A.to_runs())
    assert np.array_equal(A.cells, B.cells)
    C = explicit(S1, 4, cells=[[0, 0], [3, 2]])
    assert C.count == 2 and membership(C, [0.9, 0.6])
    with pytest.raises(ValueError):
        explicit(S1, 4, cells=[[4, 0]])


def test_lattice_ops():
    a = random_set(S1, 16, 0.3, seed=1)
    b = random_set(S1, 16, 0.3, seed=2)
    assert (a & b).issubset(a)
    assert a.issubset(a | b)
    with pytest.raises(ValueError):
        a | full(S1, 8)


def test_shell_and_build():
    s = shell(S1, 32, 0.02, 0.25)
    assert 0 < s.density < 1
    assert build("full", S1, 8).measure == 1
    assert build({"kind": "subcube", "delta": 0.25}, S1, 8).measure == Fraction(1, 4)
    with pytest.raises(ValueError):
        build({"kind": "blob"}, S1, 8)


def test_resolution_must_be_power_of_two():
    with pytest.raises(ValueError):
        full(S1, 12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 16), st.sampled_from([4, 8, 16]))
def test_runs_cover_exactly_the_cells(seed, R):
    A = random_set(S1, R, 0.5, seed=seed) if R > 4 else full(S1, R)
    runs = encode_runs(A.cells)
    assert sum(l for _, l in runs) == A.count
    assert all(a[0] + a[1] < b[0] for a, b in zip(runs, runs[1:]))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=20))
def test_membership_matches_cell_lookup(points):
    A = random_set(S1, 8, 0.5, seed=3)
    for p in points:
        i, j = (min(int(c * 8), 7) for c in p)
        assert membership(A, p) == bool(A.cells[i, j])
