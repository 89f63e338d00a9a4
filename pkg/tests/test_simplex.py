import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simplexlab.errors import DegenerateSimplex, DimensionMismatch
from simplexlab.simplex import (ProductShape, equilateral_simplex, preset, product_shape,
                                right_simplex, validate_simplex)


def rebuild_units(s):
    """Reconstruct u^j from beta and rho via an explicit orthonormal frame."""
    k = s.k
    E = np.eye(k)
    u = [E[0]]
    frame = [E[0]]
    for j in range(1, k):
        c = sum(s.beta[j, m] * u[m] for m in range(j))
        e = E[j]  # a fresh direction orthogonal to the earlier frame
        u.append(c + s.residual_radii[j] * e)
        frame.append(e)
    return np.array(u)


def test_segment_geometry(segment):
    assert segment.k == 1
    assert segment.diameter == pytest.approx(1.0)
    assert segment.residual_radii[0] == 1.0


def test_equilateral_gram(triangle):
    assert np.allclose(triangle.gram, [[1, 0.5], [0.5, 1]])
    # second direction sits at 60 degrees to the first
    assert triangle.beta[1, 0] == pytest.approx(0.5)
    assert triangle.residual_radii[1] == pytest.approx(math.sqrt(3) / 2)


def test_right_triangle_orthogonal(right_triangle):
    assert right_triangle.beta[1, 0] == pytest.approx(0.0)
    assert right_triangle.residual_radii[1] == pytest.approx(1.0)
    assert right_triangle.diameter == pytest.approx(math.sqrt(2))


def test_beta_rho_reproduce_gram(tetra):
    U = rebuild_units(tetra)
    G = (U * tetra.norms[:, None]) @ (U * tetra.norms[:, None]).T
    assert np.allclose(G, tetra.gram, atol=1e-12)


def test_degenerate_rejected():
    with pytest.raises(DegenerateSimplex):
        validate_simplex([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(DegenerateSimplex):
        validate_simplex([[0.0]])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_simplex([[1.0, 0.0]])
    with pytest.raises(DimensionMismatch):
        validate_simplex([])


def test_product_shape_counts():
    sh = ProductShape((1, 2))
    assert sh.kappa == 6
    assert sh.varrho == 1 * 3 + 2 * 4
    assert sh.ambient_dim == 4 + 9
    assert sh.point_dim == 2 + 3
    sh2 = product_shape([right_simplex(1), equilateral_simplex(2)])
    assert sh2 == sh


def test_presets():
    assert preset("right", 3).k == 3
    with pytest.raises(ValueError):
        preset("square", 2)


def test_embedded_last_coordinate_zero(tetra):
    E = tetra.embedded()
    assert E.shape == (3, 4)
    assert np.all(E[:, -1] == 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10_000))
def test_gram_invariant_under_frame(k, seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(k, k)) + 2 * np.eye(k)
    s = validate_simplex(V)
    U = rebuild_units(s)
    G = (U * s.norms[:, None]) @ (U * s.norms[:, None]).T
    assert np.allclose(G, s.gram, atol=1e-8 * max(1.0, np.abs(s.gram).max()))
    assert np.all(s.residual_radii > 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10_000))
def test_permutation_preserves_volume(k, seed):
    rng = np.random.default_rng(seed)
    s = validate_simplex(rng.normal(size=(k, k)) + 2 * np.eye(k))
    order = rng.permutation(k)
    p = s.permuted(order)
    assert np.allclose(np.sort(p.norms), np.sort(s.norms))
    assert np.linalg.det(p.gram) == pytest.approx(np.linalg.det(s.gram), rel=1e-9)
