import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from uphill.grid import (build_grid, convolve, convolve_boundary, get_kernel, kernel_stencil,
                         kernel_weights, read_profile_csv, reflect_odd, write_profile_csv)


def test_kernel_normalized_against_quad():
    k = get_kernel()
    total, _ = quad(lambda t: float(k(t)), -1, 1, epsabs=1e-14)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert k(1.0) == 0.0 and k(-1.3) == 0.0
    # peak = e^{-1} / int exp(-1/(1-t^2)) dt, with the integral 0.443993816168...
    assert k.peak == pytest.approx(np.exp(-1) / 0.44399381616807865, rel=1e-12)


def test_unknown_kernel():
    with pytest.raises(ValueError):
        get_kernel("gauss")


def test_grid_arithmetic():
    g = build_grid(0.1, 0.1)
    assert g.size == 200
    assert g.nodes[0] == pytest.approx(-9.95) and g.nodes[-1] == pytest.approx(9.95)
    assert build_grid(0.02, 0.05).size == 2000
    assert np.allclose(g.nodes, -g.nodes[::-1], atol=1e-13, rtol=0)
    assert not np.any(g.nodes == 0.0)
    assert g.band == 10


def test_grid_rejects_incommensurate_dx():
    with pytest.raises(ValueError):
        build_grid(0.02, 0.03)


def test_stencil_symmetric_and_normalized():
    s = kernel_stencil(get_kernel(), 0.05)
    assert s.size == 41
    assert np.allclose(s, s[::-1], atol=0)
    assert s.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(s >= 0)


SMALL_W = kernel_weights(get_kernel(), build_grid(0.1, 0.1))


@pytest.fixture(scope="module")
def w():
    return SMALL_W


def test_interior_row_sums(w):
    rows = np.asarray(w.matrix().sum(axis=1)).ravel()
    n = w.band
    assert np.allclose(rows[n:-n], 1.0, atol=1e-10)


def test_convolve_constants_and_indicator(w):
    x = w.grid.nodes
    out = convolve(w, np.full(x.size, 0.3))
    interior = np.abs(x) < x[-1] - 1
    assert np.allclose(out[interior], 0.3, atol=1e-13)
    ind = (x > 0).astype(float)
    i = np.argmin(np.abs(x - 2.05))
    assert convolve(w, ind)[i] == pytest.approx(1.0, abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=100, max_size=100))
def test_convolve_preserves_antisymmetry(half):
    m = reflect_odd(np.array(half))
    out = convolve(SMALL_W, m)
    assert np.allclose(out, -out[::-1], atol=1e-14)


def test_convolve_matches_dense_matrix(w):
    rng = np.random.default_rng(0)
    m = rng.uniform(-1, 1, w.grid.size)
    assert np.allclose(convolve(w, m), w.matrix() @ m, atol=1e-14)


def test_convolve_boundary(w):
    bm = w.boundary_mass()
    mu = 0.8
    out = convolve_boundary(w, bm, np.full(w.grid.size, mu), mu, mu)
    assert np.allclose(out, mu, atol=1e-13)
    rng = np.random.default_rng(1)
    m = rng.uniform(-1, 1, w.grid.size)
    far = np.abs(w.grid.nodes) < w.grid.nodes[-1] - 1
    assert np.array_equal(convolve_boundary(w, bm, m, mu, -mu)[far], convolve(w, m)[far])


def test_shape_check(w):
    with pytest.raises(ValueError):
        convolve(w, np.zeros(3))


def test_profile_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    x = np.sort(rng.normal(size=50))
    m = rng.uniform(-1, 1, 50) * 1e-7 + np.pi / 10
    path = tmp_path / "p.csv"
    write_profile_csv(path, x, m)
    x2, m2 = read_profile_csv(path)
    assert np.array_equal(x, x2) and np.array_equal(m, m2)
    assert path.read_text().splitlines()[0] == "x,m"
