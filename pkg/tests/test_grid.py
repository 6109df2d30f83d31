import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadprop.errors import SpecError
from quadprop.grid import (
    Grid,
    GridState,
    gaussian,
    hermite,
    interpolation_matrix,
    random_state,
    read_binary,
    read_csv,
    resample,
    soliton,
    write_binary,
    write_csv,
)


def test_gaussian_mass_is_one():
    st_ = gaussian(Grid.uniform(256, 32.0))
    assert st_.mass() == pytest.approx(1.0, abs=1e-10)


def test_shifted_gaussian_centroid():
    g = Grid.uniform(256, 32.0)
    assert abs(gaussian(g, center=2.0).centroid()[0] - 2.0) < g.spacing[0]


def test_hermite_orthonormal():
    g = Grid.uniform(256, 32.0)
    hs = [hermite(g, n).values for n in range(6)]
    gram = np.array([[np.sum(np.conj(a) * b) * g.cell_volume for b in hs] for a in hs])
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-12)


def test_hermite_high_order_is_finite():
    g = Grid.uniform(512, 60.0)
    h = hermite(g, 60)
    assert np.all(np.isfinite(h.values))
    assert h.mass() == pytest.approx(1.0, abs=1e-8)


def test_soliton_profile():
    g = Grid.uniform(128, 30.0)
    s = soliton(g, 2.0, 0.5, center=1.0)
    x = g.axis_points(0)
    np.testing.assert_allclose(np.abs(s.values), 2.0 / np.cosh(2.0 * (x - 1.0)), atol=1e-15)


def test_random_state_is_normalized_and_reproducible():
    g = Grid.uniform(64, 16.0, dimension=2)
    a = random_state(g, np.random.default_rng(9))
    b = random_state(g, np.random.default_rng(9))
    assert a.norm() == pytest.approx(1.0)
    np.testing.assert_array_equal(a.values, b.values)


def test_grid_validation():
    with pytest.raises(SpecError):
        Grid.uniform(100, 10.0)
    with pytest.raises(SpecError):
        Grid.uniform(4, 10.0)
    with pytest.raises(SpecError):
        Grid.uniform(8, 10.0, dimension=4)
    with pytest.raises(SpecError):
        Grid((8,), (0.0,), (-1.0,))


def test_grid_points_and_frequencies():
    g = Grid.uniform(8, 8.0, center=1.0)
    np.testing.assert_allclose(g.axis_points(0), np.arange(-4, 4) + 1.0)
    np.testing.assert_allclose(g.frequencies(0), 2 * np.pi * np.fft.fftfreq(8, 1.0))


def test_with_axis_records_rescaling():
    g = Grid.uniform(16, 8.0)
    h = g.with_axis(0, 1.0, 1.0)
    assert h.spacing == (1.0,)
    assert h.scale_history == ((2.0,),)


def test_state_values_are_read_only():
    s = gaussian(Grid.uniform(16, 8.0))
    with pytest.raises(ValueError):
        s.values[0] = 1.0


def test_state_rejects_shape_mismatch():
    with pytest.raises(SpecError):
        GridState(Grid.uniform(16, 8.0), np.zeros(8, complex))


def test_interpolation_reproduces_band_limited_function():
    n, h = 64, 0.25
    x0 = -n * h / 2
    x = x0 + h * np.arange(n)
    f = lambda z: np.exp(-z ** 2 / 2) * np.cos(1.3 * z)
    targets = np.linspace(-3, 3, 37) + 0.01
    m = interpolation_matrix(n, x0, h, targets)
    np.testing.assert_allclose(m @ f(x), f(targets), atol=1e-12)


def test_interpolation_identity_on_nodes():
    n, h, x0 = 16, 0.5, -4.0
    m = interpolation_matrix(n, x0, h, x0 + h * np.arange(n))
    np.testing.assert_allclose(m, np.eye(n), atol=1e-14)


def test_resample_gaussian_between_grids():
    a = gaussian(Grid.uniform(128, 24.0), center=0.5, momentum=0.7)
    b_grid = Grid((256,), (0.3,), (0.08,))
    out = resample(a, b_grid)
    np.testing.assert_allclose(out.values, gaussian(b_grid, center=0.5, momentum=0.7).values, atol=1e-12)


def test_moments():
    g = Grid.uniform(512, 40.0)
    s = gaussian(g, width=1.0)
    # |phi|^2 has variance width^2 / 2
    assert s.variance()[0] == pytest.approx(0.5, abs=1e-12)
    assert s.sup_norm() == pytest.approx(math.pi ** -0.25, abs=1e-3)
    assert s.lp_norm(2) == pytest.approx(1.0, abs=1e-12)
    assert s.l1_norm() == pytest.approx(math.sqrt(2) * math.pi ** 0.25, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 6), st.floats(-2, 2), st.floats(0.05, 0.5), st.integers(1, 2), st.integers(0, 2 ** 32 - 1))
def test_csv_and_binary_roundtrip(tmp_path_factory, log_n, center, spacing, d, seed):
    g = Grid((2 ** log_n,) * d, (center,) * d, (spacing,) * d)
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    s = GridState(g, vals, 0.0)
    tmp = tmp_path_factory.mktemp("io")
    write_binary(s, tmp / "s.bin")
    back = read_binary(tmp / "s.bin")
    assert back.grid.same_points(g)
    np.testing.assert_array_equal(back.values, vals)
    write_csv(s, tmp / "s.csv")
    back = read_csv(tmp / "s.csv", grid=g)
    np.testing.assert_array_equal(back.values, vals)


def test_binary_header_layout(tmp_path):
    g = Grid((8,), (0.5,), (0.25,))
    write_binary(GridState(g, np.ones(8, complex)), tmp_path / "s.bin")
    blob = (tmp_path / "s.bin").read_bytes()
    assert blob[:4] == b"QPRD"
    assert len(blob) == 4 + 8 + (4 + 16) + 8 * 16


def test_binary_bad_magic(tmp_path):
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(SpecError):
        read_binary(tmp_path / "bad.bin")


def test_csv_grid_inference(tmp_path):
    g = Grid.uniform(16, 8.0, center=0.5)
    s = gaussian(g)
    write_csv(s, tmp_path / "g.csv")
    back = read_csv(tmp_path / "g.csv")
    assert back.grid.same_points(g)
