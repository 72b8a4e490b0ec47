import json

import numpy as np
import pytest

from pdlab.grid import (
    GridFunction,
    GridSpec,
    SpectralFunction,
    fft_forward,
    fft_inverse,
    from_coeffs,
    grid_function_from_json,
    grid_function_to_json,
    lp_norm,
    random_band_limited,
    read_pdgf,
    single_mode,
    sobolev_norm,
    write_pdgf,
)

TWO_PI = 2 * np.pi


def test_gridspec_validation():
    GridSpec(1, 8)
    GridSpec(2, 64)
    with pytest.raises(ValueError):
        GridSpec(3, 16)
    with pytest.raises(ValueError):
        GridSpec(1, 12)
    with pytest.raises(ValueError):
        GridSpec(1, 4)


def test_constant_function_forward():
    spec = GridSpec(1, 16)
    u = GridFunction(spec, np.ones(16))
    c = fft_forward(u)
    half = spec.N // 2
    assert abs(c.coeffs[half] - 1.0) < 1e-14
    others = np.delete(c.coeffs, half)
    assert np.max(np.abs(others)) < 1e-14


def test_pure_mode_forward():
    spec = GridSpec(1, 16)
    u = single_mode(spec, 3)
    c = fft_forward(u)
    half = spec.N // 2
    assert abs(c.coeffs[half + 3] - 1.0) < 1e-13
    c2 = c.coeffs.copy()
    c2[half + 3] = 0.0
    assert np.max(np.abs(c2)) < 1e-13


def test_pure_mode_2d():
    spec = GridSpec(2, 16)
    c = np.zeros(spec.shape, dtype=complex)
    c[spec.N // 2 + 1, spec.N // 2] = 1.0
    u = fft_inverse(SpectralFunction(spec, c))
    x0, _ = spec.coord_mesh()
    assert np.max(np.abs(u.values - np.exp(1j * x0))) < 1e-13


@pytest.mark.parametrize("n,N", [(1, 64), (1, 256), (2, 16)])
def test_round_trip(n, N):
    rng = np.random.default_rng(7 + N + n)
    spec = GridSpec(n, N)
    u = GridFunction(spec, rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape))
    v = fft_inverse(fft_forward(u))
    assert np.max(np.abs(v.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))


def test_inverse_linearity():
    rng = np.random.default_rng(3)
    spec = GridSpec(1, 32)
    a = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    b = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    lhs = fft_inverse(SpectralFunction(spec, a + b)).values
    rhs = fft_inverse(SpectralFunction(spec, a)).values + fft_inverse(SpectralFunction(spec, b)).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(lhs))


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 7.5])
def test_lp_norm_constant(p):
    spec = GridSpec(1, 16)
    u = GridFunction(spec, np.ones(16))
    assert abs(lp_norm(u, p) - TWO_PI ** (1 / p)) < 1e-12


def test_lp_norm_sup_and_errors():
    spec = GridSpec(1, 16)
    u = GridFunction(spec, np.ones(16))
    assert lp_norm(u, np.inf) == 1.0
    with pytest.raises(ValueError):
        lp_norm(u, 0.0)
    with pytest.raises(ValueError):
        lp_norm(u, -1.0)


def test_quasi_triangle_p_half():
    # ||u+v||_p^p <= ||u||_p^p + ||v||_p^p for p = 1/2
    rng = np.random.default_rng(11)
    spec = GridSpec(1, 64)
    for _ in range(25):
        u = GridFunction(spec, rng.standard_normal(64) + 1j * rng.standard_normal(64))
        v = GridFunction(spec, rng.standard_normal(64) + 1j * rng.standard_normal(64))
        p = 0.5
        lhs = lp_norm(u + v, p) ** p
        rhs = lp_norm(u, p) ** p + lp_norm(v, p) ** p
        assert lhs <= rhs * (1 + 1e-12)


def test_sobolev_norm_examples():
    spec = GridSpec(1, 16)
    c = np.zeros(16, dtype=complex)
    c[8] = 1.0  # eta = 0
    assert abs(sobolev_norm(SpectralFunction(spec, c), 5.0) - np.sqrt(TWO_PI)) < 1e-12
    c = np.zeros(16, dtype=complex)
    c[8 + 3] = 1.0  # eta = 3
    got = sobolev_norm(SpectralFunction(spec, c), 1.0)
    assert abs(got - np.sqrt(TWO_PI * 10)) < 1e-12
    spec2 = GridSpec(2, 8)
    c2 = np.zeros(spec2.shape, dtype=complex)
    c2[4, 4] = 1.0
    assert abs(sobolev_norm(SpectralFunction(spec2, c2), -2.0) - TWO_PI) < 1e-12


def test_parseval_100_random():
    rng = np.random.default_rng(5)
    spec = GridSpec(1, 64)
    for _ in range(100):
        u = GridFunction(spec, rng.standard_normal(64) + 1j * rng.standard_normal(64))
        c = fft_forward(u)
        assert abs(sobolev_norm(c, 0.0) - lp_norm(u, 2.0)) <= 1e-10 * lp_norm(u, 2.0)


def test_sobolev_monotone_in_s():
    rng = np.random.default_rng(9)
    spec = GridSpec(1, 32)
    c = SpectralFunction(spec, rng.standard_normal(32) + 1j * rng.standard_normal(32))
    for s1, s2 in [(-2.0, -1.0), (-1.0, 0.0), (0.0, 0.5), (0.5, 3.0)]:
        assert sobolev_norm(c, s1) <= sobolev_norm(c, s2) * (1 + 1e-15)


def test_nonfinite_rejected():
    spec = GridSpec(1, 8)
    bad = np.ones(8, dtype=complex)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        GridFunction(spec, bad)


def test_from_coeffs_and_band_limited():
    spec = GridSpec(1, 32)
    u = from_coeffs(spec, {2: 1.0, -5: 2j})
    c = fft_forward(u)
    assert abs(c.coeffs[16 + 2] - 1.0) < 1e-13
    assert abs(c.coeffs[16 - 5] - 2j) < 1e-13
    rng = np.random.default_rng(0)
    v = random_band_limited(spec, 4.0, rng)
    cv = fft_forward(v).coeffs
    rad = spec.freq_radius()
    assert np.max(np.abs(cv[rad > 4.0])) < 1e-13


def test_pdgf_round_trip(tmp_path):
    rng = np.random.default_rng(21)
    for spec in [GridSpec(1, 64), GridSpec(2, 8)]:
        u = GridFunction(spec, rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape))
        path = tmp_path / f"u{spec.n}.pdgf"
        write_pdgf(u, path)
        v = read_pdgf(path)
        assert v.spec == u.spec
        assert np.array_equal(v.values, u.values)
        raw = path.read_bytes()
        assert raw[:4] == b"PDGF"
        assert len(raw) == 16 + 16 * spec.npoints


def test_pdgf_bad_magic(tmp_path):
    path = tmp_path / "bad.pdgf"
    path.write_bytes(b"NOPE" + b"\0" * 12)
    with pytest.raises(ValueError):
        read_pdgf(path)


def test_json_round_trip():
    spec = GridSpec(2, 8)
    rng = np.random.default_rng(2)
    u = GridFunction(spec, rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape))
    text = grid_function_to_json(u)
    v = grid_function_from_json(text)
    assert np.allclose(v.values, u.values, rtol=0, atol=0)
    assert json.loads(text)["N"] == 8
