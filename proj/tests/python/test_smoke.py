import math

import numpy as np
import pytest

import specklepair as sp


def test_version():
    assert sp.version() == "0.1.0"
    assert sp.__version__ == sp.version()


def test_centered_dft_roundtrip_and_unitarity():
    rng = np.random.default_rng(7)
    field = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    spectrum = sp.centered_dft(field, forward=True)
    assert spectrum.shape == field.shape
    # Unitary: power preserved.
    assert math.isclose(
        float(np.sum(np.abs(spectrum) ** 2)),
        float(np.sum(np.abs(field) ** 2)),
        rel_tol=1e-12,
    )
    back = sp.centered_dft(spectrum, forward=False)
    assert np.allclose(back, field, atol=1e-12)


def test_fourier_2f_pitch():
    n, pitch = 32, 0.01
    values = np.zeros((n, n), dtype=complex)
    values[n // 2, n // 2] = 1.0
    out, out_pitch = sp.fourier_2f(values, pitch)
    assert out.shape == (n, n)
    assert math.isclose(out_pitch, 1.0 / (n * pitch), rel_tol=1e-12)
    # A centered delta maps to a flat spectrum.
    assert np.allclose(np.abs(out), np.abs(out[0, 0]), rtol=1e-10)


def test_make_diffuser_deterministic():
    a = sp.make_diffuser(64, 0.01, 0.08, seed=11)
    b = sp.make_diffuser(64, 0.01, 0.08, seed=11)
    c = sp.make_diffuser(64, 0.01, 0.08, seed=12)
    assert a.shape == (64, 64)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(np.abs(a) <= np.pi + 1e-12)


def test_reconstruct_4phase_exact():
    rng = np.random.default_rng(3)
    ref = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    mode = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    frames = [np.abs(ref + 1j**k * mode) ** 2 for k in range(4)]
    z = sp.reconstruct_4phase(*frames)
    assert np.allclose(z, np.conj(ref) * mode, atol=1e-12)


def test_schmidt_number_values():
    assert sp.schmidt_number(0.707, 38.8) == pytest.approx(86.18, abs=0.01)
    assert sp.schmidt_number(0.796, 37.0) == pytest.approx(92.52, abs=0.01)


def test_schmidt_spectrum_geometric():
    lambdas, captured, k_svd = sp.schmidt_spectrum(
        1.0, 5.0, n=256, pitch_mm=0.0056, n_modes=64
    )
    assert lambdas[0] > lambdas[1] > 0
    assert 0.99 < captured <= 1.0
    assert k_svd == pytest.approx(5.0, rel=0.02)
    # Successive probabilities follow the geometric law (K-1)/(K+1).
    ratio = lambdas[1] / lambdas[0]
    assert ratio == pytest.approx(4.0 / 6.0, rel=0.02)


def test_walsh_orthogonality():
    m = 16
    rows = np.array([sp.walsh_vector(m, k) for k in range(m)])
    assert np.allclose(rows @ rows.T, m * np.eye(m))
    # Sequency ordering: sign-change count equals the row index.
    changes = np.sum(rows[:, 1:] != rows[:, :-1], axis=1)
    assert np.array_equal(changes, np.arange(m))
