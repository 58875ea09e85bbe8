import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from spectral_causal.errors import ArgumentError
from spectral_causal.model import LdimSpec, SpectralMatrixField, closed_form_psd
from spectral_causal.simulate import ArSpec, TimeSeriesPanel, ar_to_ldim, simulate_ar, simulate_circular
from spectral_causal.spectral import (
    SpectralEnsemble,
    estimate_psd_correlogram,
    estimate_psd_ensemble,
    fourier_coeff_bv,
    inverse_segment_fft,
    invert_psd,
    segment_fft,
    taper,
)
from spectral_causal.zoo import six_node_ar


def seg(x):
    return TimeSeriesPanel(np.asarray(x, float), "segmented")


def test_constant_segment():
    ens = segment_fft(seg(np.full((1, 16, 1), 2.5)))
    want = np.zeros(16, complex)
    want[0] = 4 * 2.5
    assert np.allclose(ens.coeffs[0, 0], want, atol=1e-12)


def test_cosine_bins():
    N, k0 = 32, 5
    t = np.arange(N)
    ens = segment_fft(seg(np.cos(2 * np.pi * k0 * t / N)[None, :, None]))
    mag = np.abs(ens.coeffs[0, 0])
    assert mag[k0] == pytest.approx(np.sqrt(N) / 2)
    assert mag[N - k0] == pytest.approx(np.sqrt(N) / 2)
    mag[[k0, N - k0]] = 0
    assert np.allclose(mag, 0, atol=1e-12)


@given(st.integers(0, 10_000))
def test_parseval_and_inverse(seed):
    x = np.random.default_rng(seed).normal(size=(3, 32, 2))
    ens = segment_fft(seg(x))
    assert np.allclose(np.sum(x**2, axis=1), np.sum(np.abs(ens.coeffs) ** 2, axis=2), rtol=1e-9)
    assert np.max(np.abs(inverse_segment_fft(ens) - x)) < 1e-10


def test_segment_fft_layout_and_length_checks():
    with pytest.raises(ArgumentError):
        segment_fft(TimeSeriesPanel(np.zeros((1, 16, 1)), "streaming"))
    with pytest.raises(ArgumentError):
        segment_fft(seg(np.zeros((2, 12, 1))))


def test_taper_unit_power():
    for name in (None, "hann", "hamming"):
        w = taper(name, 64)
        assert np.mean(w**2) == pytest.approx(1.0)
    with pytest.raises(ArgumentError):
        taper("no-such-window", 8)


def test_correlogram_white_noise():
    panel = simulate_ar(ArSpec(np.zeros((2, 1)), np.zeros((2, 2)), np.ones(2)), 100_000, seed=0)
    phi = estimate_psd_correlogram(panel, 0, 16).phi
    assert np.allclose(phi, np.eye(2), atol=0.05)
    # one lag term only: flat in frequency
    assert np.allclose(phi, phi[0], atol=1e-14)


def test_correlogram_ar1_at_dc():
    # x(t) = 0.5 x(t-1) + e(t)
    panel = simulate_ar(ArSpec(np.array([[-0.5]]), np.zeros((1, 1)), np.ones(1)), 100_000, seed=1)
    phi = estimate_psd_correlogram(panel, 50, 64).phi
    assert phi[0, 0, 0].real == pytest.approx(4.0, rel=0.1)


def test_correlogram_orientation_matches_closed_form():
    spec = ArSpec(np.zeros((2, 1)), np.array([[0, 0], [0.9, 0]]), np.ones(2))
    phi = estimate_psd_correlogram(simulate_ar(spec, 200_000, seed=2), 4, 16).phi
    true = closed_form_psd(ar_to_ldim(spec, 16)).phi
    assert np.max(np.abs(phi - true)) < 0.05
    assert np.max(np.abs(phi - np.conj(true))) > 0.5


def test_ensemble_white_noise_identity():
    spec = LdimSpec(np.zeros((16, 3, 3)), np.ones((3, 16)))
    phi = estimate_psd_ensemble(segment_fft(simulate_circular(spec, 10_000, seed=0))).phi
    assert np.allclose(phi, np.eye(3), atol=0.05)


def test_ensemble_single_segment_exact():
    X = np.random.default_rng(0).normal(size=(1, 1, 8)) + 1j
    phi = estimate_psd_ensemble(SpectralEnsemble(X)).phi
    assert np.allclose(phi[:, 0, 0], np.abs(X[0, 0]) ** 2)


@given(st.integers(0, 10_000), st.integers(1, 5))
def test_ensemble_psd_nonnegative(seed, R):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(R, 4, 8)) + 1j * rng.normal(size=(R, 4, 8))
    lam = np.linalg.eigvalsh(estimate_psd_ensemble(SpectralEnsemble(X)).phi)
    assert lam.min() > -1e-12 * max(1.0, lam.max())


def test_ensemble_error_rate_sqrt_r():
    spec = ar_to_ldim(six_node_ar(), 16)
    true = closed_form_psd(spec).phi

    def err(R, seeds):
        out = []
        for s in seeds:
            est = estimate_psd_ensemble(segment_fft(simulate_circular(spec, R, seed=s))).phi
            out.append(np.mean(np.abs(est - true)))
        return np.mean(out)

    ratio = err(400, range(6)) / err(1600, range(6, 12))
    assert 2 * 0.7 <= ratio <= 2 * 1.3


def test_correlogram_agrees_with_ensemble_on_long_stream():
    panel = simulate_ar(six_node_ar(), 100_000, seed=3)
    cor = estimate_psd_correlogram(panel, 63, 64).phi
    ens = estimate_psd_ensemble(segment_fft(panel.resegment(64))).phi
    # max-norm of the difference relative to the max-norm of the field
    assert np.max(np.abs(cor - ens)) / np.max(np.abs(ens)) < 0.1


def test_invert_psd_examples():
    ident = SpectralMatrixField(np.tile(np.eye(2, dtype=complex), (4, 1, 1)))
    assert np.allclose(invert_psd(ident).phi, np.eye(2))
    diag = SpectralMatrixField(np.tile(np.diag([2.0, 4.0]).astype(complex), (4, 1, 1)))
    assert np.allclose(invert_psd(diag).phi, np.diag([0.5, 0.25]))
    v = np.array([1.0, 2.0])
    rank1 = SpectralMatrixField(np.tile(np.outer(v, v).astype(complex), (4, 1, 1)))
    out = invert_psd(rank1, floor=1e-6)
    assert set(out.flags) == {0, 1, 2, 3}
    assert np.all(np.isfinite(out.phi))


def test_fourier_trivial_cases():
    N = 64
    w = 2 * np.pi * np.arange(N) / N
    ones = np.ones(N)
    assert fourier_coeff_bv(ones, 0) == pytest.approx(2 * np.pi)
    for n in range(1, 9):
        assert abs(fourier_coeff_bv(ones, n)) < 1e-12
        assert abs(fourier_coeff_bv(ones, -n)) < 1e-12
    shift = np.exp(-1j * w)
    assert fourier_coeff_bv(shift, 1) == pytest.approx(2 * np.pi)
    assert all(abs(fourier_coeff_bv(shift, n)) < 1e-12 for n in range(-8, 9) if n != 1)
    assert fourier_coeff_bv(shift, 9) == 0  # out of band


def sawtooth_coeff(n):
    """``int_0^{2pi} w e^{jwn} dw`` by adaptive quadrature."""
    re = integrate.quad(lambda w: w * np.cos(w * n), 0, 2 * np.pi, limit=400)[0]
    im = integrate.quad(lambda w: w * np.sin(w * n), 0, 2 * np.pi, limit=400)[0]
    return complex(re, im)


def sawtooth_errors(Ns):
    cache = {}
    out = []
    for N in Ns:
        w = 2 * np.pi * np.arange(N) / N
        band = int(np.floor(np.sqrt(N)))
        errs = []
        for n in range(-band, band + 1):
            if n not in cache:
                cache[n] = sawtooth_coeff(n)
            errs.append(abs(cache[n] - fourier_coeff_bv(w, n)))
        out.append(max(errs))
    return np.array(out)


def test_sawtooth_quadrature_oracle_matches_closed_form():
    assert sawtooth_coeff(0) == pytest.approx(2 * np.pi**2)
    for n in (1, -3, 7):
        assert sawtooth_coeff(n) == pytest.approx(-2j * np.pi / n, abs=1e-9)


def test_sawtooth_error_decay_rate():
    Ns = [64, 256, 1024, 4096, 16384]
    errs = sawtooth_errors(Ns)
    slope = np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    assert -1.3 <= slope <= -0.45
