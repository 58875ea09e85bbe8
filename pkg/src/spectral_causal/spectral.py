"""Frequency-domain views of panels: segment DFTs, PSD estimators, PSD
inversion and the band-limited Fourier-coefficient estimator.

All DFTs are unitary: ``X(w_k) = N^{-1/2} sum_t x(t) e^{-j w_k t}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import ArgumentError, StructuralError
from .model import FrequencyGrid, SpectralMatrixField
from .simulate import TimeSeriesPanel


@dataclass(frozen=True)
class SpectralEnsemble:
    """DFT coefficients ``coeffs[r, i, k]`` of segment r, node i, bin k."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3:
            raise StructuralError(f"coeffs must be (R, n, N), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def R(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.coeffs.shape[2])


def taper(name: str | None, N: int) -> np.ndarray:
    """Periodic window scaled to unit mean square (``None`` is the boxcar)."""
    if name is None or name == "boxcar":
        return np.ones(N)
    try:
        w = scipy.signal.get_window(name, N, fftbins=True)
    except ValueError as exc:
        raise ArgumentError(f"unknown window {name!r}") from exc
    return w / np.sqrt(np.mean(w**2))


def segment_fft(panel: TimeSeriesPanel, window: str | None = None) -> SpectralEnsemble:
    """Unitary N-point DFT of every segment of a segmented panel.

    An optional taper (e.g. ``"hann"``), scaled to unit mean square, is applied
    to each segment first; it trades a little variance for much less leakage
    when streaming data is cut into segments.
    """
    if panel.layout != "segmented":
        raise ArgumentError("segment_fft needs a segmented panel (use panel.resegment(N))")
    N = panel.segment_length
    if N < 2 or N & (N - 1):
        raise ArgumentError(f"segment length must be a power of two, got {N}")
    w = taper(window, N)
    X = np.fft.fft(panel.values * w[None, :, None], axis=1) / np.sqrt(N)
    return SpectralEnsemble(np.transpose(X, (0, 2, 1)))


def inverse_segment_fft(ens: SpectralEnsemble) -> np.ndarray:
    """Time-domain segments ``(R, N, n)`` back from an ensemble."""
    N = ens.grid.num_bins
    x = np.fft.ifft(ens.coeffs, axis=2) * np.sqrt(N)
    return np.transpose(x.real, (0, 2, 1))


def estimate_psd_ensemble(ens: SpectralEnsemble) -> SpectralMatrixField:
    """Segment average ``(1/R) sum_r X^r (X^r)^H`` per bin."""
    X = ens.coeffs
    phi = np.einsum("rak,rbk->kab", X, X.conj()) / ens.R
    return SpectralMatrixField(phi)


def estimate_psd_correlogram(panel: TimeSeriesPanel, L: int, num_bins: int) -> SpectralMatrixField:
    """Lag-window correlogram on an N-point grid.

    ``Rhat(k) = 1/(T-k) sum_l x(l) x(l+k)^T`` for ``0 <= k <= L`` with
    ``Rhat(-k) = Rhat(k)^T``. The transform is oriented so that
    ``phi[a, b]`` estimates ``E[X_a conj(X_b)]`` like the ensemble estimator.
    """
    x = panel.stream()
    T, n = x.shape
    if not 0 <= L < T:
        raise ArgumentError(f"need 0 <= L < T, got L={L}, T={T}")
    w = 2 * np.pi * np.arange(num_bins) / num_bins
    phi = np.zeros((num_bins, n, n), dtype=complex)
    for k in range(L + 1):
        Rk = x[: T - k].T @ x[k:] / (T - k)  # Rk[a, b] = mean x_a(l) x_b(l+k)
        if k == 0:
            phi += Rk[None]
        else:
            # E[X_a conj X_b] picks up Rk[b, a] at e^{-jwk} and Rk[a, b] at e^{+jwk}
            phi += np.exp(-1j * w * k)[:, None, None] * Rk.T[None]
            phi += np.exp(1j * w * k)[:, None, None] * Rk[None]
    phi = 0.5 * (phi + np.conj(np.swapaxes(phi, 1, 2)))
    return SpectralMatrixField(phi)


def default_floor(phi: np.ndarray) -> np.ndarray:
    """Per-bin eigenvalue floor ``1e-8 * max diagonal``."""
    return 1e-8 * np.max(np.real(np.einsum("kii->ki", phi)), axis=1)


def regularize(phi: np.ndarray, floor=None) -> tuple[np.ndarray, np.ndarray]:
    """Add ``floor * I`` to bins whose smallest eigenvalue is below ``floor``.

    Returns the (possibly) ridged matrices and the boolean mask of touched bins.
    """
    phi = np.asarray(phi)
    N, m, _ = phi.shape
    floor = default_floor(phi) if floor is None else np.broadcast_to(np.asarray(floor, dtype=float), (N,))
    herm = 0.5 * (phi + np.conj(np.swapaxes(phi, 1, 2)))
    lam_min = np.linalg.eigvalsh(herm)[:, 0]
    mask = lam_min < floor
    if mask.any():
        phi = phi.copy()
        phi[mask] += floor[mask, None, None] * np.eye(m)
    return phi, mask


def invert_psd(field: SpectralMatrixField, floor=None) -> SpectralMatrixField:
    """Per-bin inverse, ridging bins whose smallest eigenvalue is below ``floor``."""
    phi, mask = regularize(field.phi, floor)
    inv = np.linalg.inv(phi)
    inv = 0.5 * (inv + np.conj(np.swapaxes(inv, 1, 2)))
    flags = set(field.flags) | set(np.nonzero(mask)[0].tolist())
    return SpectralMatrixField(inv, tuple(flags))


def fourier_coeff_bv(samples, n: int) -> complex:
    """Riemann-sum estimate of ``f(n) = int_0^{2pi} fhat(w) e^{jwn} dw``.

    ``samples[k] = fhat(2 pi k / N)``. Outside the band ``|n| <= sqrt(N)`` the
    estimate is 0.
    """
    f = np.asarray(samples, dtype=complex)
    N = f.size
    if n * n > N:
        return 0j
    k = np.arange(N)
    return complex(2 * np.pi / N * np.sum(f * np.exp(2j * np.pi * n * k / N)))
