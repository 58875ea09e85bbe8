"""Multivariate Wiener filters, computed three ways.

Convention: ``W_{i.C}(w)`` holds the coefficients of the MMSE predictor
``X_i ~ sum_{j in C} W[j] X_j``. With ``phi[a, b] = E[X_a conj X_b]`` this is the
row-vector solve ``W^T phi_CC = phi_iC`` (transpose of the PSD block), which is
what the three routes below implement:

* ``wiener_from_psd``: per-bin solve on a cross-PSD field;
* ``wiener_freq``: complex least squares over a segment ensemble;
* ``wiener_time``: real least squares over a lagged time-domain design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ArgumentError, ConditioningError, StructuralError
from .model import FrequencyGrid, SpectralMatrixField, _complex_to_json
from .simulate import TimeSeriesPanel
from .spectral import SpectralEnsemble, regularize


@dataclass(frozen=True)
class WienerField:
    """``coeffs[m, k]``: coefficient of ``conditioning[m]`` at bin k."""

    target: int
    conditioning: tuple[int, ...]
    coeffs: np.ndarray
    flags: tuple[int, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if self.target in self.conditioning:
            raise StructuralError("conditioning set must exclude the target")
        if c.shape[0] != len(self.conditioning):
            raise StructuralError("one coefficient row per conditioning node")
        if not np.all(np.isfinite(c)):
            raise ConditioningError("non-finite Wiener coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "conditioning", tuple(int(j) for j in self.conditioning))
        object.__setattr__(self, "flags", tuple(sorted(set(int(b) for b in self.flags))))

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.coeffs.shape[1])

    def __getitem__(self, j: int) -> np.ndarray:
        """Coefficient sequence of node ``j`` over the grid."""
        return self.coeffs[self.conditioning.index(j)]

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "conditioning": list(self.conditioning),
            "coeffs": _complex_to_json(self.coeffs),
            "flags": list(self.flags),
        }


def _validate_sets(n: int, i: int, C) -> tuple[int, ...]:
    C = tuple(int(j) for j in C)
    if not C:
        raise ArgumentError("conditioning set must be non-empty")
    if i in C:
        raise ArgumentError("target must not be in the conditioning set")
    if len(set(C)) != len(C):
        raise ArgumentError("duplicate conditioning nodes")
    for v in (i,) + C:
        if not 0 <= v < n:
            raise ArgumentError(f"node {v} out of range [0, {n})")
    return C


def _solve_normal(G: np.ndarray, rhs: np.ndarray, floor=None) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``G[k] w[k] = rhs[k]`` for Hermitian PSD ``G`` with the shared ridge."""
    scale = np.max(np.real(np.einsum("kii->ki", G)), axis=1)
    dead = np.nonzero(~(scale > 0))[0]
    if dead.size:
        raise ConditioningError("conditioning block is identically zero", dead)
    G, mask = regularize(G, floor)
    w = np.linalg.solve(G, rhs[..., None])[..., 0]
    bad = np.nonzero(~np.all(np.isfinite(w), axis=1))[0]
    if bad.size:
        raise ConditioningError("singular conditioning block", bad)
    return w, mask


def wiener_from_psd(phi: SpectralMatrixField, i: int, C, floor=None) -> WienerField:
    """Wiener coefficients of ``i`` on ``C`` from a cross-PSD field."""
    C = _validate_sets(phi.n, i, C)
    P = phi.phi
    idx = np.array(C)
    G = np.swapaxes(P[:, idx][:, :, idx], 1, 2)
    rhs = P[:, i, idx]
    w, mask = _solve_normal(G, rhs, floor)
    flags = set(phi.flags) | set(np.nonzero(mask)[0].tolist())
    return WienerField(i, C, w.T, tuple(flags))


def _ensemble_normal(ens: SpectralEnsemble, i: int, C, bins):
    X = ens.coeffs[:, :, bins]  # (R, n, K)
    XC = X[:, list(C)]
    G = np.einsum("rak,rbk->kab", XC.conj(), XC) / ens.R
    rhs = np.einsum("rak,rk->ka", XC.conj(), X[:, i]) / ens.R
    return G, rhs


def wiener_freq(ens: SpectralEnsemble, i: int, C, k: int, floor=None) -> np.ndarray:
    """Complex least squares of ``X_i(w_k)`` on ``X_C(w_k)`` across segments."""
    C = _validate_sets(ens.n, i, C)
    if ens.R < len(C) + 1:
        raise ConditioningError(f"need R >= |C| + 1 segments, got R={ens.R}")
    G, rhs = _ensemble_normal(ens, i, C, [k])
    w, _ = _solve_normal(G, rhs, floor)
    return w[0]


def wiener_freq_field(ens: SpectralEnsemble, i: int, C, floor=None) -> WienerField:
    """``wiener_freq`` at every bin of the ensemble grid."""
    C = _validate_sets(ens.n, i, C)
    if ens.R < len(C) + 1:
        raise ConditioningError(f"need R >= |C| + 1 segments, got R={ens.R}")
    G, rhs = _ensemble_normal(ens, i, C, slice(None))
    w, mask = _solve_normal(G, rhs, floor)
    return WienerField(i, C, w.T, tuple(np.nonzero(mask)[0].tolist()))


@dataclass(frozen=True)
class TimeDomainWiener:
    """Lag coefficients ``coeffs[m, l]`` of regressor ``conditioning[m]`` at lag l."""

    target: int
    conditioning: tuple[int, ...]
    coeffs: np.ndarray

    def response(self, num_bins: int | None = None) -> np.ndarray:
        """Frequency response ``sum_l coeffs[m, l] e^{-j w_k l}`` per regressor."""
        N = num_bins or self.coeffs.shape[1]
        return np.fft.fft(self.coeffs, n=N, axis=1)

    def as_field(self, num_bins: int | None = None) -> WienerField:
        return WienerField(self.target, self.conditioning, self.response(num_bins))


def wiener_time(panel: TimeSeriesPanel, i: int, C, N: int, block_rows: int = 4096) -> TimeDomainWiener:
    """Least squares of ``X_i(t)`` on ``X_c(t), ..., X_c(t-N+1)`` for ``c`` in ``C``.

    The Gram matrix is accumulated block by block over the ``T - N + 1`` design
    rows, so the work is ``O(T (N |C|)^2)``.
    """
    x = panel.stream()
    T = x.shape[0]
    C = _validate_sets(panel.n, i, C)
    m = len(C)
    rows = T - N + 1
    if N < 1 or rows <= m * N:
        raise ArgumentError(f"underdetermined lagged design: {rows} rows for {m * N} coefficients")
    # windows[t, c, :] = x_c(t + N - 1), x_c(t + N - 2), ..., x_c(t)
    windows = sliding_window_view(x[:, list(C)], N, axis=0)[:, :, ::-1]
    target = x[N - 1 :, i]
    G = np.zeros((m * N, m * N))
    r = np.zeros(m * N)
    for start in range(0, rows, block_rows):
        Y = windows[start : start + block_rows].reshape(-1, m * N)
        G += Y.T @ Y
        r += Y.T @ target[start : start + block_rows]
    try:
        beta = scipy.linalg.solve(G, r, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConditioningError(f"lagged Gram matrix is singular: {exc}") from exc
    return TimeDomainWiener(i, C, beta.reshape(m, N))


def cofactor(A: np.ndarray, a: int, b: int) -> np.ndarray:
    """Cofactor ``(-1)^{a+b} det(A without row a, column b)``, batched over bins."""
    n = A.shape[-1]
    rows = [r for r in range(n) if r != a]
    cols = [c for c in range(n) if c != b]
    minor = A[..., rows, :][..., :, cols]
    return (-1) ** (a + b) * np.linalg.det(minor)


def wiener_cofactor(phi: SpectralMatrixField, i: int, k: int) -> np.ndarray:
    """Coefficient of ``k`` when projecting ``i`` on all other nodes: ``-C_ki / C_ii``."""
    n = phi.n
    if n < 2 or i == k or not (0 <= i < n and 0 <= k < n):
        raise ArgumentError("need n >= 2 and distinct in-range i, k")
    P = phi.phi
    cii = cofactor(P, i, i)
    others = [r for r in range(n) if r != i]
    hadamard = np.prod(np.abs(np.einsum("kii->ki", P)[:, others]), axis=1)
    bad = np.nonzero(np.abs(cii) <= 1e-13 * hadamard)[0]
    if bad.size:
        raise ConditioningError("degenerate cofactor C_ii", bad)
    return -cofactor(P, k, i) / cii


def _ls_coeffs(XC: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-bin least squares: ``XC`` is ``(R, c, N)``, ``y`` is ``(R, N)``; returns ``(c, N)``."""
    G = np.einsum("rak,rbk->kab", XC.conj(), XC)
    rhs = np.einsum("rak,rk->ka", XC.conj(), y)
    return np.linalg.solve(G, rhs[..., None])[..., 0].T


def wiener_linearity_check(components, alphas, conditioning, member: int = 0) -> float:
    """Max-bin gap between ``W_y[member]`` and ``sum_m alpha_m W_{y_m}[member]``.

    ``components`` is ``(m, R, N)``, ``alphas`` is ``(m, N)`` and the target is
    ``y = sum_m alpha_m y_m`` bin by bin; ``conditioning`` is ``(R, c, N)``.
    """
    Y = np.asarray(components, dtype=complex)
    a = np.asarray(alphas, dtype=complex)
    XC = np.asarray(conditioning, dtype=complex)
    y = np.einsum("mk,mrk->rk", a, Y)
    lhs = _ls_coeffs(XC, y)[member]
    rhs = sum(a[m] * _ls_coeffs(XC, Y[m])[member] for m in range(Y.shape[0]))
    return float(np.max(np.abs(lhs - rhs)))
