"""Causal effects in the frequency domain.

Per-bin DFT coefficients of an LDIM driven by Gaussian noise are complex
Gaussian, so densities are summarized by a complex mean and the 2x2 covariance
of ``(Re, Im)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CoverageError, InadmissibleError, UnsupportedStructureError
from .graphs import (
    CausalGraph,
    descendants,
    single_door_violations,
)
from .model import LdimSpec, SpectralMatrixField, _complex_to_json, graph_from_transfer
from .simulate import ArSpec, InterventionSpec, restart_and_record
from .spectral import SpectralEnsemble, segment_fft
from .wiener import wiener_freq_field, wiener_from_psd

Z_CAP = 1e12


@dataclass
class DirectEffectEstimate:
    edge: tuple[int, int]
    adjustment: tuple[int, ...]
    alpha: np.ndarray
    violations: tuple[str, ...] = ()
    flags: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "edge": list(self.edge),
            "adjustment": list(self.adjustment),
            "coeffs": _complex_to_json(self.alpha),
            "flags": list(self.flags),
            "admissibility": {"criterion": "single-door", "admissible": not self.violations, "violated": list(self.violations)},
        }


def estimate_direct_effect(g: CausalGraph, source, u: int, y: int, Z=()) -> DirectEffectEstimate:
    """Gain of ``u -> y`` as the Wiener coefficient of ``u`` when projecting ``y`` on ``{u} + Z``."""
    Z = tuple(sorted(int(z) for z in Z))
    violations = single_door_violations(g, u, y, Z)
    if violations:
        raise InadmissibleError("single-door", violations)
    C = (u,) + Z
    if isinstance(source, SpectralMatrixField):
        f = wiener_from_psd(source, y, C)
    elif isinstance(source, SpectralEnsemble):
        f = wiener_freq_field(source, y, C)
    else:
        raise ArgumentError("source must be a SpectralMatrixField or SpectralEnsemble")
    return DirectEffectEstimate((u, y), Z, np.array(f[u]), (), f.flags)


def reim_cov(z) -> np.ndarray:
    """Sample covariance of ``(Re z, Im z)``."""
    z = np.asarray(z)
    return np.cov(np.vstack([z.real, z.imag]), ddof=1)


@dataclass
class FreqGaussianSummary:
    """Per node and bin: complex mean, 2x2 ``(Re, Im)`` covariance, sample count."""

    means: np.ndarray  # (n, N) complex
    covs: np.ndarray  # (n, N, 2, 2)
    count: int

    @classmethod
    def from_ensemble(cls, ens: SpectralEnsemble) -> "FreqGaussianSummary":
        if ens.R < 2:
            raise CoverageError("need at least two segments to summarize")
        X = ens.coeffs
        means = X.mean(axis=0)
        parts = np.stack([X.real, X.imag], axis=-1)  # (R, n, N, 2)
        d = parts - parts.mean(axis=0)
        covs = np.einsum("rnka,rnkb->nkab", d, d) / (ens.R - 1)
        return cls(means, covs, ens.R)


@dataclass
class AdjustedDensity:
    """Gaussian summary of an interventional density at one bin."""

    mean: complex
    cov: np.ndarray  # 2x2 over (Re, Im)
    components: list[tuple[float, complex]] = field(default_factory=list)

    @property
    def variance(self) -> float:
        """``E|Y - mean|^2``."""
        return float(np.trace(self.cov))

    def to_json(self) -> dict:
        return {
            "mean": {"re": self.mean.real, "im": self.mean.imag},
            "cov": self.cov.tolist(),
            "components": [{"weight": w, "mean": {"re": m.real, "im": m.imag}} for w, m in self.components],
        }


def _design(*cols) -> np.ndarray:
    cols = [np.asarray(c, dtype=complex).reshape(len(c), -1) for c in cols]
    return np.hstack([np.ones((cols[0].shape[0], 1), dtype=complex)] + cols)


def _lstsq(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(X, y, rcond=None)[0]


def _strata(key: np.ndarray, num: int) -> list[np.ndarray]:
    """Equal-count strata of the samples ordered by ``key``."""
    order = np.argsort(key, kind="stable")
    return [s for s in np.array_split(order, num)]


def _mixture(samples_by_stratum) -> AdjustedDensity:
    total = sum(len(s) for s in samples_by_stratum)
    comps = [(len(s) / total, complex(np.mean(s))) for s in samples_by_stratum]
    pooled = np.concatenate(samples_by_stratum)
    return AdjustedDensity(complex(np.mean(pooled)), reim_cov(pooled), comps)


def backdoor_adjust(y, w, z, w_star: complex, strata: int = 8) -> AdjustedDensity:
    """``int f(y | w*, z) f(z) dz`` from per-bin samples of ``Y``, ``W`` and ``Z``.

    ``Z`` is cut into equal-count strata (ordered by the real part of its first
    column). Inside each stratum ``y ~ 1 + w + z`` is fitted by complex least
    squares and each sample is moved to ``w*`` along the fitted ``w`` slope,
    which draws from ``f(y | w*, z)`` with ``z`` spread as observed.
    """
    y = np.asarray(y, dtype=complex)
    w = np.asarray(w, dtype=complex)
    R = y.size
    if z is None or np.size(z) == 0:
        z = np.zeros((R, 0), dtype=complex)
        strata = 1
    z = np.asarray(z, dtype=complex).reshape(R, -1)
    need = 2 + z.shape[1] + 2
    groups = _strata(z[:, 0].real, strata) if z.shape[1] else [np.arange(R)]
    moved = []
    for sid, idx in enumerate(groups):
        if idx.size < need:
            raise CoverageError(f"stratum {sid} has {idx.size} samples, need {need}")
        coef = _lstsq(_design(w[idx], z[idx]), y[idx])
        moved.append(y[idx] + coef[1] * (w_star - w[idx]))
    return _mixture(moved)


def frontdoor_adjust(y, w, z, w_star: complex, strata: int = 8) -> AdjustedDensity:
    """``int f(z | w*) int f(y | w', z) f(w') dw' dz`` from per-bin samples.

    ``f(z | w*)`` comes from the regression ``z ~ 1 + w``; the inner mixture
    runs over equal-count strata of ``w'`` with ``y ~ 1 + w + z`` fitted per
    stratum.
    """
    y = np.asarray(y, dtype=complex)
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex).reshape(y.size, -1)
    R = y.size
    if np.ptp(w.real) == 0 and np.ptp(w.imag) == 0:
        # a single treatment value: the front-door formula is the observational conditional
        return _mixture([y])
    cz = _lstsq(_design(w), z)
    z_resid = z - _design(w) @ cz
    z_star = (_design(np.full(R, w_star)) @ cz) + z_resid  # draws from f(z | w*)
    need = 2 + z.shape[1] + 2
    out = []
    for sid, idx in enumerate(_strata(w.real, strata)):
        if idx.size < need:
            raise CoverageError(f"stratum {sid} has {idx.size} samples, need {need}")
        coef = _lstsq(_design(w[idx], z[idx]), y[idx])
        resid = y[idx] - _design(w[idx], z[idx]) @ coef
        # pair each stratum's w' with z drawn from f(z | w*) (rolled to decouple indices)
        zs = np.roll(z_star, idx.size // 2 + 1, axis=0)[idx]
        out.append(coef[0] + coef[1] * w[idx] + zs @ coef[2:] + resid)
    return _mixture(out)


def backdoor_adjust_analytic(phi: SpectralMatrixField, k: int, w: int, y: int, Z, w_star: complex) -> tuple[complex, float]:
    """Mean and ``E|Y - mean|^2`` of the back-door formula for zero-mean Gaussian
    coefficients with cross-spectrum ``phi`` at bin ``k``."""
    Z = list(Z)
    C = [w] + Z
    P = phi.phi[k]
    c = wiener_from_psd(SpectralMatrixField(P[None]), y, C).coeffs[:, 0]
    resid = float(np.real(P[y, y] - c @ np.conj(P[y, C])))
    if Z:
        cz = c[1:]
        spread = float(np.real(cz @ P[np.ix_(Z, Z)] @ np.conj(cz)))
    else:
        spread = 0.0
    return complex(c[0] * w_star), resid + spread


@dataclass
class InterventionalGaussian:
    mean: np.ndarray  # (n,) complex
    cov: np.ndarray  # (n, n) complex, E[(X - m)(X - m)^H]


def atomic_intervention_density(spec: LdimSpec, i: int, value: complex, k: int) -> InterventionalGaussian:
    """Exact per-bin law of ``X`` under ``do(X_i = value)``."""
    n = spec.n
    if not 0 <= i < n:
        raise ArgumentError(f"node {i} out of range")
    H = np.array(spec.h[k])
    g = graph_from_transfer(H[None], spec.edge_tolerance)
    if i in descendants(g, i):
        raise UnsupportedStructureError(f"node {i} lies on a directed cycle at bin {k}")
    H[i, :] = 0
    noise = np.array(spec.noise[:, k], dtype=float)
    noise[i] = 0
    G = np.linalg.inv(np.eye(n) - H)
    mean = G[:, i] * value
    cov = G @ np.diag(noise) @ G.conj().T
    return InterventionalGaussian(mean, cov)


@dataclass
class InterventionContrast:
    node: int
    labels: tuple[str, str]
    shift: np.ndarray  # (N,) complex mean difference arm2 - arm1
    z_re: np.ndarray
    z_im: np.ndarray
    re_means: np.ndarray  # (2, N)
    im_means: np.ndarray
    z_crit: float

    @property
    def max_z(self) -> float:
        return float(max(np.max(np.abs(self.z_re)), np.max(np.abs(self.z_im))))

    @property
    def argmax_bin(self) -> int:
        return int(np.argmax(np.maximum(np.abs(self.z_re), np.abs(self.z_im))))

    @property
    def affected(self) -> bool:
        return self.max_z > self.z_crit

    def to_json(self) -> dict:
        return {
            "affected": self.affected,
            "max_z": self.max_z,
            "argmax_bin": self.argmax_bin,
            "re_means": self.re_means.tolist(),
            "im_means": self.im_means.tolist(),
        }


def _z(diff: np.ndarray, var: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = diff / np.sqrt(var)
    z = np.where(var > 0, z, np.where(diff == 0, 0.0, np.sign(diff) * Z_CAP))
    return np.clip(z, -Z_CAP, Z_CAP)


def contrast_summaries(a: FreqGaussianSummary, b: FreqGaussianSummary, z_crit: float = 6.0, labels=("arm1", "arm2")) -> list[InterventionContrast]:
    """Welch-type z-scores of the per-bin mean shift, Re and Im channels separately."""
    out = []
    for v in range(a.means.shape[0]):
        d = b.means[v] - a.means[v]
        var_re = a.covs[v, :, 0, 0] / a.count + b.covs[v, :, 0, 0] / b.count
        var_im = a.covs[v, :, 1, 1] / a.count + b.covs[v, :, 1, 1] / b.count
        out.append(
            InterventionContrast(
                v,
                tuple(labels),
                d,
                _z(d.real, var_re),
                _z(d.imag, var_im),
                np.vstack([a.means[v].real, b.means[v].real]),
                np.vstack([a.means[v].imag, b.means[v].imag]),
                z_crit,
            )
        )
    return out


def intervention_contrast(
    spec: ArSpec,
    iv1: InterventionSpec,
    iv2: InterventionSpec,
    R: int,
    N: int,
    seed=None,
    z_crit: float = 6.0,
) -> list[InterventionContrast]:
    """Restart-and-record under each intervention and compare per-bin means node by node."""
    if iv1.node != iv2.node:
        raise ArgumentError("both interventions must target the same node")
    s1, s2 = np.random.SeedSequence(seed).spawn(2)
    arms = []
    for iv, s in ((iv1, s1), (iv2, s2)):
        panel = restart_and_record(spec, R, N, seed=int(s.generate_state(1)[0]), intervention=iv)
        arms.append(FreqGaussianSummary.from_ensemble(segment_fft(panel)))
    return contrast_summaries(arms[0], arms[1], z_crit, ("do1", "do2"))


__all__ = [
    "AdjustedDensity",
    "DirectEffectEstimate",
    "FreqGaussianSummary",
    "InterventionContrast",
    "InterventionalGaussian",
    "atomic_intervention_density",
    "backdoor_adjust",
    "backdoor_adjust_analytic",
    "contrast_summaries",
    "estimate_direct_effect",
    "frontdoor_adjust",
    "intervention_contrast",
    "reim_cov",
]
