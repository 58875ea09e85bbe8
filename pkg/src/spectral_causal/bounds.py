"""Concentration bounds for PSD, inverse-PSD and Wiener-coefficient estimates,
the implied sample complexity, and empirical probes of the bounds.

Every bound has the shape ``n^2 exp(-(T - L) min(quadratic, linear))``; it is
evaluated in log space and reported both as a log-bound and as a probability
clamped to ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ArgumentError, SpectralCausalError
from .model import closed_form_psd
from .simulate import ArSpec, _burn_in, _run_ar, ar_to_ldim
from .simulate import TimeSeriesPanel
from .spectral import estimate_psd_correlogram
from .wiener import wiener_from_psd

T_CAP = 2**62


class InfeasibleError(SpectralCausalError, ValueError):
    exit_code = 2


@dataclass(frozen=True)
class BoundParams:
    """``C`` and ``decay_base`` describe ``||R(k)||_2 <= C decay_base^|k|``; the
    PSD eigenvalues lie in ``[1/M, M]``; ``c1`` converts max-norm to spectral
    norm and defaults to ``sqrt(n * block)``."""

    n: int
    T: int
    L: int
    C: float
    decay_base: float
    M: float
    epsilon: float
    c1: float | None = None
    block: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.L < 0 or self.T < self.L:
            raise ArgumentError("need n >= 1, L >= 0 and T >= L")
        if not (self.C > 0 and self.epsilon > 0):
            raise ArgumentError("C and epsilon must be positive")
        if not 0 < self.decay_base < 1:
            raise ArgumentError("decay_base must lie in (0, 1)")
        if not self.M >= 1:
            raise ArgumentError("M must be at least 1")
        if self.c1 is not None and not self.c1 > 0:
            raise ArgumentError("c1 must be positive")

    @property
    def c1_value(self) -> float:
        if self.c1 is not None:
            return float(self.c1)
        return math.sqrt(self.n * (self.block or self.n))


@dataclass
class BoundResult:
    bound: float
    log_bound: float
    active_term: str
    L_star: int
    L_flagged: bool
    params: BoundParams

    def to_json(self) -> dict:
        params = asdict(self.params)
        params["c1"] = self.params.c1_value
        return {
            "bound": self.bound,
            "log_bound": self.log_bound,
            "active_term": self.active_term,
            "L_star": self.L_star,
            "L_premise_vacuous": self.L_flagged,
            "params": params,
        }


def min_lag(p: BoundParams) -> tuple[int, bool]:
    """Smallest ``L`` with ``decay_base^L <= (1 - decay_base) eps / (2 C)``.

    Returns ``(0, True)`` when the right-hand side is at least 1.
    """
    target = (1 - p.decay_base) * p.epsilon / (2 * p.C)
    if target >= 1:
        return 0, True
    L = max(0, math.ceil(math.log(target) / math.log(p.decay_base)))
    while L > 0 and p.decay_base ** (L - 1) <= target:
        L -= 1
    while p.decay_base**L > target:
        L += 1
    return L, False


def _evaluate(p: BoundParams, quadratic: float, linear: float) -> BoundResult:
    rate = min(quadratic, linear)
    log_bound = 2 * math.log(p.n) - (p.T - p.L) * rate
    bound = 1.0 if log_bound >= 0 else math.exp(log_bound)
    L_star, flagged = min_lag(p)
    return BoundResult(bound, log_bound, "quadratic" if quadratic <= linear else "linear", L_star, flagged, p)


def psd_terms(p: BoundParams, eps: float | None = None) -> tuple[float, float]:
    eps1 = 0.9 * (p.epsilon if eps is None else eps)
    k = (2 * p.L + 1) * p.n * p.C
    return eps1**2 / (32 * k**2), eps1 / (8 * k)


def ipsd_terms(p: BoundParams) -> tuple[float, float]:
    k = (2 * p.L + 1) * p.n * p.C
    e = p.epsilon
    return 81 * e**2 / (3200 * p.M**16 * k**2), 9 * e / (80 * p.M**4 * k)


def wiener_terms(p: BoundParams) -> tuple[float, float]:
    k = (2 * p.L + 1) * p.n * p.C
    c1, e = p.c1_value, p.epsilon
    return 81 * e**2 / (3200 * c1**2 * p.M**16 * k**2), 9 * e / (80 * c1 * p.M**4 * k)


def psd_bound(p: BoundParams) -> BoundResult:
    """Max-norm deviation bound for the lag-window PSD estimate (``eps_1 = 0.9 eps``)."""
    return _evaluate(p, *psd_terms(p))


def ipsd_bound(p: BoundParams) -> BoundResult:
    """Max-norm deviation bound for the inverse PSD."""
    return _evaluate(p, *ipsd_terms(p))


def wiener_bound(p: BoundParams) -> BoundResult:
    """Deviation bound for the Wiener coefficients, including ``c1``."""
    return _evaluate(p, *wiener_terms(p))


def crossover_epsilon(p: BoundParams, kind: str = "wiener") -> float:
    """Epsilon at which the quadratic and linear terms coincide; the quadratic
    term is the smaller (active) one below it."""
    k = (2 * p.L + 1) * p.n * p.C
    if kind == "psd":
        return 40 * k / 9
    if kind == "ipsd":
        return 40 * p.M**12 * k / 9
    if kind == "wiener":
        return 40 * p.c1_value * p.M**12 * k / 9
    raise ArgumentError(f"unknown bound kind {kind!r}")


def sample_complexity(p: BoundParams, confidence: float) -> int:
    """Smallest ``T`` with ``wiener_bound <= confidence`` (exact for the implemented bound)."""
    if not 0 < confidence < 1:
        raise ArgumentError("confidence must lie in (0, 1)")
    rate = min(wiener_terms(p))
    need = (2 * math.log(p.n) - math.log(confidence)) / rate
    if not math.isfinite(need) or p.L + need > T_CAP:
        raise InfeasibleError(f"bound stays above {confidence} for every T up to 2^62")

    def ok(T):
        return wiener_bound(replace(p, T=T)).bound <= confidence

    T = max(p.L, p.L + math.ceil(need))
    while T > p.L and ok(T - 1):
        T -= 1
    while not ok(T):
        T += 1
        if T > T_CAP:
            raise InfeasibleError(f"bound stays above {confidence} for every T up to 2^62")
    return T


def perturbation_gap(A: np.ndarray, B: np.ndarray, M: float) -> tuple[float, float]:
    """Both sides of ``||B^-1 - A^-1||_2 <= M^4 ||B - A||_2 / (1 - M ||B - A||_2)``."""
    d = np.linalg.norm(B - A, 2)
    lhs = np.linalg.norm(np.linalg.inv(B) - np.linalg.inv(A), 2)
    denom = 1 - M * d
    rhs = M**4 * d / denom if denom > 0 else math.inf
    return float(lhs), float(rhs)


@dataclass
class DecayConstants:
    """Plug-in ``C``, ``decay_base`` and ``M``; a heuristic, not an estimate with guarantees."""

    C: float
    decay_base: float
    M: float
    label: str = "heuristic"


def _decay_fit(norms: np.ndarray) -> tuple[float, float]:
    C = float(norms[0])
    ks = np.arange(1, norms.size)
    ratios = (np.maximum(norms[1:], 1e-300) / C) ** (1.0 / ks)
    base = float(np.clip(np.max(ratios), 1e-6, 1 - 1e-6))
    # inflate C so the envelope covers every lag
    C = float(max(C, np.max(norms / base ** np.arange(norms.size))))
    return C, base


def estimate_decay_constants(panel: TimeSeriesPanel, max_lag: int = 20, num_bins: int = 64) -> DecayConstants:
    """Plug-in constants from sample autocovariances and a correlogram PSD."""
    x = panel.stream()
    T = x.shape[0]
    norms = np.array([np.linalg.norm(x[: T - k].T @ x[k:] / (T - k), 2) for k in range(max_lag + 1)])
    C, base = _decay_fit(norms)
    eig = np.linalg.eigvalsh(estimate_psd_correlogram(panel, max_lag, num_bins).phi)
    M = float(max(1.0, eig[:, -1].max(), 1 / max(eig[:, 0].min(), 1e-300)))
    return DecayConstants(C, base, M)


def model_decay_constants(spec: ArSpec, max_lag: int = 60, dense_bins: int = 4096) -> DecayConstants:
    """Constants of an AR model from its exact autocovariances and PSD."""
    phi = closed_form_psd(ar_to_ldim(spec, dense_bins)).phi
    r = np.fft.ifft(phi, axis=0)[: max_lag + 1]
    norms = np.linalg.norm(r, 2, axis=(1, 2))
    C, base = _decay_fit(norms)
    eig = np.linalg.eigvalsh(phi)
    M = float(max(1.0, eig[:, -1].max(), 1 / eig[:, 0].min()))
    return DecayConstants(C, base, M, label="model")


@dataclass
class ExceedanceProbe:
    epsilon: float
    frequency: float
    errors: np.ndarray
    replications: int


def mc_exceedance(
    spec: ArSpec, T: int, L: int, epsilon: float, reps: int = 200, num_bins: int = 64, seed=None
) -> ExceedanceProbe:
    """Fraction of replications with ``max |W_i[j] - What_i[j]| > epsilon``.

    ``What`` comes from the lag-``L`` correlogram of a length-``T`` streaming
    run; ``W`` from the model's exact PSD on the same grid.
    """
    n = spec.n
    truth = closed_form_psd(ar_to_ldim(spec, num_bins))
    exact = [wiener_from_psd(truth, i, [j for j in range(n) if j != i]).coeffs for i in range(n)]
    rho = spec.check_stable()
    burn = _burn_in(spec, rho)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((reps, T + burn, n)) * spec.noise_std
    paths = _run_ar(spec, noise)[:, burn:]
    errors = np.empty(reps)
    for r in range(reps):
        panel = TimeSeriesPanel(paths[r : r + 1], "streaming")
        phi = estimate_psd_correlogram(panel, L, num_bins)
        errors[r] = max(
            float(np.max(np.abs(wiener_from_psd(phi, i, [j for j in range(n) if j != i]).coeffs - exact[i])))
            for i in range(n)
        )
    return ExceedanceProbe(epsilon, float(np.mean(errors > epsilon)), errors, reps)
