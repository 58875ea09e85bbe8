"""LDIM data model and closed-form spectral algebra.

An LDIM is given on a uniform frequency grid by a transfer matrix ``h`` with
``h[k, v, u] = H_vu(w_k)`` (effect of node u on node v) and a diagonal noise
PSD ``noise[i, k]``. Cross-spectra follow ``phi[k, a, b] = E[X_a(w_k) conj(X_b(w_k))]``
everywhere in the package.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, StructuralError
from .graphs import CausalGraph

COND_THRESHOLD = 1e10
EDGE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FrequencyGrid:
    """Angular frequencies ``2*pi*k/N`` for ``k = 0..N-1``."""

    num_bins: int

    def __post_init__(self):
        if int(self.num_bins) != self.num_bins or self.num_bins < 2:
            raise StructuralError(f"grid needs an integer N >= 2, got {self.num_bins}")
        object.__setattr__(self, "num_bins", int(self.num_bins))

    @property
    def bins(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.num_bins) / self.num_bins

    @property
    def is_pow2(self) -> bool:
        return self.num_bins & (self.num_bins - 1) == 0

    def require_fft(self) -> "FrequencyGrid":
        if not self.is_pow2:
            raise StructuralError(f"FFT grids need a power-of-two size, got {self.num_bins}")
        return self


@dataclass(frozen=True)
class SpectralMatrixField:
    """Cross-PSD matrices ``phi[k]`` (shape ``(N, n, n)``) on a grid.

    ``flags`` lists bins that were regularized by whatever produced the field.
    """

    phi: np.ndarray
    flags: tuple[int, ...] = ()

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex)
        if phi.ndim != 3 or phi.shape[1] != phi.shape[2]:
            raise StructuralError(f"phi must have shape (N, n, n), got {phi.shape}")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "flags", tuple(sorted(int(b) for b in self.flags)))

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.phi.shape[0])

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.phi)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "num_bins": self.grid.num_bins,
            "phi": _complex_to_json(self.phi),
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, obj) -> "SpectralMatrixField":
        if isinstance(obj, str):
            obj = json.loads(obj)
        phi = _complex_from_json(obj["phi"])
        if phi.shape != (obj["num_bins"], obj["n"], obj["n"]):
            raise StructuralError("phi dimensions disagree with n/num_bins")
        return cls(phi, tuple(obj.get("flags", ())))


@dataclass(frozen=True)
class LdimSpec:
    """Generative LDIM: ``X = H X + E`` per grid bin."""

    h: np.ndarray
    noise: np.ndarray
    edge_tolerance: float = EDGE_TOLERANCE
    graph: CausalGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        noise = np.asarray(self.noise, dtype=float)
        if h.ndim != 3 or h.shape[1] != h.shape[2]:
            raise StructuralError(f"h must have shape (N, n, n), got {h.shape}")
        N, n, _ = h.shape
        if noise.shape != (n, N):
            raise StructuralError(f"noise must have shape (n, N) = {(n, N)}, got {noise.shape}")
        FrequencyGrid(N)
        h.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "graph", graph_from_transfer(h, self.edge_tolerance))

    @property
    def n(self) -> int:
        return self.h.shape[1]

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.h.shape[0])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "num_bins": self.grid.num_bins,
            "h": _complex_to_json(self.h),
            "noise": self.noise.tolist(),
        }

    @classmethod
    def from_json(cls, obj) -> "LdimSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        h = _complex_from_json(obj["h"])
        noise = np.array(obj["noise"], dtype=float)
        if h.shape[0] != obj["num_bins"] or h.shape[1] != obj["n"]:
            raise StructuralError("h dimensions disagree with n/num_bins")
        return cls(h, noise)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()


def _complex_to_json(a: np.ndarray):
    if a.ndim == 0:
        return {"re": float(a.real), "im": float(a.imag)}
    return [_complex_to_json(x) for x in a]


def _complex_from_json(obj) -> np.ndarray:
    def conv(x):
        if isinstance(x, dict):
            return complex(x["re"], x["im"])
        return [conv(y) for y in x]

    return np.array(conv(obj), dtype=complex)


@dataclass
class ValidationReport:
    condition_numbers: np.ndarray
    diagonal_violations: list[tuple[int, int]]
    noise_violations: list[tuple[int, int]]
    singular_bins: list[int]

    @property
    def ok(self) -> bool:
        return not (self.diagonal_violations or self.noise_violations or self.singular_bins)


def validate_ldim(spec: LdimSpec, cond_threshold: float = COND_THRESHOLD) -> ValidationReport:
    """Check zero diagonal, positive noise and per-bin invertibility of ``I - H``."""
    N, n = spec.grid.num_bins, spec.n
    diag = np.einsum("kii->ki", spec.h)
    diag_bad = [(int(k), int(i)) for k, i in zip(*np.nonzero(diag))]
    noise_bad = [(int(i), int(k)) for i, k in zip(*np.nonzero(~(spec.noise > 0)))]
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(np.eye(n) - spec.h)
    cond = np.where(np.isfinite(cond), cond, np.inf)
    singular = [int(k) for k in np.nonzero(cond > cond_threshold)[0]]
    return ValidationReport(cond, diag_bad, noise_bad, singular)


def closed_form_psd(spec: LdimSpec, cond_threshold: float = COND_THRESHOLD) -> SpectralMatrixField:
    """``phi = (I - H)^-1 diag(noise) (I - H)^-H`` at every bin."""
    n = spec.n
    ImH = np.eye(n) - spec.h
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(ImH)
    bad = np.nonzero(~(cond <= cond_threshold))[0]
    if bad.size:
        raise ConditioningError("I - H is near-singular", bad)
    G = np.linalg.inv(ImH)
    phi = np.einsum("kab,bk,kcb->kac", G, spec.noise, G.conj())
    return SpectralMatrixField(0.5 * (phi + np.conj(np.swapaxes(phi, 1, 2))))


def graph_from_transfer(h: np.ndarray, tol: float = EDGE_TOLERANCE) -> CausalGraph:
    """Edge u -> v iff ``max_k |h[k, v, u]| > tol``; the diagonal is ignored."""
    if tol < 0:
        raise StructuralError("tol must be non-negative")
    h = np.asarray(h)
    n = h.shape[1]
    mag = np.abs(h).max(axis=0)
    return CausalGraph(n, frozenset((u, v) for v in range(n) for u in range(n) if u != v and mag[v, u] > tol))
