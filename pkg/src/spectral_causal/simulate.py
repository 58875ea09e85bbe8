"""Synthetic panels from LDIM and AR models.

Streaming and restart-and-record panels come from the AR generator

    X_i(t) + sum_k a_i(k) X_i(t-k) = sum_{j != i} b_ij X_j(t-1) + E_i(t)

started from a zero state. Circular panels realize the finite-grid model
exactly by drawing noise DFT coefficients and solving ``(I - H) X = E`` per bin.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, StabilityError, StructuralError
from .graphs import CausalGraph
from .model import LdimSpec, closed_form_psd

STABILITY_MARGIN = 1e-6
MAX_BURN_IN = 10_000


@dataclass(frozen=True)
class ArSpec:
    """AR generator parameters.

    ``self_lags[i, k-1]`` is a_i(k), ``cross[i, j]`` is the lag-1 gain b_ij of
    node j on node i, ``noise_std[i]`` the innovation standard deviation.
    """

    self_lags: np.ndarray
    cross: np.ndarray
    noise_std: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.self_lags, dtype=float))
        b = np.asarray(self.cross, dtype=float)
        s = np.asarray(self.noise_std, dtype=float)
        n = b.shape[0]
        if b.shape != (n, n) or a.shape[0] != n or s.shape != (n,):
            raise StructuralError("inconsistent AR spec dimensions")
        if np.any(np.diag(b) != 0):
            raise StructuralError("cross gains must have a zero diagonal")
        if np.any(s < 0):
            raise StructuralError("noise standard deviations must be non-negative")
        for arr in (a, b, s):
            arr.setflags(write=False)
        object.__setattr__(self, "self_lags", a)
        object.__setattr__(self, "cross", b)
        object.__setattr__(self, "noise_std", s)

    @property
    def n(self) -> int:
        return self.cross.shape[0]

    @property
    def order(self) -> int:
        return max(1, self.self_lags.shape[1])

    @property
    def graph(self) -> CausalGraph:
        n = self.n
        return CausalGraph(n, frozenset((j, i) for i in range(n) for j in range(n) if self.cross[i, j] != 0))

    def lag_matrices(self) -> np.ndarray:
        """``A[k-1]`` with ``X(t) = sum_k A[k-1] X(t-k) + E(t)``."""
        p, n = self.order, self.n
        A = np.zeros((p, n, n))
        for k in range(self.self_lags.shape[1]):
            A[k] -= np.diag(self.self_lags[:, k])
        A[0] += self.cross
        return A

    def spectral_radius(self) -> float:
        A = self.lag_matrices()
        p, n = A.shape[0], self.n
        comp = np.zeros((p * n, p * n))
        comp[:n] = np.hstack(list(A))
        comp[n:, : (p - 1) * n] = np.eye((p - 1) * n)
        return float(np.max(np.abs(np.linalg.eigvals(comp))))

    def check_stable(self) -> float:
        rho = self.spectral_radius()
        if rho >= 1 - STABILITY_MARGIN:
            raise StabilityError(rho)
        return rho

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "self_lags": self.self_lags.tolist(),
            "cross": self.cross.tolist(),
            "noise_std": self.noise_std.tolist(),
        }

    @classmethod
    def from_json(cls, obj) -> "ArSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(np.array(obj["self_lags"]), np.array(obj["cross"]), np.array(obj["noise_std"]))


def ar_to_ldim(spec: ArSpec, num_bins: int) -> LdimSpec:
    """Frequency-domain LDIM of the stationary AR process on an N-point grid.

    ``H_ij = b_ij e^{-jw} / A_i(w)`` and noise PSD ``s_i^2 / |A_i(w)|^2`` with
    ``A_i(w) = 1 + sum_k a_i(k) e^{-jwk}``.
    """
    w = 2 * np.pi * np.arange(num_bins) / num_bins
    lags = np.arange(1, spec.self_lags.shape[1] + 1)
    A = 1 + spec.self_lags @ np.exp(-1j * np.outer(lags, w))  # (n, N)
    h = spec.cross[None, :, :] * (np.exp(-1j * w)[:, None] / A.T)[:, :, None]
    noise = spec.noise_std[:, None] ** 2 / np.abs(A) ** 2
    return LdimSpec(h, noise)


@dataclass(frozen=True)
class InterventionSpec:
    """Hard intervention forcing ``X_node(t) = sequence[t mod len]``."""

    node: int
    sequence: np.ndarray

    def __post_init__(self):
        seq = np.asarray(self.sequence, dtype=float).ravel()
        if seq.size == 0 or not np.all(np.isfinite(seq)):
            raise ArgumentError("intervention sequence must be non-empty and finite")
        seq.setflags(write=False)
        object.__setattr__(self, "sequence", seq)

    def to_json(self) -> dict:
        return {"node": int(self.node), "sequence": self.sequence.tolist()}


@dataclass
class TimeSeriesPanel:
    """Samples with shape ``(R, N, n)``; streaming panels have ``R == 1``."""

    values: np.ndarray
    layout: str = "segmented"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise StructuralError(f"panel values must be (R, N, n), got shape {v.shape}")
        if self.layout not in ("segmented", "streaming"):
            raise StructuralError(f"unknown layout {self.layout!r}")
        if self.layout == "streaming" and v.shape[0] != 1:
            raise StructuralError("streaming panels hold exactly one segment")
        if not np.all(np.isfinite(v)):
            raise StructuralError("panel contains non-finite values")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[2]

    @property
    def num_segments(self) -> int:
        return self.values.shape[0]

    @property
    def segment_length(self) -> int:
        return self.values.shape[1]

    def stream(self) -> np.ndarray:
        """Samples as one ``(T, n)`` array (segments concatenated)."""
        return self.values.reshape(-1, self.n)

    def resegment(self, N: int, step: int | None = None) -> "TimeSeriesPanel":
        """Cut the series into length-N segments starting every ``step`` samples
        (default ``N``: non-overlapping), dropping the tail."""
        x = self.stream()
        step = N if step is None else int(step)
        if N < 1 or step < 1:
            raise ArgumentError("segment length and step must be positive")
        if x.shape[0] < N:
            raise ArgumentError(f"series of length {x.shape[0]} is shorter than one segment ({N})")
        starts = np.arange(0, x.shape[0] - N + 1, step)
        meta = dict(self.meta, resegmented_from=self.layout, segment_step=step)
        return TimeSeriesPanel(x[starts[:, None] + np.arange(N)], "segmented", meta)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["segment", "t"] + [f"node_{i}" for i in range(self.n)])
        for r in range(self.num_segments):
            for t in range(self.segment_length):
                w.writerow([r, t] + [repr(float(x)) for x in self.values[r, t]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, meta: dict | None = None) -> "TimeSeriesPanel":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:2] != ["segment", "t"]:
            raise StructuralError("panel CSV must start with header 'segment,t,node_0,...'")
        body = [r for r in rows[1:] if r]
        if not body:
            raise StructuralError("panel CSV has no samples")
        n = len(rows[0]) - 2
        seg = np.array([int(r[0]) for r in body])
        t = np.array([int(r[1]) for r in body])
        vals = np.array([[float(x) for x in r[2:]] for r in body])
        if vals.shape[1] != n:
            raise StructuralError("ragged panel CSV")
        R = seg.max() + 1
        counts = np.bincount(seg, minlength=R)
        if np.any(counts != counts[0]):
            raise StructuralError("segments have unequal lengths")
        N = counts[0]
        out = np.empty((R, N, n))
        out[seg, t] = vals
        meta = dict(meta or {})
        layout = meta.get("layout", "streaming" if R == 1 else "segmented")
        return cls(out, layout, meta)


def _burn_in(spec: ArSpec, rho: float) -> int:
    return int(min(MAX_BURN_IN, math.ceil(10 * spec.order / (1 - rho))))


def _run_ar(spec: ArSpec, noise: np.ndarray, intervention: InterventionSpec | None = None, offset: int = 0) -> np.ndarray:
    """Iterate the AR recursion on a batch of noise paths ``(B, T, n)`` from zero state.

    The intervened node is forced to ``sequence[(t - offset) mod len]``.
    """
    B, T, n = noise.shape
    A = spec.lag_matrices()
    p = A.shape[0]
    Acat = np.hstack(list(A))  # (n, p*n), lag-1 block first
    x = np.zeros((B, T + p, n))
    if intervention is not None:
        seq = intervention.sequence
        forced = seq[(np.arange(T) - offset) % seq.size]
        node = intervention.node
    for t in range(T):
        hist = x[:, t : t + p][:, ::-1].reshape(B, p * n)
        new = hist @ Acat.T + noise[:, t]
        if intervention is not None:
            new[:, node] = forced[t]
        x[:, t + p] = new
    return x[:, p:]


def _check_intervention(spec_n: int, iv: InterventionSpec | None, length: int):
    if iv is None:
        return
    if not 0 <= iv.node < spec_n:
        raise ArgumentError(f"intervention node {iv.node} out of range [0, {spec_n})")
    if length % iv.sequence.size:
        raise ArgumentError(
            f"intervention sequence length {iv.sequence.size} does not divide the layout length {length}"
        )


def simulate_ar(
    spec: ArSpec,
    T: int,
    seed=None,
    burn_in: int | None = None,
    intervention: InterventionSpec | None = None,
) -> TimeSeriesPanel:
    """Streaming AR panel of ``T`` recorded samples.

    ``burn_in`` defaults to ``10 * order / (1 - rho)`` samples (capped at 1e4),
    simulated and discarded before recording.
    """
    rho = spec.check_stable()
    _check_intervention(spec.n, intervention, T)
    if burn_in is None:
        burn_in = _burn_in(spec, rho)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((1, T + burn_in, spec.n)) * spec.noise_std
    x = _run_ar(spec, noise, intervention, offset=burn_in)[:, burn_in:]
    meta = {"generator": "ar", "seed": seed, "burn_in": burn_in, "layout": "streaming"}
    if intervention is not None:
        meta["intervention"] = intervention.to_json()
    return TimeSeriesPanel(x, "streaming", meta)


def restart_and_record(
    spec: ArSpec, R: int, N: int, seed=None, intervention: InterventionSpec | None = None
) -> TimeSeriesPanel:
    """``R`` independent length-N AR segments, each started from zero state."""
    spec.check_stable()
    _check_intervention(spec.n, intervention, N)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((R, N, spec.n)) * spec.noise_std
    x = _run_ar(spec, noise, intervention)
    meta = {"generator": "restart", "seed": seed, "layout": "segmented"}
    if intervention is not None:
        meta["intervention"] = intervention.to_json()
    return TimeSeriesPanel(x, "segmented", meta)


def apply_intervention(
    spec: ArSpec,
    iv: InterventionSpec,
    *,
    R: int | None = None,
    N: int | None = None,
    T: int | None = None,
    seed=None,
    burn_in: int | None = None,
) -> TimeSeriesPanel:
    """Run the AR generator with node ``iv.node`` held on its forced sequence.

    Restart-and-record when ``R`` and ``N`` are given, streaming when ``T`` is.
    """
    if R is not None and N is not None:
        return restart_and_record(spec, R, N, seed, intervention=iv)
    if T is not None:
        return simulate_ar(spec, T, seed, burn_in=burn_in, intervention=iv)
    raise ArgumentError("give either (R, N) or T")


def _is_conj_symmetric(a: np.ndarray) -> bool:
    N = a.shape[0]
    mirror = a[(-np.arange(N)) % N]
    return np.allclose(mirror, np.conj(a), rtol=1e-12, atol=1e-12 * (1 + np.abs(a).max()))


def simulate_circular(spec: LdimSpec, R: int, seed=None) -> TimeSeriesPanel:
    """Exact realization of the N-periodic (circular) model, ``R`` segments.

    Noise DFT coefficients are circular Gaussian with ``E|E_i(w_k)|^2 = noise[i, k]``
    and bins ``k``, ``N - k`` conjugate, so the time-domain segments are real.
    """
    N, n = spec.grid.num_bins, spec.n
    if N % 2:
        raise StructuralError("circular simulation needs an even number of bins")
    if not (_is_conj_symmetric(spec.h) and _is_conj_symmetric(spec.noise.T)):
        raise StructuralError("circular simulation needs a conjugate-symmetric H and noise PSD")
    closed_form_psd(spec)  # conditioning gate
    half = N // 2 + 1
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((R, half, n, 2))
    scale = np.sqrt(spec.noise[:, :half].T)  # (half, n)
    E = np.empty((R, half, n), dtype=complex)
    E[:] = scale * (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2)
    for k in (0, N // 2):
        E[:, k] = scale[k] * g[:, k, :, 0]
    ImH = np.eye(n) - spec.h[:half]
    Xh = np.linalg.solve(ImH[None], E[..., None])[..., 0]  # (R, half, n)
    full = np.empty((R, N, n), dtype=complex)
    full[:, :half] = Xh
    full[:, half:] = np.conj(Xh[:, 1 : N // 2][:, ::-1])
    full[:, 0] = full[:, 0].real
    full[:, N // 2] = full[:, N // 2].real
    x = np.fft.ifft(full, axis=1).real * np.sqrt(N)
    meta = {"generator": "circular", "seed": seed, "layout": "segmented", "spec_hash": spec.digest()}
    return TimeSeriesPanel(x, "segmented", meta)
