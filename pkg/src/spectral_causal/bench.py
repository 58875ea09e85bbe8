"""Scaling benchmarks: time- vs frequency-domain Wiener estimation (wall time)
and Wiener-PC vs Wiener-Phase discovery (exact test counters).

Timed workloads use a lag-1 AR network without self-dynamics, so the Wiener
filter of a sink node on all others is its parents' gains at lag 1. Each timed
result is checked against that before its timing is kept.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .discovery import DiscoveryConfig, wiener_pc, wiener_phase_cpdag
from .errors import ArgumentError
from .graphs import CausalGraph
from .model import LdimSpec, closed_form_psd
from .simulate import ArSpec, simulate_ar
from .spectral import segment_fft
from .wiener import wiener_freq_field, wiener_time

TIMER_FLOOR = 1e-4


@dataclass
class ScalingReport:
    method: str
    axis: str
    values: list
    seconds: list  # median wall time per value (or test counts for counters)
    tests: list = field(default_factory=list)
    slope: float = math.nan
    slope_ci: tuple[float, float] = (math.nan, math.nan)
    claimed: float | None = None
    verdict: str = ""

    def rows(self):
        for i, v in enumerate(self.values):
            t = self.tests[i] if self.tests else ""
            s = self.seconds[i] if self.seconds else ""
            yield [self.method, self.axis, v, s, t]


def loglog_fit(x, y) -> tuple[float, tuple[float, float]]:
    """Least-squares slope of ``log y`` on ``log x`` with a 95% t-interval."""
    from scipy import stats

    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    res = stats.linregress(lx, ly)
    if len(lx) > 2:
        half = stats.t.ppf(0.975, len(lx) - 2) * res.stderr
    else:
        half = math.nan
    return float(res.slope), (float(res.slope - half), float(res.slope + half))


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "axis", "value", "median_seconds", "tests"])
    for r in reports:
        for row in r.rows():
            w.writerow(row)
    return buf.getvalue()


def lag1_workload(n: int, seed: int = 0, gain: float = 0.4) -> ArSpec:
    """Random lag-1 DAG on ``n`` nodes (topological order 0..n-1) with node ``n-1`` a sink."""
    rng = np.random.default_rng(seed)
    B = np.zeros((n, n))
    for v in range(1, n):
        parents = rng.choice(v, size=min(v, 2), replace=False)
        B[v, parents] = gain * rng.choice([-1.0, 1.0], size=parents.size)
    return ArSpec(np.zeros((n, 1)), B, np.ones(n))


def _td_all(panel, n, N):
    return [wiener_time(panel, i, [j for j in range(n) if j != i], N) for i in range(n)]


def _fd_all(panel, n, N):
    ens = segment_fft(panel.resegment(N))
    return [wiener_freq_field(ens, i, [j for j in range(n) if j != i]) for i in range(n)]


def _check_td(spec: ArSpec, res, tol: float) -> None:
    sink = spec.n - 1
    got = res[sink].coeffs  # (n-1, N) lag coefficients
    want = np.zeros_like(got)
    want[:, 1] = spec.cross[sink, :sink]
    err = float(np.max(np.abs(got - want)))
    if err > tol:
        raise AssertionError(f"time-domain Wiener check failed: max error {err:.3g}")


def _check_fd(spec: ArSpec, res, tol: float) -> None:
    sink = spec.n - 1
    N = res[sink].coeffs.shape[1]
    w = 2 * np.pi * np.arange(N) / N
    want = spec.cross[sink, :sink, None] * np.exp(-1j * w)[None]
    err = float(np.mean(np.abs(res[sink].coeffs - want)))
    if err > tol:
        raise AssertionError(f"frequency-domain Wiener check failed: mean error {err:.3g}")


def _median_time(fn, reps: int):
    times, out = [], None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


def bench_wiener(axis: str, values, *, n: int = 4, N: int = 16, T: int = 2**16, reps: int = 3, seed: int = 0, tol: float = 0.1):
    """Time both Wiener pipelines (all ``n`` nodes projected on the rest) along ``axis``.

    ``axis`` is ``"N"`` (lag depth / DFT length) or ``"n"`` (network size).
    Returns ``(time_domain, frequency_domain)`` reports.
    """
    if axis not in ("N", "n"):
        raise ArgumentError("axis must be 'N' or 'n'")
    if reps < 3:
        raise ArgumentError("need reps >= 3")
    values = list(values)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ArgumentError("sweep values must be strictly increasing")
    td = ScalingReport("time-domain", axis, values, [])
    fd = ScalingReport("frequency-domain", axis, values, [])
    with threadpool_limits(limits=1):
        for v in values:
            nn, NN = (n, v) if axis == "N" else (v, N)
            spec = lag1_workload(nn, seed)
            panel = simulate_ar(spec, T, seed=seed)
            t_td, r_td = _median_time(lambda: _td_all(panel, nn, NN), reps)
            _check_td(spec, r_td, tol)
            t_fd, r_fd = _median_time(lambda: _fd_all(panel, nn, NN), reps)
            _check_fd(spec, r_fd, tol)
            td.seconds.append(t_td)
            fd.seconds.append(t_fd)
    for rep in (td, fd):
        if min(rep.seconds) < TIMER_FLOOR:
            rep.verdict = "inconclusive"
        if len(values) >= 2:
            rep.slope, rep.slope_ci = loglog_fit(values, rep.seconds)
    if axis == "N":
        td.claimed, fd.claimed = 2.0, 0.0
        ratio = np.array(td.seconds) / np.array(fd.seconds)
        growing = bool(np.all(np.diff(ratio) > 0))
        for rep in (td, fd):
            rep.verdict = rep.verdict or ("ratio-increasing" if growing else "ratio-not-increasing")
    else:
        td.claimed = fd.claimed = 3.0
        for rep in (td, fd):
            rep.verdict = rep.verdict or ("pass" if 2.5 <= rep.slope <= 3.5 else "fail")
    return td, fd


def star_collider(q: int, gain: float = 0.5, num_bins: int = 16) -> LdimSpec:
    """``q`` independent sources feeding one hub (node ``q``) through lag-1 edges."""
    n = q + 1
    w = 2 * np.pi * np.arange(num_bins) / num_bins
    h = np.zeros((num_bins, n, n), dtype=complex)
    for s in range(q):
        h[:, q, s] = gain * np.exp(-1j * w)
    return LdimSpec(h, np.ones((n, num_bins)))


def bench_discovery(qs, *, tau: float = 1e-6):
    """Exact test counts of Wiener-PC and Wiener-Phase on star colliders (analytic PSD).

    Wiener-PC counts conditional-independence tests; Wiener-Phase counts
    Wiener-field computations plus collider tests.
    """
    qs = list(qs)
    cfg = DiscoveryConfig(tau=tau, tau_im=tau)
    pc = ScalingReport("wiener-pc", "q", qs, [])
    ph = ScalingReport("wiener-phase", "q", qs, [])
    for q in qs:
        spec = star_collider(q)
        phi = closed_form_psd(spec)
        truth = spec.graph
        r_pc = wiener_pc(phi, cfg)
        r_ph = wiener_phase_cpdag(phi, cfg)
        for cp in (r_pc.cpdag, r_ph.cpdag):
            if cp.skeleton() != frozenset(frozenset(e) for e in truth.edges):
                raise AssertionError(f"discovery returned the wrong skeleton at q={q}")
        pc.tests.append(r_pc.tests)
        ph.tests.append(r_ph.counters["wiener_fields"] + r_ph.counters["collider_tests"])
    if len(qs) >= 2:
        pc.slope, pc.slope_ci = loglog_fit(qs, pc.tests)
        ph.slope, ph.slope_ci = loglog_fit(qs, ph.tests)
    pc_ratios = [b / a for a, b in zip(pc.tests, pc.tests[1:])]
    ph_ratios = [b / a for a, b in zip(ph.tests, ph.tests[1:])]
    pc.verdict = "geometric" if pc_ratios and min(pc_ratios) >= 2 else "not-geometric"
    within = all(c <= 3 * q**2 for q, c in zip(qs, ph.tests))
    ph.verdict = "polynomial" if within and (not ph_ratios or max(ph_ratios) <= 1.8) else "not-polynomial"
    pc.claimed, ph.claimed = None, 2.0
    return pc, ph


def pc_level_counts(g: CausalGraph, tau: float = 1e-6, num_bins: int = 16) -> dict[int, int]:
    """Per-level Wiener-PC test counts on the analytic PSD of a lag-1 model of ``g``."""
    w = 2 * np.pi * np.arange(num_bins) / num_bins
    h = np.zeros((num_bins, g.n, g.n), dtype=complex)
    for u, v in g.edges:
        h[:, v, u] = 0.5 * np.exp(-1j * w)
    phi = closed_form_psd(LdimSpec(h, np.ones((g.n, num_bins))))
    return wiener_pc(phi, DiscoveryConfig(tau=tau, tau_im=tau)).tests_by_level
