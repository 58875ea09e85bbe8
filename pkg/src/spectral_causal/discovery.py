"""Structure recovery from Wiener coefficients.

Pairs are unordered ``frozenset({i, j})``. Every max-bin statistic runs over
the bins selected by the configured frequency policy, minus bins that the
estimator had to regularize.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .graphs import Cpdag
from .model import SpectralMatrixField
from .spectral import SpectralEnsemble
from .wiener import WienerField, wiener_freq_field, wiener_from_psd

Pair = frozenset

POLICIES = ("all-bins", "single-bin", "bins")


@dataclass(frozen=True)
class DiscoveryConfig:
    tau: float = 0.1
    tau_im: float = 0.1
    sigma_split: float = 1.0
    frequency_policy: str = "all-bins"
    bins: tuple[int, ...] | None = None
    seed: int | None = None
    q_max: int | None = None

    def __post_init__(self):
        if not (self.tau > 0 and self.tau_im > 0):
            raise ArgumentError("tau and tau_im must be positive")
        if not 0 < self.sigma_split < np.pi:
            raise ArgumentError("sigma_split must lie in (0, pi)")
        if self.frequency_policy not in POLICIES:
            raise ArgumentError(f"frequency_policy must be one of {POLICIES}")
        if self.frequency_policy == "bins" and not self.bins:
            raise ArgumentError("the 'bins' policy needs an explicit bin list")
        if self.q_max is not None and self.q_max < 0:
            raise ArgumentError("q_max must be non-negative")
        if self.bins is not None:
            object.__setattr__(self, "bins", tuple(int(k) for k in self.bins))


def frequency_sampling_policy(cfg: DiscoveryConfig, num_bins: int) -> list[int]:
    """Bins on which support decisions are taken."""
    if cfg.frequency_policy == "all-bins":
        return list(range(num_bins))
    if cfg.frequency_policy == "bins":
        bad = [k for k in cfg.bins if not 0 <= k < num_bins]
        if bad:
            raise ArgumentError(f"bins {bad} outside the grid of {num_bins}")
        return sorted(set(cfg.bins))
    if cfg.bins:
        k = cfg.bins[0]
        if not 0 <= k < num_bins:
            raise ArgumentError(f"bin {k} outside the grid of {num_bins}")
        return [k]
    candidates = [k for k in range(1, num_bins) if 2 * k != num_bins]
    if not candidates:
        raise ArgumentError(f"grid of {num_bins} bins has no non-DC, non-Nyquist bin")
    rng = np.random.default_rng(cfg.seed)
    return [int(rng.choice(candidates))]


class _Projector:
    """Computes Wiener fields from either a PSD field or a segment ensemble and
    counts how many projections were requested."""

    def __init__(self, source):
        if not isinstance(source, (SpectralMatrixField, SpectralEnsemble)):
            raise ArgumentError("source must be a SpectralMatrixField or SpectralEnsemble")
        self.source = source
        self.calls = 0

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def num_bins(self) -> int:
        return self.source.grid.num_bins

    def __call__(self, i: int, C) -> WienerField:
        self.calls += 1
        if isinstance(self.source, SpectralMatrixField):
            return wiener_from_psd(self.source, i, C)
        return wiener_freq_field(self.source, i, C)


def full_wiener_fields(source) -> dict[int, WienerField]:
    """``W_i`` of every node on all the others."""
    proj = source if isinstance(source, _Projector) else _Projector(source)
    return {i: proj(i, [j for j in range(proj.n) if j != i]) for i in range(proj.n)}


def _usable_bins(f: WienerField, bins) -> list[int]:
    flagged = set(f.flags)
    return [k for k in bins if k not in flagged]


def _max_bin(f: WienerField, j: int, bins, part=np.abs) -> float:
    use = _usable_bins(f, bins)
    if not use:
        return 0.0
    return float(np.max(np.abs(part(f[j][use]))))


def _policy_bins(fields: dict[int, WienerField], cfg: DiscoveryConfig) -> list[int]:
    return frequency_sampling_policy(cfg, next(iter(fields.values())).grid.num_bins)


def _pair_stat(fields, cfg, part) -> dict[Pair, float]:
    bins = _policy_bins(fields, cfg)
    out: dict[Pair, float] = {}
    for i, f in fields.items():
        for j in f.conditioning:
            p = Pair((i, j))
            out[p] = max(out.get(p, 0.0), _max_bin(f, j, bins, part))
    return out


def kin_edges(fields: dict[int, WienerField], cfg: DiscoveryConfig) -> frozenset:
    """Pairs whose Wiener coefficient exceeds ``tau`` in either direction."""
    stat = _pair_stat(fields, cfg, np.abs)
    return frozenset(p for p, v in stat.items() if v > cfg.tau)


def skeleton_imaginary(fields: dict[int, WienerField], cfg: DiscoveryConfig) -> frozenset:
    """Pairs whose Wiener coefficient has an imaginary part above ``tau_im``."""
    stat = _pair_stat(fields, cfg, np.imag)
    return frozenset(p for p, v in stat.items() if v > cfg.tau_im)


def strict_spouses(K, S) -> frozenset:
    return frozenset(K) - frozenset(S)


def _neighbors(pairs, v: int) -> set[int]:
    return {u for p in pairs if v in p for u in p if u != v}


@dataclass
class PhaseCpdagResult:
    cpdag: Cpdag
    colliders: set[tuple[int, int, int]]
    kin: frozenset
    skeleton: frozenset
    spouses: frozenset
    fields: dict[int, WienerField]
    counters: dict[str, int] = field(default_factory=dict)
    conflicts: set[frozenset] = field(default_factory=set)

    def to_json(self) -> dict:
        out = self.cpdag.to_json()
        out["colliders"] = sorted(list(c) for c in self.colliders)
        out["sepsets"] = {}
        return out


def _orient(n: int, skeleton, arrows) -> tuple[Cpdag, set]:
    """Directed edges from ``arrows`` on the skeleton; contradicting pairs stay undirected."""
    arrows = set(arrows)
    conflicts = {Pair(e) for e in arrows if (e[1], e[0]) in arrows}
    directed = {e for e in arrows if Pair(e) not in conflicts}
    oriented = {Pair(e) for e in directed}
    undirected = {p for p in skeleton if p not in oriented}
    return Cpdag(n, frozenset(directed), frozenset(undirected)), conflicts


def wiener_phase_cpdag(source, cfg: DiscoveryConfig) -> PhaseCpdagResult:
    """Kin graph, imaginary-part skeleton and collider detection from strict spouses.

    For each strict-spouse pair the common skeleton neighbours are the
    candidate colliders. A lone candidate is accepted outright; otherwise
    candidate ``c`` is accepted when ``W_{i.[j, c]}[j]`` (or the mirror
    ``W_{j.[i, c]}[i]``) stays above ``tau``: conditioning on a collider
    keeps the spouses dependent.
    """
    proj = _Projector(source)
    if isinstance(source, SpectralEnsemble) and source.R < proj.n + 2:
        raise ArgumentError(f"need R >= n + 2 segments, got R={source.R}")
    fields = full_wiener_fields(proj)
    bins = _policy_bins(fields, cfg)
    K = kin_edges(fields, cfg)
    S = skeleton_imaginary(fields, cfg)
    SP = strict_spouses(K, S)
    colliders: set[tuple[int, int, int]] = set()
    tests = 0
    for p in sorted(SP, key=sorted):
        i, j = sorted(p)
        cands = sorted(_neighbors(S, i) & _neighbors(S, j))
        if len(cands) == 1:
            colliders.add((i, cands[0], j))
            continue
        for c in cands:
            stat = 0.0
            for a, b in ((i, j), (j, i)):
                f = proj(a, [b, c])
                tests += 1
                stat = max(stat, _max_bin(f, b, bins))
            if stat > cfg.tau:
                colliders.add((i, c, j))
    arrows = [(a, c) for a, c, _ in colliders] + [(b, c) for _, c, b in colliders]
    cpdag, conflicts = _orient(proj.n, S, arrows)
    counters = {"wiener_fields": proj.calls, "collider_tests": tests}
    return PhaseCpdagResult(cpdag, colliders, K, S, SP, fields, counters, conflicts)


@dataclass
class PcResult:
    cpdag: Cpdag
    sepsets: dict[Pair, frozenset]
    tests: int
    tests_by_level: dict[int, int]
    partial: bool
    colliders: set[tuple[int, int, int]]

    def to_json(self) -> dict:
        out = self.cpdag.to_json()
        out["colliders"] = sorted(list(c) for c in self.colliders)
        out["sepsets"] = {",".join(map(str, sorted(p))): sorted(s) for p, s in sorted(self.sepsets.items(), key=lambda kv: sorted(kv[0]))}
        out["partial"] = self.partial
        return out


def wiener_pc(source, cfg: DiscoveryConfig) -> PcResult:
    """PC with the Wiener separation test ``max-bin |W_{i.[j, C]}[j]| <= tau``.

    The skeleton phase is order-independent (adjacencies are frozen per level);
    v-structures come from separating sets and Meek's rules finish the
    orientation.
    """
    proj = _Projector(source)
    n = proj.n
    bins = frequency_sampling_policy(cfg, proj.num_bins)
    adj = {v: set(range(n)) - {v} for v in range(n)}
    sepsets: dict[Pair, frozenset] = {}
    by_level: dict[int, int] = {}
    partial = False

    def independent(i, j, C) -> bool:
        by_level[len(C)] = by_level.get(len(C), 0) + 1
        f = proj(i, [j, *C])
        return _max_bin(f, j, bins) <= cfg.tau

    level = 0
    while any(len(adj[v]) - 1 >= level for v in range(n)):
        if cfg.q_max is not None and level > cfg.q_max:
            partial = True
            break
        frozen = {v: set(a) for v, a in adj.items()}
        for i, j in itertools.combinations(range(n), 2):
            if j not in adj[i]:
                continue
            found = None
            sides = ((i, j),) if level == 0 else ((i, j), (j, i))
            for a, b in sides:
                for C in itertools.combinations(sorted(frozen[a] - {b}), level):
                    if independent(a, b, C):
                        found = frozenset(C)
                        break
                if found is not None:
                    break
            if found is not None:
                adj[i].discard(j)
                adj[j].discard(i)
                sepsets[Pair((i, j))] = found
        level += 1

    skeleton = frozenset(Pair((u, v)) for u in range(n) for v in adj[u])
    colliders = set()
    for c in range(n):
        for a, b in itertools.combinations(sorted(adj[c]), 2):
            if b not in adj[a] and c not in sepsets.get(Pair((a, b)), frozenset()):
                colliders.add((a, c, b))
    arrows = [(a, c) for a, c, _ in colliders] + [(b, c) for _, c, b in colliders]
    cpdag, _ = _orient(n, skeleton, arrows)
    cpdag = meek_closure(cpdag)
    return PcResult(cpdag, sepsets, sum(by_level.values()), by_level, partial, colliders)


def meek_closure(g: Cpdag) -> Cpdag:
    """Apply Meek's rules R1-R4 until no undirected edge can be oriented."""
    n = g.n
    directed = set(g.directed)
    undirected = set(g.undirected)

    def adjacent(a, b):
        return (a, b) in directed or (b, a) in directed or Pair((a, b)) in undirected

    def und(a, b):
        return Pair((a, b)) in undirected

    def arrow(a, b):
        return (a, b) in directed

    changed = True
    while changed:
        changed = False
        for p in sorted(undirected, key=sorted):
            for a, b in itertools.permutations(sorted(p)):
                others = [v for v in range(n) if v not in (a, b)]
                r1 = any(arrow(c, a) and not adjacent(c, b) for c in others)
                r2 = any(arrow(a, c) and arrow(c, b) for c in others)
                r3 = any(
                    und(a, c) and und(a, d) and arrow(c, b) and arrow(d, b) and not adjacent(c, d)
                    for c, d in itertools.combinations(others, 2)
                )
                r4 = any(
                    und(a, c) and adjacent(a, d) and arrow(c, d) and arrow(d, b) and not adjacent(c, b)
                    for c, d in itertools.permutations(others, 2)
                )
                if r1 or r2 or r3 or r4:
                    undirected.discard(p)
                    directed.add((a, b))
                    changed = True
                    break
            if changed:
                break
    return Cpdag(n, frozenset(directed), frozenset(undirected))


@dataclass
class PhaseDiagnostics:
    """``stats[(i, j)] = (circular mean, circular std, spurious)`` or ``None``
    when every bin of ``W_i[j]`` was degenerate."""

    stats: dict[tuple[int, int], tuple[float, float, bool] | None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "phase_mean", "phase_std", "classified_spurious"])
        for (i, j), s in sorted(self.stats.items()):
            if s is None:
                w.writerow([i, j, "", "", ""])
            else:
                w.writerow([i, j, repr(s[0]), repr(s[1]), str(s[2]).lower()])
        return buf.getvalue()


def circular_stats(angles) -> tuple[float, float]:
    """Circular mean and RMS wrapped deviation from it (bounded by pi)."""
    z = np.exp(1j * np.asarray(angles, dtype=float))
    mean = float(np.angle(np.mean(z)))
    dev = np.angle(z * np.exp(-1j * mean))
    return mean, float(np.sqrt(np.mean(dev**2)))


def phase_diagnostics(fields: dict[int, WienerField], pairs, cfg: DiscoveryConfig | None = None) -> PhaseDiagnostics:
    """Phase flatness of ``W_i[j]`` for each ordered pair ``(i, j)`` in ``pairs``."""
    cfg = cfg or DiscoveryConfig()
    bins = _policy_bins(fields, cfg)
    stats = {}
    for i, j in pairs:
        f = fields[i]
        use = [k for k in _usable_bins(f, bins) if f[j][k] != 0]
        if not use:
            stats[(i, j)] = None
            continue
        mean, std = circular_stats(np.angle(f[j][use]))
        stats[(i, j)] = (mean, std, std < cfg.sigma_split)
    return PhaseDiagnostics(stats)
