"""Batch command-line interface.

Every command writes its outputs plus ``manifest.json`` into ``--out``. The
manifest is written on failure too, with ``partial`` set and the exit code.
Exit codes: 0 ok, 2 bad input, 3 I/O, 4 numerical, 5 inadmissible criterion.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .bench import bench_discovery, bench_wiener, reports_csv
from .bounds import BoundParams, crossover_epsilon, ipsd_bound, psd_bound, sample_complexity, wiener_bound
from .discovery import DiscoveryConfig, full_wiener_fields, phase_diagnostics, wiener_pc, wiener_phase_cpdag
from .effects import backdoor_adjust, backdoor_adjust_analytic, estimate_direct_effect, frontdoor_adjust, intervention_contrast
from .errors import ArgumentError, InadmissibleError, SpectralCausalError, StructuralError
from .graphs import CausalGraph, back_door_violations, front_door_violations
from .model import LdimSpec, closed_form_psd
from .simulate import ArSpec, InterventionSpec, TimeSeriesPanel, ar_to_ldim, restart_and_record, simulate_ar, simulate_circular
from .spectral import segment_fft

THREADS_ENV = "SPECTRAL_CAUSAL_THREADS"
PATH_ARGS = ("spec", "panel", "graph", "seq", "seq2")


class UsageError(ArgumentError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class Run:
    """Collects inputs/outputs of one command and writes its manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.out = Path(args.out)
        self.seed = getattr(args, "seed", None)
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.config = {
            k: str(v) if isinstance(v, complex) else v
            for k, v in sorted(vars(args).items())
            if k not in ("func", "out")
        }
        self.start = time.perf_counter()

    def read(self, path) -> str:
        text = Path(path).read_text()
        self.inputs.append(str(path))
        return text

    def write(self, name: str, text: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text)
        self.outputs.append(str(path))

    def write_json(self, name: str, obj) -> None:
        self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def config_hash(self) -> str:
        # paths are excluded so identical inputs hash the same anywhere
        config = {k: v for k, v in self.config.items() if k not in PATH_ARGS}
        h = hashlib.sha256(self.command.encode())
        h.update(json.dumps(config, sort_keys=True, default=str).encode())
        for p in self.inputs:
            h.update(hashlib.sha256(Path(p).read_bytes()).digest())
        return h.hexdigest()

    def finish(self, exit_code: int, error: str | None = None) -> None:
        manifest = {
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash(),
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": list(self.outputs),
            "tool_version": __version__,
            "wall_time": time.perf_counter() - self.start,
            "exit_code": exit_code,
            "partial": exit_code != 0,
        }
        if error:
            manifest["error"] = error
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_json(run: Run, path):
    try:
        return json.loads(run.read(path))
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: not valid JSON ({exc})") from exc


def load_spec(run: Run, path) -> ArSpec | LdimSpec:
    """AR specs carry ``cross``; LDIM specs carry ``h``."""
    obj = _load_json(run, path)
    try:
        if "cross" in obj:
            return ArSpec.from_json(obj)
        if "h" in obj:
            return LdimSpec.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpectralCausalError):
            raise
        raise StructuralError(f"{path}: malformed spec ({exc})") from exc
    raise StructuralError(f"{path}: spec needs either 'cross' (AR) or 'h' (LDIM)")


def load_panel(run: Run, path) -> TimeSeriesPanel:
    meta_path = Path(str(path).removesuffix(".csv") + ".meta.json")
    meta = _load_json(run, meta_path) if meta_path.exists() else None
    return TimeSeriesPanel.from_csv(run.read(path), meta)


def _parse_nodes(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ArgumentError(f"bad node list {text!r}") from exc


def _load_sequence(run: Run, path) -> np.ndarray:
    text = run.read(path).replace(",", " ")
    try:
        seq = np.array([float(x) for x in text.split()])
    except ValueError as exc:
        raise StructuralError(f"{path}: sequence must be numbers") from exc
    if seq.size == 0:
        raise StructuralError(f"{path}: empty sequence")
    return seq


# -- commands -----------------------------------------------------------------


def cmd_simulate(args, run: Run) -> None:
    spec = load_spec(run, args.spec)
    if args.mode == "circular":
        if args.R is None:
            raise ArgumentError("circular mode needs --R")
        if isinstance(spec, ArSpec):
            if args.N is None:
                raise ArgumentError("circular mode on an AR spec needs --N")
            spec.check_stable()
            spec = ar_to_ldim(spec, args.N)
        panel = simulate_circular(spec, args.R, seed=args.seed)
    else:
        if not isinstance(spec, ArSpec):
            raise ArgumentError(f"{args.mode} mode needs an AR spec")
        if args.mode == "ar":
            if args.T is None:
                raise ArgumentError("ar mode needs --T")
            panel = simulate_ar(spec, args.T, seed=args.seed)
        else:
            if args.R is None or args.N is None:
                raise ArgumentError("restart mode needs --R and --N")
            panel = restart_and_record(spec, args.R, args.N, seed=args.seed)
    run.write("panel.csv", panel.to_csv())
    run.write_json("panel.meta.json", dict(panel.meta, layout=panel.layout))


def _discovery_source(args, run: Run):
    if args.spec:
        spec = load_spec(run, args.spec)
        if isinstance(spec, ArSpec):
            spec.check_stable()
            spec = ar_to_ldim(spec, args.N or 64)
        return closed_form_psd(spec)
    if not args.panel:
        raise ArgumentError("give --panel or --spec")
    panel = load_panel(run, args.panel)
    if panel.layout == "streaming" or args.N:
        if not args.N:
            raise ArgumentError("streaming panels need --N to be segmented")
        panel = panel.resegment(args.N, args.step)
    if panel.num_segments < panel.n + 2:
        raise ArgumentError(f"need at least n + 2 = {panel.n + 2} segments, got {panel.num_segments}")
    ens = segment_fft(panel, window=args.window)
    ens.grid.require_fft()
    return ens


def cmd_discover(args, run: Run) -> None:
    default_tau = 1e-6 if args.spec else 0.1
    cfg = DiscoveryConfig(
        tau=default_tau if args.tau is None else args.tau,
        tau_im=default_tau if args.tau_im is None else args.tau_im,
        sigma_split=args.sigma_split,
        frequency_policy=args.freq_policy,
        seed=args.seed,
    )
    source = _discovery_source(args, run)
    if args.algo == "phase":
        res = wiener_phase_cpdag(source, cfg)
        run.write_json("cpdag.json", res.to_json())
        fields = res.fields
        pairs = sorted((a, b) for p in res.kin for a in p for b in p if a != b)
    else:
        res = wiener_pc(source, cfg)
        run.write_json("cpdag.json", res.to_json())
        fields = full_wiener_fields(source)
        n = res.cpdag.n
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    run.write("diagnostics.csv", phase_diagnostics(fields, pairs, cfg).to_csv())


def _effect_graph(args, run: Run, spec):
    if args.graph:
        return CausalGraph.from_json(_load_json(run, args.graph))
    if spec is not None:
        return spec.graph
    raise ArgumentError("a panel needs --graph for admissibility checks")


def cmd_effect(args, run: Run) -> None:
    spec = load_spec(run, args.spec) if args.spec else None
    if isinstance(spec, ArSpec):
        spec.check_stable()
        spec = ar_to_ldim(spec, args.N or 64)
    g = _effect_graph(args, run, spec)
    Z = _parse_nodes(args.adjust)
    if spec is not None:
        source = closed_form_psd(spec)
    elif args.panel:
        panel = load_panel(run, args.panel)
        if panel.layout == "streaming":
            if not args.N:
                raise ArgumentError("streaming panels need --N to be segmented")
            panel = panel.resegment(args.N)
        source = segment_fft(panel)
    else:
        raise ArgumentError("give --spec or --panel")
    if args.edge:
        u, y = _parse_nodes(args.edge)
        est = estimate_direct_effect(g, source, u, y, Z)
        run.write_json("effect.json", est.to_json())
        return
    if args.treatment is None or args.outcome is None:
        raise ArgumentError("give --edge u,y, or --treatment and --outcome with --backdoor/--frontdoor")
    w, y = args.treatment, args.outcome
    w_star = complex(args.value)
    if args.frontdoor:
        violations = front_door_violations(g, {w}, {y}, Z)
        criterion = "front-door"
    else:
        violations = back_door_violations(g, {w}, {y}, Z)
        criterion = "back-door"
    if violations:
        raise InadmissibleError(criterion, violations)
    k = args.bin
    out = {"criterion": criterion, "treatment": w, "outcome": y, "adjustment": Z, "bin": k,
           "value": {"re": w_star.real, "im": w_star.imag}}
    if spec is not None:
        if args.frontdoor:
            raise ArgumentError("front-door adjustment works on sampled panels")
        mean, var = backdoor_adjust_analytic(source, k, w, y, Z, w_star)
        out["density"] = {"mean": {"re": mean.real, "im": mean.imag}, "variance": var}
    else:
        X = source.coeffs[:, :, k]
        adjust = frontdoor_adjust if args.frontdoor else backdoor_adjust
        dens = adjust(X[:, y], X[:, w], X[:, Z], w_star, strata=args.strata)
        out["density"] = dict(dens.to_json(), variance=dens.variance)
    run.write_json("effect.json", out)


def cmd_intervene(args, run: Run) -> None:
    spec = load_spec(run, args.spec)
    if not isinstance(spec, ArSpec):
        raise ArgumentError("interventions run on an AR spec")
    if not 0 <= args.node < spec.n:
        raise ArgumentError(f"node {args.node} out of range 0..{spec.n - 1}")
    s1 = _load_sequence(run, args.seq)
    s2 = _load_sequence(run, args.seq2)
    N = args.N or s1.size
    iv1, iv2 = InterventionSpec(args.node, s1), InterventionSpec(args.node, s2)
    res = intervention_contrast(spec, iv1, iv2, args.R, N, seed=args.seed, z_crit=args.z_crit)
    run.write_json(
        "contrast.json",
        {
            "node": args.node,
            "z_crit": args.z_crit,
            "R": args.R,
            "N": N,
            "affected": [c.node for c in res if c.affected],
            "nodes": {str(c.node): c.to_json() for c in res},
        },
    )


def cmd_bound(args, run: Run) -> None:
    p = BoundParams(args.n, args.T, args.L, args.C, args.decay_base, args.M, args.epsilon, args.c1, args.block)
    fn = {"psd": psd_bound, "ipsd": ipsd_bound, "wiener": wiener_bound}[args.kind]
    out = fn(p).to_json()
    out["kind"] = args.kind
    out["crossover_epsilon"] = crossover_epsilon(p, args.kind)
    if args.confidence is not None:
        out["sample_complexity"] = sample_complexity(p, args.confidence)
    run.write_json("bound.json", out)


def cmd_bench(args, run: Run) -> None:
    values = _parse_nodes(args.values)
    if args.suite == "discovery":
        reports = bench_discovery(values or [2, 3, 4, 5, 6])
    else:
        axis = args.suite.split("-")[1]
        default = [16, 32, 64, 128, 256] if axis == "N" else [4, 6, 8, 12, 16]
        reports = bench_wiener(axis, values or default, n=args.n, N=args.N, T=args.T, reps=args.reps, seed=args.seed)
    run.write("bench.csv", reports_csv(reports))
    run.write_json(
        "bench.json",
        [
            {"method": r.method, "axis": r.axis, "values": r.values, "seconds": r.seconds, "tests": r.tests,
             "slope": r.slope, "slope_ci": list(r.slope_ci), "claimed": r.claimed, "verdict": r.verdict}
            for r in reports
        ],
    )


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spectral-causal", description="Frequency-domain causal discovery for networks of time series.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate a panel from an AR or LDIM spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--mode", choices=["ar", "circular", "restart"], default="ar")
    s.add_argument("--T", type=int)
    s.add_argument("--R", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("discover", help="recover a CPDAG from a panel or analytic spec")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--panel")
    src.add_argument("--spec", help="analytic input: closed-form PSD of a model file")
    d.add_argument("--algo", choices=["phase", "pc"], default="phase")
    d.add_argument("--N", type=int, help="segment length when segmenting a stream")
    d.add_argument("--step", type=int, help="segment start spacing (default N)")
    d.add_argument("--window", default=None, help="taper name, e.g. hann (default boxcar)")
    d.add_argument("--tau", type=float)
    d.add_argument("--tau-im", type=float)
    d.add_argument("--sigma-split", type=float, default=1.0)
    d.add_argument("--freq-policy", choices=["all-bins", "single-bin"], default="all-bins")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_discover)

    e = sub.add_parser("effect", help="direct, back-door or front-door effect")
    e.add_argument("--spec")
    e.add_argument("--panel")
    e.add_argument("--graph", help="CausalGraph JSON (required with --panel)")
    e.add_argument("--edge", help="u,y for the single-door direct effect of u on y")
    e.add_argument("--adjust", default="", help="comma-separated adjustment set")
    kind = e.add_mutually_exclusive_group()
    kind.add_argument("--backdoor", action="store_true")
    kind.add_argument("--frontdoor", action="store_true")
    e.add_argument("--treatment", type=int)
    e.add_argument("--outcome", type=int)
    e.add_argument("--value", type=complex, default=1 + 0j)
    e.add_argument("--bin", type=int, default=1)
    e.add_argument("--strata", type=int, default=8)
    e.add_argument("--N", type=int)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_effect)

    i = sub.add_parser("intervene", help="contrast two forced sequences on one node")
    i.add_argument("--spec", required=True)
    i.add_argument("--node", type=int, required=True)
    i.add_argument("--seq", required=True)
    i.add_argument("--seq2", required=True)
    i.add_argument("--R", type=int, default=10_000)
    i.add_argument("--N", type=int)
    i.add_argument("--z-crit", type=float, default=6.0)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_intervene)

    b = sub.add_parser("bound", help="evaluate a concentration bound")
    b.add_argument("--kind", choices=["psd", "ipsd", "wiener"], default="wiener")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--T", type=int, required=True)
    b.add_argument("--L", type=int, required=True)
    b.add_argument("--C", type=float, required=True)
    b.add_argument("--decay-base", type=float, required=True)
    b.add_argument("--M", type=float, required=True)
    b.add_argument("--epsilon", type=float, required=True)
    b.add_argument("--c1", type=float)
    b.add_argument("--block", type=int)
    b.add_argument("--confidence", type=float)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bound)

    r = sub.add_parser("bench", help="scaling benchmarks")
    r.add_argument("--suite", choices=["wiener-N", "wiener-n", "discovery"], required=True)
    r.add_argument("--values", help="comma-separated sweep values")
    r.add_argument("--n", type=int, default=4)
    r.add_argument("--N", type=int, default=16)
    r.add_argument("--T", type=int, default=2**16)
    r.add_argument("--reps", type=int, default=3)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_bench)
    return p


def _thread_limit():
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        limit = int(raw)
    except ValueError as exc:
        raise ArgumentError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if limit < 0:
        raise ArgumentError(f"{THREADS_ENV} must be >= 0")
    if limit == 0:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=limit)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run = Run(args.command, args)
    try:
        with _thread_limit():
            args.func(args, run)
    except SpectralCausalError as exc:
        code, message = (exc.exit_code if exc.exit_code != 1 else 4), str(exc)
    except OSError as exc:
        code, message = 3, str(exc)
    else:
        code, message = 0, None
    if message:
        print(f"error: {message}", file=sys.stderr)
    try:
        run.finish(code, message)
    except OSError as exc:
        print(f"error: cannot write manifest: {exc}", file=sys.stderr)
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
