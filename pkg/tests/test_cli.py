import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from spectral_causal.cli import main
from spectral_causal.graphs import Cpdag
from spectral_causal.simulate import ArSpec
from spectral_causal.zoo import graph1, sem2, six_node_ar

DATA = Path(__file__).parent / "data"


def write(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def six_spec(tmp_path):
    return write(tmp_path / "six.json", six_node_ar().to_json())


def manifest(out: Path) -> dict:
    return json.loads((out / "manifest.json").read_text())


def test_simulate_writes_panel_and_manifest(tmp_path, six_spec):
    out = tmp_path / "sim"
    assert main(["simulate", "--spec", str(six_spec), "--T", "500", "--seed", "1", "--out", str(out)]) == 0
    rows = (out / "panel.csv").read_text().splitlines()
    assert len(rows) == 1 + 500
    m = manifest(out)
    assert m["exit_code"] == 0 and not m["partial"]
    assert m["seed"] == 1 and str(six_spec) in m["inputs"]
    assert {"command", "config_hash", "outputs", "tool_version", "wall_time"} <= set(m)


def test_simulate_is_byte_identical(tmp_path, six_spec):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["simulate", "--spec", str(six_spec), "--mode", "restart", "--R", "20", "--N", "16",
                     "--seed", "7", "--out", str(out)]) == 0
        outs.append(out)
    for f in ("panel.csv", "panel.meta.json"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    assert manifest(outs[0])["config_hash"] == manifest(outs[1])["config_hash"]


def test_unstable_spec_exit_2(tmp_path, capsys):
    spec = write(tmp_path / "bad.json", ArSpec(np.array([[1.1]]), np.zeros((1, 1)), np.ones(1)).to_json())
    out = tmp_path / "o"
    assert main(["simulate", "--spec", str(spec), "--T", "10", "--out", str(out)]) == 2
    assert "stability" in capsys.readouterr().err
    m = manifest(out)
    assert m["exit_code"] == 2 and m["partial"] and "error" in m


def test_malformed_flags_exit_2_with_usage(tmp_path, capsys):
    assert main(["simulate", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_input_is_io_error(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--spec", str(tmp_path / "nope.json"), "--T", "10", "--out", str(out)]) == 3
    assert manifest(out)["exit_code"] == 3


def test_empty_panel_exit_2(tmp_path):
    (tmp_path / "p.csv").write_text("")
    out = tmp_path / "o"
    assert main(["discover", "--panel", str(tmp_path / "p.csv"), "--N", "16", "--out", str(out)]) == 2


def test_discover_on_acceptance_panel_matches_golden(tmp_path, six_spec):
    sim = tmp_path / "sim"
    assert main(["simulate", "--spec", str(six_spec), "--T", "10000", "--seed", "0", "--out", str(sim)]) == 0
    out = tmp_path / "disc"
    code = main(["discover", "--panel", str(sim / "panel.csv"), "--N", "64", "--step", "32", "--window", "hann",
                 "--tau", "0.48", "--tau-im", "0.22", "--out", str(out)])
    assert code == 0
    got = json.loads((out / "cpdag.json").read_text())
    want = json.loads((DATA / "acceptance_cpdag.json").read_text())
    assert Cpdag.from_json(got) == Cpdag.from_json(want)
    assert got["colliders"] == want["colliders"]
    assert (out / "diagnostics.csv").read_text().startswith("i,j,phase_mean,phase_std,classified_spurious")


def test_pc_and_phase_agree_on_analytic_input(tmp_path, six_spec):
    skel = []
    for algo in ("phase", "pc"):
        out = tmp_path / algo
        assert main(["discover", "--spec", str(six_spec), "--algo", algo, "--N", "32", "--out", str(out)]) == 0
        skel.append(Cpdag.from_json(json.loads((out / "cpdag.json").read_text())).skeleton())
    assert skel[0] == skel[1]


def test_effect_single_door_and_inadmissible(tmp_path, capsys):
    spec = write(tmp_path / "sem2.json", sem2(16).to_json())
    out = tmp_path / "e"
    assert main(["effect", "--spec", str(spec), "--edge", "1,0", "--adjust", "2", "--out", str(out)]) == 0
    eff = json.loads((out / "effect.json").read_text())
    alpha = np.array([complex(c["re"], c["im"]) for c in eff["coeffs"]])
    assert np.max(np.abs(alpha - sem2(16).h[:, 0, 1])) < 1e-8
    graph = write(tmp_path / "g.json", {"n": 3, "edges": [[0, 1], [1, 2]]})
    out = tmp_path / "bad"
    code = main(["effect", "--spec", str(spec), "--graph", str(graph), "--edge", "0,1", "--adjust", "2", "--out", str(out)])
    assert code == 5
    assert "C1" in capsys.readouterr().err


def test_effect_backdoor_on_graph1(tmp_path):
    spec = write(tmp_path / "g1.json", graph1(16).to_json())
    out = tmp_path / "bd"
    assert main(["effect", "--spec", str(spec), "--backdoor", "--treatment", "2", "--outcome", "3",
                 "--adjust", "0", "--value", "2", "--bin", "3", "--out", str(out)]) == 0
    dens = json.loads((out / "effect.json").read_text())["density"]
    want = graph1(16).h[3, 3, 2] * 2
    assert abs(complex(dens["mean"]["re"], dens["mean"]["im"]) - want) < 1e-10


def test_intervene_protocol_and_range(tmp_path, six_spec):
    (tmp_path / "y1.txt").write_text(" ".join(["1"] * 32 + ["0"] * 32))
    (tmp_path / "y2.txt").write_text(" ".join(["2"] * 32 + ["0"] * 32))
    out = tmp_path / "iv"
    assert main(["intervene", "--spec", str(six_spec), "--node", "1", "--seq", str(tmp_path / "y1.txt"),
                 "--seq2", str(tmp_path / "y2.txt"), "--R", "2000", "--out", str(out)]) == 0
    res = json.loads((out / "contrast.json").read_text())
    assert {2, 4}.issubset(res["affected"]) and 0 not in res["affected"] and 3 not in res["affected"]
    out = tmp_path / "same"
    assert main(["intervene", "--spec", str(six_spec), "--node", "1", "--seq", str(tmp_path / "y1.txt"),
                 "--seq2", str(tmp_path / "y1.txt"), "--R", "2000", "--out", str(out)]) == 0
    assert json.loads((out / "contrast.json").read_text())["affected"] == []
    out = tmp_path / "range"
    assert main(["intervene", "--spec", str(six_spec), "--node", "9", "--seq", str(tmp_path / "y1.txt"),
                 "--seq2", str(tmp_path / "y2.txt"), "--out", str(out)]) == 2


def test_bound_monotone_in_T(tmp_path):
    logs = []
    for T in (10**5, 10**6, 10**7, 10**8):
        out = tmp_path / str(T)
        assert main(["bound", "--kind", "psd", "--n", "4", "--T", str(T), "--L", "20", "--C", "1",
                     "--decay-base", "0.5", "--M", "1", "--epsilon", "0.5", "--out", str(out)]) == 0
        logs.append(json.loads((out / "bound.json").read_text())["log_bound"])
    assert all(b < a for a, b in zip(logs, logs[1:]))


def test_bench_smoke(tmp_path):
    import time

    t0 = time.perf_counter()
    out = tmp_path / "b"
    assert main(["bench", "--suite", "wiener-N", "--values", "8,16", "--n", "3", "--T", "16384", "--out", str(out)]) == 0
    assert main(["bench", "--suite", "discovery", "--values", "2,3", "--out", str(tmp_path / "d")]) == 0
    assert time.perf_counter() - t0 < 60
    assert (out / "bench.csv").read_text().startswith("method,axis,value,median_seconds,tests")


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spectral_causal.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
