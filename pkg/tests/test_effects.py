import numpy as np
import pytest

from spectral_causal.effects import (
    FreqGaussianSummary,
    atomic_intervention_density,
    backdoor_adjust,
    backdoor_adjust_analytic,
    contrast_summaries,
    estimate_direct_effect,
    frontdoor_adjust,
    intervention_contrast,
    reim_cov,
)
from spectral_causal.errors import CoverageError, InadmissibleError, UnsupportedStructureError
from spectral_causal.graphs import CausalGraph, back_door_admissible, descendants, single_door_admissible
from spectral_causal.model import LdimSpec, closed_form_psd
from spectral_causal.simulate import ArSpec, InterventionSpec, simulate_circular
from spectral_causal.spectral import SpectralEnsemble, segment_fft
from spectral_causal.zoo import graph1, lag_filter, ldim_from_graph, sem1, sem2

from conftest import random_dag


def test_sem2_direct_effect_exact():
    spec = sem2(64)
    est = estimate_direct_effect(spec.graph, closed_form_psd(spec), 1, 0, [2])
    assert np.max(np.abs(est.alpha - spec.h[:, 0, 1])) < 1e-8
    assert est.to_json()["admissibility"]["admissible"]


def test_sem1_projection_on_parent_alone():
    spec = sem1(32)
    est = estimate_direct_effect(spec.graph, closed_form_psd(spec), 2, 1)
    assert np.max(np.abs(est.alpha - spec.h[:, 1, 2])) < 1e-12


def test_sem2_direct_effect_sampled():
    spec = sem2(16)
    ens = segment_fft(simulate_circular(spec, 10_000, seed=11))
    est = estimate_direct_effect(spec.graph, ens, 1, 0, [2])
    beta = spec.h[:, 0, 1]
    assert np.max(np.abs(est.alpha - beta) / np.abs(beta)) < 0.05


def test_inadmissible_names_condition():
    g = CausalGraph(3, frozenset({(0, 1), (1, 2)}))
    with pytest.raises(InadmissibleError) as exc:
        estimate_direct_effect(g, closed_form_psd(sem2(8)), 0, 1, [2])
    assert exc.value.violations == ("C1",)
    assert exc.value.exit_code == 5


def test_single_door_exact_on_random_admissible_cases():
    rng = np.random.default_rng(30)
    cases = 0
    while cases < 100:
        g = random_dag(int(rng.integers(3, 7)), 0.45, rng)
        if not g.edges:
            continue
        u, y = sorted(g.edges)[int(rng.integers(len(g.edges)))]
        Z = g.parents(y) - {u}
        assert single_door_admissible(g, u, y, Z)
        spec = ldim_from_graph(g, 16, seed=cases)
        est = estimate_direct_effect(g, closed_form_psd(spec), u, y, Z)
        assert np.max(np.abs(est.alpha - spec.h[:, y, u])) < 1e-7
        cases += 1


def confounder_spec(num_bins=16):
    # nodes Z=0, W=1, Y=2: Z -> W, Z -> Y, W -> Y
    h = np.zeros((num_bins, 3, 3), dtype=complex)
    h[:, 1, 0] = lag_filter(num_bins, 0.8, 0.3)
    h[:, 2, 0] = lag_filter(num_bins, -0.6, 0.0, delay=2)
    h[:, 2, 1] = lag_filter(num_bins, 0.7, -0.2)
    return LdimSpec(h, np.ones((3, num_bins)))


def test_backdoor_analytic_matches_structural_gain_and_intervention():
    spec = confounder_spec()
    phi = closed_form_psd(spec)
    for k in range(16):
        mean, var = backdoor_adjust_analytic(phi, k, 1, 2, [0], 1.5 - 0.5j)
        assert abs(mean - spec.h[k, 2, 1] * (1.5 - 0.5j)) < 1e-10
        law = atomic_intervention_density(spec, 1, 1.5 - 0.5j, k)
        assert abs(mean - law.mean[2]) < 1e-6
        assert abs(var - law.cov[2, 2].real) < 1e-6


def test_graph1_effect_of_x3_on_x4_is_backdoor_with_x1():
    spec = graph1(16)
    assert back_door_admissible(spec.graph, {2}, {3}, {0})
    phi = closed_form_psd(spec)
    for k in range(16):
        mean, var = backdoor_adjust_analytic(phi, k, 2, 3, [0], 2.0)
        law = atomic_intervention_density(spec, 2, 2.0, k)
        assert abs(mean - law.mean[3]) < 1e-6
        assert abs(var - law.cov[3, 3].real) < 1e-6


def test_adjustment_consistency_on_random_specs():
    rng = np.random.default_rng(31)
    done = 0
    while done < 40:
        g = random_dag(int(rng.integers(3, 7)), 0.5, rng)
        w = int(rng.integers(g.n))
        others = [v for v in range(g.n) if v != w and v not in g.parents(w)]
        if not others:
            continue
        y = int(rng.choice(others))
        Z = sorted(g.parents(w))
        assert back_door_admissible(g, {w}, {y}, Z)
        spec = ldim_from_graph(g, 8, seed=done)
        phi = closed_form_psd(spec)
        for k in range(8):
            mean, var = backdoor_adjust_analytic(phi, k, w, y, Z, 0.7 + 0.2j)
            law = atomic_intervention_density(spec, w, 0.7 + 0.2j, k)
            assert abs(mean - law.mean[y]) < 1e-6
            assert abs(var - law.cov[y, y].real) < 1e-6
        done += 1


def bin_samples(spec, R, seed, k):
    return segment_fft(simulate_circular(spec, R, seed=seed)).coeffs[:, :, k]


def test_backdoor_sampled_matches_analytic():
    spec = confounder_spec()
    k, R, w_star = 3, 10_000, 1.0 + 0.5j
    X = bin_samples(spec, R, 12, k)
    est = backdoor_adjust(X[:, 2], X[:, 1], X[:, 0], w_star)
    want, _ = backdoor_adjust_analytic(closed_form_psd(spec), k, 1, 2, [0], w_star)
    # sd of the fitted slope times |w*|: residual power over R times the partial power of W given Z
    P = closed_form_psd(spec).phi[k]
    resid_w = P[1, 1] - abs(P[1, 0]) ** 2 / P[0, 0]
    resid_y = 1.0  # unit innovation of Y
    sd = np.sqrt(resid_y / (R * resid_w.real)) * abs(w_star)
    assert abs(est.mean - want) < 3 * sd + 3 * np.sqrt(P[2, 2].real / R)


def test_backdoor_without_confounders_is_conditional_mean():
    rng = np.random.default_rng(13)
    w = rng.normal(size=500) + 1j * rng.normal(size=500)
    y = (0.4 - 0.3j) * w + 0.1 * (rng.normal(size=500) + 1j * rng.normal(size=500))
    est = backdoor_adjust(y, w, None, 2.0)
    coef = np.linalg.lstsq(np.column_stack([np.ones(500), w]), y, rcond=None)[0]
    assert abs(est.mean - (coef[0] + coef[1] * 2.0)) < 1e-10


def test_backdoor_single_component_when_z_irrelevant():
    rng = np.random.default_rng(14)
    w = rng.normal(size=400) + 0j
    y = 0.5 * w + rng.normal(size=400)
    z = np.zeros(400)
    est = backdoor_adjust(y, w, z, 1.0, strata=1)
    assert len(est.components) == 1
    coef = np.linalg.lstsq(np.column_stack([np.ones(400), w]), y, rcond=None)[0]
    assert abs(est.mean - (coef[0] + coef[1])) < 1e-10


def test_backdoor_empty_stratum():
    with pytest.raises(CoverageError):
        backdoor_adjust(np.ones(10), np.arange(10.0), np.arange(10.0), 1.0, strata=8)


def mediator_spec(num_bins=16, mediated=True):
    # nodes W=0, M=1, Y=2: W -> M -> Y
    h = np.zeros((num_bins, 3, 3), dtype=complex)
    if mediated:
        h[:, 1, 0] = lag_filter(num_bins, 0.9, 0.2)
    h[:, 2, 1] = lag_filter(num_bins, 0.7, -0.3)
    return LdimSpec(h, np.ones((3, num_bins)))


def test_frontdoor_equals_backdoor_on_unconfounded_mediator():
    spec = mediator_spec()
    k, R, w_star = 2, 10_000, 1.0
    X = bin_samples(spec, R, 15, k)
    fd = frontdoor_adjust(X[:, 2], X[:, 0], X[:, 1], w_star)
    bd = backdoor_adjust(X[:, 2], X[:, 0], None, w_star)
    truth = spec.h[k, 2, 1] * spec.h[k, 1, 0] * w_star
    P = closed_form_psd(spec).phi[k]
    # both estimates are means of R samples plus a fitted slope; Var(Y) / R bounds each
    sd = np.sqrt(P[2, 2].real / R) * (1 + abs(w_star))
    assert abs(bd.mean - truth) < 3 * sd
    assert abs(fd.mean - truth) < 3 * sd
    assert abs(fd.mean - bd.mean) < 3 * np.sqrt(2) * sd


def test_frontdoor_broken_mediation_ignores_treatment():
    spec = mediator_spec(mediated=False)
    k, R = 2, 10_000
    X = bin_samples(spec, R, 16, k)
    a = frontdoor_adjust(X[:, 2], X[:, 0], X[:, 1], 1.0)
    b = frontdoor_adjust(X[:, 2], X[:, 0], X[:, 1], -1.0)
    P = closed_form_psd(spec).phi[k]
    # the difference is 2 * (fitted M-on-W slope) * (Y-on-M gain), slope sd = 1 / sqrt(R)
    sd = 2 * abs(spec.h[k, 2, 1]) * np.sqrt(P[1, 1].real / (R * P[0, 0].real))
    assert abs(a.mean - b.mean) < 3 * sd + 3 * np.sqrt(2 * P[2, 2].real / R)


def test_frontdoor_degenerate_treatment_is_observational():
    rng = np.random.default_rng(17)
    y = rng.normal(size=50) + 1j * rng.normal(size=50)
    est = frontdoor_adjust(y, np.ones(50), rng.normal(size=50), 3.0)
    assert abs(est.mean - y.mean()) < 1e-12


def test_atomic_intervention_propagation():
    spec = graph1(8)
    law = atomic_intervention_density(spec, 0, 0.0, 3)
    assert np.allclose(law.mean, 0)
    assert law.cov[0, 0] == 0
    law = atomic_intervention_density(spec, 0, 1.0, 3)
    G = np.linalg.inv(np.eye(4) - spec.h[3])
    assert np.allclose(law.mean, G[:, 0])
    assert law.mean[1] == 0
    empty = LdimSpec(np.zeros((8, 3, 3)), np.ones((3, 8)))
    law = atomic_intervention_density(empty, 1, 2.0, 0)
    assert np.allclose(law.mean, [0, 2, 0]) and np.allclose(np.diag(law.cov), [1, 0, 1])


def test_atomic_intervention_rejects_cycle_through_node():
    h = np.zeros((4, 2, 2), dtype=complex)
    h[:, 0, 1] = 0.3
    h[:, 1, 0] = 0.3
    with pytest.raises(UnsupportedStructureError):
        atomic_intervention_density(LdimSpec(h, np.ones((2, 4))), 0, 1.0, 0)


def test_summary_and_reim_cov():
    rng = np.random.default_rng(18)
    X = rng.normal(size=(1000, 2, 4)) + 1j * rng.normal(size=(1000, 2, 4))
    s = FreqGaussianSummary.from_ensemble(SpectralEnsemble(X))
    assert np.allclose(s.means, X.mean(axis=0))
    assert np.allclose(s.covs[1, 2], reim_cov(X[:, 1, 2]))
    assert np.all(np.linalg.eigvalsh(s.covs) >= 0)


def lag1_ar(g, rng):
    B = np.zeros((g.n, g.n))
    for u, v in g.edges:
        B[v, u] = rng.uniform(0.4, 0.8)
    return ArSpec(np.zeros((g.n, 1)), B, np.ones(g.n))


def test_intervened_node_shift_is_exact_dft_difference():
    g = CausalGraph(3, frozenset({(0, 1), (1, 2)}))
    spec = lag1_ar(g, np.random.default_rng(0))
    y1 = np.r_[np.ones(8), np.zeros(8)]
    res = intervention_contrast(spec, InterventionSpec(1, y1), InterventionSpec(1, 2 * y1), 200, 16, seed=1)
    want = np.fft.fft(y1) / 4.0
    assert np.allclose(res[1].shift, want, atol=1e-12)


def test_identical_interventions_stay_in_null_band():
    g = CausalGraph(4, frozenset({(0, 1), (1, 2), (1, 3)}))
    spec = lag1_ar(g, np.random.default_rng(1))
    y1 = np.r_[np.ones(8), np.zeros(8)]
    res = intervention_contrast(spec, InterventionSpec(1, y1), InterventionSpec(1, y1), 10_000, 16, seed=2)
    for c in res:
        assert c.max_z < 4


def test_intervention_decisions_follow_reachability():
    rng = np.random.default_rng(32)
    N = 16
    y1 = np.r_[np.ones(N // 2), np.zeros(N // 2)]
    decisions = correct = 0
    for case in range(20):
        g = random_dag(5, 0.4, rng)
        spec = lag1_ar(g, rng)
        i = int(rng.integers(g.n))
        res = intervention_contrast(spec, InterventionSpec(i, y1), InterventionSpec(i, 2 * y1), 10_000, N, seed=case)
        reach = descendants(g, i) | {i}
        for c in res:
            decisions += 1
            correct += c.affected == (c.node in reach)
    assert correct / decisions >= 0.95


def test_contrast_requires_same_node():
    from spectral_causal.errors import ArgumentError

    spec = lag1_ar(CausalGraph(2, frozenset({(0, 1)})), np.random.default_rng(0))
    with pytest.raises(ArgumentError):
        intervention_contrast(spec, InterventionSpec(0, [1.0]), InterventionSpec(1, [1.0]), 10, 4)
