import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from spectral_causal.graphs import CausalGraph

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")


@st.composite
def digraphs(draw, min_n=1, max_n=7, acyclic=False):
    n = draw(st.integers(min_n, max_n))
    if acyclic:
        pairs = list(itertools.combinations(range(n), 2))
    else:
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = frozenset(p for p, m in zip(pairs, mask) if m)
    if acyclic:
        perm = draw(st.permutations(range(n)))
        edges = frozenset((perm[u], perm[v]) for u, v in edges)
    return CausalGraph(n, edges)


def random_dag(n, p, rng):
    perm = rng.permutation(n)
    edges = {(int(perm[u]), int(perm[v])) for u, v in itertools.combinations(range(n), 2) if rng.random() < p}
    return CausalGraph(n, frozenset(edges))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion
_CRITERIA: dict[int, tuple[bool, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    name = item.name
    if not name.startswith("test_criterion_"):
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        num = int(name.split("_")[2])
        doc = (item.function.__doc__ or "").strip().splitlines()
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _CRITERIA[num] = (rep.passed, doc[0] if doc else name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, title, detail = _CRITERIA[num]
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
