import numpy as np
import pytest

from kronphi.phi import EXP_CACHE, KroneckerSum


def random_factors(rng, dims, norm1=None):
    out = []
    for n in dims:
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        target = rng.uniform(0.1, 5.0) if norm1 is None else norm1
        out.append(a * (target / np.linalg.norm(a, 1)))
    return out


def random_tensor(rng, dims):
    return rng.standard_normal(tuple(dims)) + 1j * rng.standard_normal(tuple(dims))


def random_kron(rng, d=None, t=None):
    d = int(rng.integers(1, 4)) if d is None else d
    dims = [int(x) for x in rng.integers(2, 7, size=d)]
    t = [1.0, 0.1, 1 + 1j][int(rng.integers(3))] if t is None else t
    return KroneckerSum(random_factors(rng, dims), t)


def rel_inf(a, b):
    den = np.max(np.abs(b))
    return np.max(np.abs(a - b)) / (den if den > 0 else 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _fresh_cache():
    EXP_CACHE.clear()
    yield


ACCEPTANCE = []


def report(number, title, passed, detail, seconds, budget):
    """Record and print one acceptance line; the runtime budget is part of the verdict."""
    ok = bool(passed) and seconds < budget
    line = (f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail} "
            f"({seconds:.2f}s, budget {budget:g}s)")
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
