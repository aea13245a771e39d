import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kronphi.dense import ShiftInfo, expm, herm_skew_split, trace_shift, two_norm_estimate


def taylor_expm(a, terms=60):
    """Scaled Taylor series with squaring, independent of the Pade code path."""
    s = max(0, int(math.ceil(math.log2(max(np.linalg.norm(a, 1), 1e-300)))) + 2)
    x = a / 2.0 ** s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ x / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def test_expm_zero_and_diagonal():
    np.testing.assert_array_equal(expm(np.zeros((3, 3))), np.eye(3))
    e = expm(np.diag([1.0, -1.0]))
    assert np.allclose(np.diag(e), [math.e, 1 / math.e], rtol=1e-15, atol=0)


def test_expm_matches_taylor(rng):
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    a *= 5 / np.linalg.norm(a, 1)
    ref = taylor_expm(a)
    assert np.linalg.norm(expm(a) - ref) <= 1e-13 * np.linalg.norm(ref)


def test_expm_rejects_rectangular():
    with pytest.raises(ValueError):
        expm(np.zeros((2, 3)))


def test_expm_commuting_sum(rng):
    m = rng.standard_normal((5, 5)) / 3
    a = m @ m + 0.5 * m
    b = 2 * m - np.eye(5)
    lhs = expm(a + b)
    assert np.linalg.norm(lhs - expm(a) @ expm(b)) <= 1e-12 * np.linalg.norm(lhs)


def test_expm_half_squared(rng):
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    e = expm(a)
    h = expm(a / 2)
    assert np.linalg.norm(h @ h - e) <= 1e-12 * np.linalg.norm(e)


def test_trace_shift(rng):
    assert trace_shift(np.eye(4)) == 1
    assert trace_shift(np.diag([2.0, 4.0])) == 3
    a = rng.standard_normal((5, 5))
    assert np.isclose(trace_shift(a), sum(a[i, i] for i in range(5)) / 5, rtol=1e-15)


def test_shift_info_total(rng):
    fs = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in (2, 3, 4)]
    info = ShiftInfo.from_factors(fs)
    assert np.isclose(info.sigma, sum(np.trace(a) / a.shape[0] for a in fs))


def test_herm_skew_split(rng):
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = h + h.conj().T
    hh, ss = herm_skew_split(h)
    assert np.allclose(hh, h) and np.allclose(ss, 0)
    a = 1j * np.eye(3)
    hh, ss = herm_skew_split(a)
    assert np.allclose(hh, 0) and np.allclose(ss, a)
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    hh, ss = herm_skew_split(a)
    assert np.allclose(hh, hh.conj().T, atol=1e-15)
    assert np.allclose(ss, -ss.conj().T, atol=1e-15)
    assert np.allclose(hh + ss, a, atol=1e-15)
    assert np.max(np.abs(np.linalg.eigvals(hh).imag)) < 1e-12


def test_two_norm_simple():
    est = two_norm_estimate(np.diag([3.0, 1.0]))
    assert 3.0 <= est <= 3.03
    assert two_norm_estimate(np.zeros((3, 3))) == 0.0


def test_two_norm_against_gram_eigs(rng):
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    true = math.sqrt(np.max(np.linalg.eigvalsh(a.conj().T @ a)))
    est = two_norm_estimate(a)
    assert true <= est <= 1.01 * true * (1 + 1e-12)


def test_two_norm_clustered_top_singular_values():
    # repeated top singular value with a slow gap; estimate must not undershoot
    a = np.diag([5.0, 5.0 - 1e-9, 1.0, 0.5])
    assert two_norm_estimate(a) >= 5.0


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_two_norm_never_underestimates(n, seed, scale):
    rng = np.random.default_rng(seed)
    a = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    true = np.linalg.norm(a, 2)
    est = two_norm_estimate(a)
    assert est >= true * (1 - 1e-12)
    assert est <= math.sqrt(np.linalg.norm(a, 1) * np.linalg.norm(a, np.inf)) * (1 + 1e-12)
