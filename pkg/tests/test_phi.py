import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_factors, random_kron, random_tensor, rel_inf
from kronphi import oracle
from kronphi.phi import (EXP_CACHE, KroneckerSum, block_diagonal_apply, phiks_lincomb,
                         phiks_same_vector)
from kronphi.problems import validation_operator
from kronphi.quadrature import QuadraturePlan, gll_rule, tucker_count
from kronphi.tensor import SizeError, tucker

EPS = 2.0 ** -53


def scalar_phi(z, ell):
    if ell == 0:
        return np.exp(z)
    if abs(z) < 1:
        return sum(z ** k / math.factorial(k + ell) for k in range(40))
    return (scalar_phi(z, ell - 1) - 1 / math.factorial(ell - 1)) / z


def test_zero_operator_gives_inverse_factorials(rng):
    k = KroneckerSum([np.zeros((3, 3)), np.zeros((2, 2))])
    v = random_tensor(rng, k.dims)
    r = phiks_same_vector(k, v, 4, 1e-14)
    for ell in range(1, 5):
        np.testing.assert_allclose(r.phi(ell), v / math.factorial(ell), rtol=1e-14)


def test_scalar_phi1():
    k = KroneckerSum([np.array([[-1.0]])])
    r = phiks_same_vector(k, np.array([2.0]), 1, EPS)
    assert abs(r.phi(1)[0] - 2 * (1 - math.exp(-1))) <= 1e-15
    assert abs(r.phi(1)[0] / 2 - 0.63212055882) < 1e-11


@pytest.mark.parametrize("n", [4, 6])
def test_validation_operator_against_oracle(n):
    k, v = validation_operator(n, 3)
    r = phiks_same_vector(k, v, 5, EPS, s_hat=1)
    for j in (0, 1):
        ref = oracle.tensor_phi_actions(k, v, 5, j)
        for ell in range(1, 6):
            assert rel_inf(r.phi(ell, j), ref[ell - 1]) <= 1e-11


def test_same_vector_exp_scales(rng):
    k = random_kron(rng, d=2, t=1 + 1j)
    v = random_tensor(rng, k.dims)
    r = phiks_same_vector(k, v, 2, EPS, s_hat=2, exp_scales=(0, 1, 2))
    a = oracle.assemble(k)
    for j in range(3):
        ref = oracle.unvec(oracle.phi_dense(a / 2 ** j, 0) @ oracle.vec(v), k.dims)
        assert rel_inf(r.exp(j), ref) <= 1e-12
    assert r.tucker_ops_used <= r.plan.T_predicted + 3
    with pytest.raises(ValueError):
        phiks_same_vector(k, v, 2, EPS, s_hat=1, exp_scales=(2,))


def test_same_vector_rejects_bad_input(rng):
    k = random_kron(rng, d=2)
    with pytest.raises(ValueError):
        phiks_same_vector(k, random_tensor(rng, k.dims), 0, EPS)
    with pytest.raises(SizeError):
        phiks_same_vector(k, np.zeros(k.dims[::-1] + (1,)), 1, EPS)


def test_lincomb_exp_only(rng):
    k = random_kron(rng, d=3)
    v = random_tensor(rng, k.dims)
    r = phiks_lincomb(k, v, [None, None], EPS)
    ref = tucker(v, [oracle.phi_dense(a, 0) for a in k.scaled_factors])
    assert rel_inf(r.combo(), ref) <= 1e-12
    r0 = phiks_lincomb(k, v, [], EPS, s_hat=1)
    assert rel_inf(r0.combo(0), ref) <= 1e-12
    assert r0.tucker_ops_used == 2


def test_lincomb_zero_operator(rng):
    k = KroneckerSum([np.zeros((2, 2)), np.zeros((3, 3))])
    v0, v1, v2 = (random_tensor(rng, k.dims) for _ in range(3))
    r = phiks_lincomb(k, v0, [v1, v2], 1e-14)
    np.testing.assert_allclose(r.combo(), v0 + v1 + v2 / 2, rtol=1e-14)


def test_lincomb_random_d2(rng):
    fs = random_factors(rng, (4, 3))
    k = KroneckerSum(fs, 0.7)
    v0 = random_tensor(rng, k.dims)
    vs = [random_tensor(rng, k.dims) for _ in range(3)]
    r = phiks_lincomb(k, v0, vs, EPS, s_hat=2)
    for j in range(3):
        assert rel_inf(r.combo(j), oracle.tensor_lincomb(k, v0, vs, j)) <= 1e-11


def test_lincomb_partials_are_suffix_combinations(rng):
    k = random_kron(rng, d=2, t=1.0)
    vs = [random_tensor(rng, k.dims) for _ in range(3)]
    r = phiks_lincomb(k, None, vs, EPS, s_hat=1)
    for j in range(2):
        for ell in range(1, 4):
            # orders renumbered 1..ell on the last ell vectors
            ref = oracle.tensor_lincomb(k, None, vs[3 - ell:], j)
            assert rel_inf(r.partials[j][ell - 1], ref) <= 1e-11


def test_telemetry_and_endpoint_savings(rng):
    k, v = validation_operator(6, 3)
    r = phiks_same_vector(k, v, 5, EPS, s_hat=1)
    assert r.tucker_ops_used < r.plan.T_predicted
    assert r.tucker_ops_used == (r.plan.q - 1) + r.plan.s * 5
    rl = phiks_lincomb(k, None, [v] * 5, EPS, s_hat=1)
    assert rl.tucker_ops_used < rl.plan.T_predicted
    assert rl.plan.T_predicted == tucker_count("lincomb", rl.plan.s, 1, rl.plan.q, 5)


def test_exponential_cache_reused(rng):
    k = random_kron(rng, d=2)
    v = random_tensor(rng, k.dims)
    a = phiks_same_vector(k, v, 2, EPS)
    misses = EXP_CACHE.misses
    b = phiks_same_vector(k, v, 2, EPS)
    assert EXP_CACHE.misses == misses and EXP_CACHE.hits >= 1
    np.testing.assert_array_equal(a.phi(2), b.phi(2))
    c = phiks_same_vector(k, v, 2, EPS, cache=False)
    np.testing.assert_array_equal(a.phi(2), c.phi(2))


def test_shift_option_matches_plain(rng):
    fs = [a - 3 * np.eye(a.shape[0]) for a in random_factors(rng, (3, 4))]
    plain = KroneckerSum(fs, 1.0)
    shifted = KroneckerSum(fs, 1.0, shift=True)
    v = random_tensor(rng, plain.dims)
    a = phiks_same_vector(plain, v, 3, EPS, s_hat=1)
    b = phiks_same_vector(shifted, v, 3, EPS, s_hat=1)
    for j in range(2):
        for ell in range(1, 4):
            assert rel_inf(b.phi(ell, j), a.phi(ell, j)) <= 1e-12
    vs = [random_tensor(rng, plain.dims) for _ in range(2)]
    x = phiks_lincomb(plain, v, vs, EPS)
    y = phiks_lincomb(shifted, v, vs, EPS)
    assert rel_inf(y.combo(), x.combo()) <= 1e-12


def test_forcing_larger_scaling(rng):
    k = random_kron(rng, d=2, t=1 + 1j)
    v = random_tensor(rng, k.dims)
    delta = 1e-13
    a = phiks_same_vector(k, v, 3, delta)
    forced = QuadraturePlan("same_vector", a.plan.s + 1, a.plan.q, a.plan.rule, 0, 3,
                            a.plan.T_predicted + 3, delta)
    b = phiks_same_vector(k, v, 3, delta, plan=forced)
    for ell in range(1, 4):
        assert rel_inf(b.phi(ell), a.phi(ell)) <= 10 * delta


def test_multiscale_equals_fresh_call(rng):
    k = random_kron(rng, d=2, t=1.0)
    v = random_tensor(rng, k.dims)
    delta = 1e-13
    r = phiks_same_vector(k, v, 3, delta, s_hat=2)
    for j in (1, 2):
        fresh = phiks_same_vector(k.with_time_factor(k.time_factor / 2 ** j), v, 3, delta)
        for ell in range(1, 4):
            assert rel_inf(r.phi(ell, j), fresh.phi(ell)) <= 10 * delta


def test_recurrence_on_eigenvectors(rng):
    n = 6
    h = rng.standard_normal((n, n))
    h = -(h @ h.T) / n
    ev, q = np.linalg.eigh(h)
    k = KroneckerSum([h, h])
    for i, kk in [(0, 1), (3, 5), (5, 5)]:
        v = np.outer(q[:, i], q[:, kk])
        lam = ev[i] + ev[kk]
        r = phiks_same_vector(k, v, 4, EPS)
        for ell in range(2, 5):
            lhs = lam * r.phi(ell)
            rhs = r.phi(ell - 1) - v / math.factorial(ell - 1)
            assert rel_inf(lhs, rhs) <= 1e-10


def test_block_diagonal_apply(rng):
    k1 = random_kron(rng, d=2, t=1.0)
    v = random_tensor(rng, k1.dims)
    same = block_diagonal_apply([(k1, (v,)), (k1, (v,))], "same_vector", p=2, delta=EPS)
    np.testing.assert_array_equal(same[0].phi(2), same[1].phi(2))
    direct = phiks_same_vector(k1, v, 2, EPS)
    np.testing.assert_array_equal(same[0].phi(2), direct.phi(2))
    # two different blocks against the assembled block-diagonal dense matrix
    k2 = KroneckerSum(random_factors(rng, k1.dims), 1.0)
    w = random_tensor(rng, k1.dims)
    out = block_diagonal_apply([(k1, (v, [v])), (k2, (w, [w]))], "lincomb", delta=EPS)
    a1, a2 = oracle.assemble(k1), oracle.assemble(k2)
    big = np.block([[a1, np.zeros_like(a1)], [np.zeros_like(a2), a2]])
    x = np.concatenate([oracle.vec(v), oracle.vec(w)])
    ref = oracle.lincomb_dense(big, x, [x])
    got = np.concatenate([oracle.vec(out[0].combo()), oracle.vec(out[1].combo())])
    assert rel_inf(got, ref) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(re=st.floats(-8, 8), im=st.floats(-8, 8), ell=st.integers(1, 5))
def test_scalar_squaring_same_vector(re, im, ell):
    z = complex(re, im)
    if abs(z) > 8:
        z = z * 8 / abs(z)
    lhs = scalar_phi(z, ell)
    h = z / 2
    rhs = 2.0 ** -ell * (np.exp(h) * scalar_phi(h, ell)
                         + sum(scalar_phi(h, k) / math.factorial(ell - k) for k in range(1, ell + 1)))
    assert abs(lhs - rhs) <= 1e-13 * abs(lhs)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_instances_against_oracle(seed):
    rng = np.random.default_rng(seed)
    k = random_kron(rng)
    v = random_tensor(rng, k.dims)
    p = int(rng.integers(1, 6))
    r = phiks_same_vector(k, v, p, EPS, s_hat=1)
    assert r.tucker_ops_used <= r.plan.T_predicted
    ref = oracle.tensor_phi_actions(k, v, p, 1)
    for ell in range(1, p + 1):
        assert rel_inf(r.phi(ell, 1), ref[ell - 1]) <= 1e-11
