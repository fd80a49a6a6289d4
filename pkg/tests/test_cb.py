import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nclp import cb
from nclp.errors import ConfigError, DomainError, InvalidExponentError
from nclp.linalg import random_complex, schatten_norm

EXPONENTS = [1.0, 4 / 3, 2.0, 4.0, math.inf]


def inv(p):
    return 0.0 if math.isinf(p) else 1 / p


@pytest.mark.parametrize("p", EXPONENTS)
@pytest.mark.parametrize("q", EXPONENTS)
@pytest.mark.parametrize("n", [1, 2, 5])
def test_identity_table(p, q, n):
    val = cb.cb_norm_closed(cb.CbMap(np.eye(n), p, q)).value
    assert val == pytest.approx(n ** (abs(inv(p) - inv(q)) / 2), rel=1e-14)


def test_exponent_kinds():
    assert cb.cb_exponent(4, 2) == pytest.approx(8.0)
    assert cb.cb_exponent(2, 2) == math.inf
    assert cb.cb_exponent(4, 2, "rr") == pytest.approx(8.0)
    # rc: 1/t = |1/4 + 1/2 - 1| / 2 = 1/8
    assert cb.cb_exponent(4, 2, "rc") == pytest.approx(8.0)
    assert cb.cb_exponent(2, 2, "cr") == math.inf
    assert cb.cb_exponent(1, 1, "cr") == pytest.approx(2.0)
    with pytest.raises(ValueError):
        cb.cb_exponent(2, 2, "xx")


def test_closed_form_paths(rng):
    u = random_complex((3, 2), rng)
    same = cb.cb_norm_closed(cb.CbMap(u, 3, 3))
    assert same.path == "operator" and same.value == pytest.approx(np.linalg.norm(u, 2))
    diff = cb.cb_norm_closed(cb.CbMap(u, 4, 2))
    assert diff.path == "schatten" and diff.value == pytest.approx(schatten_norm(u, 8))


@given(st.sampled_from(EXPONENTS), st.sampled_from(EXPONENTS), st.integers(0, 1000))
def test_adjoint_preserves_closed_form(p, q, seed):
    u = random_complex((2, 3), np.random.default_rng(seed))
    m = cb.CbMap(u, p, q)
    assert cb.cb_norm_closed(m.adjoint()).value == pytest.approx(cb.cb_norm_closed(m).value, rel=1e-12)
    assert m.adjoint().adjoint().p == pytest.approx(m.p)


def test_apply():
    u = np.array([[1.0, 2.0]])
    xs = np.stack([np.eye(2), np.ones((2, 2))])
    np.testing.assert_allclose(cb.CbMap(u, 2, 2).apply(xs)[0], np.eye(2) + 2 * np.ones((2, 2)))


@pytest.mark.parametrize("p,q", [(4.0, 2.0), (4.0, 4 / 3), (3.0, 2.5), (math.inf, 1.0), (6.0, 6.0)])
def test_lower_bound_below_closed_form(p, q):
    u = random_complex((2, 2), np.random.default_rng(1))
    mp = cb.CbMap(u, p, q)
    res = cb.cb_lower_amplified(mp, 2, cb.CbOptConfig(restarts=6))
    closed = cb.cb_norm_closed(mp).value
    assert res.value <= closed * (1 + 1e-6)
    assert res.value >= 0.8 * closed
    assert res.levels[0] <= res.levels[1] + 1e-12


def test_lower_bound_via_adjoint():
    mp = cb.CbMap(np.diag([1.0, 0.5]), 1.5, 1.2)
    res = cb.cb_lower_amplified(mp, 1, cb.CbOptConfig(restarts=4))
    assert res.via_adjoint
    assert res.value <= cb.cb_norm_closed(mp).value * (1 + 1e-6)


@pytest.mark.parametrize("p,q", [(1.5, 2.0), (1.2, 3.0), (1.5, 1.8)])
def test_uncertified_routes(p, q):
    with pytest.raises(ConfigError):
        cb.cb_lower_amplified(cb.CbMap(np.eye(2), p, q), 1)


def test_zero_map_and_level_check():
    assert cb.cb_lower_amplified(cb.CbMap(np.zeros((2, 2)), 4, 2), 2).value == 0.0
    with pytest.raises(DomainError):
        cb.cb_lower_amplified(cb.CbMap(np.eye(2), 4, 2), 0)


def test_single_level_is_operator_norm_for_p_eq_q():
    u = np.array([[1.0, 2.0], [0.0, 1.0]])
    res = cb.cb_lower_amplified(cb.CbMap(u, 3, 3), 1, cb.CbOptConfig(restarts=8))
    assert res.value == pytest.approx(np.linalg.norm(u, 2), rel=1e-6)


# -- factorization certificates ---------------------------------------------------

def diag_setup(c_scale):
    # u = diag(s) on C_4^2 -> C_2^2 (theta = 1/2), f = g = I / n^(1/r)
    p, q, n = 4.0, 2.0, 2
    s = np.array([1.0, 0.5])
    r = p / (p - 2)  # (p/2)'
    f = g = np.eye(n) / n ** (1 / r)
    best = s.max() * n ** (1 / (2 * r))
    rm = cb.RestrictedMap.column_map(np.diag(s), p, q)
    return rm, cb.FactorizationCertificate(f, g, 0.5, c_scale * best), best


def test_factorization_best_constant():
    rm, cert, best = diag_setup(1.0)
    out = cb.check_factorization(rm, cert)
    assert best == pytest.approx(2 ** 0.25)
    assert out.ratio == pytest.approx(1.0, rel=1e-8)
    assert out.valid
    assert out.best_constant == pytest.approx(best, rel=1e-8)


@pytest.mark.parametrize("scale,valid", [(0.9, False), (1.1, True)])
def test_factorization_scaled_constants(scale, valid):
    rm, cert, _ = diag_setup(scale)
    out = cb.check_factorization(rm, cert)
    assert out.valid is valid
    assert out.ratio == pytest.approx(1 / scale, rel=1e-8)


def test_factorization_kernel_witness():
    # Tr(g xx*) = |c_1|^2 vanishes on x = E_21 while u(x) does not
    rm = cb.RestrictedMap.column_map(np.eye(2), 4.0, 2.0)
    g = np.diag([1.0, 0.0])
    cert = cb.FactorizationCertificate(np.eye(2) / 2 ** 0.5, g, 0.5, 10.0)
    out = cb.check_factorization(rm, cert)
    assert not out.valid and out.witness is not None and math.isinf(out.ratio)


def test_factorization_zero_map():
    rm = cb.RestrictedMap.column_map(np.zeros((2, 2)), 4.0, 2.0)
    cert = cb.FactorizationCertificate(np.eye(2) / 2 ** 0.5, np.eye(2) / 2 ** 0.5, 0.5, 1.0)
    assert cb.check_factorization(rm, cert).ratio == 0.0


def test_factorization_validation():
    rm = cb.RestrictedMap.column_map(np.eye(2), 4.0, 2.0)
    good = np.eye(2) / 2 ** 0.5
    with pytest.raises(InvalidExponentError):
        cb.check_factorization(rm, cb.FactorizationCertificate(good, good, 0.3, 1.0))
    with pytest.raises(DomainError):
        cb.check_factorization(rm, cb.FactorizationCertificate(np.eye(2), good, 0.5, 1.0))
    with pytest.raises(DomainError):
        cb.check_factorization(rm, cb.FactorizationCertificate(np.diag([1.0, -0.1]), good, 0.5, 1.0))
    with pytest.raises(DomainError):
        cb.check_factorization(rm, cb.FactorizationCertificate(good, good, 0.5, 0.0))
    with pytest.raises(InvalidExponentError):
        cb.check_factorization(cb.RestrictedMap.column_map(np.eye(2), 1.5, 1.5),
                               cb.FactorizationCertificate(good, good, 0.0, 1.0))
