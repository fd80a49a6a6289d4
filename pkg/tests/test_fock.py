import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nclp import fock
from nclp.errors import DomainError, InvalidExponentError, ResourceError
from nclp.linalg import random_complex
from nclp.opspace import OpVector, intersection_norm, sum_norm

from conftest import complex_blocks

SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])


def anticomm(a, b):
    return a @ b + b @ a


def hand_car_n1(lam):
    c1 = np.kron(SIGMA_PLUS, np.eye(2))
    c2 = np.kron(Z, SIGMA_PLUS)
    return c1 + math.sqrt(lam) * c2.T


# -- CAR generators -----------------------------------------------------------

def test_car_n1_matches_hand_construction():
    ops = fock.build_car([0.7])
    np.testing.assert_allclose(ops.generators[0], hand_car_n1(0.7), atol=1e-15)


@given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=3))
def test_car_relations(lam):
    ops = fock.build_car(lam)
    N = ops.ambient_dim
    I = np.eye(N)
    for j, fj in enumerate(ops.generators):
        for k, fk in enumerate(ops.generators):
            target = (1 + lam[j]) * I if j == k else 0 * I
            np.testing.assert_allclose(anticomm(fj, fk.conj().T), target, atol=1e-12)
            np.testing.assert_allclose(anticomm(fj, fk), 0 * I, atol=1e-12)


def test_car_site_order_is_irrelevant_for_relations():
    ops = fock.build_car([0.5, 2.0], order=[3, 1, 0, 2])
    f = ops.generators
    np.testing.assert_allclose(anticomm(f[0], f[1].conj().T), 0, atol=1e-12)
    np.testing.assert_allclose(anticomm(f[1], f[1].conj().T), 3.0 * np.eye(16), atol=1e-12)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_car_norm_independent_of_site_order(p, rng):
    xs = OpVector.of(random_complex((2, 2, 2), rng), [0.5, 2.0])
    base = fock.khintchine_report(xs, "car", p).lhs
    for order in ([3, 1, 0, 2], [2, 3, 0, 1]):
        ops = fock.build_car(xs.weights, order=order)
        assert fock.khintchine_report(xs, "car", p, ops=ops).lhs == pytest.approx(base, rel=1e-10)


def test_car_caps_and_validation():
    with pytest.raises(ResourceError):
        fock.build_car([1.0] * 5)
    with pytest.raises(DomainError):
        fock.build_car([])
    with pytest.raises(DomainError):
        fock.build_car([1.0, -2.0])
    with pytest.raises(DomainError):
        fock.build_car([1.0], order=[0, 0])


# -- free generators ----------------------------------------------------------

def test_free_creation_isometric_below_top():
    ops = fock.build_free([1.0, 2.0], depth=3)
    letters, N = ops.creation.shape[:2]
    assert N == fock.free_ambient_dim(2, 3) == 1 + 4 + 16 + 64
    top = N - 4 ** 3
    for a in range(letters):
        for b in range(letters):
            prod = ops.creation[a].conj().T @ ops.creation[b]
            expected = np.eye(N) if a == b else np.zeros((N, N))
            np.testing.assert_allclose(prod[:top, :top], expected[:top, :top], atol=0)


def test_free_vacuum_moments():
    lam = 2.5
    g = fock.build_free([lam], depth=3).generators[0]
    om = np.zeros(g.shape[0])
    om[0] = 1
    assert np.vdot(g @ om, g @ om).real == pytest.approx(1.0)
    assert np.vdot(g.conj().T @ om, g.conj().T @ om).real == pytest.approx(lam)


def test_free_cap():
    with pytest.raises(ResourceError):
        fock.build_free([1.0] * 4, depth=5)
    with pytest.raises(DomainError):
        fock.build_free([1.0], depth=0)


# -- algebra and density ------------------------------------------------------

@pytest.mark.parametrize("lam", [[0.5], [0.3, 2.0]])
def test_car_closure_matches_closed_form(lam):
    ops = fock.build_car(lam)
    alg = fock.generated_algebra(ops)
    assert alg.closed
    assert alg.dim == 4 ** len(lam)
    closed = fock.car_vacuum_algebra(ops)
    np.testing.assert_allclose(alg.density, closed.density, atol=1e-12)


def test_car_n1_density_spectrum():
    ops = fock.build_car([0.5])
    D = fock.car_vacuum_algebra(ops).density
    np.testing.assert_allclose(np.linalg.eigvalsh(D), [1 / 6, 1 / 6, 1 / 3, 1 / 3], atol=1e-14)


@pytest.mark.parametrize("kind", ["car", "free"])
def test_density_reproduces_vacuum_state(kind):
    ops = fock.build_operators(kind, [0.4, 1.7], depth=2)
    alg = fock.generated_algebra(ops)
    g = ops.generators
    words = [g[0], g[1] @ g[0].conj().T, g[0].conj().T @ g[0], g[1] @ g[1].conj().T @ g[0]]
    assert fock.state_residual(alg, words) <= 1e-10
    assert np.trace(alg.density).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(alg.density).min() >= -1e-12


def test_truncated_free_algebra_flags():
    ops = fock.build_free([1.0], depth=2)
    alg = fock.generated_algebra(ops)
    assert alg.approximate
    assert alg.dim < ops.ambient_dim ** 2
    reg = fock.regularized(alg, 1e-12)
    assert reg.faithful and reg.approximate
    assert np.trace(reg.density).real == pytest.approx(1.0, abs=1e-12)


def test_large_free_uses_vector_state():
    ops = fock.build_free([1.0, 1.0], depth=3)
    alg = fock.generated_algebra(ops, max_basis=100)
    assert alg.basis is None and alg.approximate
    assert alg.density[0, 0] == 1.0


# -- L_p norms ----------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.25, 1.0, 3.0])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 6.0])
def test_car_single_generator_norm(p, lam):
    # |f D^(1/p)|: one singular value sqrt(1+lam) d^(1/p) per copy, d = 1/(2(1+lam))
    ops = fock.build_car([lam])
    alg = fock.car_vacuum_algebra(ops)
    val = fock.lp_norm_state(ops.generators[0], alg, p, 1)
    assert val == pytest.approx((1 + lam) ** (0.5 - 1 / p), rel=1e-12)


@pytest.mark.parametrize("kind", ["car", "free"])
def test_p2_closed_form(kind, rng):
    xs = OpVector.of(random_complex((2, 2, 2), rng), [0.5, 3.0])
    rep = fock.khintchine_report(xs, kind, 2.0)
    assert rep.lhs == pytest.approx(np.linalg.norm(xs.blocks), abs=1e-9)
    assert rep.ok and not rep.approximate


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_symmetric_variant_agrees_when_tracial(p, rng):
    # lam = 1 makes the vacuum density a multiple of the identity
    xs = OpVector.of(random_complex((2, 2, 2), rng), [1.0, 1.0])
    right = fock.khintchine_report(xs, "car", p).lhs
    sym = fock.khintchine_report(xs, "car", p, fock.KhintchineConfig(variant="symmetric")).lhs
    assert sym == pytest.approx(right, rel=1e-10)


@given(
    complex_blocks(2, 2),
    st.lists(st.floats(0.25, 4.0), min_size=2, max_size=2),
    st.sampled_from([2.0, 3.0, 4.0, 6.0]),
)
def test_car_lower_bound_property(b, lam, p):
    xs = OpVector(b, lam)
    rep = fock.khintchine_report(xs, "car", p)
    assert intersection_norm(xs, p) <= rep.lhs + 1e-8
    assert rep.ok


@given(
    complex_blocks(2, 2),
    st.lists(st.floats(0.25, 4.0), min_size=2, max_size=2),
    st.sampled_from([1.25, 1.5, 1.75]),
)
def test_car_upper_bound_property(b, lam, p):
    xs = OpVector(b, lam)
    rep = fock.khintchine_report(xs, "car", p)
    assert rep.lhs <= sum_norm(xs, p).value + 1e-5
    assert rep.ok


def test_car_exponent_domain(rng):
    xs = OpVector.of(random_complex((1, 2, 2), rng))
    for p in (1.0, math.inf):
        with pytest.raises(InvalidExponentError):
            fock.khintchine_report(xs, "car", p)


def test_weight_mismatch(rng):
    xs = OpVector.of(random_complex((1, 2, 2), rng), [1.0])
    with pytest.raises(DomainError):
        fock.khintchine_report(xs, "car", 3.0, ops=fock.build_car([2.0]))


def test_approximate_warning(rng):
    ops = fock.build_free([1.0], depth=2)
    alg = fock.generated_algebra(ops)
    with pytest.warns(fock.ApproximationWarning):
        fock.lp_norm_state(ops.generators[0], alg, 3.0, 1)


def test_free_depth_study_shape(rng):
    xs = OpVector.of(random_complex((1, 1, 1), rng))
    out = fock.free_depth_study(xs, 3.0, [2, 3])
    assert sorted(out["lhs"]) == [2, 3]
    assert isinstance(out["converged"], bool)
    p2 = fock.free_depth_study(xs, 2.0, [2, 3])
    assert p2["converged"]
    big = fock.free_depth_study(xs, 3.0, [5, 6])
    assert all(big["vector_state"].values()) and not big["converged"]


def test_complementation_projection_p2():
    ops = fock.build_car([0.5, 2.0])
    alg = fock.car_vacuum_algebra(ops)
    project, vecs = fock.complementation_projection_p2(ops, alg)
    gram = np.einsum("kij,lij->kl", vecs.conj(), vecs)
    np.testing.assert_allclose(gram, np.eye(2), atol=1e-12)
    y = np.random.default_rng(3).standard_normal(vecs.shape[1:])
    Py = project(y)
    np.testing.assert_allclose(project(Py), Py, atol=1e-12)
    assert np.linalg.norm(Py) <= np.linalg.norm(y) + 1e-12
