import math

import numpy as np
import pytest
from scipy import integrate

from omspde.action import DiscretePath, evaluate_action, trace_term
from omspde.errors import InvalidArgument, PreconditionViolation
from omspde.levy import JumpSpec, eta_correction
from omspde.presets import (
    Example41Model,
    cosine_weights,
    example41,
    example41_action,
    example41_trace_identity,
    neumann_eigenvalues,
)
from omspde.spectral import NonlocalDrift, assemble_jacobian, scalar_function, validate_model


def random_path(rng, M, N=16, scale=3.0):
    return DiscretePath(rng.uniform(-scale, scale, size=(N + 1, M)))


def test_model_structure():
    ex = example41(3)
    np.testing.assert_allclose(ex.model.eigenvalues, [(2 * math.pi) ** 2, (4 * math.pi) ** 2, (6 * math.pi) ** 2])
    assert np.all(ex.model.diffusion == 1.0)
    assert validate_model(ex.model, ex.drift, ex.jumps).passed


def test_cosine_weights_vanish():
    # direct quadrature of the basis functions over [0, 1]
    for j, w in enumerate(cosine_weights(6), 1):
        q = integrate.quad(lambda y: math.cos(2 * math.pi * j * y), 0, 1, limit=200)[0]
        assert abs(w) <= 1e-15 and abs(q) <= 1e-12


@pytest.mark.parametrize("fname", ["sin", "tanh", "cubic"])
def test_trace_identity_random_paths(fname):
    rng = np.random.default_rng(0)
    ex = example41(5, scalar_function(fname))
    for _ in range(10):
        assert abs(example41_trace_identity(ex, random_path(rng, 5))) <= 1e-12


def test_trace_identity_constant_f_exact():
    ex = example41(4, scalar_function("constant", constant=2.0))
    assert example41_trace_identity(ex, random_path(np.random.default_rng(1), 4)) == 0.0


def test_broken_inner_products_give_nonzero_trace():
    rng = np.random.default_rng(2)
    w = cosine_weights(3) + np.array([0.3, -0.1, 0.2])
    ex = example41(3, scalar_function("sin"), weights=w)
    p = random_path(rng, 3)
    # oracle: 1/2 * h * sum over cells in [1/2, 1] of f'(<w, xbar>) |w|^2
    xbar = 0.5 * (p.coefficients[1:] + p.coefficients[:-1])
    tm = p.midpoints
    oracle = 0.5 * p.dt * sum(math.cos(w @ x) * (w @ w) for x, t in zip(xbar, tm) if t >= 0.5)
    value = trace_term(p, ex.model, ex.drift)
    assert abs(value) > 1e-3
    assert value == pytest.approx(oracle, rel=1e-12)
    with pytest.raises(PreconditionViolation):
        example41_trace_identity(ex, p)


def test_jacobian_symmetric_rank_one():
    rng = np.random.default_rng(3)
    d = NonlocalDrift(scalar_function("tanh"), rng.normal(size=4))
    for _ in range(20):
        J = assemble_jacobian(d, 0.8, rng.uniform(-2, 2, 4))
        assert np.max(np.abs(J - J.T)) <= 1e-10
        assert np.linalg.matrix_rank(J, tol=1e-12) <= 1


def test_drift_depends_only_on_functional():
    rng = np.random.default_rng(4)
    w = rng.normal(size=4)
    d = NonlocalDrift(scalar_function("sin"), w)
    x1 = rng.normal(size=4)
    v = rng.normal(size=4)
    v -= (v @ w) / (w @ w) * w  # orthogonal to w: leaves <w, x> unchanged
    x2 = x1 + v
    for t in (0.2, 0.7):
        np.testing.assert_allclose(d.value(np.array([t]), x1[None]), d.value(np.array([t]), x2[None]), atol=1e-12)


def test_action_zero_case():
    ex = example41(2, scalar_function("zero"))
    ex = Example41Model(ex.model, ex.drift, JumpSpec(()))
    assert example41_action(ex, DiscretePath(np.zeros((9, 2)))).total == 0.0


def test_action_delegates_bit_identically():
    ex = example41(3, scalar_function("tanh"), c=[1.0, 0.5, 0.2], beta=[1.0, 2.0, 3.0], alpha=[0.5, 0.3, 0.7])
    p = random_path(np.random.default_rng(5), 3, N=20)
    eta = eta_correction(ex.jumps, M=3).eta
    assert example41_action(ex, p) == evaluate_action(p, ex.model, ex.drift, eta)


def test_action_single_mode_closed_form():
    ex = example41(1, scalar_function("zero"))
    eta = eta_correction(ex.jumps, M=1).eta[0]
    lam = (2 * math.pi) ** 2
    exact = integrate.quad(lambda t: 0.5 * (lam * t + 1 + eta) ** 2, 0, 1)[0]
    for N in (16, 64, 256):
        S = example41_action(ex, DiscretePath.linear([0], [1], N)).total
        h = 1 / N
        # midpoint rule error on a quadratic is exactly h^2/24 * int g''
        assert S == pytest.approx(exact - h * h * lam * lam / 24, rel=1e-12)


def test_eta_uses_one_sided_support():
    ex = example41(2, c=[1.0, 2.0], beta=[1.0, 0.5], alpha=[0.5, 0.2])
    eta = eta_correction(ex.jumps, M=2).eta
    for j, (c, b, a) in enumerate([(1.0, 1.0, 0.5), (2.0, 0.5, 0.2)]):
        q = integrate.quad(lambda z: c * z**-a * math.exp(-b * z), 0, 1)[0]
        assert eta[j] == pytest.approx(q, abs=1e-9)


def test_h4_failure_propagates():
    ex = example41(2, alpha=[0.5, 1.2])
    with pytest.raises(PreconditionViolation):
        example41_action(ex, DiscretePath(np.zeros((5, 2))))


def test_odd_grid_rejected():
    ex = example41(1)
    with pytest.raises(InvalidArgument):
        example41_action(ex, DiscretePath(np.zeros((4, 1))))
