import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omspde.action import (
    CROSS_TERM,
    DiscretePath,
    evaluate_action,
    form_offset,
    path_derivative,
    trace_term,
)
from omspde.errors import InvalidArgument, PreconditionViolation
from omspde.presets import example41
from omspde.spectral import DiagonalLinearDrift, NonlocalDrift, ScalarDrift, SpectralModel, ZeroDrift, scalar_function

OU = SpectralModel([1.0], [1.0])


def test_path_invariants():
    with pytest.raises(InvalidArgument):
        DiscretePath(np.zeros((2, 1)))
    with pytest.raises(InvalidArgument):
        DiscretePath([0.0, np.nan, 1.0])
    p = DiscretePath.linear([0, 1], [2, 3], 4, 2.0)
    assert p.dt == 0.5 and p.steps == 4 and p.modes == 2
    np.testing.assert_array_equal(p.start, [0, 1])
    np.testing.assert_array_equal(p.target, [2, 3])


def test_derivative_constant_and_linear():
    assert np.all(path_derivative(DiscretePath(np.ones((7, 2)))) == 0)
    for N in [2, 3, 10, 37]:
        d = path_derivative(DiscretePath.from_function(lambda t: t, N))
        np.testing.assert_allclose(d, 1.0, rtol=0, atol=1e-13)


def test_derivative_quadratic_is_midpoint_slope():
    p = DiscretePath.from_function(lambda t: t * t, 10)
    np.testing.assert_allclose(path_derivative(p)[:, 0], 2 * p.midpoints, atol=1e-13)


def test_zero_path_zero_action():
    out = evaluate_action(DiscretePath(np.zeros((9, 1))), OU, ZeroDrift())
    assert out.total == 0.0


@pytest.mark.parametrize("N", [16, 64, 256])
def test_linear_path_closed_form(N):
    # midpoint rule on the quadratic integrand (t+1)^2/2 misses by exactly h^2/24
    S = evaluate_action(DiscretePath.linear([0], [1], N), OU, ZeroDrift()).total
    assert abs(7 / 6 - S) <= 2 / N**2
    assert S == pytest.approx(7 / 6 - (1 / N) ** 2 / 24, abs=1e-13)


@pytest.mark.parametrize("N", [16, 64, 256])
def test_linear_path_with_eta(N):
    exact = 0.5 * (2.5**3 - 1.5**3) / 3
    assert exact == pytest.approx(2.041667, abs=1e-6)
    S = evaluate_action(DiscretePath.linear([0], [1], N), OU, ZeroDrift(), [0.5]).total
    assert abs(exact - S) <= 2 / N**2
    assert S == pytest.approx(exact - (1 / N) ** 2 / 24, abs=1e-13)


def test_trace_term_examples():
    p = DiscretePath(np.random.default_rng(0).normal(size=(11, 2)))
    m = SpectralModel([1, 2], [1, 1])
    assert trace_term(p, m, ZeroDrift()) == 0.0
    assert trace_term(p, m, DiagonalLinearDrift([0.5, -0.25])) == pytest.approx(0.125, abs=1e-15)
    ex = example41(2)
    assert abs(trace_term(p, ex.model, ex.drift)) <= 1e-12


def test_trace_term_scalar_oracle():
    p = DiscretePath.from_function(lambda t: [np.sin(3 * t), t], 400)
    m = SpectralModel([1, 2], [1, 1])
    d = ScalarDrift(scalar_function("tanh"))
    # 1/2 int (sech^2(sin 3t) + sech^2(t)) dt by fine trapezoid on the exact path
    t = np.linspace(0, 1, 200001)
    g = 1 / np.cosh(np.sin(3 * t)) ** 2 + 1 / np.cosh(t) ** 2
    exact = 0.5 * np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(t))
    assert trace_term(p, m, d) == pytest.approx(exact, abs=1e-5)


def _random_instance(rng, M=None):
    M = M or int(rng.integers(1, 4))
    lam = np.sort(rng.uniform(0.1, 5, M))
    b = rng.uniform(0.3, 2.0, M)
    T = rng.uniform(0.5, 2.0)
    N = int(rng.integers(2, 17))
    model = SpectralModel(lam, b, T)
    drift = [ZeroDrift(), DiagonalLinearDrift(rng.normal(size=M)), ScalarDrift(scalar_function("cubic")),
             ScalarDrift(scalar_function("sin")), NonlocalDrift(scalar_function("tanh"), rng.normal(size=M))][
        int(rng.integers(0, 5))
    ]
    path = DiscretePath(rng.uniform(-2, 2, size=(N + 1, M)), T)
    eta = rng.normal(size=M)
    return model, drift, path, eta


@pytest.mark.parametrize("seed", range(20))
def test_form_agreement(seed):
    model, drift, path, eta = _random_instance(np.random.default_rng(seed))
    cs = evaluate_action(path, model, drift, eta)
    cr = evaluate_action(path, model, drift, eta, CROSS_TERM)
    assert cs.total == cs.residual_term + cs.trace_term
    assert cr.total == cr.residual_term + cr.trace_term + cr.levy_cross_term
    assert abs((cs.total - cr.total) - form_offset(model, eta)) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_zero_eta_forms_bit_identical(seed):
    model, drift, path, _ = _random_instance(np.random.default_rng(100 + seed))
    z = np.zeros(model.truncation)
    cs = evaluate_action(path, model, drift, z)
    cr = evaluate_action(path, model, drift, z, CROSS_TERM)
    none = evaluate_action(path, model, drift)
    assert cs.total == cr.total == none.total
    assert cs.residual_term == cr.residual_term


@pytest.mark.parametrize("s", [2.0, 0.5, 4.0])
def test_diffusion_scaling_exact(s):
    model, drift, path, _ = _random_instance(np.random.default_rng(7), M=3)
    scaled = SpectralModel(model.eigenvalues, model.diffusion * s, model.time_horizon)
    r1 = evaluate_action(path, model, drift).residual_term
    r2 = evaluate_action(path, scaled, drift).residual_term
    assert r2 == r1 / s**2


@settings(max_examples=25)
@given(s=st.floats(0.1, 10.0))
def test_diffusion_scaling(s):
    model, drift, path, _ = _random_instance(np.random.default_rng(8), M=2)
    scaled = SpectralModel(model.eigenvalues, model.diffusion * s, model.time_horizon)
    r1 = evaluate_action(path, model, drift).residual_term
    r2 = evaluate_action(path, scaled, drift).residual_term
    assert r2 == pytest.approx(r1 / s**2, rel=1e-13)


def test_quadratic_convergence_order():
    lam = 2.0
    model = SpectralModel([lam], [1.0])
    phi = lambda t: np.sin(2 * t) + t**2
    dphi = lambda t: 2 * np.cos(2 * t) + 2 * t
    t = np.linspace(0, 1, 400001)
    g = 0.5 * (lam * phi(t) + dphi(t)) ** 2
    exact = np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(t))
    Ns = [8, 16, 32, 64]
    errs = [abs(evaluate_action(DiscretePath.from_function(phi, N), model, ZeroDrift()).total - exact) for N in Ns]
    order = -np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    assert order >= 1.9
    K = max(e * N**2 for e, N in zip(errs, Ns))
    assert all(e <= K / N**2 for e, N in zip(errs, Ns))


def test_preconditions():
    bad = SpectralModel([1, -1], [1, 1])
    with pytest.raises(PreconditionViolation):
        evaluate_action(DiscretePath(np.zeros((3, 2))), bad, ZeroDrift())
    with pytest.raises(InvalidArgument):
        evaluate_action(DiscretePath(np.zeros((3, 2))), OU, ZeroDrift())
    with pytest.raises(InvalidArgument):
        evaluate_action(DiscretePath(np.zeros((3, 1))), OU, ZeroDrift(), [1.0, 2.0])
    with pytest.raises(InvalidArgument):
        evaluate_action(DiscretePath(np.zeros((3, 1))), OU, ZeroDrift(), form="other")
