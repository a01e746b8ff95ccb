"""Most probable transition paths by direct minimisation of the discrete action.

Only interior rows move. Two descent directions are available: steepest
descent, and limited-memory BFGS built from the last ``memory`` curvature
pairs. Both use Armijo backtracking, so every accepted iterate lowers the
action. Convergence is declared on the sup-norm of the gradient.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .action import (
    COMPLETED_SQUARE,
    ActionBreakdown,
    DiscretePath,
    _check_shapes,
    evaluate_action,
    path_derivative,
    require_valid,
)
from .errors import InvalidArgument
from .spectral import DriftSpec, SpectralModel

__all__ = [
    "OptimizerConfig",
    "OptimizationResult",
    "action_gradient",
    "el_residual",
    "minimize_path",
]


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 5000
    grad_tol: float = 1e-8
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_shrinks: int = 60
    method: str = "lbfgs"  # or "gradient-descent"
    memory: int = 10
    initializer: str = "linear"  # or "supplied"

    def __post_init__(self):
        if self.max_iters < 0:
            raise InvalidArgument("max_iters must be non-negative")
        if not self.grad_tol > 0:
            raise InvalidArgument("grad_tol must be positive")
        if not 0 < self.shrink < 1:
            raise InvalidArgument("shrink must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 0.5:
            raise InvalidArgument("sufficient_decrease must lie in (0, 0.5)")
        if self.method not in ("lbfgs", "gradient-descent"):
            raise InvalidArgument(f"unknown optimizer method {self.method!r}")
        if self.initializer not in ("linear", "supplied"):
            raise InvalidArgument(f"unknown initializer {self.initializer!r}")
        if self.memory < 1:
            raise InvalidArgument("memory must be at least 1")


@dataclass
class OptimizationResult:
    path: DiscretePath
    breakdown: ActionBreakdown
    grad_norm: float
    iterations: int
    converged: bool
    el_residual: float
    initializer: str
    message: str = ""
    trace: list = field(default_factory=list)  # (iteration, action, grad_norm)

    def as_record(self):
        rec = {
            "converged": self.converged,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "el_residual": self.el_residual,
            "initializer": self.initializer,
            "message": self.message,
        }
        rec.update(self.breakdown.as_record())
        return rec


def action_gradient(
    path: DiscretePath, model: SpectralModel, drift: DriftSpec, eta=None
) -> np.ndarray:
    """Exact gradient of the completed-square discrete action, shape (N-1, M)."""
    eta = _check_shapes(path, model, eta)
    h = path.dt
    b = model.diffusion
    tm = path.midpoints
    xbar = path.averages()
    r = -model.eigenvalues * xbar + drift.value(tm, xbar) - path_derivative(path) - eta
    w = r / b**2
    # d/d xbar of the residual part, and d/d(derivative) of it
    g_bar = h * (-model.eigenvalues * w + drift.jvp(tm, xbar, w))
    g_bar += 0.5 * h * drift.trace_grad(tm, xbar)
    g_der = -w
    # xbar_i = (x_i + x_{i+1})/2 and d_i = (x_{i+1} - x_i)/h
    g_left = 0.5 * g_bar - g_der
    g_right = 0.5 * g_bar + g_der
    return g_left[1:] + g_right[:-1]


def el_residual(path: DiscretePath, model: SpectralModel, drift: DriftSpec, eta=None) -> float:
    """Sup-norm of the discrete gradient over ``dt``: a pointwise Euler-Lagrange residual."""
    g = action_gradient(path, model, drift, eta)
    return float(np.max(np.abs(g))) / path.dt


def _direction(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, y in reversed(list(zip(s_hist, y_hist))):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        q += (a - rho * np.dot(y, q)) * s
    return -q


def minimize_path(
    start,
    target,
    model: SpectralModel,
    drift: DriftSpec,
    eta=None,
    config: Optional[OptimizerConfig] = None,
    steps: int = 64,
    initial: Optional[DiscretePath] = None,
    log_path=None,
) -> OptimizationResult:
    """Minimise the action between frozen endpoints.

    With ``config.initializer == "supplied"`` the interior of ``initial`` is
    the starting point (its endpoints are replaced by ``start``/``target``).
    A line-search failure ends the run with ``converged=False``.
    """
    config = config or OptimizerConfig()
    require_valid(model, drift)
    start = np.atleast_1d(np.asarray(start, dtype=float))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if not (np.all(np.isfinite(start)) and np.all(np.isfinite(target))):
        raise InvalidArgument("endpoints must be finite")
    T = model.time_horizon
    if config.initializer == "supplied":
        if initial is None:
            raise InvalidArgument("initializer 'supplied' needs an initial path")
        rows = np.array(initial.coefficients)
        rows[0], rows[-1] = start, target
        path = DiscretePath(rows, T)
    else:
        path = DiscretePath.linear(start, target, steps, T)
    eta = _check_shapes(path, model, eta)

    shape = path.interior.shape
    x = path.interior.ravel().copy()

    def fg(vec):
        p = path.with_interior(vec.reshape(shape))
        S = evaluate_action(p, model, drift, eta, validate=False).total
        return S, action_gradient(p, model, drift, eta).ravel()

    S, g = fg(x)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    trace = [(0, S, gnorm)]
    s_hist, y_hist = [], []
    it = 0
    message = ""
    step0 = 1.0
    while gnorm > config.grad_tol and it < config.max_iters:
        if config.method == "lbfgs":
            d = _direction(g, s_hist, y_hist)
            if np.dot(d, g) >= 0:
                d = -g
                s_hist.clear()
                y_hist.clear()
            step = 1.0
        else:
            d = -g
            step = step0
        slope = float(np.dot(g, d))
        for _ in range(config.max_shrinks + 1):
            x_new = x + step * d
            S_new, g_new = fg(x_new)
            if np.isfinite(S_new) and S_new <= S + config.sufficient_decrease * step * slope:
                break
            step *= config.shrink
        else:
            message = f"line search failed after {config.max_shrinks} shrinks"
            break
        it += 1
        s_vec, y_vec = x_new - x, g_new - g
        if np.dot(s_vec, y_vec) > 1e-16 * np.dot(y_vec, y_vec):
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            if len(s_hist) > config.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, S, g = x_new, S_new, g_new
        gnorm = float(np.max(np.abs(g)))
        step0 = 2.0 * step
        trace.append((it, S, gnorm))

    converged = gnorm <= config.grad_tol
    if not converged and not message:
        message = f"iteration limit {config.max_iters} reached"
    final = path.with_interior(x.reshape(shape))
    if log_path is not None:
        with open(log_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "action", "grad_norm"])
            for i, a, n in trace:
                w.writerow([i, format(a, ".17g"), format(n, ".17g")])
    return OptimizationResult(
        path=final,
        breakdown=evaluate_action(final, model, drift, eta, validate=False),
        grad_norm=gnorm,
        iterations=it,
        converged=converged,
        el_residual=gnorm / final.dt,
        initializer=config.initializer,
        message=message or "converged",
        trace=trace,
    )
