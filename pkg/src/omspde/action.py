"""Discrete Onsager-Machlup action on uniform time grids.

Sign convention: the reported action is ``S = -J0``, so smaller is more
probable and tube-probability ratios behave like ``exp(S_b - S_a)``.

Discretisation is staggered: on each cell the path derivative is the forward
difference, the state is the average of the two end rows, and the drift and
trace are evaluated there at the cell midpoint time. The time integral is the
rectangle sum over cells, which is second order for smooth paths.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument, PreconditionViolation
from .spectral import DriftSpec, SpectralModel, validate_model

__all__ = [
    "DiscretePath",
    "ActionBreakdown",
    "COMPLETED_SQUARE",
    "CROSS_TERM",
    "path_derivative",
    "evaluate_action",
    "trace_term",
    "form_offset",
    "require_valid",
]

COMPLETED_SQUARE = "completed-square"
CROSS_TERM = "cross-term"


@dataclass(frozen=True)
class DiscretePath:
    """Mode coefficients on ``N + 1`` uniform nodes of ``[0, T]``.

    The first and last rows are the frozen endpoints; optimisers only move
    the interior rows.
    """

    coefficients: np.ndarray
    time_horizon: float = 1.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 3:
            raise InvalidArgument("a path needs at least 3 nodes (N >= 2)")
        if not np.all(np.isfinite(c)):
            raise InvalidArgument("path coefficients must be finite")
        T = float(self.time_horizon)
        if not T > 0:
            raise InvalidArgument("time_horizon must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "time_horizon", T)

    @classmethod
    def linear(cls, start, target, steps, time_horizon=1.0):
        start = np.atleast_1d(np.asarray(start, dtype=float))
        target = np.atleast_1d(np.asarray(target, dtype=float))
        s = np.linspace(0.0, 1.0, int(steps) + 1)[:, None]
        rows = (1.0 - s) * start + s * target
        rows[0], rows[-1] = start, target
        return cls(rows, time_horizon)

    @classmethod
    def from_function(cls, fn, steps, time_horizon=1.0):
        t = np.linspace(0.0, time_horizon, int(steps) + 1)
        return cls(np.array([np.atleast_1d(fn(ti)) for ti in t]), time_horizon)

    @property
    def steps(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def modes(self) -> int:
        return self.coefficients.shape[1]

    @property
    def dt(self) -> float:
        return self.time_horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.time_horizon, self.steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.steps) + 0.5) * self.dt

    @property
    def start(self):
        return self.coefficients[0]

    @property
    def target(self):
        return self.coefficients[-1]

    @property
    def interior(self):
        return self.coefficients[1:-1]

    def with_interior(self, interior) -> "DiscretePath":
        rows = np.array(self.coefficients)
        rows[1:-1] = interior
        return DiscretePath(rows, self.time_horizon)

    def averages(self) -> np.ndarray:
        c = self.coefficients
        return 0.5 * (c[1:] + c[:-1])


@dataclass(frozen=True)
class ActionBreakdown:
    residual_term: float
    trace_term: float
    levy_cross_term: float
    total: float
    form: str

    def as_record(self):
        return {
            "form": self.form,
            "residual_term": self.residual_term,
            "trace_term": self.trace_term,
            "levy_cross_term": self.levy_cross_term,
            "total": self.total,
        }


def path_derivative(path: DiscretePath) -> np.ndarray:
    """Forward differences, read as derivatives at the cell midpoints."""
    return np.diff(path.coefficients, axis=0) / path.dt


def _check_shapes(path, model, eta):
    M = model.truncation
    if path.modes != M:
        raise InvalidArgument(f"path has {path.modes} modes, model has {M}")
    if abs(path.time_horizon - model.time_horizon) > 1e-12 * model.time_horizon:
        raise InvalidArgument("path and model disagree on the time horizon")
    eta = np.zeros(M) if eta is None else np.asarray(eta, dtype=float)
    if eta.shape != (M,):
        raise InvalidArgument(f"eta must have {M} entries, got shape {eta.shape}")
    return eta


def require_valid(model, drift):
    report = validate_model(model, drift)
    if not report.passed:
        raise PreconditionViolation(f"model validation failed: {report.summary()}")
    return report


def _residuals(path, model, drift, eta):
    """Unscaled residual ``A phi + F - dphi/dt - eta`` per cell, shape (N, M)."""
    xbar = path.averages()
    F = drift.value(path.midpoints, xbar)
    return -model.eigenvalues * xbar + F - path_derivative(path) - eta


def trace_term(path: DiscretePath, model: SpectralModel, drift: DriftSpec) -> float:
    """Half the time integral of ``Tr DF`` along the path (S convention)."""
    diag = drift.jac_diag(path.midpoints, path.averages())
    return 0.5 * path.dt * float(np.sum(diag))


def evaluate_action(
    path: DiscretePath,
    model: SpectralModel,
    drift: DriftSpec,
    eta=None,
    form: str = COMPLETED_SQUARE,
    validate: bool = True,
) -> ActionBreakdown:
    """Discrete action of ``path``.

    ``completed-square``: ``1/2 int |B^-1 (A phi + F - phi' - eta)|^2 + 1/2 int Tr DF``.

    ``cross-term``: the same with eta removed from the square and the
    cross term ``-int <B^-1 (A phi + F - phi'), B^-1 eta>`` reported
    separately. The two totals differ by the path-independent constant
    returned by :func:`form_offset`.
    """
    eta = _check_shapes(path, model, eta)
    if validate:
        require_valid(model, drift)
    h = path.dt
    b = model.diffusion
    tr = trace_term(path, model, drift)
    if form == COMPLETED_SQUARE:
        r = _residuals(path, model, drift, eta) / b
        res = 0.5 * h * float(np.sum(r * r))
        return ActionBreakdown(res, tr, 0.0, res + tr, form)
    if form == CROSS_TERM:
        r = _residuals(path, model, drift, 0.0) / b
        res = 0.5 * h * float(np.sum(r * r))
        cross = -h * float(np.sum(r * (eta / b)))
        return ActionBreakdown(res, tr, cross, res + tr + cross, form)
    raise InvalidArgument(f"unknown action form {form!r}")


def form_offset(model: SpectralModel, eta) -> float:
    """Completed-square total minus cross-term total: ``T/2 * sum (eta_j/b_j)^2``."""
    eta = np.asarray(eta, dtype=float)
    return 0.5 * model.time_horizon * float(np.sum((eta / model.diffusion) ** 2))
