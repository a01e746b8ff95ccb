"""Ready-made models: the heat equation with a nonlocal drift and tempered-stable jumps.

The domain is L^2([0, 1]) with Neumann boundary conditions, so the basis is
``e_j(y) = cos(2 pi j y)`` with ``lambda_j = (2 pi j)^2``. The constant mode
(j = 0, lambda = 0) is left out: the reference process needs strictly
positive eigenvalues.

The drift is ``F(t, xi) = f(0) chi + f(l(xi)) 1_{t >= 1/2} chi`` where ``chi`` is
the constant profile on [0, 1] and ``l(xi)`` integrates the state over
space. In mode space both reduce to the inner products ``<chi, e_j>``, which
vanish for every j >= 1; that is why the trace term is identically zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .action import COMPLETED_SQUARE, ActionBreakdown, DiscretePath, evaluate_action, trace_term
from .errors import InvalidArgument, PreconditionViolation
from .levy import JumpSpec, TemperedStable, eta_correction
from .spectral import NonlocalDrift, ScalarFunction, SpectralModel, scalar_function

__all__ = [
    "Example41Model",
    "cosine_weights",
    "neumann_eigenvalues",
    "example41",
    "example41_trace_identity",
    "example41_action",
    "TRACE_TOL",
]

TRACE_TOL = 1e-12


def neumann_eigenvalues(M: int) -> np.ndarray:
    j = np.arange(1, M + 1)
    return (2.0 * np.pi * j) ** 2


def cosine_weights(M: int) -> np.ndarray:
    """``int_0^1 cos(2 pi j y) dy = sin(2 pi j) / (2 pi j)`` for j = 1..M."""
    j = np.arange(1, M + 1)
    return np.sin(2.0 * np.pi * j) / (2.0 * np.pi * j)


@dataclass(frozen=True)
class Example41Model:
    model: SpectralModel
    drift: NonlocalDrift
    jumps: JumpSpec

    @property
    def truncation(self):
        return self.model.truncation


def example41(
    M: int = 4,
    f: Optional[ScalarFunction] = None,
    c=1.0,
    beta=1.0,
    alpha=0.5,
    weights=None,
) -> Example41Model:
    """Build the preset. ``c``, ``beta``, ``alpha`` may be scalars or per-mode lists.

    ``weights`` overrides the cosine inner products; used to show that the
    vanishing trace depends on them.
    """
    if M < 1:
        raise InvalidArgument("truncation must be at least 1")
    f = f or scalar_function("sin")
    params = [np.broadcast_to(np.asarray(p, dtype=float), (M,)) for p in (c, beta, alpha)]
    modes = tuple(TemperedStable(params[0][j], params[1][j], params[2][j]) for j in range(M))
    w = cosine_weights(M) if weights is None else np.asarray(weights, dtype=float)
    model = SpectralModel(neumann_eigenvalues(M), 1.0, 1.0)
    drift = NonlocalDrift(f, w, window_start=0.5 * model.time_horizon)
    return Example41Model(model, drift, JumpSpec(modes))


def _check_grid(path: DiscretePath):
    if path.steps % 2:
        raise InvalidArgument("the grid needs a node at T/2: use an even number of steps")


def example41_trace_identity(ex: Example41Model, path: DiscretePath) -> float:
    """Trace term along ``path``; raises if it is not zero to 1e-12."""
    _check_grid(path)
    value = trace_term(path, ex.model, ex.drift)
    if abs(value) > TRACE_TOL:
        raise PreconditionViolation(f"trace term {value:.3e} does not vanish")
    return value


def example41_action(ex: Example41Model, path: DiscretePath, tol: float = 1e-10) -> ActionBreakdown:
    """Completed-square action with eta from the preset's one-sided jumps."""
    _check_grid(path)
    eta = eta_correction(ex.jumps, tol, M=ex.truncation).eta
    out = evaluate_action(path, ex.model, ex.drift, eta, COMPLETED_SQUARE)
    if abs(out.trace_term) > TRACE_TOL:
        raise PreconditionViolation(f"trace term {out.trace_term:.3e} does not vanish")
    return out
