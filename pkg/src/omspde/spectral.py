"""Diagonal spectral structure: the operator A, diffusion B and the drift F.

Everything lives in mode space. A state is a vector of M coefficients on the
orthonormal eigenbasis of A; A acts as multiplication by ``-eigenvalues`` and
B as multiplication by ``diffusion``.

Drifts are evaluated in batches: ``t`` has shape ``(K,)`` and ``x`` has shape
``(K, M)``. Every built-in drift has a symmetric Jacobian.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "SpectralModel",
    "DriftSpec",
    "ZeroDrift",
    "DiagonalLinearDrift",
    "ScalarDrift",
    "NonlocalDrift",
    "ScalarFunction",
    "SCALAR_FUNCTIONS",
    "scalar_function",
    "CheckEntry",
    "CheckReport",
    "semigroup_factor",
    "validate_model",
    "assemble_jacobian",
]


def _as_vector(values, name):
    arr = np.array(values, dtype=float)
    if arr.ndim == 2:
        off = arr - np.diag(np.diag(arr))
        if arr.shape[0] != arr.shape[1] or np.any(off != 0.0):
            raise InvalidArgument(f"{name}: only diagonal operators are supported")
        arr = np.diag(arr).copy()
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgument(f"{name}: expected a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name}: entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpectralModel:
    """Truncated diagonal model ``dX = (AX + F) dt + B dW + dL`` on M modes.

    ``eigenvalues`` holds lambda_j (A e_j = -lambda_j e_j) and ``diffusion``
    the diagonal of B. A scalar diffusion is broadcast to all modes; a square
    matrix is accepted only when it is diagonal.

    Construction checks shapes only. Sign and ordering hypotheses are
    reported by :func:`validate_model` so that a bad model can still be
    inspected.
    """

    eigenvalues: np.ndarray
    diffusion: np.ndarray
    time_horizon: float = 1.0

    def __post_init__(self):
        lam = _as_vector(self.eigenvalues, "eigenvalues")
        diff = np.asarray(self.diffusion, dtype=float)
        if diff.ndim == 0:
            diff = np.full(lam.shape, float(diff))
        diff = _as_vector(diff, "diffusion")
        if diff.shape != lam.shape:
            raise InvalidArgument(
                f"diffusion has {diff.size} entries but eigenvalues has {lam.size}"
            )
        T = float(self.time_horizon)
        if not (np.isfinite(T) and T > 0):
            raise InvalidArgument("time_horizon must be positive")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "diffusion", diff)
        object.__setattr__(self, "time_horizon", T)

    @property
    def truncation(self) -> int:
        return int(self.eigenvalues.size)


def semigroup_factor(model: SpectralModel, dt: float) -> np.ndarray:
    """Per-mode factor ``exp(-lambda_j dt)`` of the semigroup generated by A."""
    dt = float(dt)
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt!r}")
    return np.exp(-model.eigenvalues * dt)


# ---------------------------------------------------------------------------
# scalar functions used by the nonlinear drifts


@dataclass(frozen=True)
class ScalarFunction:
    """A real function with its first two derivatives (vectorised)."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d2f: Callable[[np.ndarray], np.ndarray]


def _const(c):
    return ScalarFunction(
        f"constant({c})",
        lambda x: np.full_like(np.asarray(x, dtype=float), c),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


SCALAR_FUNCTIONS = {
    "zero": _const(0.0),
    "sin": ScalarFunction("sin", np.sin, np.cos, lambda x: -np.sin(x)),
    "tanh": ScalarFunction(
        "tanh",
        np.tanh,
        lambda x: 1.0 / np.cosh(x) ** 2,
        lambda x: -2.0 * np.tanh(x) / np.cosh(x) ** 2,
    ),
    # bistable Allen-Cahn nonlinearity
    "cubic": ScalarFunction(
        "cubic", lambda x: x - x**3, lambda x: 1.0 - 3.0 * x**2, lambda x: -6.0 * x
    ),
}


def scalar_function(name: str, scale: float = 1.0, constant: Optional[float] = None):
    """Look up a named scalar function, optionally scaled by ``scale``."""
    if name == "constant":
        return _const(0.0 if constant is None else float(constant))
    try:
        base = SCALAR_FUNCTIONS[name]
    except KeyError:
        known = ", ".join(sorted(SCALAR_FUNCTIONS) + ["constant"])
        raise InvalidArgument(f"unknown scalar function {name!r} (known: {known})")
    if scale == 1.0:
        return base
    s = float(scale)
    return ScalarFunction(
        f"{s}*{name}",
        lambda x: s * base.f(x),
        lambda x: s * base.df(x),
        lambda x: s * base.d2f(x),
    )


# ---------------------------------------------------------------------------
# drifts


class DriftSpec:
    """Interface for the nonlinear drift F(t, x) in mode space.

    Subclasses provide the value, Jacobian-vector products, the diagonal of
    the Jacobian and the gradient of its trace (needed by the exact gradient
    of the discrete action).
    """

    kind = "abstract"

    def value(self, t, x):
        raise NotImplementedError

    def jvp(self, t, x, v):
        raise NotImplementedError

    def jac_diag(self, t, x):
        raise NotImplementedError

    def trace_grad(self, t, x):
        raise NotImplementedError

    def size(self) -> Optional[int]:
        """Number of modes the drift is tied to, or None if it adapts."""
        return None


@dataclass(frozen=True)
class ZeroDrift(DriftSpec):
    kind = "zero"

    def value(self, t, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def jvp(self, t, x, v):
        return np.zeros_like(np.asarray(v, dtype=float))

    def jac_diag(self, t, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def trace_grad(self, t, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class DiagonalLinearDrift(DriftSpec):
    """``F_j(x) = m_j x_j``."""

    coefficients: np.ndarray
    kind = "diagonal-linear"

    def __post_init__(self):
        object.__setattr__(
            self, "coefficients", _as_vector(self.coefficients, "drift.coefficients")
        )

    def size(self):
        return self.coefficients.size

    def value(self, t, x):
        return self.coefficients * np.asarray(x, dtype=float)

    def jvp(self, t, x, v):
        return self.coefficients * np.asarray(v, dtype=float)

    def jac_diag(self, t, x):
        return np.broadcast_to(self.coefficients, np.shape(x)).astype(float)

    def trace_grad(self, t, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ScalarDrift(DriftSpec):
    """Mode-wise nonlinearity ``F_j(x) = g(x_j)``."""

    g: ScalarFunction
    kind = "scalar"

    def value(self, t, x):
        return self.g.f(np.asarray(x, dtype=float))

    def jvp(self, t, x, v):
        return self.g.df(np.asarray(x, dtype=float)) * np.asarray(v, dtype=float)

    def jac_diag(self, t, x):
        return self.g.df(np.asarray(x, dtype=float))

    def trace_grad(self, t, x):
        return self.g.d2f(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class NonlocalDrift(DriftSpec):
    """Drift that sees the state only through one linear functional.

    ``F_j(t, x) = w_j * (f(0) + chi(t) * f(<w, x>))`` where ``chi`` is the
    indicator of ``[window_start, horizon]`` and ``w_j`` are the inner
    products of the basis functions with the spatial profile. The Jacobian
    ``chi(t) f'(<w,x>) w w^T`` is rank one and symmetric.
    """

    f: ScalarFunction
    weights: np.ndarray
    window_start: float = 0.5
    kind = "nonlocal-example41"

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_vector(self.weights, "drift.weights"))

    def size(self):
        return self.weights.size

    def window(self, t):
        return (np.asarray(t, dtype=float) >= self.window_start).astype(float)

    def functional(self, x):
        return np.asarray(x, dtype=float) @ self.weights

    def value(self, t, x):
        x = np.asarray(x, dtype=float)
        chi = self.window(t)
        amp = self.f.f(np.zeros(())) + chi * self.f.f(self.functional(x))
        return np.multiply.outer(amp, self.weights).reshape(x.shape)

    def jvp(self, t, x, v):
        x = np.asarray(x, dtype=float)
        scale = self.window(t) * self.f.df(self.functional(x)) * self.functional(v)
        return np.multiply.outer(scale, self.weights).reshape(x.shape)

    def jac_diag(self, t, x):
        x = np.asarray(x, dtype=float)
        scale = self.window(t) * self.f.df(self.functional(x))
        return np.multiply.outer(scale, self.weights**2).reshape(x.shape)

    def trace_grad(self, t, x):
        x = np.asarray(x, dtype=float)
        w2 = float(self.weights @ self.weights)
        scale = self.window(t) * self.f.d2f(self.functional(x)) * w2
        return np.multiply.outer(scale, self.weights).reshape(x.shape)


def assemble_jacobian(drift: DriftSpec, t: float, x) -> np.ndarray:
    """Full M x M Jacobian at a single state, built column by column from jvps."""
    x = np.asarray(x, dtype=float)
    M = x.size
    eye = np.eye(M)
    tt = np.full(M, float(t))
    cols = drift.jvp(tt, np.broadcast_to(x, (M, M)), eye)
    return np.asarray(cols).T


# ---------------------------------------------------------------------------
# hypothesis report


@dataclass(frozen=True)
class CheckEntry:
    name: str
    passed: bool
    index: Optional[int] = None  # 1-based mode index of the first offender
    detail: str = ""

    def as_record(self):
        return {
            "check": self.name,
            "passed": self.passed,
            "index": self.index,
            "detail": self.detail,
        }


@dataclass
class CheckReport:
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self):
        return [e for e in self.entries if not e.passed]

    def __getitem__(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def summary(self) -> str:
        bad = self.failures()
        if not bad:
            return "all checks passed"
        return "; ".join(
            f"{e.name} failed" + (f" at mode {e.index}" if e.index else "") + (f" ({e.detail})" if e.detail else "")
            for e in bad
        )


def _first(mask):
    idx = np.flatnonzero(mask)
    return int(idx[0]) + 1 if idx.size else None


def validate_model(
    model: SpectralModel,
    drift: DriftSpec,
    jumps=None,
    probe_radius: float = 2.0,
    probe_points: int = 100,
    seed: int = 0,
) -> CheckReport:
    """Check the standing hypotheses on a truncated model.

    Failures are report entries, never exceptions. The boundedness entry is
    a proxy: F and its Jacobian are probed on ``[-R, R]^M`` and must be
    finite there.
    """
    lam, b = model.eigenvalues, model.diffusion
    M = model.truncation
    entries = [
        CheckEntry("H1 positive eigenvalues", bool(np.all(lam > 0)), _first(lam <= 0)),
        CheckEntry(
            "H1 non-decreasing eigenvalues",
            bool(np.all(np.diff(lam) >= 0)),
            None if np.all(np.diff(lam) >= 0) else _first(np.diff(lam) < 0) + 1,
        ),
        CheckEntry("B invertible on retained modes", bool(np.all(b > 0)), _first(b <= 0)),
    ]

    n = drift.size()
    if n is not None and n != M:
        entries.append(
            CheckEntry("drift dimension", False, None, f"drift has {n} modes, model has {M}")
        )
    else:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-probe_radius, probe_radius, size=(probe_points, M))
        ts = rng.uniform(0.0, model.time_horizon, size=probe_points)
        vals = drift.value(ts, pts)
        diag = drift.jac_diag(ts, pts)
        finite = np.all(np.isfinite(vals)) and np.all(np.isfinite(diag))
        entries.append(
            CheckEntry(
                "H2/H3 proxy: F and DF bounded on probe box",
                bool(finite),
                None,
                f"max|F|={np.max(np.abs(vals)):.6g} on [-{probe_radius}, {probe_radius}]^{M}"
                if finite
                else "non-finite drift value on probe box",
            )
        )
        asym = 0.0
        for k in range(min(probe_points, 20)):
            J = assemble_jacobian(drift, ts[k], pts[k])
            asym = max(asym, float(np.max(np.abs(J - J.T))))
        entries.append(
            CheckEntry("symmetric Jacobian", asym <= 1e-10, None, f"max asymmetry {asym:.3g}")
        )

    if jumps is not None:
        from .levy import h4_moment  # local import: levy depends on this module

        if jumps.num_modes > M:
            entries.append(
                CheckEntry(
                    "jump modes within truncation",
                    False,
                    M + 1,
                    f"{jumps.num_modes} jump modes for truncation {M}",
                )
            )
        h4 = h4_moment(jumps)
        entries.append(
            CheckEntry(
                "H4 small-jump moment",
                h4.finite,
                None if h4.finite else h4.first_divergent,
                "" if h4.finite else "alpha >= 1 on a jump-carrying mode",
            )
        )
    return CheckReport(entries)
