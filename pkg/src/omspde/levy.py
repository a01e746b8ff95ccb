"""Per-mode tempered-stable jump measures.

A one-sided mode has Levy density ``c exp(-beta z) / z**(1 + alpha)`` on
z > 0. A two-sided mode adds an independent mirrored copy on z < 0 with its
own parameters. Modes beyond the listed ones carry no jumps.

Random streams: a seed (int or ``numpy.random.SeedSequence``) is spawned into
one child per mode, in mode order. Mode j always draws from child j-1 so
adding modes never perturbs the draws of earlier ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgument, PreconditionViolation
from .quadrature import small_jump_integral, tail_integral
from .spectral import SpectralModel

__all__ = [
    "TemperedStable",
    "TwoSidedTemperedStable",
    "TailRule",
    "JumpSpec",
    "MomentReport",
    "IntegrabilityReport",
    "LevyDriftCorrection",
    "JumpIncrements",
    "h4_moment",
    "square_integrability",
    "eta_correction",
    "variation_constant",
    "sample_jumps",
    "as_seed_sequence",
]


@dataclass(frozen=True)
class TemperedStable:
    """One-sided tempered-stable density on (0, inf)."""

    c: float
    beta: float
    alpha: float

    def __post_init__(self):
        for name in ("c", "beta", "alpha"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidArgument(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.c <= 0:
            raise InvalidArgument(f"c must be positive, got {self.c}")
        if self.beta <= 0:
            raise InvalidArgument(f"beta must be positive, got {self.beta}")
        if not 0 < self.alpha < 2:
            raise InvalidArgument(f"alpha must lie in (0, 2), got {self.alpha}")

    @property
    def sides(self):
        return ((1.0, self),)

    @property
    def alphas(self):
        return (self.alpha,)

    def criterion_term(self):
        return self.c / self.beta ** (2.0 - self.alpha)


@dataclass(frozen=True)
class TwoSidedTemperedStable:
    """Independent tempered-stable densities on each half-line."""

    minus: TemperedStable
    plus: TemperedStable

    @classmethod
    def symmetric(cls, c, beta, alpha):
        side = TemperedStable(c, beta, alpha)
        return cls(side, side)

    @property
    def sides(self):
        return ((-1.0, self.minus), (1.0, self.plus))

    @property
    def alphas(self):
        return (self.minus.alpha, self.plus.alpha)

    def criterion_term(self):
        return self.minus.criterion_term() + self.plus.criterion_term()


ModeMeasure = Union[TemperedStable, TwoSidedTemperedStable, None]


@dataclass(frozen=True)
class TailRule:
    """How the criterion terms continue past the last listed mode.

    ``finite``: no jumps beyond the list. ``constant``: every later mode
    repeats the last term. ``geometric``: later terms shrink by ``ratio``.
    """

    kind: str = "finite"
    ratio: float = 0.0

    def __post_init__(self):
        if self.kind not in ("finite", "constant", "geometric"):
            raise InvalidArgument(f"unknown tail rule {self.kind!r}")
        if self.kind == "geometric" and not self.ratio > 0:
            raise InvalidArgument("geometric tail needs a positive ratio")

    def extend(self, terms):
        """Return ``(tail_sum, convergent)`` for the terms after the list."""
        last = terms[-1] if len(terms) else 0.0
        if self.kind == "finite" or last == 0.0:
            return 0.0, True
        if not math.isfinite(last):
            return math.inf, False
        if self.kind == "constant":
            return math.inf, False
        if self.ratio >= 1.0:
            return math.inf, False
        return last * self.ratio / (1.0 - self.ratio), True


@dataclass(frozen=True)
class JumpSpec:
    """Jump measures for modes 1..len(modes); ``None`` marks a mode without jumps."""

    modes: tuple = ()
    tail: Optional[TailRule] = None

    def __post_init__(self):
        modes = tuple(self.modes)
        for j, m in enumerate(modes, 1):
            if m is not None and not isinstance(m, (TemperedStable, TwoSidedTemperedStable)):
                raise InvalidArgument(f"mode {j}: unsupported jump measure {m!r}")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def none(cls):
        return cls(())

    @property
    def num_modes(self) -> int:
        """Index of the last jump-carrying mode (0 when there are no jumps)."""
        for j in range(len(self.modes), 0, -1):
            if self.modes[j - 1] is not None:
                return j
        return 0

    def padded(self, M):
        if self.num_modes > M:
            raise InvalidArgument(
                f"jumps reach mode {self.num_modes} but the truncation is {M}"
            )
        return list(self.modes[:M]) + [None] * (M - len(self.modes[:M]))


# ---------------------------------------------------------------------------


@dataclass
class MomentReport:
    """Small-jump first absolute moments ``m_j = int_{|z|<1} |z| nu_j(dz)``."""

    moments: np.ndarray  # inf marks a divergent mode
    errors: np.ndarray
    finite_modes: np.ndarray  # per-mode verdict
    total: float  # sum including the tail rule
    convergent: bool

    @property
    def finite(self) -> bool:
        return bool(np.all(self.finite_modes)) and self.convergent

    @property
    def first_divergent(self):
        idx = np.flatnonzero(~self.finite_modes)
        return int(idx[0]) + 1 if idx.size else None


def _moment(side, tol):
    if side.alpha >= 1.0:
        return math.inf, 0.0
    v, e = small_jump_integral(side.alpha, side.beta, tol=tol)
    return side.c * v, side.c * e


def h4_moment(spec: JumpSpec, tol: float = 1e-10, tail: Optional[TailRule] = None) -> MomentReport:
    """Per-mode small-jump moment and the summability verdict.

    A mode's moment is finite iff all its stability indices are below 1.
    The sum over modes uses ``tail`` (or ``spec.tail``), defaulting to
    finite support.
    """
    n = len(spec.modes)
    moments = np.zeros(n)
    errors = np.zeros(n)
    for j, m in enumerate(spec.modes):
        if m is None:
            continue
        for _, side in m.sides:
            v, e = _moment(side, tol)
            moments[j] += v
            errors[j] += e
    finite = np.isfinite(moments)
    rule = tail or spec.tail or TailRule("finite")
    partial = float(np.sum(moments))
    extra, conv = rule.extend(moments)
    total = partial + extra
    return MomentReport(moments, errors, finite, total, bool(conv and math.isfinite(total)))


@dataclass
class IntegrabilityReport:
    terms: np.ndarray
    partial_sum: float
    total: float
    convergent: bool
    tail: TailRule


def square_integrability(spec: JumpSpec, tail: Optional[TailRule] = None) -> IntegrabilityReport:
    """Square-integrability criterion ``sum_j c_j / beta_j**(2 - alpha_j)``.

    Two-sided modes contribute both halves. A tail rule is mandatory: the
    verdict is meaningless without a statement about the modes that are not
    listed.
    """
    rule = tail or spec.tail
    if rule is None:
        raise InvalidArgument("square_integrability needs a tail rule (finite, constant or geometric)")
    terms = np.array([0.0 if m is None else m.criterion_term() for m in spec.modes])
    partial = float(np.sum(terms))
    extra, conv = rule.extend(terms)
    return IntegrabilityReport(terms, partial, partial + extra, conv, rule)


@dataclass
class LevyDriftCorrection:
    """Small-jump mean ``eta_j = int_{|z|<1} z nu_j(dz)`` per mode."""

    eta: np.ndarray
    errors: np.ndarray


def _require_h4(spec, tol):
    rep = h4_moment(spec, tol)
    if not np.all(rep.finite_modes):
        j = rep.first_divergent
        raise PreconditionViolation(
            f"mode {j}: small-jump moment diverges (alpha >= 1), H4 fails"
        )
    return rep


def eta_correction(spec: JumpSpec, tol: float = 1e-10, M: Optional[int] = None) -> LevyDriftCorrection:
    """Small-jump mean per mode, padded with zeros to ``M`` modes when given.

    Symmetric two-sided modes give exactly zero since both halves use the
    same quadrature.
    """
    _require_h4(spec, tol)
    modes = spec.padded(M) if M is not None else list(spec.modes)
    eta = np.zeros(len(modes))
    err = np.zeros(len(modes))
    for j, m in enumerate(modes):
        if m is None:
            continue
        part = {}
        for sign, side in m.sides:
            part[sign] = small_jump_integral(side.alpha, side.beta, tol=tol)
            part[sign] = (side.c * part[sign][0], side.c * part[sign][1])
        eta[j] = part[1.0][0] - part.get(-1.0, (0.0, 0.0))[0]
        err[j] = part[1.0][1] + part.get(-1.0, (0.0, 0.0))[1]
    return LevyDriftCorrection(eta, err)


def variation_constant(spec: JumpSpec, model: SpectralModel, tol: float = 1e-10) -> float:
    """Finite-variation constant ``sum_j (1 - exp(-lambda_j T)) / lambda_j * m_j``."""
    rep = _require_h4(spec, tol)
    modes = spec.padded(model.truncation)
    lam = model.eigenvalues
    T = model.time_horizon
    total = 0.0
    for j, m in enumerate(modes):
        if m is None:
            continue
        total += -math.expm1(-lam[j] * T) / lam[j] * rep.moments[j]
    return float(total)


# ---------------------------------------------------------------------------
# sampling


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


@dataclass
class JumpIncrements:
    """Jump increments over steps of length ``dt``.

    ``large`` sums the jumps of size >= cutoff. ``compensator`` is the
    per-mode deterministic drift ``dt * int_{cutoff<=|z|<1} z nu(dz)``
    removed by the compensated small-jump integral. Jumps below the cutoff
    are replaced by their mean, which is zero after compensation, so
    ``increments = large - compensator``.
    """

    large: np.ndarray
    compensator: np.ndarray
    counts: np.ndarray
    rates: np.ndarray  # per-mode intensity of jumps >= cutoff
    cutoff: float

    @property
    def increments(self):
        return self.large - self.compensator


def _side_stats(side, cutoff, tol):
    rate = side.c * tail_integral(side.alpha, side.beta, cutoff, power=0.0, tol=tol)[0]
    comp = side.c * tail_integral(side.alpha, side.beta, cutoff, power=1.0, upper=1.0, tol=tol)[0]
    return rate, comp


def _draw_sizes(rng, side, n, cutoff):
    """Draw n jump sizes from the density restricted to [cutoff, inf).

    Proposal: Pareto tail of the pure stable density, accepted with
    probability exp(-beta (z - cutoff)).
    """
    out = np.empty(n)
    filled = 0
    while filled < n:
        k = max(2 * (n - filled), 16)
        z = cutoff * rng.random(k) ** (-1.0 / side.alpha)
        keep = z[rng.random(k) < np.exp(-side.beta * (z - cutoff))]
        take = min(keep.size, n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def sample_jumps(
    spec: JumpSpec,
    dt: float,
    cutoff: float,
    seed,
    size=(),
    M: Optional[int] = None,
    tol: float = 1e-10,
) -> JumpIncrements:
    """Sample jump increments of shape ``size + (M,)``."""
    dt = float(dt)
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    if not 0 < cutoff < 1:
        raise InvalidArgument(f"cutoff must lie in (0, 1), got {cutoff}")
    _require_h4(spec, tol)
    modes = spec.padded(M) if M is not None else list(spec.modes)
    size = (int(size),) if np.isscalar(size) else tuple(int(s) for s in size)
    nmodes = len(modes)
    large = np.zeros(size + (nmodes,))
    counts = np.zeros(size + (nmodes,), dtype=np.int64)
    comp = np.zeros(nmodes)
    rates = np.zeros(nmodes)
    children = as_seed_sequence(seed).spawn(nmodes)
    for j, m in enumerate(modes):
        if m is None:
            continue
        rng = np.random.default_rng(children[j])
        for sign, side in m.sides:
            rate, c_int = _side_stats(side, cutoff, tol)
            rates[j] += rate
            comp[j] += sign * c_int * dt
            k = rng.poisson(rate * dt, size=size)
            total = int(np.sum(k))
            counts[..., j] += k
            if total == 0:
                continue
            sizes = sign * _draw_sizes(rng, side, total, cutoff)
            owner = np.repeat(np.arange(k.size), k.ravel())
            sums = np.bincount(owner, weights=sizes, minlength=k.size)
            large[..., j] += sums.reshape(k.shape)
    return JumpIncrements(large, comp, counts, rates, float(cutoff))
