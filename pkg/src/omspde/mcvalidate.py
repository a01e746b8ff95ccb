"""Monte Carlo estimates of tube-probability ratios on truncated mild solutions.

Samples are generated in fixed-size chunks. Chunk k draws from child k of
``SeedSequence(seed).spawn(n_chunks)``; inside a chunk the Gaussian noise
uses child 0 and the jumps child 1 of a further two-way spawn. Hit counts
are sums over chunks, so they do not depend on how chunks are scheduled
across threads.

The ratio standard error uses the binomial variance of each hit frequency
and the delta method, treating the two tube events as independent:
``se = r * sqrt((1 - p_a)/(n p_a) + (1 - p_b)/(n p_b))``. Common random
numbers make the events positively correlated, so this errs on the wide
side.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .action import COMPLETED_SQUARE, DiscretePath, evaluate_action, require_valid
from .errors import InvalidArgument, PreconditionViolation
from .levy import JumpSpec, as_seed_sequence, h4_moment, sample_jumps
from .spectral import DriftSpec, SpectralModel, ZeroDrift, semigroup_factor

__all__ = ["simulate_mild", "TubeExperiment", "RatioEstimate", "tube_ratio", "tube_norms"]

CHUNK = 100_000


def simulate_mild(
    model: SpectralModel,
    drift: DriftSpec,
    jumps: Optional[JumpSpec],
    x,
    steps: int,
    seed,
    include_jumps: bool = False,
    n_samples: int = 1,
    cutoff: float = 0.5,
    validate: bool = True,
) -> np.ndarray:
    """Exponential-Euler samples of the truncated mild solution.

    Per step: multiply by ``exp(-lambda dt)``, add ``dt * F`` at the current
    state, add a Gaussian with variance ``b^2 (1 - exp(-2 lambda dt)) / (2 lambda)``
    and, if enabled, the compensated jump increment. Exact in law when F = 0
    and there are no jumps. Returns shape ``(n_samples, steps + 1, M)``.
    """
    if validate:
        require_valid(model, drift)
    steps = int(steps)
    if steps < 1:
        raise InvalidArgument("steps must be at least 1")
    M = model.truncation
    x = np.broadcast_to(np.asarray(x, dtype=float), (M,))
    dt = model.time_horizon / steps
    a = semigroup_factor(model, dt)
    lam = model.eigenvalues
    sd = model.diffusion * np.sqrt(-np.expm1(-2.0 * lam * dt) / (2.0 * lam))

    gauss_seed, jump_seed = as_seed_sequence(seed).spawn(2)
    rng = np.random.default_rng(gauss_seed)
    noise = rng.standard_normal((n_samples, steps, M)) * sd
    if include_jumps and jumps is not None and jumps.num_modes:
        if not h4_moment(jumps).finite:
            raise PreconditionViolation("H4 fails: jumps cannot be simulated")
        inc = sample_jumps(jumps, dt, cutoff, jump_seed, size=(n_samples, steps), M=M)
        noise += inc.increments

    out = np.empty((n_samples, steps + 1, M))
    out[:, 0] = x
    zero_drift = isinstance(drift, ZeroDrift)
    t = np.zeros(n_samples)
    for i in range(steps):
        cur = out[:, i]
        nxt = a * cur + noise[:, i]
        if not zero_drift:
            t.fill(i * dt)
            nxt += dt * drift.value(t, cur)
        out[:, i + 1] = nxt
    return out


def tube_norms(samples: np.ndarray, path: np.ndarray, dt: float) -> np.ndarray:
    """Squared discrete L2([0,T];H) distance ``dt * sum_i |X(t_i) - phi(t_i)|^2``."""
    d = samples - path
    return dt * np.einsum("sij,sij->s", d, d)


@dataclass(frozen=True)
class TubeExperiment:
    epsilon: float
    num_samples: int
    path_a: DiscretePath
    path_b: DiscretePath
    seed: int = 0
    include_jumps: bool = False
    cutoff: float = 0.5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgument("epsilon must be positive")
        if self.num_samples < 1:
            raise InvalidArgument("num_samples must be at least 1")
        a, b = self.path_a, self.path_b
        if a.coefficients.shape != b.coefficients.shape or a.time_horizon != b.time_horizon:
            raise InvalidArgument("compared paths must share the grid")
        if not np.array_equal(a.start, b.start):
            raise InvalidArgument("compared paths must share the start point")
        if not 0 < self.cutoff < 1:
            raise InvalidArgument("cutoff must lie in (0, 1)")

    @property
    def steps(self):
        return self.path_a.steps


@dataclass
class RatioEstimate:
    num_samples: int
    hits_a: int
    hits_b: int
    hits_reference: int
    gamma_a: float  # hits_a / hits_reference
    gamma_b: float
    ratio: float  # gamma_a / gamma_b
    ratio_se: float
    action_a: float
    action_b: float
    predicted_ratio: float  # exp(S_b - S_a)
    low_power: bool
    metadata: dict = field(default_factory=dict)

    @property
    def z_score(self):
        if not math.isfinite(self.ratio_se) or self.ratio_se == 0:
            return math.inf
        return (self.ratio - self.predicted_ratio) / self.ratio_se

    def agrees(self, n_se=3.0):
        return math.isfinite(self.ratio_se) and abs(self.ratio - self.predicted_ratio) <= n_se * self.ratio_se

    def as_record(self):
        rec = {
            "num_samples": self.num_samples,
            "hits_a": self.hits_a,
            "hits_b": self.hits_b,
            "hits_reference": self.hits_reference,
            "gamma_a": self.gamma_a,
            "gamma_b": self.gamma_b,
            "ratio": self.ratio,
            "ratio_se": self.ratio_se,
            "action_a": self.action_a,
            "action_b": self.action_b,
            "predicted_ratio": self.predicted_ratio,
            "low_power": self.low_power,
        }
        rec.update(self.metadata)
        return rec


def _div(a, b):
    return a / b if b else math.inf


def _chunk_hits(args):
    exp, model, drift, jumps, seed, n = args
    eps2 = exp.epsilon**2
    dt = exp.path_a.dt
    x = exp.path_a.start
    X = simulate_mild(model, drift, jumps, x, exp.steps, seed, exp.include_jumps, n, exp.cutoff, validate=False)
    ha = int(np.count_nonzero(tube_norms(X, exp.path_a.coefficients, dt) <= eps2))
    hb = int(np.count_nonzero(tube_norms(X, exp.path_b.coefficients, dt) <= eps2))
    if isinstance(drift, ZeroDrift) and not np.any(x):
        XA = X
    else:
        XA = simulate_mild(model, ZeroDrift(), jumps, 0.0, exp.steps, seed, exp.include_jumps, n, exp.cutoff, validate=False)
    hr = int(np.count_nonzero(tube_norms(XA, 0.0, dt) <= eps2))
    return ha, hb, hr


def tube_ratio(
    experiment: TubeExperiment,
    model: SpectralModel,
    drift: DriftSpec,
    jumps: Optional[JumpSpec] = None,
    eta=None,
    threads: int = 1,
    min_hits: int = 50,
) -> RatioEstimate:
    """Estimate ``gamma_eps(phi_a) / gamma_eps(phi_b)`` and its action prediction.

    The reference process X^A (F = 0, x = 0) uses the same random numbers as
    X; when F = 0 and x = 0 it is X itself. Fewer than ``min_hits`` hits in
    any tube sets ``low_power``; zero hits give an infinite error bar.
    """
    require_valid(model, drift)
    exp = experiment
    if exp.path_a.modes != model.truncation:
        raise InvalidArgument("path dimension does not match the model")
    n = exp.num_samples
    n_chunks = -(-n // CHUNK)
    seeds = as_seed_sequence(exp.seed).spawn(n_chunks)
    sizes = [min(CHUNK, n - k * CHUNK) for k in range(n_chunks)]
    work = [(exp, model, drift, jumps, s, m) for s, m in zip(seeds, sizes)]
    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_chunk_hits, work))
    else:
        parts = [_chunk_hits(w) for w in work]
    ha, hb, hr = (sum(p[i] for p in parts) for i in range(3))

    Sa = evaluate_action(exp.path_a, model, drift, eta, COMPLETED_SQUARE, validate=False).total
    Sb = evaluate_action(exp.path_b, model, drift, eta, COMPLETED_SQUARE, validate=False).total
    ratio = _div(ha, hb)
    if ha and hb:
        pa, pb = ha / n, hb / n
        se = ratio * math.sqrt((1 - pa) / (n * pa) + (1 - pb) / (n * pb))
    else:
        se = math.inf
    meta = {"epsilon": exp.epsilon, "steps": exp.steps, "seed": exp.seed, "include_jumps": exp.include_jumps}
    if exp.include_jumps:
        meta["cutoff"] = exp.cutoff
        meta["small_jumps"] = "replaced by their compensated mean (zero)"
    return RatioEstimate(
        num_samples=n,
        hits_a=ha,
        hits_b=hb,
        hits_reference=hr,
        gamma_a=_div(ha, hr),
        gamma_b=_div(hb, hr),
        ratio=ratio,
        ratio_se=se,
        action_a=Sa,
        action_b=Sb,
        predicted_ratio=math.exp(Sb - Sa),
        low_power=min(ha, hb, hr) < min_hits,
        metadata=meta,
    )
