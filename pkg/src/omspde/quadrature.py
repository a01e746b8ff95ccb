"""Adaptive Gauss-Legendre quadrature and the tempered-stable moment integrals."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = ["adaptive_gauss_legendre", "small_jump_integral", "tail_integral"]


@lru_cache(maxsize=None)
def _rule(n):
    return np.polynomial.legendre.leggauss(n)


def _gl(f, a, b, n):
    x, w = _rule(n)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(half * x + 0.5 * (a + b))))


def adaptive_gauss_legendre(f, a, b, tol=1e-10, order=10, max_depth=50):
    """Integrate a vectorised ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Each panel is compared against the sum over its two halves; panels that
    disagree by more than their share of the tolerance are bisected.
    Returns ``(value, error_estimate)``.
    """
    total = 0.0
    err = 0.0
    stack = [(float(a), float(b), _gl(f, a, b, order), tol, 0)]
    while stack:
        lo, hi, whole, ptol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _gl(f, lo, mid, order)
        right = _gl(f, mid, hi, order)
        diff = abs(left + right - whole)
        if diff <= ptol or depth >= max_depth:
            total += left + right
            err += diff
        else:
            stack.append((lo, mid, left, 0.5 * ptol, depth + 1))
            stack.append((mid, hi, right, 0.5 * ptol, depth + 1))
    return total, err


def small_jump_integral(alpha, beta, power=1.0, upper=1.0, tol=1e-10):
    """``int_0^upper z**(power - 1 - alpha) * exp(-beta z) dz``.

    With ``power=1`` this is the first absolute moment of the tempered-stable
    density over (0, upper). The substitution ``z = upper * u**(1/p)`` with
    ``p = power - alpha`` removes the endpoint singularity; requires p > 0.
    """
    p = power - alpha
    if p <= 0:
        return math.inf, 0.0
    k = 1.0 / p

    def g(u):
        return upper**p * k * np.exp(-beta * upper * u**k)

    return adaptive_gauss_legendre(g, 0.0, 1.0, tol)


def tail_integral(alpha, beta, lower, power=0.0, upper=math.inf, tol=1e-10):
    """``int_lower^upper z**(power - 1 - alpha) * exp(-beta z) dz`` for lower > 0.

    The finite piece up to 1 is smooth; the piece beyond 1 is mapped to (0, 1]
    with ``z = 1/u``, where the integrand vanishes to all orders at u = 0.
    """
    e = power - 1.0 - alpha

    def h(z):
        return z**e * np.exp(-beta * z)

    val, err = 0.0, 0.0
    cut = min(1.0, upper)
    if lower < cut:
        v, r = adaptive_gauss_legendre(h, lower, cut, tol)
        val, err = val + v, err + r
    a = max(lower, 1.0)
    if upper > a:
        def g(u):
            out = np.zeros_like(u)
            pos = u > 0
            uu = u[pos]
            out[pos] = uu ** (-e - 2.0) * np.exp(-beta / uu)
            return out

        ulo = 0.0 if math.isinf(upper) else 1.0 / upper
        v, r = adaptive_gauss_legendre(g, ulo, 1.0 / a, tol)
        val, err = val + v, err + r
    return val, err
