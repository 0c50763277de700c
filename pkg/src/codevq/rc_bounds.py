"""Random-coding bound on the NSM of lattices over q-ary linear codes.

With ``g(s, x) = (1/q) sum_k exp(s rho(x, k))`` and ``s < 0``:

* ``d0`` solves ``d = 2 int_0^{1/2} g_s(s, x) / g(s, x) dx`` at ``s = -1/(2d)``,
* ``R0 = (-1/2 - 2 int_0^{1/2} ln g(s0, x) dx) / ln q`` with ``s0 = -1/(2 d0)``,
* ``G_inf = d0 q^(2 (R0 - 1))``.

``bound_at_rate`` fixes the code rate instead: ``s`` solves the ``R0``-form
equation for the requested rate and ``G = d(s) q^(2 (Rc - 1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .gfpoly import check_prime
from .metrics import rho

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
FIXED_POINT_TOL = 1e-10


class ConvergenceError(RuntimeError):
    pass


def _rho_row(x: float, q: int) -> np.ndarray:
    return rho(x, np.arange(q, dtype=float), q)


def g_func(s: float, x: float, q: int) -> float:
    return float(np.mean(np.exp(s * _rho_row(x, q))))


def _log_g(s: float, x: float, q: int) -> float:
    r = _rho_row(x, q)
    e = s * r
    top = e.max()
    return float(top + math.log(np.exp(e - top).sum()) - math.log(q))


def _dlog_g(s: float, x: float, q: int) -> float:
    """``g_s / g`` computed with a shifted exponent so large ``|s| rho`` cannot underflow."""
    r = _rho_row(x, q)
    w = np.exp(s * (r - r.min()))
    return float((r * w).sum() / w.sum())


def _integral(f, lo: float = 0.0, hi: float = 0.5, points=None) -> float:
    val, _ = integrate.quad(f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200,
                            points=points)
    return val


def distortion_at(s: float, q: int) -> float:
    """Right-hand side of the ``d0`` equation at a given ``s``."""
    return 2.0 * _integral(lambda x: _dlog_g(s, x, q))


def mean_log_g(s: float, q: int) -> float:
    return 2.0 * _integral(lambda x: _log_g(s, x, q))


def rate_at(s: float, q: int) -> float:
    return (-0.5 - mean_log_g(s, q)) / math.log(q)


def solve_d0(q: int, damping: float = 0.5, max_iter: int = 500) -> float:
    """Fixed point of ``d -> distortion_at(-1/(2d))`` seeded at ``q / (2 pi e)``."""
    check_prime(q)
    F = lambda d: distortion_at(-0.5 / d, q)  # noqa: E731
    d = q / (2.0 * math.pi * math.e)
    last_step = math.inf
    for _ in range(max_iter):
        fd = F(d)
        if abs(fd - d) < FIXED_POINT_TOL:
            return d
        step = damping * (fd - d)
        if abs(step) >= last_step:
            break
        last_step = abs(step)
        d += step
    # bracket the root around the current iterate and bisect
    lo, hi = d, d
    while F(lo) - lo <= 0:
        lo *= 0.8
    while F(hi) - hi >= 0:
        hi *= 1.25
    d = optimize.brentq(lambda t: F(t) - t, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    if abs(F(d) - d) >= FIXED_POINT_TOL:
        raise ConvergenceError(f"d0 fixed point for q={q} did not converge")
    return d


def compute_r0(q: int, d0: float) -> float:
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    return rate_at(-0.5 / d0, q)


@dataclass(frozen=True)
class BoundResult:
    q: int
    d0: float
    R0: float
    G_inf: float
    residual: float


def compute_bound(q: int) -> BoundResult:
    d0 = solve_d0(q)
    R0 = compute_r0(q, d0)
    residual = abs(distortion_at(-0.5 / d0, q) - d0)
    return BoundResult(q, d0, R0, d0 * q ** (2.0 * (R0 - 1.0)), residual)


def bound_at_rate(q: int, rate: float) -> float:
    check_prime(q)
    if not 0.0 < rate < 1.0:
        raise ValueError(f"code rate {rate} outside (0, 1)")
    # rate_at increases from -1/(2 ln q) at s = 0- towards 1 as s -> -inf
    f = lambda s: rate_at(s, q) - rate  # noqa: E731
    lo, hi = -1.0, -1e-9
    while f(lo) < 0:
        lo *= 2.0
        if lo < -1e6:
            raise ValueError(f"rate {rate} is not reachable for q={q}")
    s = optimize.brentq(f, lo, hi, xtol=1e-14)
    return distortion_at(s, q) * q ** (2.0 * (rate - 1.0))


# -- the same integrals over a full period [0, q] -----------------------------


def distortion_at_full_period(s: float, q: int) -> float:
    pts = [j / 2 for j in range(1, 2 * q)]
    return _integral(lambda x: _dlog_g(s, x, q), 0.0, float(q), points=pts) / q


def rate_at_full_period(s: float, q: int) -> float:
    pts = [j / 2 for j in range(1, 2 * q)]
    m = _integral(lambda x: _log_g(s, x, q), 0.0, float(q), points=pts) / q
    return (-0.5 - m) / math.log(q)


BOUND_COLUMNS = ("q", "R0", "G_opt", "G_at_half")


def bound_table(qs) -> list[dict]:
    rows = []
    for q in qs:
        b = compute_bound(q)
        rows.append({"q": q, "R0": b.R0, "G_opt": b.G_inf, "G_at_half": bound_at_rate(q, 0.5)})
    return rows
