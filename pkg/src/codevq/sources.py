"""Generalized Gaussian sources, SNR accounting and Shannon reference values.

Density with shape ``alpha`` and standard deviation ``sigma``:

    p(x) = alpha eta / (2 Gamma(1/alpha)) exp(-(eta |x|)^alpha),
    eta = sigma^-1 sqrt(Gamma(3/alpha) / Gamma(1/alpha)).

``(eta |X|)^alpha`` is Gamma(1/alpha, 1) distributed, which gives an exact sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LOG2E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class GgdSpec:
    alpha: float = 2.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"shape alpha must be positive, got {self.alpha}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def eta(self) -> float:
        a = self.alpha
        return math.exp(0.5 * (special.gammaln(3 / a) - special.gammaln(1 / a))) / self.sigma

    @property
    def name(self) -> str:
        if self.alpha == 2:
            return "gaussian"
        if self.alpha == 1:
            return "laplacian"
        return f"ggd{self.alpha:g}"

    def pdf(self, x):
        a, e = self.alpha, self.eta
        x = np.asarray(x, dtype=float)
        return a * e / (2 * math.gamma(1 / a)) * np.exp(-(e * np.abs(x)) ** a)

    def cdf(self, x):
        a, e = self.alpha, self.eta
        x = np.asarray(x, dtype=float)
        return 0.5 + 0.5 * np.sign(x) * special.gammainc(1 / a, (e * np.abs(x)) ** a)


GAUSSIAN = GgdSpec(2.0)
LAPLACIAN = GgdSpec(1.0)


def parse_source(text: str) -> GgdSpec:
    """``gaussian``, ``laplacian`` or ``ggd:<alpha>`` (optionally ``,<sigma>``)."""
    t = text.strip().lower()
    if t in ("gaussian", "gauss", "normal"):
        return GAUSSIAN
    if t in ("laplacian", "laplace"):
        return LAPLACIAN
    if t.startswith("ggd"):
        parts = t[3:].lstrip(":=").split(",")
        try:
            alpha = float(parts[0])
            sigma = float(parts[1]) if len(parts) > 1 else 1.0
        except (ValueError, IndexError):
            raise ValueError(f"cannot parse source {text!r}") from None
        return GgdSpec(alpha, sigma)
    raise ValueError(f"unknown source {text!r}")


def sample_ggd(spec: GgdSpec, n: int, seed=None) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_gamma(1.0 / spec.alpha, size=n)
    sign = rng.integers(0, 2, size=n) * 2 - 1
    return sign * g ** (1.0 / spec.alpha) / spec.eta


def diff_entropy(spec: GgdSpec) -> float:
    """Differential entropy in bits."""
    a = spec.alpha
    nats = math.log(2.0) + special.gammaln(1 / a) - math.log(a * spec.eta) + 1.0 / a
    return nats * LOG2E


def shannon_distortion(spec: GgdSpec, rate: float) -> float:
    """Distortion where the Shannon lower bound meets ``rate``."""
    if not rate > 0:
        raise ValueError("rate must be positive")
    return 2.0 ** (2.0 * (diff_entropy(spec) - rate)) / (2.0 * math.pi * math.e)


def shannon_snr(spec: GgdSpec, rate: float) -> float:
    """SNR in dB on the Shannon lower bound, an upper limit for any code at ``rate``."""
    return 10.0 * math.log10(spec.sigma ** 2 / shannon_distortion(spec, rate))


def mse(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(np.mean((x - y) ** 2)) if x.size else 0.0


def snr_db(x, y) -> float:
    """``10 log10(Var(x) / MSE)``; ``inf`` for a perfect reconstruction."""
    err = mse(x, y)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(float(np.var(x)) / err)


@dataclass(frozen=True)
class BenchmarkPoint:
    source: str
    states: int
    q: int
    generators: str
    target_rate: float
    rate: float
    ideal_rate: float
    snr_db: float
    delta: float
    scale: float
    shannon_db: float

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError("benchmark SNR must be finite")
        if not self.rate > 0:
            raise ValueError("benchmark rate must be positive")
