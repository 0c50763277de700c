"""Rate-targeted SNR benchmarks for the entropy-coded trellis quantizer.

For each operating point the lattice scale ``a`` is bisected (in ``log a``) until
the model cross-entropy on the training stream hits the target rate; the model
trained at that scale then codes a disjoint test stream, whose coded rate and SNR
are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convcode import ConvCodeSpec
from .entropy_codec import CodecModel, encode_payload, fit_model, ideal_bits
from .sources import BenchmarkPoint, GgdSpec, sample_ggd, shannon_snr, snr_db
from .trellis_quantizer import DEFAULT_BLOCK_LEN, DEFAULT_L, quantize, reconstruct

DELTAS = (1.0, 0.5, 0.25, 0.125, 0.0)
RATE_TOL = 1e-3
TRAIN_SAMPLES = 1_000_000
TEST_SAMPLES = 10_000_000


class RateUnreachable(ValueError):
    pass


def source_streams(source: GgdSpec, train_n: int, test_n: int, seed: int):
    """Independent training and test streams from child seeds of ``seed``.

    The two children are distinct nodes of the same seed tree, so the streams never
    share generator state.
    """
    train_ss, test_ss = np.random.SeedSequence(seed).spawn(2)
    return (sample_ggd(source, train_n, np.random.default_rng(train_ss)),
            sample_ggd(source, test_n, np.random.default_rng(test_ss)))


def _even(x: np.ndarray) -> np.ndarray:
    return x[: x.size - (x.size % 2)]


def model_at_scale(spec: ConvCodeSpec, x, scale: float, delta: float, L: int = DEFAULT_L,
                   block_len: int = DEFAULT_BLOCK_LEN) -> tuple[CodecModel, float]:
    """Train at ``scale`` and return the model with its training cross-entropy in bits/sample."""
    stream = quantize(x, spec, scale, delta, block_len)
    model = fit_model(stream, L)
    return model, ideal_bits(model, stream.u, stream.b, block_len) / stream.n


@dataclass(frozen=True)
class ScaleFit:
    scale: float
    rate: float
    model: CodecModel
    iterations: int


def fit_scale(spec: ConvCodeSpec, x, rate: float, delta: float, L: int = DEFAULT_L,
              block_len: int = DEFAULT_BLOCK_LEN, tol: float = RATE_TOL,
              bracket: tuple[float, float] = (1e-4, 1e3), max_iter: int = 80) -> ScaleFit:
    """Bisect ``log a`` until the training rate is within ``tol`` of ``rate``.

    The rate falls monotonically (up to training noise) as ``a`` grows.
    """
    if not rate > 0:
        raise ValueError("target rate must be positive")
    x = _even(np.asarray(x, dtype=float))
    sd = float(np.std(x)) or 1.0
    # start from the high-resolution guess a ~ sigma * 2^(1/2 - R) sqrt(12) / q
    guess = sd * math.sqrt(12.0) * 2.0 ** (-rate) / spec.q
    lo_a, hi_a = bracket
    guess = min(max(guess, 2 * lo_a * sd), 0.5 * hi_a * sd)
    lo, hi = math.log(guess) - 1.0, math.log(guess) + 1.0
    model_lo, r_lo = model_at_scale(spec, x, math.exp(lo), delta, L, block_len)
    while r_lo < rate:
        lo -= 1.0
        if math.exp(lo) < lo_a * sd:
            raise RateUnreachable(f"rate {rate} not reached at the smallest scale")
        model_lo, r_lo = model_at_scale(spec, x, math.exp(lo), delta, L, block_len)
    model_hi, r_hi = model_at_scale(spec, x, math.exp(hi), delta, L, block_len)
    while r_hi > rate:
        hi += 1.0
        if math.exp(hi) > hi_a * sd:
            raise RateUnreachable(f"rate {rate} not reached at the largest scale")
        model_hi, r_hi = model_at_scale(spec, x, math.exp(hi), delta, L, block_len)
    best = (abs(r_lo - rate), lo, r_lo, model_lo)
    if abs(r_hi - rate) < best[0]:
        best = (abs(r_hi - rate), hi, r_hi, model_hi)
    it = 0
    while best[0] > tol and it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        model, r = model_at_scale(spec, x, math.exp(mid), delta, L, block_len)
        if abs(r - rate) < best[0]:
            best = (abs(r - rate), mid, r, model)
        if r > rate:
            lo = mid
        else:
            hi = mid
    if best[0] > tol:
        raise RateUnreachable(f"bisection stalled {best[0]:.4f} bits from rate {rate}")
    return ScaleFit(math.exp(best[1]), best[2], best[3], it)


def evaluate(model: CodecModel, x, block_len: int = DEFAULT_BLOCK_LEN, coded: bool = True):
    """Quantize, code and reconstruct ``x``; return (coded rate, ideal rate, SNR)."""
    x = _even(np.asarray(x, dtype=float))
    spec = model.spec
    stream = quantize(x, spec, model.scale, model.delta, block_len)
    ideal = ideal_bits(model, stream.u, stream.b, block_len) / stream.n
    if coded:
        nbits = 0
        for sl in stream.block_slices():
            steps = slice(sl.start // 2, sl.stop // 2)
            nbits += 8 * len(encode_payload(model, stream.u[steps], stream.b[sl], block_len))
        rate = nbits / stream.n
    else:
        rate = ideal
    y = reconstruct(stream.u, stream.b, spec, model.recon, model.scale, block_len)
    return rate, ideal, snr_db(x, y)


def run_point(source: GgdSpec, spec: ConvCodeSpec, rate: float, delta: float,
              train_n: int = TRAIN_SAMPLES, test_n: int = TEST_SAMPLES, seed: int = 0,
              L: int = DEFAULT_L, block_len: int = DEFAULT_BLOCK_LEN, coded: bool = True,
              tol: float = RATE_TOL) -> tuple[BenchmarkPoint, CodecModel]:
    x_train, x_test = source_streams(source, train_n, test_n, seed)
    fit = fit_scale(spec, x_train, rate, delta, L, block_len, tol)
    coded_rate, ideal, snr = evaluate(fit.model, x_test, block_len, coded)
    point = BenchmarkPoint(source.name, spec.num_states, spec.q, spec.label, rate, coded_rate,
                           ideal, snr, delta, fit.scale, shannon_snr(source, coded_rate))
    return point, fit.model


def sweep_deltas(source: GgdSpec, spec: ConvCodeSpec, rate: float, deltas=DELTAS, **kw):
    """All Δ rows at one rate; the best is the one with the highest SNR."""
    points = [run_point(source, spec, rate, d, **kw)[0] for d in deltas]
    best = max(points, key=lambda p: p.snr_db)
    return points, best


POINT_COLUMNS = ("source", "states", "q", "generators", "target_rate", "rate", "ideal_rate",
                 "snr_db", "delta", "scale", "shannon_db")


def point_row(p: BenchmarkPoint) -> dict:
    return {
        "source": p.source, "states": p.states, "q": p.q, "generators": p.generators,
        "target_rate": f"{p.target_rate:g}", "rate": f"{p.rate:.5f}",
        "ideal_rate": f"{p.ideal_rate:.5f}", "snr_db": f"{p.snr_db:.4f}",
        "delta": f"{p.delta:g}", "scale": f"{p.scale:.6g}", "shannon_db": f"{p.shannon_db:.4f}",
    }
