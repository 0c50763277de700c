"""Static context models for the pair ``(u, b)`` and a range coder over them.

The coded probability of a quantized block is

    p(u, b) = prod_t theta(u_t | sigma_t) phi(b_t^1 | c_t^1) phi(b_t^2 | c_t^2)

where ``sigma_t`` is the encoder state and ``c_t^i`` the code symbols implied
by ``(sigma_t, u_t)``.  Index values with ``|b| > B`` are sent as an escape symbol
followed by a sign bit and an Elias-gamma coded excess.

Range coder: 32-bit range, 64-bit low with carry propagation through a pending
0xFF run, byte-aligned output, renormalization whenever the range drops below
2^24.  The constant leading zero byte of this construction is not stored, and
the final flush emits a single byte; the decoder pads the tail with zeros.
"""

from __future__ import annotations

import hashlib
import json
import struct
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .convcode import ConvCodeSpec, cached_trellis, format_poly
from .trellis_quantizer import (DEFAULT_BLOCK_LEN, DEFAULT_L, QuantizedStream, ReconTable,
                                fit_recon, quantize)

TOTAL_BITS = 16
TOTAL = 1 << TOTAL_BITS
DEFAULT_B = 32
MIN_TRAINING = 1_000_000

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
_MAX_PAD = 4

MODEL_FORMAT = "codevq-model"
MODEL_VERSION = 1
STREAM_MAGIC = b"CVQS"
STREAM_VERSION = 1


class CorruptStreamError(ValueError):
    pass


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def _shift_low(self):
        low = self.low
        if low < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            temp = self.cache
            out = self.out
            while True:
                out.append((temp + carry) & 0xFF)
                temp = 0xFF
                self.cache_size -= 1
                if self.cache_size == 0:
                    break
            self.cache = (low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (low << 8) & _MASK32

    def encode(self, start: int, size: int, total_bits: int = TOTAL_BITS):
        r = self.range >> total_bits
        self.low += r * start
        self.range = r * size
        while self.range < _TOP:
            self.range <<= 8
            self._shift_low()

    def encode_bits(self, value: int, nbits: int):
        while nbits > 0:
            step = min(nbits, 16)
            nbits -= step
            self.encode((value >> nbits) & ((1 << step) - 1), 1, step)

    def finish(self) -> bytes:
        # smallest value in [low, low + range) whose low 24 bits are zero
        self.low = (self.low + _TOP - 1) & ~(_TOP - 1)
        self._shift_low()
        self._shift_low()
        data = bytes(self.out)
        if data[:1] != b"\x00":
            raise AssertionError("range coder lost its leading zero byte")
        return data[1:]


class RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.pad = 0
        self.range = _MASK32
        self.code = 0
        for _ in range(4):
            self.code = (self.code << 8) | self._byte()

    def _byte(self) -> int:
        if self.pos < len(self.data):
            b = self.data[self.pos]
            self.pos += 1
            return b
        self.pad += 1
        if self.pad > _MAX_PAD:
            raise CorruptStreamError("bitstream exhausted")
        return 0

    def _normalize(self):
        while self.range < _TOP:
            self.code = ((self.code << 8) | self._byte()) & _MASK32
            self.range <<= 8

    def decode_symbol(self, cum: list[int], total_bits: int = TOTAL_BITS) -> int:
        r = self.range >> total_bits
        v = self.code // r
        if v >= cum[-1]:
            raise CorruptStreamError("code value outside the model range")
        s = bisect_right(cum, v) - 1
        self.code -= r * cum[s]
        self.range = r * (cum[s + 1] - cum[s])
        self._normalize()
        return s

    def decode_bits(self, nbits: int) -> int:
        value = 0
        while nbits > 0:
            step = min(nbits, 16)
            nbits -= step
            r = self.range >> step
            v = self.code // r
            if v >= (1 << step):
                raise CorruptStreamError("code value outside the raw-bit range")
            self.code -= r * v
            self.range = r
            self._normalize()
            value = (value << step) | v
        return value


# -- models -------------------------------------------------------------------


def quantize_distribution(counts, total: int = TOTAL) -> np.ndarray:
    """Add-one smoothed integer frequencies summing to ``total``, all at least 1."""
    counts = np.asarray(counts, dtype=float) + 1.0
    k = counts.size
    if k > total:
        raise ValueError("alphabet larger than the frequency total")
    scaled = counts / counts.sum() * (total - k)
    freq = np.floor(scaled).astype(np.int64) + 1
    short = total - int(freq.sum())
    if short:
        order = np.argsort(-(scaled - np.floor(scaled)), kind="stable")
        freq[order[:short]] += 1
    return freq


@dataclass(frozen=True, eq=False)
class CodecModel:
    spec: ConvCodeSpec
    scale: float
    delta: float
    theta_freq: np.ndarray
    phi_freq: np.ndarray
    recon: ReconTable
    B: int = DEFAULT_B
    block_len: int = DEFAULT_BLOCK_LEN

    @property
    def q(self) -> int:
        return self.spec.q

    @property
    def L(self) -> int:
        return self.recon.L

    @property
    def theta(self) -> np.ndarray:
        return self.theta_freq / TOTAL

    @property
    def phi(self) -> np.ndarray:
        """Rows over ``b = -B..B`` followed by the escape mass."""
        return self.phi_freq / TOTAL

    @property
    def escape(self) -> int:
        return 2 * self.B + 1

    @cached_property
    def _theta_cum(self) -> list[list[int]]:
        return [[0, *np.cumsum(row).tolist()] for row in self.theta_freq]

    @cached_property
    def _phi_cum(self) -> list[list[int]]:
        return [[0, *np.cumsum(row).tolist()] for row in self.phi_freq]

    @cached_property
    def model_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "q": self.q,
            "g1": format_poly(self.spec.g1),
            "g2": format_poly(self.spec.g2),
            "scale": self.scale,
            "delta": self.delta,
            "B": self.B,
            "L": self.L,
            "block_len": self.block_len,
            "total_bits": TOTAL_BITS,
            "theta": self.theta_freq.tolist(),
            "phi": self.phi_freq.tolist(),
            "beta": self.recon.beta.tolist(),
            "bucket_counts": self.recon.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CodecModel:
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a codec model file")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')}")
        if d.get("total_bits") != TOTAL_BITS:
            raise ValueError("model frequency precision does not match this coder")
        q = int(d["q"])
        spec = ConvCodeSpec.from_label(f"[{d['g1']};{d['g2']}]", q)
        recon = ReconTable(q, int(d["L"]), float(d["delta"]), np.array(d["beta"], dtype=float),
                           np.array(d["bucket_counts"], dtype=np.int64))
        model = cls(spec, float(d["scale"]), float(d["delta"]), np.array(d["theta"], dtype=np.int64),
                    np.array(d["phi"], dtype=np.int64), recon, int(d["B"]), int(d["block_len"]))
        model.validate()
        return model

    def validate(self):
        S, q = self.spec.num_states, self.q
        if self.theta_freq.shape != (S, q) or self.phi_freq.shape != (q, 2 * self.B + 2):
            raise ValueError("model tables have the wrong shape")
        for table in (self.theta_freq, self.phi_freq):
            if (table <= 0).any() or (table.sum(axis=1) != TOTAL).any():
                raise ValueError("model frequencies must be positive and sum to the total")
        if self.B < self.L:
            raise ValueError("direct index alphabet must cover the reconstruction table")

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path) -> CodecModel:
        return cls.from_dict(json.loads(Path(path).read_text()))


def _stream_states(spec: ConvCodeSpec, u: np.ndarray, block_len: int) -> np.ndarray:
    """Encoder state before every step, restarting from zero at each block."""
    q, m = spec.q, spec.memory
    states = np.zeros(u.size, dtype=np.int64)
    pos = np.arange(u.size) % (block_len // 2)
    for j in range(1, m + 1):
        shifted = np.zeros_like(u)
        shifted[j:] = u[:-j]
        shifted[pos < j] = 0
        states += shifted * q ** (j - 1)
    return states


def _b_symbols(b: np.ndarray, B: int) -> np.ndarray:
    return np.where(np.abs(b) <= B, b + B, 2 * B + 1)


def fit_model(stream: QuantizedStream, L: int = DEFAULT_L, B: int = DEFAULT_B) -> CodecModel:
    spec = stream.spec
    if stream.n == 0:
        raise ValueError("cannot train on an empty stream")
    if B < L:
        raise ValueError("B must be at least L")
    q, S = spec.q, spec.num_states
    states = _stream_states(spec, stream.u, stream.block_len)
    theta_counts = np.bincount(states * q + stream.u, minlength=S * q).reshape(S, q)
    width = 2 * B + 2
    syms = _b_symbols(stream.b, B)
    phi_counts = np.bincount(stream.codeword * width + syms, minlength=q * width).reshape(q, width)
    theta = np.stack([quantize_distribution(r) for r in theta_counts])
    phi = np.stack([quantize_distribution(r) for r in phi_counts])
    return CodecModel(spec, stream.scale, stream.delta, theta, phi, fit_recon(stream, L), B,
                      stream.block_len)


def train_model(spec: ConvCodeSpec, x, scale: float = 1.0, delta: float = 0.0, L: int = DEFAULT_L,
                B: int = DEFAULT_B, block_len: int = DEFAULT_BLOCK_LEN,
                min_samples: int = MIN_TRAINING) -> CodecModel:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("training stream is empty")
    if x.size < min_samples:
        raise ValueError(f"training needs at least {min_samples} samples, got {x.size}")
    return fit_model(quantize(x, spec, scale, delta, block_len), L, B)


# -- coding -------------------------------------------------------------------


def _check_pair(model: CodecModel, u: np.ndarray, b: np.ndarray) -> None:
    if b.size != 2 * u.size:
        raise ValueError(f"index vector has length {b.size}, expected {2 * u.size}")
    if u.size and (u.min() < 0 or u.max() >= model.q):
        raise ValueError("information symbols out of range")


def encode_payload(model: CodecModel, u, b, block_len: int | None = None) -> bytes:
    u = np.asarray(u, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_pair(model, u, b)
    if u.size == 0:
        return b""
    block_steps = (block_len or 2 * u.size) // 2
    trellis = cached_trellis(model.spec)
    next_state = trellis.next_state.tolist()
    out1 = trellis.out1.tolist()
    out2 = trellis.out2.tolist()
    th, ph = model._theta_cum, model._phi_cum
    B, esc = model.B, model.escape
    enc = RangeEncoder()
    encode = enc.encode
    s = 0
    for t, (ut, b1, b2) in enumerate(zip(u.tolist(), b[0::2].tolist(), b[1::2].tolist())):
        if t % block_steps == 0:
            s = 0
        cum = th[s]
        encode(cum[ut], cum[ut + 1] - cum[ut])
        for c, bv in ((out1[s][ut], b1), (out2[s][ut], b2)):
            cum = ph[c]
            if -B <= bv <= B:
                sym = bv + B
                encode(cum[sym], cum[sym + 1] - cum[sym])
            else:
                encode(cum[esc], cum[esc + 1] - cum[esc])
                _encode_escape(enc, bv, B)
        s = next_state[s][ut]
    return enc.finish()


def _encode_escape(enc: RangeEncoder, bv: int, B: int) -> None:
    excess = abs(bv) - B
    nb = excess.bit_length()
    enc.encode_bits(1 if bv < 0 else 0, 1)
    # unary prefix one bit at a time, the way the decoder reads it
    for i in range(nb):
        enc.encode_bits(int(i == nb - 1), 1)
    enc.encode_bits(excess & ((1 << (nb - 1)) - 1), nb - 1)


def _decode_escape(dec: RangeDecoder, B: int) -> int:
    negative = dec.decode_bits(1)
    zeros = 0
    while dec.decode_bits(1) == 0:
        zeros += 1
        if zeros > 62:
            raise CorruptStreamError("runaway escape length")
    excess = (1 << zeros) | dec.decode_bits(zeros)
    v = B + excess
    return -v if negative else v


def decode_payload(model: CodecModel, data: bytes, k: int, block_len: int | None = None):
    if k == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    block_steps = (block_len or 2 * k) // 2
    trellis = cached_trellis(model.spec)
    next_state = trellis.next_state.tolist()
    out1 = trellis.out1.tolist()
    out2 = trellis.out2.tolist()
    th, ph = model._theta_cum, model._phi_cum
    B, esc = model.B, model.escape
    dec = RangeDecoder(data)
    decode = dec.decode_symbol
    u = [0] * k
    b = [0] * (2 * k)
    s = 0
    for t in range(k):
        if t % block_steps == 0:
            s = 0
        ut = decode(th[s])
        u[t] = ut
        for i, c in enumerate((out1[s][ut], out2[s][ut])):
            sym = decode(ph[c])
            b[2 * t + i] = sym - B if sym != esc else _decode_escape(dec, B)
        s = next_state[s][ut]
    return np.array(u, dtype=np.int64), np.array(b, dtype=np.int64)


@dataclass(frozen=True)
class Bitstream:
    header: dict
    payload: bytes = field(repr=False)

    def to_bytes(self) -> bytes:
        head = json.dumps(self.header, sort_keys=True, separators=(",", ":")).encode()
        return STREAM_MAGIC + struct.pack("<BI", STREAM_VERSION, len(head)) + head + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> Bitstream:
        if data[:4] != STREAM_MAGIC:
            raise CorruptStreamError("not a codevq bitstream")
        version, hlen = struct.unpack_from("<BI", data, 4)
        if version != STREAM_VERSION:
            raise CorruptStreamError(f"unsupported bitstream version {version}")
        start = 4 + struct.calcsize("<BI")
        header = json.loads(data[start:start + hlen])
        return cls(header, bytes(data[start + hlen:]))


def stream_header(model: CodecModel, k: int, block_len: int, samples: int | None = None) -> dict:
    return {
        "q": model.q,
        "m": model.spec.memory,
        "generators": model.spec.label,
        "scale": model.scale,
        "delta": model.delta,
        "model_id": model.model_id,
        "steps": k,
        "block_len": block_len,
        "samples": 2 * k if samples is None else samples,
    }


def encode_pair(model: CodecModel, u, b, block_len: int | None = None,
                samples: int | None = None) -> Bitstream:
    u = np.asarray(u, dtype=np.int64)
    bl = block_len or 2 * max(u.size, 1)
    payload = encode_payload(model, u, b, bl)
    return Bitstream(stream_header(model, u.size, bl, samples), payload)


def check_header(model: CodecModel, header: dict) -> None:
    if header.get("q") != model.q:
        raise ValueError(f"bitstream q={header.get('q')} does not match model q={model.q}")
    if header.get("generators") != model.spec.label:
        raise ValueError("bitstream and model use different generators")
    if header.get("model_id") != model.model_id:
        raise ValueError("bitstream was produced with a different model")


def decode_pair(model: CodecModel, bits, k: int | None = None):
    if isinstance(bits, (bytes, bytearray)):
        bits = Bitstream.from_bytes(bits)
    check_header(model, bits.header)
    steps = bits.header["steps"] if k is None else k
    return decode_payload(model, bits.payload, steps, bits.header["block_len"])


# -- rate ---------------------------------------------------------------------


def ideal_bits(model: CodecModel, u, b, block_len: int | None = None) -> float:
    """Cross-entropy ``-log2 p(u, b)`` under the model plus raw escape bits."""
    u = np.asarray(u, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_pair(model, u, b)
    if u.size == 0:
        return 0.0
    bl = block_len or 2 * u.size
    spec = model.spec
    states = _stream_states(spec, u, bl)
    trellis = cached_trellis(spec)
    c = np.empty(b.size, dtype=np.int64)
    c[0::2] = trellis.output[states, u, 0]
    c[1::2] = trellis.output[states, u, 1]
    syms = _b_symbols(b, model.B)
    bits = -np.log2(model.theta_freq[states, u] / TOTAL).sum()
    bits += -np.log2(model.phi_freq[c, syms] / TOTAL).sum()
    excess = np.abs(b[syms == model.escape]) - model.B
    if excess.size:
        bits += (1 + 2 * np.floor(np.log2(excess)) + 1).sum()
    return float(bits)


def measure_rate(model: CodecModel, blocks, coded: bool = True) -> float:
    """Bits per sample over one or more quantized streams.

    ``coded=True`` runs the range coder; otherwise the model cross-entropy is used.
    """
    if isinstance(blocks, QuantizedStream):
        blocks = [blocks]
    blocks = list(blocks)
    if not blocks:
        raise ValueError("no blocks to measure")
    total_bits = 0.0
    total_n = 0
    for st in blocks:
        if coded:
            total_bits += 8 * len(encode_payload(model, st.u, st.b, st.block_len))
        else:
            total_bits += ideal_bits(model, st.u, st.b, st.block_len)
        total_n += st.n
    return total_bits / total_n if total_n else 0.0


def coded_length_bits(model: CodecModel, u, b, block_len: int | None = None) -> int:
    return 8 * len(encode_payload(model, u, b, block_len))


def entropy_bits(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


__all__ = [
    "Bitstream", "CodecModel", "CorruptStreamError", "RangeDecoder", "RangeEncoder",
    "decode_pair", "decode_payload", "encode_pair", "encode_payload", "fit_model", "ideal_bits",
    "measure_rate", "quantize_distribution", "train_model",
]
