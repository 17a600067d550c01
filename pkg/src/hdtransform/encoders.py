"""Length-scale hypervector encoders.

Interval encoders tile [lo, hi] with segments of exact width l whose start is
shifted by a per-dimension random phase theta_i in [0, l).  The real-cosine
flavor places a signed raised-cosine bump on each segment,

    phi_i(x) = r_ij (1 - cos(2 pi u)) / 2,   u = frac((x - lo + theta_i)/l),

with r_ij an independent +-1 per (dimension, segment); the bipolar-sign flavor
keeps only the sign r_ij, which makes the expected pairwise similarity the
triangle kernel max(0, 1 - |x - x'|/l).  Symbols get iid bipolar vectors keyed
by (seed, symbol) so a symbol's vector never depends on the rest of its set.
Sequences aggregate bound k-mer windows (each offset rotated once more) and
are scaled by 1/#windows.  A product encoder binds one encoding per factor.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .core import BIPOLAR, REAL, Hypervector
from .errors import RejectedInputError

__all__ = [
    "Interval",
    "SymbolSet",
    "SequenceDomain",
    "EncoderSpec",
    "REAL_COSINE",
    "BIPOLAR_SIGN",
    "COS_SIN",
    "IID_SYMBOL",
    "Encoder",
    "ProductEncoder",
    "make_encoder",
    "encode_interval_real",
    "encode_interval_bipolar",
    "encode_cos_sin",
    "encode_symbol",
    "encode_sequence",
    "encode_product",
    "select_informative_dims",
]

REAL_COSINE = "real-cosine"
BIPOLAR_SIGN = "bipolar-sign"
COS_SIN = "cos-sin-baseline"
IID_SYMBOL = "iid-symbol"

_INTERVAL_FLAVORS = (REAL_COSINE, BIPOLAR_SIGN, COS_SIN)

# Stream tags keeping the independent random tables of one seed apart.
_STREAM_PHASE = 1
_STREAM_SIGNS = 2
_STREAM_NORMALS = 3
_STREAM_UNIFORMS = 4
_STREAM_SYMBOL = 5
_STREAM_NOISE = 6


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def _symbol_words(symbol: str) -> tuple[int, ...]:
    digest = hashlib.sha256(symbol.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float


@dataclass(frozen=True)
class SymbolSet:
    symbols: tuple[str, ...]


@dataclass(frozen=True)
class SequenceDomain:
    alphabet: tuple[str, ...]
    kmer: int = 3


@dataclass(frozen=True)
class EncoderSpec:
    """Complete, hashable description of one encoder.

    noise adds a deterministic per-input +-noise component (strict-uniqueness
    option); 0.0 disables it.
    """

    domain: Interval | SymbolSet | SequenceDomain
    flavor: str
    dims: int
    seed: int
    length_scale: float = 1.0
    noise: float = 0.0

    def __post_init__(self):
        if self.dims < 1:
            raise RejectedInputError(f"dims must be >= 1, got {self.dims}")
        if self.noise < 0:
            raise RejectedInputError("noise must be >= 0")
        if isinstance(self.domain, Interval):
            if self.flavor not in _INTERVAL_FLAVORS:
                raise RejectedInputError(
                    f"flavor {self.flavor!r} does not apply to interval domains")
            if not (np.isfinite(self.domain.lo) and np.isfinite(self.domain.hi)
                    and self.domain.lo < self.domain.hi):
                raise RejectedInputError("interval needs finite lo < hi")
            if not self.length_scale > 0:
                raise RejectedInputError("length_scale must be positive")
        elif isinstance(self.domain, SymbolSet):
            if self.flavor != IID_SYMBOL:
                raise RejectedInputError("symbol sets use the iid-symbol flavor")
            syms = self.domain.symbols
            if len(syms) == 0 or len(set(syms)) != len(syms):
                raise RejectedInputError("symbol set must be nonempty without duplicates")
        elif isinstance(self.domain, SequenceDomain):
            if self.flavor != IID_SYMBOL:
                raise RejectedInputError("sequence domains use the iid-symbol flavor")
            abc = self.domain.alphabet
            if len(abc) == 0 or len(set(abc)) != len(abc):
                raise RejectedInputError("alphabet must be nonempty without duplicates")
            if any(len(c) != 1 for c in abc):
                raise RejectedInputError("alphabet entries must be single characters")
            if self.domain.kmer < 1:
                raise RejectedInputError("kmer must be >= 1")
        else:
            raise RejectedInputError(f"unknown domain type {type(self.domain).__name__}")

    def fingerprint(self) -> str:
        return hashlib.sha256(repr(self).encode("utf-8")).hexdigest()[:16]


class Encoder:
    """Base class: a pure function from inputs to hypervectors."""

    def __init__(self, spec: EncoderSpec):
        self.spec = spec
        self.dims = spec.dims

    @property
    def length_scale(self) -> float:
        return self.spec.length_scale

    @property
    def fingerprint(self) -> str:
        return self.spec.fingerprint()

    def contains(self, x) -> bool:
        raise NotImplementedError

    def encode_many(self, xs) -> np.ndarray:
        raise NotImplementedError

    def encode(self, x) -> Hypervector:
        row = self.encode_many([x])[0]
        flavor = BIPOLAR if (self.spec.flavor == BIPOLAR_SIGN and self.spec.noise == 0) else REAL
        return Hypervector(row, flavor)


class _IntervalEncoder(Encoder):
    def __init__(self, spec: EncoderSpec):
        super().__init__(spec)
        lo, hi, l = spec.domain.lo, spec.domain.hi, spec.length_scale
        self.lo, self.hi = lo, hi
        nseg = int(np.floor((hi - lo) / l)) + 2
        self.theta = _rng(spec.seed, _STREAM_PHASE).uniform(0.0, l, size=spec.dims)
        self.signs = _rng(spec.seed, _STREAM_SIGNS).choice(
            np.array([-1.0, 1.0]), size=(spec.dims, nseg))

    def contains(self, x) -> bool:
        x = float(x)
        tol = 1e-9 * max(1.0, abs(self.lo), abs(self.hi))
        return np.isfinite(x) and (self.lo - tol) <= x <= (self.hi + tol)

    def _check(self, xs: np.ndarray) -> None:
        bad = [float(x) for x in xs if not self.contains(x)]
        if bad:
            raise RejectedInputError(
                f"input {bad[0]!r} outside interval [{self.lo}, {self.hi}]")

    def _segments(self, xs: np.ndarray):
        l = self.spec.length_scale
        u = (xs[:, None] - self.lo + self.theta[None, :]) / l
        j = np.floor(u).astype(np.intp)
        # Clamp the boundary cell: x == hi can land exactly on the last edge.
        np.clip(j, 0, self.signs.shape[1] - 1, out=j)
        frac = u - j
        return j, frac

    def _noise_rows(self, xs: np.ndarray) -> np.ndarray:
        rows = np.zeros((len(xs), self.dims))
        for i, x in enumerate(xs):
            words = np.frombuffer(np.float64(x).tobytes(), dtype="<u4")
            coin = _rng(self.spec.seed, _STREAM_NOISE, *words).choice(
                np.array([-1.0, 1.0]), size=self.dims)
            rows[i] = self.spec.noise * coin
        return rows

    def _finish(self, xs: np.ndarray, rows: np.ndarray) -> np.ndarray:
        if self.spec.noise > 0:
            rows = rows + self._noise_rows(xs)
        return rows


class IntervalCosineEncoder(_IntervalEncoder):
    """Signed raised-cosine bumps; smooth, with analytic derivatives."""

    def encode_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        self._check(xs)
        j, frac = self._segments(xs)
        r = self.signs[np.arange(self.dims)[None, :], j]
        rows = r * (1.0 - np.cos(2.0 * np.pi * frac)) / 2.0
        return self._finish(xs, rows)

    def encode_deriv_many(self, xs, order: int) -> np.ndarray:
        """Analytic d^order/dx^order of the raw encoding, order in {1, 2}."""
        xs = np.asarray(xs, dtype=np.float64)
        self._check(xs)
        l = self.spec.length_scale
        j, frac = self._segments(xs)
        r = self.signs[np.arange(self.dims)[None, :], j]
        if order == 1:
            return r * (np.pi / l) * np.sin(2.0 * np.pi * frac)
        if order == 2:
            return r * (2.0 * np.pi ** 2 / l ** 2) * np.cos(2.0 * np.pi * frac)
        raise RejectedInputError(f"analytic derivative order must be 1 or 2, got {order}")


class IntervalSignEncoder(_IntervalEncoder):
    """Componentwise signs of the cosine encoding: piecewise-constant +-1."""

    def encode_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        self._check(xs)
        j, _ = self._segments(xs)
        rows = self.signs[np.arange(self.dims)[None, :], j].copy()
        return self._finish(xs, rows)


class CosSinEncoder(Encoder):
    """Baseline without a length scale: phi_i(x) = cos(x N_i + U_i) sin(x N_i).

    Accepts any finite real input; the interval in the spec only anchors grid
    defaults.  Similarity decays only partially with distance, which is what
    the transform's interval encoders are built to fix.
    """

    def __init__(self, spec: EncoderSpec):
        super().__init__(spec)
        self.freqs = _rng(spec.seed, _STREAM_NORMALS).standard_normal(spec.dims)
        self.shifts = _rng(spec.seed, _STREAM_UNIFORMS).uniform(0.0, 2.0 * np.pi, spec.dims)

    def contains(self, x) -> bool:
        return bool(np.isfinite(x))

    def encode_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if not np.isfinite(xs).all():
            raise RejectedInputError("cos-sin input must be finite")
        arg = xs[:, None] * self.freqs[None, :]
        return np.cos(arg + self.shifts[None, :]) * np.sin(arg)


class SymbolEncoder(Encoder):
    """Iid bipolar vector per symbol, keyed by (seed, symbol) alone."""

    def __init__(self, spec: EncoderSpec):
        super().__init__(spec)
        self.table = {s: symbol_vector(spec.seed, s, spec.dims) for s in spec.domain.symbols}

    def contains(self, x) -> bool:
        return x in self.table

    def encode_many(self, xs) -> np.ndarray:
        rows = np.empty((len(xs), self.dims))
        for i, s in enumerate(xs):
            if s not in self.table:
                raise RejectedInputError(f"symbol {s!r} not in the encoder's set")
            rows[i] = self.table[s]
        return rows

    def encode(self, x) -> Hypervector:
        return Hypervector(self.encode_many([x])[0], BIPOLAR)


def symbol_vector(seed: int, symbol: str, dims: int) -> np.ndarray:
    rng = _rng(seed, _STREAM_SYMBOL, *_symbol_words(symbol))
    return rng.choice(np.array([-1.0, 1.0]), size=dims)


class SequenceEncoder(Encoder):
    """Aggregated k-mer windows, each offset rotated one extra step.

    A window (c_0 .. c_{k-1}) contributes the bound vector
    prod_o roll(sym(c_o), o); the sum over all sliding windows is divided by
    the window count so sequences of different length stay comparable.
    """

    def __init__(self, spec: EncoderSpec):
        super().__init__(spec)
        abc = spec.domain.alphabet
        self.k = spec.domain.kmer
        self.index = {c: i for i, c in enumerate(abc)}
        base = np.stack([symbol_vector(spec.seed, c, spec.dims) for c in abc])
        self.offset_tables = [np.roll(base, o, axis=1) for o in range(self.k)]

    def contains(self, x) -> bool:
        return (isinstance(x, str) and len(x) >= self.k
                and all(c in self.index for c in x))

    def _indices(self, seq: str) -> np.ndarray:
        if not isinstance(seq, str):
            raise RejectedInputError(f"sequence must be a string, got {type(seq).__name__}")
        if len(seq) < self.k:
            raise RejectedInputError(
                f"sequence of length {len(seq)} has no {self.k}-mer windows")
        try:
            return np.array([self.index[c] for c in seq], dtype=np.intp)
        except KeyError as err:
            raise RejectedInputError(f"symbol {err.args[0]!r} not in alphabet") from None

    def encode_many(self, xs) -> np.ndarray:
        rows = np.empty((len(xs), self.dims))
        for i, seq in enumerate(xs):
            idx = self._indices(seq)
            w = len(idx) - self.k + 1
            prod = self.offset_tables[0][idx[:w]].copy()
            for o in range(1, self.k):
                prod *= self.offset_tables[o][idx[o:o + w]]
            rows[i] = prod.sum(axis=0) / w
        return rows


class ProductEncoder:
    """Binds one encoding per factor; depth is limited to a single level."""

    def __init__(self, factors: Sequence[Encoder]):
        factors = tuple(factors)
        if len(factors) < 2:
            raise RejectedInputError("product encoder needs at least two factors")
        if any(isinstance(f, ProductEncoder) for f in factors):
            raise RejectedInputError("nested product encoders are not supported")
        dims = {f.dims for f in factors}
        if len(dims) != 1:
            raise RejectedInputError(f"factor dims differ: {sorted(dims)}")
        self.factors = factors
        self.dims = dims.pop()

    @property
    def fingerprint(self) -> str:
        joined = "*".join(f.fingerprint for f in self.factors)
        return hashlib.sha256(joined.encode()).hexdigest()[:16]

    def contains(self, point) -> bool:
        return (len(point) == len(self.factors)
                and all(f.contains(x) for f, x in zip(self.factors, point)))

    def encode_many(self, points) -> np.ndarray:
        rows = None
        for f, xs in zip(self.factors, self._columns(points)):
            part = f.encode_many(xs)
            rows = part if rows is None else rows * part
        return rows

    def _columns(self, points):
        points = list(points)
        for p in points:
            if not isinstance(p, (tuple, list)) or len(p) != len(self.factors):
                raise RejectedInputError(
                    f"product point needs {len(self.factors)} coordinates, got {p!r}")
        return [[p[i] for p in points] for i in range(len(self.factors))]

    def encode(self, point) -> Hypervector:
        return Hypervector(self.encode_many([point])[0])


_CLASSES = {
    REAL_COSINE: IntervalCosineEncoder,
    BIPOLAR_SIGN: IntervalSignEncoder,
    COS_SIN: CosSinEncoder,
}


@lru_cache(maxsize=128)
def make_encoder(spec: EncoderSpec) -> Encoder:
    if isinstance(spec.domain, Interval):
        return _CLASSES[spec.flavor](spec)
    if isinstance(spec.domain, SymbolSet):
        return SymbolEncoder(spec)
    return SequenceEncoder(spec)


def _typed(spec: EncoderSpec, flavor: str) -> Encoder:
    if spec.flavor != flavor:
        raise RejectedInputError(f"expected flavor {flavor!r}, got {spec.flavor!r}")
    return make_encoder(spec)


def encode_interval_real(spec: EncoderSpec, x: float) -> Hypervector:
    return _typed(spec, REAL_COSINE).encode(x)


def encode_interval_bipolar(spec: EncoderSpec, x: float) -> Hypervector:
    return _typed(spec, BIPOLAR_SIGN).encode(x)


def encode_cos_sin(spec: EncoderSpec, x: float) -> Hypervector:
    return _typed(spec, COS_SIN).encode(x)


def encode_symbol(spec: EncoderSpec, symbol: str) -> Hypervector:
    return _typed(spec, IID_SYMBOL).encode(symbol)


def encode_sequence(spec: EncoderSpec, seq: str) -> Hypervector:
    enc = make_encoder(spec)
    if not isinstance(enc, SequenceEncoder):
        raise RejectedInputError("spec does not describe a sequence encoder")
    return enc.encode(seq)


def encode_product(encoders: Sequence[Encoder], point) -> Hypervector:
    return ProductEncoder(encoders).encode(tuple(point))


def select_informative_dims(vectors: np.ndarray, d_out: int) -> np.ndarray:
    """Indices of the d_out dimensions with the largest std across vectors.

    Ties keep the lower index first (stable sort on descending std).
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 2:
        raise RejectedInputError("need a 2-D array with at least two vectors")
    d = vectors.shape[1]
    if not (1 <= d_out <= d):
        raise RejectedInputError(f"d_out must be in [1, {d}], got {d_out}")
    stds = vectors.std(axis=0)
    order = np.argsort(-stds, kind="stable")
    return np.sort(order[:d_out])
