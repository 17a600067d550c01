"""Hypervector value type and the elementwise algebra on it.

A hypervector is a fixed-length real vector of dimension D, compared through
the D-scaled inner product <a, b> = (1/D) sum_i a_i b_i.  Binding is the
elementwise product, aggregation the elementwise sum (optionally thresholded
back to signs), and permutation a circular shift.  All operations return new
vectors; stored arrays are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import RejectedInputError

__all__ = [
    "Hypervector",
    "REAL",
    "BIPOLAR",
    "bind",
    "aggregate",
    "permute",
    "inner",
    "sign_of",
]

REAL = "real"
BIPOLAR = "bipolar"

# Dedicated stream for breaking sign ties at zero.  Coins are regenerated per
# call from this fixed seed, keyed by component index, so results never depend
# on call order and every run is bit-reproducible.
_TIE_SEED = 0x5EEDC01


def _tie_coins(n: int) -> np.ndarray:
    rng = np.random.default_rng(_TIE_SEED)
    return rng.choice(np.array([-1.0, 1.0]), size=n)


def _sign_with_ties(values: np.ndarray) -> np.ndarray:
    out = np.sign(values)
    zeros = out == 0.0
    if zeros.any():
        out[zeros] = _tie_coins(values.shape[-1])[zeros]
    return out


@dataclass(frozen=True)
class Hypervector:
    """Immutable hypervector: a float64 array plus a flavor tag.

    flavor is "real" or "bipolar"; bipolar vectors must hold exactly +-1.
    """

    values: np.ndarray
    flavor: str = REAL

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise RejectedInputError("hypervector values must be a nonempty 1-D array")
        if not np.isfinite(arr).all():
            raise RejectedInputError("hypervector values must be finite")
        if self.flavor not in (REAL, BIPOLAR):
            raise RejectedInputError(f"unknown flavor {self.flavor!r}")
        if self.flavor == BIPOLAR and not np.all(np.abs(arr) == 1.0):
            raise RejectedInputError("bipolar hypervector values must be exactly +-1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dims(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.dims


def _check_dims(a: Hypervector, b: Hypervector, op: str) -> None:
    if a.dims != b.dims:
        raise RejectedInputError(f"{op}: dimension mismatch {a.dims} != {b.dims}")


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    """Elementwise product; bipolar exactly when both inputs are bipolar."""
    _check_dims(a, b, "bind")
    flavor = BIPOLAR if (a.flavor == BIPOLAR and b.flavor == BIPOLAR) else REAL
    return Hypervector(a.values * b.values, flavor)


def aggregate(vectors: Sequence[Hypervector] | Iterable[Hypervector],
              thresholded: bool = False) -> Hypervector:
    """Elementwise sum of vectors, in the given order.

    With thresholded=True the sum is collapsed back to signs, zero entries
    resolved by the fixed tie stream, and the result is bipolar.
    """
    vs = list(vectors)
    if not vs:
        raise RejectedInputError("aggregate: empty input")
    dims = vs[0].dims
    for v in vs[1:]:
        if v.dims != dims:
            raise RejectedInputError(f"aggregate: dimension mismatch {v.dims} != {dims}")
    total = np.add.reduce(np.stack([v.values for v in vs], axis=0), axis=0)
    if thresholded:
        return Hypervector(_sign_with_ties(total), BIPOLAR)
    return Hypervector(total, REAL)


def permute(a: Hypervector, shift: int = 1) -> Hypervector:
    """Circular shift by `shift` positions (last element wraps to the front)."""
    return Hypervector(np.roll(a.values, shift), a.flavor)


def inner(a: Hypervector, b: Hypervector) -> float:
    """D-scaled inner product (1/D) sum_i a_i b_i."""
    _check_dims(a, b, "inner")
    return float(np.dot(a.values, b.values)) / a.dims


def sign_of(a: Hypervector) -> Hypervector:
    """Componentwise sign; zeros get +-1 from the fixed tie stream."""
    return Hypervector(_sign_with_ties(a.values.copy()), BIPOLAR)
