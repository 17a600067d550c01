"""Normalization of encodings against a reference measure.

The normalization function n solves

    sum_j w_j <phi(x_i) + eps, phi(x_j) + eps> / (n(x_i) n(x_j)) = 1

on a quadrature grid, so that the normalized encoding Delta(x) = (phi(x)+eps)/n(x)
integrates to unit mass against its own kernel.  The fixed point is found by a
geometric-mean damped iteration

    n <- sqrt(n * F(n)),   F(n)(x) = sum_j w_j k(x, x_j) / n(x_j),

which shares its fixed points with the plain recurrence n <- F(n) but does not
oscillate in the global scale mode (the scalar analogue of the plain update,
x <- A/x, never settles).  For a bipolar interval encoder the interior solution
is the constant sqrt(l); dividing by it multiplies the encoding by 1/sqrt(l),
the transform's counterpart of a Fourier 1/sqrt(2 pi).

Interval grids are endpoint-inclusive equidistant points with trapezoid
weights (summing to hi - lo); finite sets use the counting measure (weight 1
per element), which leaves mutually orthogonal sets with n identically 1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import REAL, Hypervector
from .encoders import Encoder, Interval, SequenceDomain
from .errors import ConvergenceError, InstabilityError, RejectedInputError

__all__ = [
    "QuadratureGrid",
    "interval_grid",
    "set_grid",
    "default_grid",
    "NormalizationFn",
    "solve_normalization",
    "identity_normalization",
    "normalized_encode",
    "NormalizedEncoder",
    "solve_normalized",
]


@dataclass(frozen=True)
class QuadratureGrid:
    """Ordered grid points with positive quadrature weights."""

    points: tuple
    weights: np.ndarray
    kind: str = "interval"  # or "finite"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(self.points) == 0 or len(self.points) != len(w):
            raise RejectedInputError("grid needs matching nonempty points and weights")
        if not np.all(w > 0):
            raise RejectedInputError("grid weights must be positive")
        if self.kind not in ("interval", "finite"):
            raise RejectedInputError(f"unknown grid kind {self.kind!r}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)


def interval_grid(lo: float, hi: float, n_points: int) -> QuadratureGrid:
    """Endpoint-inclusive equidistant grid with trapezoid weights (sum hi-lo)."""
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise RejectedInputError("interval grid needs finite lo < hi")
    if n_points < 2:
        raise RejectedInputError("interval grid needs at least two points")
    pts = np.linspace(lo, hi, n_points)
    h = (hi - lo) / (n_points - 1)
    w = np.full(n_points, h)
    w[0] = w[-1] = h / 2.0
    return QuadratureGrid(tuple(float(p) for p in pts), w, "interval")


def set_grid(elements: Sequence) -> QuadratureGrid:
    """Counting-measure grid over a finite set (weight 1 per element)."""
    elements = tuple(elements)
    if len(set(elements)) != len(elements):
        raise RejectedInputError("finite grid elements must be unique")
    return QuadratureGrid(elements, np.ones(len(elements)), "finite")


def default_grid(encoder: Encoder) -> QuadratureGrid:
    """Interval: spacing <= l/4; symbol sets: the set itself."""
    dom = encoder.spec.domain
    if isinstance(dom, Interval):
        span = dom.hi - dom.lo
        n = max(2, int(np.ceil(4.0 * span / encoder.length_scale)) + 1)
        return interval_grid(dom.lo, dom.hi, n)
    if hasattr(dom, "symbols"):
        return set_grid(dom.symbols)
    raise RejectedInputError("sequence encoders need an explicit reference set grid")


class NormalizationFn:
    """Solved normalization values on a grid, with solver diagnostics.

    Interval grids interpolate linearly between points; finite grids look
    values up and extend to unseen elements by one application of the
    fixed-point operator (possible only while the backing encoder is attached).
    """

    def __init__(self, grid: QuadratureGrid, values: np.ndarray, offset: float,
                 tol: float, iterations: int, residual_max: float,
                 residual_mean: float, residual_history=(),
                 encoder: Encoder | None = None,
                 grid_encodings: np.ndarray | None = None):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(grid),):
            raise RejectedInputError("normalization values must match the grid")
        if not np.all(values > 0):
            raise InstabilityError("normalization values must be positive; "
                                   "try a larger offset")
        self.grid = grid
        self.values = values
        self.offset = float(offset)
        self.tol = float(tol)
        self.iterations = int(iterations)
        self.residual_max = float(residual_max)
        self.residual_mean = float(residual_mean)
        self.residual_history = tuple(residual_history)
        self._encoder = encoder
        self._grid_encodings = grid_encodings
        if grid.kind == "interval":
            self._xs = np.asarray(grid.points, dtype=np.float64)
        else:
            self._lookup = dict(zip(grid.points, values))

    def values_at(self, xs) -> np.ndarray:
        if self.grid.kind == "interval":
            xs = np.asarray(xs, dtype=np.float64)
            lo, hi = self._xs[0], self._xs[-1]
            tol = 1e-9 * max(1.0, abs(lo), abs(hi))
            if np.any(xs < lo - tol) or np.any(xs > hi + tol):
                raise RejectedInputError("input outside the normalization grid hull")
            return np.interp(xs, self._xs, self.values)
        out = np.empty(len(xs))
        missing = []
        for i, x in enumerate(xs):
            if x in self._lookup:
                out[i] = self._lookup[x]
            else:
                missing.append(i)
        if missing:
            out[missing] = self._extend([xs[i] for i in missing])
        return out

    def value_at(self, x) -> float:
        return float(self.values_at([x])[0])

    def _extend(self, xs) -> np.ndarray:
        # One application of the fixed-point operator at unseen elements.
        if self._encoder is None or self._grid_encodings is None:
            raise RejectedInputError(
                "element not on the normalization grid and no encoder attached")
        enc = self._encoder.encode_many(xs) + self.offset
        k = enc @ self._grid_encodings.T / self._encoder.dims
        vals = k @ (self.grid.weights / self.values)
        if np.any(vals <= 0):
            raise InstabilityError("off-grid normalization value is non-positive; "
                                   "try a larger offset")
        return vals

    # -- serialization ------------------------------------------------------

    def dump(self) -> str:
        """Two-column table (point, value) with solver metadata in the header.

        Interval weights are recovered on load from the point spacing
        (trapezoid rule); finite grids reload with counting weights.
        """
        buf = io.StringIO()
        buf.write("# normalization v1\n")
        buf.write(f"# kind={self.grid.kind} offset={self.offset!r} tol={self.tol!r} "
                  f"iterations={self.iterations} residual_max={self.residual_max!r} "
                  f"residual_mean={self.residual_mean!r}\n")
        buf.write("# columns: point value\n")
        for p, v in zip(self.grid.points, self.values):
            buf.write(f"{p!r}\t{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def load(cls, text: str) -> "NormalizationFn":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 3 or not lines[0].startswith("# normalization v1"):
            raise RejectedInputError("not a normalization table")
        meta = dict(kv.split("=", 1) for kv in lines[1][1:].split())
        points, values = [], []
        for ln in lines[3:] if lines[2].startswith("#") else lines[2:]:
            p, v = ln.split("\t")
            points.append(float(p) if meta["kind"] == "interval" else p.strip("'\""))
            values.append(float(v))
        if meta["kind"] == "interval":
            xs = np.asarray(points)
            w = np.empty(len(xs))
            w[0], w[-1] = (xs[1] - xs[0]) / 2.0, (xs[-1] - xs[-2]) / 2.0
            w[1:-1] = (xs[2:] - xs[:-2]) / 2.0
        else:
            w = np.ones(len(points))
        grid = QuadratureGrid(tuple(points), w, meta["kind"])
        return cls(grid, np.array(values), float(meta["offset"]), float(meta["tol"]),
                   int(meta["iterations"]), float(meta["residual_max"]),
                   float(meta["residual_mean"]))


def _interval_spacing_ok(grid: QuadratureGrid, encoder: Encoder) -> None:
    xs = np.asarray(grid.points, dtype=np.float64)
    if len(xs) < 2:
        raise RejectedInputError("interval grid needs at least two points")
    gap = np.diff(np.sort(xs)).max()
    if gap > encoder.length_scale / 4.0 + 1e-12:
        raise RejectedInputError(
            f"grid spacing {gap:.4g} exceeds l/4 = {encoder.length_scale / 4.0:.4g}")


def solve_normalization(encoder: Encoder, grid: QuadratureGrid | None = None,
                        tol: float = 1e-3, max_iter: int = 50,
                        offset: float | None = None) -> NormalizationFn:
    """Solve for n on the grid by the damped fixed-point iteration.

    The offset defaults to 0.04 for sequence encoders (whose kernels can dip
    slightly negative) and to 0 otherwise.
    """
    if offset is None:
        offset = 0.04 if isinstance(encoder.spec.domain, SequenceDomain) else 0.0
    if grid is None:
        grid = default_grid(encoder)
    if grid.kind == "interval":
        _interval_spacing_ok(grid, encoder)
    enc = encoder.encode_many(list(grid.points)) + offset
    kernel = enc @ enc.T / encoder.dims
    w = grid.weights
    n = np.ones(len(grid))
    history = []
    for it in range(1, max_iter + 1):
        f = kernel @ (w / n)
        if np.any(f <= 0):
            raise InstabilityError("fixed-point operator left the positive cone; "
                                   "try a larger offset")
        n = np.sqrt(n * f)
        resid = np.abs((kernel @ (w / n)) / n - 1.0)
        history.append((float(resid.max()), float(resid.mean())))
        if resid.max() <= tol:
            break
    else:
        raise ConvergenceError(
            f"normalization did not reach tol={tol} in {max_iter} iterations",
            history[-1][0])
    return NormalizationFn(grid, n, offset, tol, it, history[-1][0], history[-1][1],
                           history, encoder=encoder,
                           grid_encodings=enc if grid.kind == "finite" else None)


def identity_normalization(encoder: Encoder,
                           grid: QuadratureGrid | None = None) -> NormalizationFn:
    """Pass-through n = 1 (for workflows where inner-product scale is free)."""
    if grid is None:
        grid = default_grid(encoder)
    ones = np.ones(len(grid))
    return NormalizationFn(grid, ones, 0.0, 0.0, 0, 0.0, 0.0, (), encoder=encoder,
                           grid_encodings=None if grid.kind == "interval"
                           else encoder.encode_many(list(grid.points)))


def normalized_encode(encoder: Encoder, nfn: NormalizationFn, x) -> Hypervector:
    """Delta(x) = (phi(x) + eps) / n(x)."""
    row = encoder.encode_many([x])[0] + nfn.offset
    return Hypervector(row / nfn.value_at(x), REAL)


class NormalizedEncoder:
    """An encoder bundled with its solved normalization."""

    def __init__(self, encoder: Encoder, nfn: NormalizationFn):
        self.encoder = encoder
        self.nfn = nfn
        self.dims = encoder.dims
        self._grid_deltas = None

    @property
    def grid(self) -> QuadratureGrid:
        return self.nfn.grid

    @property
    def length_scale(self) -> float:
        return self.encoder.length_scale

    @property
    def fingerprint(self) -> str:
        return f"{self.encoder.fingerprint}/n{self.nfn.iterations}o{self.nfn.offset!r}"

    def contains(self, x) -> bool:
        return self.encoder.contains(x)

    def delta_many(self, xs) -> np.ndarray:
        rows = self.encoder.encode_many(xs) + self.nfn.offset
        return rows / self.nfn.values_at(xs)[:, None]

    def delta(self, x) -> Hypervector:
        return Hypervector(self.delta_many([x])[0], REAL)

    def grid_deltas(self) -> np.ndarray:
        """Normalized encodings of the grid itself (cached; read-only)."""
        if self._grid_deltas is None:
            d = self.delta_many(list(self.grid.points))
            d.setflags(write=False)
            self._grid_deltas = d
        return self._grid_deltas


def solve_normalized(encoder: Encoder, grid: QuadratureGrid | None = None,
                     tol: float = 1e-3, max_iter: int = 50,
                     offset: float | None = None) -> NormalizedEncoder:
    """Convenience: solve the normalization and bundle it with the encoder."""
    return NormalizedEncoder(encoder, solve_normalization(encoder, grid, tol,
                                                          max_iter, offset))
