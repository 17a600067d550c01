"""Forward and inverse transforms of functions and distributions.

A function f on the encoder domain maps to the single hypervector

    F = sum_j w_j f(x_j) Delta(x_j)

over a quadrature grid, and a distribution with point masses p_j maps to
P = sum_j p_j Delta(x_j).  Evaluating the inner product <F, Delta(x)> inverts
the transform up to kernel smoothing: the result is f convolved with the
normalized kernel peak, so features narrower than the length scale are
averaged out and the error for smooth f shrinks as l^2.

Derivatives evaluate against the derivative of Delta with the normalization
treated as locally constant (exact in the interior, where it is flat), either
analytically for the real cosine encoder or by central differences.  The
bipolar approximation keeps only componentwise signs and recovers the lost
global scale by a least-squares fit between evaluation series.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .core import Hypervector, REAL, sign_of
from .encoders import Interval, REAL_COSINE
from .errors import CalibrationError, RejectedInputError, UnsupportedError
from .normalization import NormalizedEncoder, QuadratureGrid

__all__ = [
    "FUNCTION",
    "DISTRIBUTION",
    "TransformVec",
    "forward_function",
    "forward_distribution",
    "dirac_transform",
    "inverse_eval",
    "inverse_eval_many",
    "bipolar_transform",
    "derivative_eval",
    "delta_derivative_many",
    "integral_inner",
]

FUNCTION = "function"
DISTRIBUTION = "distribution"
_ROLES = (FUNCTION, DISTRIBUTION)


@dataclass(frozen=True, eq=False)
class TransformVec:
    """A hypervector tagged with its role and the encoder it was built with."""

    vec: Hypervector
    role: str
    encoder_id: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise RejectedInputError(f"unknown transform role {self.role!r}")
        if not self.encoder_id:
            raise RejectedInputError("transform needs a backing encoder id")

    @property
    def dims(self) -> int:
        return self.vec.dims

    def dump(self) -> str:
        buf = io.StringIO()
        buf.write("# transform v1\n")
        buf.write(f"# role={self.role} dims={self.dims} encoder={self.encoder_id}\n")
        for v in self.vec.values:
            buf.write(f"{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def load(cls, text: str) -> "TransformVec":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 3 or not lines[0].startswith("# transform v1"):
            raise RejectedInputError("not a transform table")
        meta = dict(kv.split("=", 1) for kv in lines[1][1:].split())
        values = np.array([float(ln) for ln in lines[2:]])
        if len(values) != int(meta["dims"]):
            raise RejectedInputError("transform value count does not match dims")
        return cls(Hypervector(values, REAL), meta["role"], meta["encoder"])


def _rows_for(ne: NormalizedEncoder, grid: QuadratureGrid | None):
    if grid is None or grid is ne.grid:
        return ne.grid, ne.grid_deltas()
    return grid, ne.delta_many(list(grid.points))


def _check_encoder(t: TransformVec, ne: NormalizedEncoder) -> None:
    if t.encoder_id != ne.fingerprint or t.dims != ne.dims:
        raise RejectedInputError("transform was built with a different encoder")


def forward_function(f, ne: NormalizedEncoder,
                     grid: QuadratureGrid | None = None) -> TransformVec:
    """Transform an evaluable function by quadrature over the grid."""
    grid, rows = _rows_for(ne, grid)
    vals = np.array([float(f(x)) for x in grid.points])
    if not np.all(np.isfinite(vals)):
        raise RejectedInputError("function values must be finite on the grid")
    vec = (grid.weights * vals) @ rows
    return TransformVec(Hypervector(vec, REAL), FUNCTION, ne.fingerprint)


def forward_distribution(weights, ne: NormalizedEncoder,
                         grid: QuadratureGrid | None = None) -> TransformVec:
    """Transform a distribution given by point masses on the grid."""
    grid, rows = _rows_for(ne, grid)
    p = np.asarray(weights, dtype=np.float64)
    if p.shape != (len(grid),):
        raise RejectedInputError("need one probability weight per grid point")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise RejectedInputError("probability weights must be finite and >= 0")
    if abs(p.sum() - 1.0) > 1e-9:
        raise RejectedInputError("probability weights must sum to 1")
    return TransformVec(Hypervector(p @ rows, REAL), DISTRIBUTION, ne.fingerprint)


def dirac_transform(ne: NormalizedEncoder, x) -> TransformVec:
    """Transform of a point mass: Delta(x) itself."""
    return TransformVec(ne.delta(x), DISTRIBUTION, ne.fingerprint)


def inverse_eval_many(t: TransformVec, ne: NormalizedEncoder, xs) -> np.ndarray:
    _check_encoder(t, ne)
    return ne.delta_many(xs) @ t.vec.values / ne.dims


def inverse_eval(t: TransformVec, ne: NormalizedEncoder, x) -> float:
    """Kernel-smoothed reconstruction <T, Delta(x)>."""
    return float(inverse_eval_many(t, ne, [x])[0])


def bipolar_transform(t: TransformVec, ne: NormalizedEncoder,
                      grid: QuadratureGrid | None = None):
    """Componentwise signs of t plus a least-squares global scale.

    The scale c minimizes sum_j (<T, Delta(x_j)> - c <[T], Delta(x_j)>)^2
    over the calibration grid, so c * <[T], Delta(x)> tracks the full
    evaluation series with one scalar.
    """
    _check_encoder(t, ne)
    if not np.any(t.vec.values):
        raise RejectedInputError("cannot take the bipolar approximation of zero")
    grid, rows = _rows_for(ne, grid)
    bip = sign_of(t.vec)
    a = rows @ t.vec.values / ne.dims
    b = rows @ bip.values / ne.dims
    denom = float(b @ b)
    if denom == 0.0:
        raise CalibrationError("bipolar evaluations vanish on the calibration grid")
    return bip, float(a @ b) / denom


def delta_derivative_many(ne: NormalizedEncoder, xs, order: int = 1,
                          method: str = "auto",
                          fd_step: float | None = None) -> np.ndarray:
    """Rows d^order Delta(x)/dx^order with n held locally constant.

    Analytic for the real cosine encoder; central finite differences of the
    raw encoding otherwise (step defaults to l/50).
    """
    if order not in (1, 2):
        raise UnsupportedError("derivative order must be 1 or 2")
    enc = ne.encoder
    if not isinstance(enc.spec.domain, Interval):
        raise UnsupportedError("derivatives need an interval domain")
    if method not in ("auto", "analytic", "fd"):
        raise RejectedInputError(f"unknown derivative method {method!r}")
    if method == "auto":
        method = "analytic" if enc.spec.flavor == REAL_COSINE else "fd"
    xs = np.asarray(xs, dtype=np.float64)
    n = ne.nfn.values_at(xs)
    if method == "analytic":
        if enc.spec.flavor != REAL_COSINE:
            raise UnsupportedError("analytic derivatives exist only for the "
                                   "real cosine encoder")
        return enc.encode_deriv_many(xs, order) / n[:, None]
    h = enc.length_scale / 50.0 if fd_step is None else float(fd_step)
    if h <= 0:
        raise RejectedInputError("finite-difference step must be positive")
    dom = enc.spec.domain
    if np.any(xs - h < dom.lo) or np.any(xs + h > dom.hi):
        raise RejectedInputError("input too close to the boundary for the "
                                 "finite-difference step")
    hi_rows = enc.encode_many(xs + h)
    lo_rows = enc.encode_many(xs - h)
    if order == 1:
        diff = (hi_rows - lo_rows) / (2.0 * h)
    else:
        diff = (hi_rows - 2.0 * enc.encode_many(xs) + lo_rows) / h**2
    return diff / n[:, None]


def derivative_eval(t: TransformVec, ne: NormalizedEncoder, x, order: int = 1,
                    method: str = "auto", fd_step: float | None = None) -> float:
    """Evaluate the order-th derivative of the reconstruction at x."""
    _check_encoder(t, ne)
    row = delta_derivative_many(ne, [x], order, method, fd_step)[0]
    return float(row @ t.vec.values) / ne.dims


def integral_inner(f: TransformVec, g: TransformVec) -> float:
    """<F, G>: integral of the two reconstructions against the measure.

    With a distribution on one side this is the expectation of the other
    side's reconstruction.
    """
    if f.encoder_id != g.encoder_id or f.dims != g.dims:
        raise RejectedInputError("transforms were built with different encoders")
    return float(np.dot(f.vec.values, g.vec.values)) / f.dims
