"""Regression heads over normalized encodings.

Four fitting routes share one prediction form y(x) = <M, Delta(x)>: the
empirical function estimate, the generative joint-distribution estimate with
conditional readout, the iterative least-mean-squares baseline, and the ridge
closed form with a Woodbury dual, a leave-one-out shortcut, and optional
differential-equation collocation rows.

Scaling lemma.  With the D-scaled inner product, the regularized loss

    L(M) = sum_i (y_i - <M, Delta(x_i)>)^2 + (lambda/D) <M, M>

has gradient (2/D)(-X^T (Y - X M / D) + (lambda/D) M), so stationarity gives
(X^T X + lambda I) M = D X^T Y.  The textbook ridge solution therefore picks
up one factor of D, M = D (X^T X + lambda I)^{-1} X^T Y, and its dual form
M = D X^T (X X^T + lambda I)^{-1} Y agrees exactly.  All solvers here return
that M; no other scaling appears anywhere downstream.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import REAL, Hypervector
from .distributions import ProductSpace
from .empirical import DensityPolicy, Sample, _canonical_order, empirical_function
from .errors import (
    DegenerateConditionalError,
    DivergenceError,
    LeverageError,
    RankDeficiencyError,
    RejectedInputError,
    UnsupportedError,
)
from .normalization import NormalizedEncoder
from .transform import (
    DISTRIBUTION,
    FUNCTION,
    TransformVec,
    delta_derivative_many,
)

DIRECT = "direct-D"
WOODBURY = "woodbury-m"

LAMBDA_LADDER = tuple(float(v) for v in np.logspace(-6.0, 4.0, 21))


@dataclass(frozen=True)
class DesignMatrix:
    """Encoded inputs as rows of an m x D matrix, with their labels.

    The m x m kernel eigendecomposition is computed once on first use and
    shared by the Woodbury solver, the leave-one-out shortcut, and the
    lambda ladder.
    """

    rows: np.ndarray
    labels: np.ndarray
    encoder_id: str | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise RejectedInputError("design needs an m x D row matrix, m >= 1")
        if labels.shape != (rows.shape[0],):
            raise RejectedInputError("need exactly one label per design row")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(labels))):
            raise RejectedInputError("design entries must be finite")
        rows = rows.copy()
        labels = labels.copy()
        rows.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_keig", None)

    @classmethod
    def from_sample(cls, sample: Sample, ne: NormalizedEncoder) -> "DesignMatrix":
        """Encode a labelled sample in canonical input order."""
        if not sample.labelled:
            raise RejectedInputError("design matrices need labelled samples")
        order = _canonical_order(sample.inputs)
        rows = ne.delta_many([sample.inputs[i] for i in order])
        labels = np.array([sample.labels[i] for i in order])
        return cls(rows, labels, ne.fingerprint)

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def dims(self) -> int:
        return self.rows.shape[1]

    def kernel_eig(self):
        if self._keig is None:
            w, q = np.linalg.eigh(self.rows @ self.rows.T)
            object.__setattr__(self, "_keig", (w, q))
        return self._keig


@dataclass(frozen=True)
class RidgeModel:
    m_vec: Hypervector
    lam: float
    solve_path: str
    encoder_id: str | None = None

    def __post_init__(self):
        if self.solve_path not in (DIRECT, WOODBURY):
            raise RejectedInputError(f"unknown solve path {self.solve_path!r}")
        if not self.lam >= 0.0:
            raise RejectedInputError("lambda must be nonnegative")


@dataclass(frozen=True)
class IterativeModel:
    """Gradient-descent baseline; same prediction form as RidgeModel."""

    m_vec: Hypervector
    rate: float
    passes: int
    loss_trace: tuple
    encoder_id: str | None = None


def _check_model_encoder(model, ne: NormalizedEncoder) -> None:
    if model.encoder_id is not None and model.encoder_id != ne.fingerprint:
        raise RejectedInputError("model was fit under a different encoder")


def predict(model, ne: NormalizedEncoder, xs) -> np.ndarray:
    """Evaluate <M, Delta(x)> for each x."""
    _check_model_encoder(model, ne)
    return ne.delta_many(xs) @ model.m_vec.values / ne.dims


def predict_one(model, ne: NormalizedEncoder, x) -> float:
    return float(predict(model, ne, [x])[0])


def as_transform(model, ne: NormalizedEncoder) -> TransformVec:
    """The fitted model read as a function transform."""
    _check_model_encoder(model, ne)
    return TransformVec(Hypervector(model.m_vec.values.copy(), REAL),
                        FUNCTION, ne.fingerprint)


def stationarity_residual(design: DesignMatrix, model: RidgeModel) -> float:
    """Relative gradient norm of the regularized loss at the fitted M."""
    m = model.m_vec.values
    d = design.dims
    grad = (-design.rows.T @ (design.labels - design.rows @ m / d)
            + (model.lam / d) * m)
    return float(np.linalg.norm(grad) / np.linalg.norm(design.rows.T @ design.labels))


_RANK_TOL = 1e-12


def fit_ridge(design: DesignMatrix, lam: float, path: str | None = None) -> RidgeModel:
    """Closed-form least squares, dual (m x m) or primal (D x D) route.

    The dual route is chosen automatically for m < D; both routes return
    the same vector up to rounding.
    """
    if not lam >= 0.0:
        raise RejectedInputError("lambda must be nonnegative")
    m, d = design.rows.shape
    if path is None:
        path = WOODBURY if m < d else DIRECT
    if path == WOODBURY:
        w, q = design.kernel_eig()
        if lam == 0.0 and w.min() <= w.max() * _RANK_TOL:
            raise RankDeficiencyError("kernel matrix is singular at lambda=0")
        coef = q @ ((q.T @ design.labels) / (w + lam))
        vec = d * (design.rows.T @ coef)
    elif path == DIRECT:
        gram = design.rows.T @ design.rows
        w, q = np.linalg.eigh(gram)
        if lam == 0.0 and w.min() <= w.max() * _RANK_TOL:
            raise RankDeficiencyError("gram matrix is singular at lambda=0")
        rhs = design.rows.T @ design.labels
        vec = d * (q @ ((q.T @ rhs) / (w + lam)))
    else:
        raise RejectedInputError(f"unknown solve path {path!r}")
    return RidgeModel(Hypervector(vec, REAL), float(lam), path, design.encoder_id)


def loo_predictions(design: DesignMatrix, lam: float) -> np.ndarray:
    """Leave-one-out training predictions without refitting.

    The hat matrix H = X (X^T X + lambda I)^{-1} X^T is evaluated through
    the cached kernel eigendecomposition; dropping its diagonal and
    rescaling each row by 1/(1 - H_ii) yields the predictions a model
    refit without point i would make at x_i.
    """
    if not lam >= 0.0:
        raise RejectedInputError("lambda must be nonnegative")
    w, q = design.kernel_eig()
    hat = (q * (w / (w + lam))) @ q.T if lam > 0.0 else q @ q.T
    lever = np.diag(hat).copy()
    if lever.max() >= 1.0 - 1e-12:
        raise LeverageError(f"leverage {lever.max():.12f} reached one; "
                            "the left-out prediction is undefined")
    off = hat.copy()
    np.fill_diagonal(off, 0.0)
    return (off @ design.labels) / (1.0 - lever)


def loo_rmse(design: DesignMatrix, lam: float) -> float:
    res = loo_predictions(design, lam) - design.labels
    return float(np.sqrt(np.mean(res**2)))


def tune_ridge(design: DesignMatrix, ladder=LAMBDA_LADDER):
    """Pick the ladder lambda with the lowest leave-one-out RMSE."""
    ladder = tuple(float(v) for v in ladder)
    if not ladder or min(ladder) <= 0.0:
        raise RejectedInputError("lambda ladder must be positive")
    scores = tuple(loo_rmse(design, lam) for lam in ladder)
    return ladder[int(np.argmin(scores))], scores


def fit_iterative(sample: Sample, ne: NormalizedEncoder, rate: float,
                  passes: int, seed: int = 0) -> IterativeModel:
    """Per-point gradient updates, one shuffled permutation per pass.

    Pass p visits the order default_rng(seed).permutation(m) drawn fresh
    each pass.  The squared loss is recorded after every pass; five
    consecutive increases abort with the trace attached.
    """
    if not rate > 0.0:
        raise RejectedInputError("learning rate must be positive")
    if passes < 1:
        raise RejectedInputError("need at least one pass")
    if not sample.labelled:
        raise RejectedInputError("iterative fitting needs labels")
    rows = ne.delta_many(sample.inputs)
    labels = np.asarray(sample.labels, dtype=np.float64)
    m, d = rows.shape
    vec = np.zeros(d)
    rng = np.random.default_rng(seed)
    losses = []
    streak = 0
    for _ in range(passes):
        for i in rng.permutation(m):
            err = labels[i] - rows[i] @ vec / d
            vec += rate * err * rows[i]
        loss = float(np.sum((labels - rows @ vec / d) ** 2))
        streak = streak + 1 if losses and loss > losses[-1] else 0
        losses.append(loss)
        if streak >= 5:
            raise DivergenceError(
                f"loss increased over {streak} consecutive passes", losses)
    return IterativeModel(Hypervector(vec, REAL), float(rate), passes,
                          tuple(losses), ne.fingerprint)


# -- physics collocation -----------------------------------------------------

@dataclass(frozen=True)
class PhysicsSpec:
    """Linear differential constraint sum_k a_k(x) y^(k)(x) = rhs(x).

    coefficients holds the callables (a_0, a_1, ..., a_n) with n <= 2;
    points defaults to 100 equidistant collocation points over the
    encoder's interval, and weight scales the constraint rows.
    """

    coefficients: tuple
    rhs: object = staticmethod(lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)))
    points: tuple | None = None
    weight: float = 0.25

    def __post_init__(self):
        if not self.coefficients:
            raise RejectedInputError("need at least the order-0 coefficient")
        if len(self.coefficients) > 3:
            raise UnsupportedError("derivative orders above 2 are not supported")
        if not all(callable(a) for a in self.coefficients):
            raise RejectedInputError("coefficients must be callables")
        if not callable(self.rhs):
            raise RejectedInputError("rhs must be callable")
        if not self.weight > 0.0:
            raise RejectedInputError("physics weight must be positive")
        if self.points is not None:
            pts = tuple(float(p) for p in self.points)
            if not all(np.isfinite(pts)):
                raise RejectedInputError("collocation points must be finite")
            object.__setattr__(self, "points", pts)


def _collocation_points(physics: PhysicsSpec, ne: NormalizedEncoder) -> np.ndarray:
    if physics.points is None:
        dom = ne.encoder.spec.domain
        pts = np.linspace(dom.lo, dom.hi, 100)
    else:
        pts = np.sort(np.asarray(physics.points, dtype=np.float64))
    if len(pts) > 1 and np.diff(pts).max() > ne.length_scale:
        raise RejectedInputError("collocation spacing exceeds the length "
                                 "scale; the constraint would leave gaps")
    return pts


def fit_physics(design: DesignMatrix, ne: NormalizedEncoder,
                physics: PhysicsSpec, lam: float,
                path: str | None = None) -> RidgeModel:
    """Ridge solve over data rows stacked with weighted constraint rows.

    Each collocation point contributes sum_k a_k(x) d^k Delta(x)/dx^k as
    one extra row, scaled by sqrt(weight) alongside its rhs value; the
    joint system is then solved exactly like fit_ridge.
    """
    if design.encoder_id is not None and design.encoder_id != ne.fingerprint:
        raise RejectedInputError("design was built under a different encoder")
    if physics.points is not None and len(physics.points) == 0:
        return fit_ridge(design, lam, path)
    pts = _collocation_points(physics, ne)
    stack = np.zeros((len(pts), design.dims))
    for order, a_k in enumerate(physics.coefficients):
        coef = np.asarray(a_k(pts), dtype=np.float64) * np.ones(len(pts))
        if not np.any(coef):
            continue
        rows = ne.delta_many(pts) if order == 0 else \
            delta_derivative_many(ne, pts, order)
        stack += coef[:, None] * rows
    root = np.sqrt(physics.weight)
    rhs = root * (np.asarray(physics.rhs(pts), dtype=np.float64) * np.ones(len(pts)))
    stacked = DesignMatrix(np.vstack([design.rows, root * stack]),
                           np.concatenate([design.labels, rhs]),
                           design.encoder_id)
    fitted = fit_ridge(stacked, lam, path)
    return RidgeModel(fitted.m_vec, fitted.lam, fitted.solve_path,
                      design.encoder_id)


# -- empirical and generative fits -------------------------------------------

def fit_empirical_regressor(sample: Sample, ne: NormalizedEncoder,
                            policy: DensityPolicy = DensityPolicy()) -> TransformVec:
    """Density-corrected empirical function estimate (discriminative)."""
    return empirical_function(sample, ne, policy)


def fit_generative_regressor(sample: Sample, pe: ProductSpace) -> TransformVec:
    """Mean of bound input-label encodings: the joint-distribution estimate."""
    if len(sample) == 0:
        raise RejectedInputError("cannot estimate from an empty sample")
    if not sample.labelled:
        raise RejectedInputError("generative fitting needs labels")
    pairs = tuple(zip(sample.inputs, sample.labels))
    order = _canonical_order(pairs)
    rows = pe.delta_many([pairs[i] for i in order])
    return TransformVec(Hypervector(rows.sum(axis=0) / len(pairs), REAL),
                        DISTRIBUTION, pe.fingerprint)


@dataclass(frozen=True)
class ConditionalPrediction:
    """Predicted label distribution at one input.

    densities are the clipped conditional evaluations on y_grid; mle is the
    grid argmax, eve the grid expectation, and ci the equal-tail interval
    holding at least `level` of the grid mass.
    """

    y_grid: tuple
    densities: tuple
    mle: float
    eve: float
    ci: tuple
    level: float

    def __post_init__(self):
        if len(self.y_grid) != len(self.densities):
            raise RejectedInputError("one density per grid point required")
        dens = np.asarray(self.densities, dtype=np.float64)
        if dens.min() < 0.0 or not np.all(np.isfinite(dens)):
            raise RejectedInputError("densities must be finite and clipped at 0")
        if not 0.0 < self.level < 1.0:
            raise RejectedInputError("level must be in (0, 1)")
        lo, hi = self.ci
        if not lo <= hi:
            raise RejectedInputError("interval bounds are out of order")
        grid = np.asarray(self.y_grid)
        inside = (grid >= lo) & (grid <= hi)
        if dens[inside].sum() < self.level * dens.sum() - 1e-9:
            raise RejectedInputError("interval mass falls short of the level")

    @property
    def masses(self) -> np.ndarray:
        dens = np.asarray(self.densities)
        return dens / dens.sum()

    @property
    def ci_width(self) -> float:
        return float(self.ci[1] - self.ci[0])


def default_y_grid(labels, length_scale: float, n_points: int = 201) -> tuple:
    """Equidistant label grid spanning the observed range plus 3 l."""
    labels = np.asarray(labels, dtype=np.float64)
    pad = 3.0 * length_scale
    return tuple(np.linspace(labels.min() - pad, labels.max() + pad, n_points))


def predict_conditional(p_xy: TransformVec, pe: ProductSpace, x, y_grid,
                        level: float = 0.95) -> ConditionalPrediction:
    """Readout of the label distribution at x from a joint estimate.

    Binding Delta(x) into the joint gives the unnormalized conditional;
    grid evaluations are clipped at zero and renormalized on the grid.
    The interval cuts equal tail masses around the grid distribution.
    """
    if p_xy.role != DISTRIBUTION:
        raise RejectedInputError("conditional readout needs a distribution")
    if p_xy.encoder_id != pe.fingerprint or p_xy.dims != pe.dims:
        raise RejectedInputError("transform was built with a different encoder")
    if not 0.0 < level < 1.0:
        raise RejectedInputError("level must be in (0, 1)")
    y_grid = tuple(float(y) for y in y_grid)
    if len(y_grid) < 2 or not all(np.isfinite(y_grid)):
        raise RejectedInputError("need a finite label grid")
    phi = pe.x_factor.delta_many([x])[0]
    bound = p_xy.vec.values * phi
    dens = pe.y_factor.delta_many(y_grid) @ bound / pe.dims
    dens = np.maximum(dens, 0.0)
    total = dens.sum()
    if total <= 0.0:
        raise DegenerateConditionalError("no positive conditional mass "
                                         "anywhere on the label grid")
    masses = dens / total
    grid = np.asarray(y_grid)
    mle = float(grid[int(np.argmax(dens))])
    eve = float(masses @ grid)
    cdf = np.cumsum(masses)
    tail = (1.0 - level) / 2.0
    lo = float(grid[int(np.searchsorted(cdf, tail))])
    hi = float(grid[min(int(np.searchsorted(cdf, 1.0 - tail)), len(grid) - 1)])
    return ConditionalPrediction(y_grid, tuple(float(v) for v in dens),
                                 mle, eve, (lo, hi), float(level))
