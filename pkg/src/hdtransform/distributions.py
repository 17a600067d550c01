"""Distribution arithmetic in the transformed space.

Distances, mixture deconvolution, Metropolis sampling, and joint-space
operations all reduce to vector algebra once distributions are transforms:

* The maximum mean discrepancy between p and q is the Euclidean distance
  between their transform vectors under the dimension-scaled inner product.
* A convex mixture p = sum c_i p_i turns into the linear system
  <P, P_j> = sum_i c_i <P_i, P_j>, solved through the gram matrix.
* The Metropolis acceptance ratio needs only two inner products, so chains
  run directly against a transform with no normalization constant.
* On a product space with independently seeded factor encoders, binding
  implements conditioning (bind with Delta(y)), marginalization (bind with
  the transform of the constant 1), and through their combination Bayes'
  rule.  Binding the factor transforms of independent variables builds the
  joint directly.

Evaluations carry zero-mean noise of order 1/sqrt(D), so tolerances on the
identities here are statistical, not exact; the algebraic identities
(evaluation exchange, point-mass binding) hold to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Hypervector, REAL
from .encoders import Interval, SequenceDomain, SymbolSet
from .errors import (
    ConditioningError,
    InitializationError,
    NullEventError,
    RejectedInputError,
    UnsupportedError,
)
from .normalization import NormalizedEncoder, QuadratureGrid
from .transform import (
    DISTRIBUTION,
    FUNCTION,
    TransformVec,
    forward_function,
    inverse_eval,
)


# -- product spaces ----------------------------------------------------------

class ProductSpace:
    """Two independently seeded encoders bound into one over X x Y.

    The normalized product encoding is the elementwise product of the factor
    encodings; no further normalization solve is needed.  The quadrature grid
    is the tensor grid of the factors with product weights.
    """

    def __init__(self, x_factor: NormalizedEncoder, y_factor: NormalizedEncoder):
        if x_factor.dims != y_factor.dims:
            raise RejectedInputError("factor encoders must share dimensionality")
        if x_factor.encoder.spec.seed == y_factor.encoder.spec.seed:
            raise RejectedInputError("factor encoders must use distinct seeds; "
                                     "a shared seed breaks independence")
        self.x_factor = x_factor
        self.y_factor = y_factor
        self.dims = x_factor.dims
        self._grid = None

    @property
    def fingerprint(self) -> str:
        return f"({self.x_factor.fingerprint})*({self.y_factor.fingerprint})"

    @property
    def encoder(self):
        raise UnsupportedError("a product encoder has no single base encoder")

    @property
    def grid(self) -> QuadratureGrid:
        if self._grid is None:
            gx, gy = self.x_factor.grid, self.y_factor.grid
            pts = tuple((px, py) for px in gx.points for py in gy.points)
            w = np.multiply.outer(gx.weights, gy.weights).ravel()
            self._grid = QuadratureGrid(pts, w, kind="finite")
        return self._grid

    def contains(self, pair) -> bool:
        x, y = pair
        return self.x_factor.contains(x) and self.y_factor.contains(y)

    def delta_many(self, pairs) -> np.ndarray:
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        return self.x_factor.delta_many(xs) * self.y_factor.delta_many(ys)

    def delta(self, pair) -> Hypervector:
        return Hypervector(self.delta_many([pair])[0], REAL)

    def grid_deltas(self) -> np.ndarray:
        # not cached: the tensor grid is large and usually needed once
        rx = self.x_factor.grid_deltas()
        ry = self.y_factor.grid_deltas()
        return (rx[:, None, :] * ry[None, :, :]).reshape(-1, self.dims)


# -- maximum mean discrepancy ------------------------------------------------

def _check_distribution(t: TransformVec) -> None:
    if t.role != DISTRIBUTION:
        raise RejectedInputError("operation needs distribution transforms")


def mmd(p: TransformVec, q: TransformVec) -> float:
    """Euclidean distance between the transforms, D-scaled."""
    _check_distribution(p)
    _check_distribution(q)
    if p.encoder_id != q.encoder_id or p.dims != q.dims:
        raise RejectedInputError("transforms were built with different encoders")
    d = p.vec.values - q.vec.values
    return float(np.sqrt(d @ d / p.dims))


# -- deconvolution -----------------------------------------------------------

@dataclass(frozen=True)
class MixtureSolution:
    """Coefficients of a convex mixture recovered from the gram system."""

    coefficients: tuple
    gram: np.ndarray
    projected: bool
    raw: tuple

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise RejectedInputError("gram matrix must be square")
        if not np.allclose(g, g.T, rtol=1e-10, atol=1e-12):
            raise RejectedInputError("gram matrix must be symmetric")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)
        c = tuple(float(v) for v in self.coefficients)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "raw", tuple(float(v) for v in self.raw))
        if self.projected:
            if min(c) < -1e-12 or abs(sum(c) - 1.0) > 1e-9:
                raise RejectedInputError("projected coefficients must lie on "
                                         "the probability simplex")


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u + (1.0 - css) / idx > 0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - theta, 0.0)


def deconvolve(p: TransformVec, components, project: bool = False,
               cond_cap: float = 1e8) -> MixtureSolution:
    """Solve <P, P_j> = sum_i c_i <P_i, P_j> for the mixture coefficients."""
    components = list(components)
    if not components:
        raise RejectedInputError("deconvolution needs at least one component")
    _check_distribution(p)
    for comp in components:
        _check_distribution(comp)
        if comp.encoder_id != p.encoder_id or comp.dims != p.dims:
            raise RejectedInputError("all transforms must share one encoder")
    mat = np.stack([comp.vec.values for comp in components])
    gram = mat @ mat.T / p.dims
    gram = (gram + gram.T) / 2.0
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > cond_cap:
        raise ConditioningError("mixture components are too close to linearly "
                                "dependent", cond)
    b = mat @ p.vec.values / p.dims
    raw = np.linalg.solve(gram, b)
    coeff = _project_simplex(raw) if project else raw
    return MixtureSolution(tuple(coeff), gram, project, tuple(raw))


# -- Metropolis sampling -----------------------------------------------------

@dataclass(frozen=True)
class MHConfig:
    """Chain settings; the proposal is chosen by the encoder's domain.

    Interval domains take Gaussian steps (sigma defaults to the length
    scale); symbol and sequence domains substitute one position uniformly.
    """

    chain_length: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    step: float | None = None
    proposal: str = "auto"
    initial: object = None
    init_tries: int = 200

    def __post_init__(self):
        if not 0 <= self.burn_in < self.chain_length:
            raise RejectedInputError("need chain_length > burn_in >= 0")
        if self.thinning < 1:
            raise RejectedInputError("thinning must be >= 1")
        if self.proposal not in ("auto", "gaussian", "substitution"):
            raise RejectedInputError(f"unknown proposal {self.proposal!r}")
        if self.step is not None and not self.step > 0:
            raise RejectedInputError("step must be positive")
        if self.init_tries < 1:
            raise RejectedInputError("init_tries must be >= 1")


def _proposer(domain, cfg: MHConfig, rng, length_scale: float):
    kind = cfg.proposal
    if kind == "auto":
        kind = "gaussian" if isinstance(domain, Interval) else "substitution"
    if kind == "gaussian":
        if not isinstance(domain, Interval):
            raise RejectedInputError("gaussian proposals need an interval domain")
        sigma = length_scale if cfg.step is None else cfg.step

        def prop(x):
            return float(x) + sigma * rng.standard_normal()
    else:
        if isinstance(domain, SymbolSet):
            symbols = domain.symbols

            def prop(x):
                others = [s for s in symbols if s != x]
                return others[rng.integers(len(others))]
        elif isinstance(domain, SequenceDomain):
            alphabet = domain.alphabet

            def prop(x):
                pos = int(rng.integers(len(x)))
                others = [s for s in alphabet if s != x[pos]]
                sub = others[rng.integers(len(others))]
                return x[:pos] + sub + x[pos + 1:]
        else:
            raise RejectedInputError("substitution proposals need a symbol or "
                                     "sequence domain")
    return prop


def mh_sample(p: TransformVec, ne: NormalizedEncoder, cfg: MHConfig) -> list:
    """Metropolis chain targeting the density represented by p.

    Proposals landing outside the domain or on non-positive density are
    rejected outright; the chain owns a private generator seeded from cfg.
    """
    _check_distribution(p)
    if p.encoder_id != ne.fingerprint or p.dims != ne.dims:
        raise RejectedInputError("transform was built with a different encoder")
    rng = np.random.default_rng(cfg.seed)
    domain = ne.encoder.spec.domain
    propose = _proposer(domain, cfg, rng, ne.length_scale)

    def dens(x) -> float:
        return float(ne.delta_many([x])[0] @ p.vec.values) / ne.dims

    cur = cfg.initial
    if cur is not None:
        cur_d = dens(cur)
        tries = 0
        while cur_d <= 0 and tries < cfg.init_tries:
            cand = propose(cur)
            if ne.contains(cand):
                cur, cur_d = cand, dens(cand)
            tries += 1
    elif isinstance(domain, Interval):
        cur_d, tries = -1.0, 0
        while cur_d <= 0 and tries < cfg.init_tries:
            cur = float(rng.uniform(domain.lo, domain.hi))
            cur_d = dens(cur)
            tries += 1
    elif isinstance(domain, SymbolSet):
        cur_d, tries = -1.0, 0
        while cur_d <= 0 and tries < cfg.init_tries:
            cur = domain.symbols[rng.integers(len(domain.symbols))]
            cur_d = dens(cur)
            tries += 1
    else:
        raise RejectedInputError("sequence chains need an explicit initial "
                                 "state in the config")
    if cur_d <= 0:
        raise InitializationError("no positive-density starting state found "
                                  f"in {cfg.init_tries} tries")

    states = []
    for t in range(cfg.chain_length):
        cand = propose(cur)
        if ne.contains(cand):
            cand_d = dens(cand)
            if cand_d > 0:
                r = cand_d / cur_d
                if r >= 1.0 or rng.random() < r:
                    cur, cur_d = cand, cand_d
        if t >= cfg.burn_in and (t - cfg.burn_in) % cfg.thinning == 0:
            states.append(cur)
    return states


# -- joint distributions -----------------------------------------------------

def _check_joint(p_xy: TransformVec, pe: ProductSpace) -> None:
    _check_distribution(p_xy)
    if p_xy.encoder_id != pe.fingerprint or p_xy.dims != pe.dims:
        raise RejectedInputError("transform was built with a different "
                                 "product encoder")


def ones_transform(ne: NormalizedEncoder) -> TransformVec:
    """Transform of the constant function 1, the marginalization mask."""
    return forward_function(lambda _: 1.0, ne)


def condition(p_xy: TransformVec, pe: ProductSpace, y) -> TransformVec:
    """Bind with Delta(y): the unnormalized conditional over X at y."""
    _check_joint(p_xy, pe)
    psi = pe.y_factor.delta_many([y])[0]
    return TransformVec(Hypervector(p_xy.vec.values * psi, REAL),
                        FUNCTION, pe.x_factor.fingerprint)


def joint_eval(p_xy: TransformVec, pe: ProductSpace, x, y) -> float:
    """Evaluate a joint transform at (x, y), factored through conditioning.

    Binding the y row into the transform first and then evaluating at x is
    the canonical route: it makes the conditioning identity
    <P (x) Delta(y), Delta(x)> = <P, Delta(x) (x) Delta(y)> hold bit for
    bit, where the generic row route agrees only to rounding.
    """
    return inverse_eval(condition(p_xy, pe, y), pe.x_factor, x)


def marginalize(p_xy: TransformVec, pe: ProductSpace,
                ones_x: TransformVec) -> TransformVec:
    """Bind with the constant-1 transform over X: the marginal over Y."""
    _check_joint(p_xy, pe)
    if (ones_x.encoder_id != pe.x_factor.fingerprint
            or ones_x.dims != pe.dims or ones_x.role != FUNCTION):
        raise RejectedInputError("ones_x must be a function transform under "
                                 "the X factor")
    return TransformVec(Hypervector(p_xy.vec.values * ones_x.vec.values, REAL),
                        DISTRIBUTION, pe.y_factor.fingerprint)


def bayes_posterior(p_xy: TransformVec, pe: ProductSpace, y,
                    ones_x: TransformVec,
                    denom_floor: float = 1e-6) -> TransformVec:
    """Condition on y and divide by the marginal mass at y."""
    marg = marginalize(p_xy, pe, ones_x)
    denom = inverse_eval(marg, pe.y_factor, y)
    if denom <= denom_floor:
        raise NullEventError(f"marginal mass {denom:.3e} at the conditioning "
                             f"value is below the floor {denom_floor:.3e}")
    cond = condition(p_xy, pe, y)
    return TransformVec(Hypervector(cond.vec.values / denom, REAL),
                        DISTRIBUTION, pe.x_factor.fingerprint)


def product_independent(p_x: TransformVec, p_y: TransformVec,
                        pe: ProductSpace) -> TransformVec:
    """Bind factor transforms into the joint of independent variables."""
    _check_distribution(p_x)
    _check_distribution(p_y)
    if p_x.encoder_id != pe.x_factor.fingerprint or p_x.dims != pe.dims:
        raise RejectedInputError("p_x must live under the X factor")
    if p_y.encoder_id != pe.y_factor.fingerprint or p_y.dims != pe.dims:
        raise RejectedInputError("p_y must live under the Y factor")
    return TransformVec(Hypervector(p_x.vec.values * p_y.vec.values, REAL),
                        DISTRIBUTION, pe.fingerprint)
