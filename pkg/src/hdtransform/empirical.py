"""Estimating transforms from samples instead of quadrature.

A sample {x_i} yields the distribution estimate P = (1/m) sum Delta(x_i),
which is an exact mean and therefore unbiased.  Evaluating the inverse
transform of P is kernel density estimation with the encoder's built-in
kernel; no parametric form is assumed.  A labelled sample {(x_i, y_i)}
yields the function estimate F = (1/m) sum (y_i / p(x_i)) Delta(x_i),
where the division by the estimated density p corrects for uneven
placement of the sample points.

Finite dimensionality leaves zero-mean noise on every inner product, so
small density evaluations can come out negative.  A policy object decides
how to handle that: clip reported densities at zero, and guard the
denominators in the function estimator with a positive floor.

Summation order is canonicalized by sorting the sample, so estimates are
bit-identical under permutation of the input rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInputError
from .normalization import NormalizedEncoder
from .transform import DISTRIBUTION, FUNCTION, TransformVec
from .core import Hypervector, REAL


@dataclass(frozen=True)
class Sample:
    """A list of domain points, optionally paired with real labels."""

    inputs: tuple
    labels: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.labels is not None:
            labels = tuple(float(y) for y in self.labels)
            if len(labels) != len(self.inputs):
                raise RejectedInputError("labels and inputs differ in length")
            if not np.all(np.isfinite(labels)):
                raise RejectedInputError("labels must be finite")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def labelled(self) -> bool:
        return self.labels is not None


def load_sample(path, labelled: bool = False) -> Sample:
    """Read a sample from CSV, one row per point: input fields[, label].

    A single input field parses as a float when possible and stays a raw
    string otherwise (symbols, sequences).  Several input fields become a
    tuple of floats.  With labelled=True the last field is the label.
    """
    inputs, labels = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            fields = [cell.strip() for cell in row]
            if labelled:
                if len(fields) < 2:
                    raise RejectedInputError("labelled rows need >= 2 fields")
                labels.append(float(fields[-1]))
                fields = fields[:-1]
            if len(fields) == 1:
                try:
                    inputs.append(float(fields[0]))
                except ValueError:
                    inputs.append(fields[0])
            else:
                inputs.append(tuple(float(c) for c in fields))
    return Sample(tuple(inputs), tuple(labels) if labelled else None)


@dataclass(frozen=True)
class DensityPolicy:
    """How to treat near-zero density evaluations.

    density_floor=None resolves per encoder to 0.05/sqrt(length scale),
    keeping the guard proportional to the kernel's own height.
    """

    clip_negative: bool = True
    density_floor: float | None = None

    def __post_init__(self):
        if self.density_floor is not None and not self.density_floor > 0:
            raise RejectedInputError("density_floor must be positive")

    def floor_for(self, ne: NormalizedEncoder) -> float:
        if self.density_floor is not None:
            return self.density_floor
        return 0.05 / np.sqrt(ne.length_scale)


def _canonical_order(inputs):
    # ties carry identical encodings, so stable sort order does not matter
    return sorted(range(len(inputs)), key=lambda i: inputs[i])


def _sorted_rows(sample: Sample, ne: NormalizedEncoder):
    order = _canonical_order(sample.inputs)
    rows = ne.delta_many([sample.inputs[i] for i in order])
    return order, rows


def empirical_distribution(sample: Sample, ne: NormalizedEncoder) -> TransformVec:
    """Mean of normalized encodings, the unbiased distribution estimate."""
    if len(sample) == 0:
        raise RejectedInputError("cannot estimate from an empty sample")
    _, rows = _sorted_rows(sample, ne)
    vec = rows.sum(axis=0) / len(sample)
    return TransformVec(Hypervector(vec, REAL), DISTRIBUTION, ne.fingerprint)


def density_eval(p_hat: TransformVec, ne: NormalizedEncoder, x,
                 policy: DensityPolicy = DensityPolicy()) -> float:
    """Evaluate the estimated density at x, clipped per the policy."""
    if p_hat.role != DISTRIBUTION:
        raise RejectedInputError("density_eval needs a distribution transform")
    if p_hat.encoder_id != ne.fingerprint or p_hat.dims != ne.dims:
        raise RejectedInputError("transform was built with a different encoder")
    raw = float(ne.delta_many([x])[0] @ p_hat.vec.values) / ne.dims
    if policy.clip_negative:
        return max(raw, 0.0)
    return raw


def empirical_function(sample: Sample, ne: NormalizedEncoder,
                       policy: DensityPolicy = DensityPolicy()) -> TransformVec:
    """Density-corrected function estimate from a labelled sample.

    The density is estimated from the same points first; each label is
    divided by max(p(x_i), floor) before aggregation, so regions sampled
    twice as densely do not count twice.
    """
    if len(sample) == 0:
        raise RejectedInputError("cannot estimate from an empty sample")
    if not sample.labelled:
        raise RejectedInputError("function estimation needs labels")
    order, rows = _sorted_rows(sample, ne)
    m = len(sample)
    p_vec = rows.sum(axis=0) / m
    # unclipped densities at the sample's own points; the floor guards zeros
    p_at = rows @ p_vec / ne.dims
    denom = np.maximum(p_at, policy.floor_for(ne))
    y = np.array([sample.labels[i] for i in order], dtype=np.float64)
    vec = (y / denom) @ rows / m
    return TransformVec(Hypervector(vec, REAL), FUNCTION, ne.fingerprint)
