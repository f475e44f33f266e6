"""Data-generating processes and sufficient statistics.

The first ``n1 = floor(n * alpha)`` observations form the zero-mean block Y;
the remaining ``n2 = n - n1`` form the block Z with means ``mu0``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnavailableStatisticError, UsageError

# stream tags for the per-replication substreams
TAG_Y, TAG_Z, TAG_MEANS, TAG_HYPER, TAG_SAMPLER = 0, 1, 2, 3, 4


def substream(seed, *keys):
    """Counter-based generator keyed by ``(seed, *keys)``.

    Each key tuple maps to its own Philox stream, so a replication's draws do
    not depend on how replications are spread over workers.
    """
    words = [int(seed)] + [int(k) for k in keys]
    if any(w < 0 for w in words):
        raise DomainError("seed and stream keys must be non-negative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def split_sizes(n, alpha):
    n = int(n)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    if n < 2:
        raise DomainError("n must be at least 2")
    n1 = int(math.floor(n * alpha))
    return n1, n - n1


@dataclass(frozen=True, eq=False)
class ModelParams:
    alpha: float
    n: int
    sigma0_sq: float
    mu0: np.ndarray = field(repr=False)

    def __post_init__(self):
        n1, n2 = split_sizes(self.n, self.alpha)
        mu0 = np.asarray(self.mu0, dtype=float).reshape(-1)
        if mu0.size != n2:
            raise DomainError(f"mu0 has length {mu0.size}, expected n2 = {n2}")
        if not self.sigma0_sq > 0:
            raise DomainError("sigma0_sq must be positive")
        mu0.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def constant_mean(cls, alpha, n, sigma0_sq, mu):
        _, n2 = split_sizes(n, alpha)
        return cls(alpha, n, sigma0_sq, np.full(n2, float(mu)))

    @property
    def n1(self):
        return split_sizes(self.n, self.alpha)[0]

    @property
    def n2(self):
        return split_sizes(self.n, self.alpha)[1]

    @property
    def mu_bar_sq(self):
        return float(np.mean(self.mu0 ** 2)) if self.mu0.size else 0.0


@dataclass(frozen=True, eq=False)
class Dataset:
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).reshape(-1))

    @property
    def n(self):
        return self.y.size + self.z.size


class SuffStats:
    """``(n1, n2, Ybar^2, Zbar^2, Xbar^2)``; reading an empty block's mean raises."""

    __slots__ = ("n1", "n2", "_y", "_z")

    def __init__(self, n1, n2, y_bar_sq=None, z_bar_sq=None):
        self.n1 = int(n1)
        self.n2 = int(n2)
        if self.n1 < 0 or self.n2 < 0 or self.n1 + self.n2 < 1:
            raise DomainError("block sizes must be non-negative with n >= 1")
        for name, size, val in (("y_bar_sq", self.n1, y_bar_sq), ("z_bar_sq", self.n2, z_bar_sq)):
            if size and (val is None or not val >= 0 or not math.isfinite(val)):
                raise DomainError(f"{name} must be a finite non-negative number")
        self._y = float(y_bar_sq) if self.n1 else None
        self._z = float(z_bar_sq) if self.n2 else None

    @property
    def n(self):
        return self.n1 + self.n2

    @property
    def y_bar_sq(self):
        if self._y is None:
            raise UnavailableStatisticError("Ybar^2 is unavailable: the Y block is empty")
        return self._y

    @property
    def z_bar_sq(self):
        if self._z is None:
            raise UnavailableStatisticError("Zbar^2 is unavailable: the Z block is empty")
        return self._z

    @property
    def x_bar_sq(self):
        tot = (self.n1 * self._y if self.n1 else 0.0) + (self.n2 * self._z if self.n2 else 0.0)
        return tot / self.n

    @property
    def complete(self):
        return self.n1 >= 1 and self.n2 >= 1

    def __eq__(self, other):
        if not isinstance(other, SuffStats):
            return NotImplemented
        return (self.n1, self.n2, self._y, self._z) == (other.n1, other.n2, other._y, other._z)

    def __hash__(self):
        return hash((self.n1, self.n2, self._y, self._z))

    def __repr__(self):
        return f"SuffStats(n1={self.n1}, n2={self.n2}, y_bar_sq={self._y!r}, z_bar_sq={self._z!r})"


def _mean_sq(v):
    # sorted summation makes the statistic exactly permutation invariant
    return float(np.sum(np.sort(v * v))) / v.size


def suff_stats(d: Dataset) -> SuffStats:
    n1, n2 = d.y.size, d.z.size
    return SuffStats(n1, n2, _mean_sq(d.y) if n1 else None, _mean_sq(d.z) if n2 else None)


def generate_dataset(params: ModelParams, seed, replication=0) -> Dataset:
    """Draw Y ~ N(0, s0) and Z ~ N(mu0, s0) from separate substreams.

    The Y and Z noise depend only on ``(seed, n, replication)``, never on the
    means, so sweeps over the signal strength reuse identical noise.
    """
    sd = math.sqrt(params.sigma0_sq)
    y = sd * substream(seed, params.n, replication, TAG_Y).standard_normal(params.n1)
    z = params.mu0 + sd * substream(seed, params.n, replication, TAG_Z).standard_normal(params.n2)
    return Dataset(y, z)


def generate_random_means_dataset(prior, sigma0_sq, n, alpha, seed, replication=0, return_means=False):
    """Data from the random-means model.

    ``prior`` is a proper ``MeanPrior`` (i.i.d. means) or a ``Hyperprior``
    (draw theta^2 first, then means i.i.d. N(0, theta^2)).
    """
    from .priors import MeanPrior, PositivePrior

    n1, n2 = split_sizes(n, alpha)
    if not prior.proper:
        raise UsageError("the random-means model needs a proper prior")
    if isinstance(prior, MeanPrior):
        mu = prior.sample(n2, substream(seed, n, replication, TAG_MEANS))
    elif isinstance(prior, PositivePrior):
        theta_sq = float(prior.sample(1, substream(seed, n, replication, TAG_HYPER))[0])
        mu = math.sqrt(theta_sq) * substream(seed, n, replication, TAG_MEANS).standard_normal(n2)
    else:
        raise UsageError("prior must be a MeanPrior or a Hyperprior")
    d = generate_dataset(ModelParams(alpha, n, sigma0_sq, mu), seed, replication)
    return (d, mu) if return_means else d


def write_dataset_csv(d: Dataset, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "index", "value"])
        for block, arr in (("Y", d.y), ("Z", d.z)):
            for i, v in enumerate(arr):
                w.writerow([block, i, format(float(v), ".17g")])


def read_dataset_csv(path) -> Dataset:
    blocks = {"Y": [], "Z": []}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != ["block", "index", "value"]:
            raise UsageError(f"{path}: expected header block,index,value, got {header}")
        for lineno, row in enumerate(r, start=2):
            if len(row) != 3 or row[0] not in blocks:
                raise UsageError(f"{path}:{lineno}: malformed row {row}")
            blocks[row[0]].append((int(row[1]), float(row[2])))
    y = [v for _, v in sorted(blocks["Y"])]
    z = [v for _, v in sorted(blocks["Z"])]
    return Dataset(np.array(y), np.array(z))
