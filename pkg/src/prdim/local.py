"""Local dimensionality from weighted PR on metric balls, plus TwoNN.

For every sample ``phi_0`` the points within distance ``r`` get weight one
and all others weight zero; the weighted estimator on those weights is the
local dimensionality at ``phi_0``.  Zero weights delete rows exactly, so the
estimate is computed on the in-ball submatrix, which is what makes sweeping
all centers affordable.

The local metric is a Mahalanobis distance whose matrix is the
pseudoinverse of the covariance of the ``k`` nearest Euclidean neighbours of
the center.  Directions along which those neighbours vary get small weight,
so balls stretch along the manifold's tangent directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import AllBallsDegenerate, DuplicatePoints, InsufficientRows, PreconditionError
from .estimator import (
    EstimatorVariant,
    TrialPair,
    check_matrix,
    estimate_all_variants,
    estimate_dimensionality,
)

MIN_BALL = 4


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    LOCAL_MAHALANOBIS = "local_mahalanobis"

    @classmethod
    def parse(cls, value):
        if value == "mahalanobis":
            return cls.LOCAL_MAHALANOBIS
        return cls(value)


@dataclass(frozen=True)
class BallSpec:
    radius: float = math.inf
    metric: Metric = Metric.EUCLIDEAN
    k_neighbors: Optional[int] = None  # default: min(P - 1, 20)

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        if not self.radius > 0:
            raise PreconditionError(f"radius must be > 0, got {self.radius}")
        if self.k_neighbors is not None and self.k_neighbors < 2:
            raise PreconditionError("k_neighbors must be >= 2")


@dataclass
class LocalDimResult:
    radius: float
    mean_gamma: float
    variant: EstimatorVariant
    per_center: List[tuple] = field(default_factory=list)  # (center, ball size, DimEstimate)
    skipped_centers: int = 0

    @property
    def n_valid(self) -> int:
        return len(self.per_center)

    @property
    def median_gamma(self) -> float:
        """Median of the per-center estimates; a diagnostic, less tail-prone than the mean."""
        if not self.per_center:
            return math.nan
        return float(np.median([e.value for _, _, e in self.per_center]))


def _base_points(data):
    if isinstance(data, TrialPair):
        return data.mean()
    return check_matrix(data)


def _k_default(P, k):
    return min(P - 1, 20) if k is None else min(k, P - 1)


def local_mahalanobis_distances(points: np.ndarray, k: Optional[int] = None) -> np.ndarray:
    """Row ``c`` holds distances from center ``c`` under its own local metric.

    The metric at ``c`` is pinv(Sigma_c), Sigma_c the covariance of the k
    nearest Euclidean neighbours of ``c`` (excluding ``c``).  Evaluated
    through the SVD of the centered neighbour block so only a rank-(k-1)
    projection of the data is ever formed.
    """
    P, Q = points.shape
    k = _k_default(P, k)
    if k < 2:
        raise InsufficientRows("local metric needs at least 3 points")
    eu = cdist(points, points)
    np.fill_diagonal(eu, np.inf)
    nbrs = np.argpartition(eu, k - 1, axis=1)[:, :k]
    out = np.empty((P, P))
    for c in range(P):
        block = points[nbrs[c]]
        block = block - block.mean(axis=0)
        _, sv, vt = np.linalg.svd(block, full_matrices=False)
        keep = sv > sv[0] * max(block.shape) * np.finfo(float).eps if sv[0] > 0 else sv > 0
        if not keep.any():
            out[c] = np.where(np.all(points == points[c], axis=1), 0.0, np.inf)
            continue
        # Sigma = V diag(sv^2 / (k-1)) V^T  ->  pinv scales by (k-1) / sv^2
        scale = np.sqrt(k - 1) / sv[keep]
        proj = (points - points[c]) @ vt[keep].T
        proj *= scale
        out[c] = np.sqrt(np.einsum("ij,ij->i", proj, proj))
    return out


def pairwise_distances(points: np.ndarray, ball: BallSpec) -> np.ndarray:
    if ball.metric is Metric.EUCLIDEAN:
        return cdist(points, points)
    return local_mahalanobis_distances(points, ball.k_neighbors)


def _ball_estimates(sub, variants):
    """Estimates for several corrections on one ball, sharing the contraction."""
    cen = {v.centering for v in variants}
    if len(variants) > 1 and len(cen) == 1:
        try:
            every = estimate_all_variants(sub, centering=cen.pop())
            return [every[v.correction] for v in variants]
        except PreconditionError:
            pass
    return [estimate_dimensionality(sub, v) for v in variants]


def _evaluate(data, dist, radius, variants, cache):
    results = [LocalDimResult(radius=radius, mean_gamma=math.nan, variant=v) for v in variants]
    for c in range(dist.shape[0]):
        members = np.flatnonzero(dist[c] <= radius)
        if members.size < MIN_BALL:
            for res in results:
                res.skipped_centers += 1
            continue
        # large balls often coincide (e.g. the whole data set)
        key = members.tobytes()
        if key not in cache:
            sub = data.take(rows=members) if isinstance(data, TrialPair) else data[members]
            cache[key] = _ball_estimates(sub, variants)
        for res, est in zip(results, cache[key]):
            if est.valid:
                res.per_center.append((c, int(members.size), est))
            else:
                res.skipped_centers += 1
    for res in results:
        if res.per_center:
            res.mean_gamma = float(np.mean([e.value for _, _, e in res.per_center]))
    return results


def radius_sweep(
    data,
    ball: BallSpec,
    radii: Sequence[float],
    variant=EstimatorVariant(),
    distances: Optional[np.ndarray] = None,
) -> List[LocalDimResult]:
    """Local dimensionality at each radius, sharing one distance matrix.

    ``variant`` may also be a sequence of variants; results are then
    ordered by radius, then by variant, and each ball is contracted once.
    Raises AllBallsDegenerate if no radius yields a single usable ball.
    """
    variants = [variant] if isinstance(variant, EstimatorVariant) else list(variant)
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise PreconditionError("radii must be positive")
    if radii != sorted(radii):
        raise PreconditionError("radii must be sorted ascending")
    if not isinstance(data, TrialPair):
        data = check_matrix(data)
    P = data.shape[0]
    if P < MIN_BALL:
        raise InsufficientRows(f"local dimensionality needs at least {MIN_BALL} rows")
    if distances is None:
        distances = pairwise_distances(_base_points(data), ball)
    cache = {}
    out = [res for r in radii for res in _evaluate(data, distances, r, variants, cache)]
    if all(res.n_valid == 0 for res in out):
        raise AllBallsDegenerate(
            f"no ball holds {MIN_BALL} points with a positive denominator at any radius"
        )
    return out


def local_dimensionality(
    data,
    ball: BallSpec,
    variant: EstimatorVariant = EstimatorVariant(),
    distances: Optional[np.ndarray] = None,
) -> LocalDimResult:
    """Average weighted-PR over balls of radius ``ball.radius`` around every sample.

    Balls holding fewer than four points, or whose estimate has a
    nonpositive denominator, are skipped and counted.
    """
    return radius_sweep(data, ball, [ball.radius], variant, distances)[0]


def ball_sizes(distances: np.ndarray, radius: float) -> np.ndarray:
    return np.count_nonzero(distances <= radius, axis=1)


def smallest_admissible_radius(distances: np.ndarray, coverage: float = 0.5) -> float:
    """Smallest radius at which at least ``coverage`` of the balls hold four points.

    ``coverage=1`` demands it of every center, which a few isolated points
    can push to the scale of the whole data set; the default asks it of the
    typical (median) center.
    """
    if not 0 < coverage <= 1:
        raise PreconditionError("coverage must be in (0, 1]")
    # distance to the 4th closest point, self included
    fourth = np.partition(distances, MIN_BALL - 1, axis=1)[:, MIN_BALL - 1]
    return float(np.quantile(fourth, coverage, method="inverted_cdf"))


def twonn(points, chunk: int = 1024) -> float:
    """TwoNN maximum-likelihood intrinsic dimension, ``N / sum(log(r2 / r1))``."""
    X = check_matrix(points)
    N = X.shape[0]
    if N < 3:
        raise InsufficientRows("TwoNN needs at least 3 points")
    logs = np.empty(N)
    for start in range(0, N, chunk):
        d = cdist(X[start : start + chunk], X)
        rows = np.arange(d.shape[0])
        d[rows, start + rows] = np.inf
        two = np.partition(d, 1, axis=1)[:, :2]
        r1, r2 = two[:, 0], two[:, 1]
        if (r1 == 0).any():
            i = start + int(np.flatnonzero(r1 == 0)[0])
            raise DuplicatePoints(f"row {i} duplicates another row")
        logs[start : start + d.shape[0]] = np.log(r2 / r1)
    return float(N / logs.sum())
