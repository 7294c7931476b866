"""Bias-corrected participation-ratio estimators.

The participation ratio of a centered sample matrix is ``A / B`` where both
numerator and denominator are combinations of five fourth-order moments of
the activations,

    A = t1 - 2 t2 + t5        B = t3 - 2 t4 + t5

with (writing ``v[i,j,k,l,a,b] = X[i,a] Y[j,a] X[k,b] Y[l,b]``)

    t1 ~ v[i,i,j,j]   t2 ~ v[i,i,j,l]   t3 ~ v[i,j,i,j]
    t4 ~ v[i,j,j,l]   t5 ~ v[i,j,l,r]

Each t-term is an average over row indices ``i, j, l, r`` and column indices
``a, b``.  The naive estimator averages over all index tuples; the
bias-corrected estimators restrict the average to tuples whose row indices
are pairwise distinct (``row``), whose column indices differ (``col``), or
both.  For a single matrix ``X = Y``; for two trials ``X`` and ``Y`` are the
first and second recording, which removes the noise variance from every
term.

Nothing here allocates a four-index array.  Every restricted sum is expanded
by inclusion-exclusion over the set partitions of its row indices (Moebius
coefficients ``(-1)^(|b|-1) (|b|-1)!`` per block) into ordinary sums, and
those reduce to a handful of scalars built from the P x P Gram matrix
``G = X Y^T`` plus per-column aggregates for the ``a == b`` part, which is
the same algebra applied to the rank-one Gram of each column.  The cost is
one matrix product, O(P^2 Q), and O(P^2 + PQ) memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Union

import numpy as np

from .errors import (
    DegenerateWeights,
    FeatureAxisTooSmall,
    InsufficientColumns,
    InsufficientRows,
    NonFiniteInput,
    NotTwoDimensional,
    ShapeMismatch,
)

__all__ = [
    "Correction",
    "Centering",
    "EstimatorVariant",
    "TrialPair",
    "TermBreakdown",
    "DimEstimate",
    "Contraction",
    "check_matrix",
    "check_weights",
    "unequal_pair_contraction",
    "compute_terms",
    "estimate_dimensionality",
    "estimate_all_variants",
]

# Rows per block when accumulating column aggregates; bounds the size of the
# elementwise temporaries and gives a two-level (blocked) summation tree.
_BLOCK_ROWS = 512

class Correction(str, Enum):
    NAIVE = "naive"
    ROW = "row"
    COL = "col"
    BOTH = "both"

    @property
    def row_distinct(self) -> bool:
        return self in (Correction.ROW, Correction.BOTH)

    @property
    def col_distinct(self) -> bool:
        return self in (Correction.COL, Correction.BOTH)


class Centering(str, Enum):
    TASK = "task"  # center each column (unit) over stimuli
    NEURON = "neuron"  # center each row; computed on the transpose
    NONE = "none"


@dataclass(frozen=True)
class EstimatorVariant:
    """Which sums are restricted, which axis is centered, and whether the
    fourth-order products mix two trials."""

    correction: Correction = Correction.BOTH
    centering: Centering = Centering.TASK
    noise_corrected: bool = False

    def __post_init__(self):
        object.__setattr__(self, "correction", Correction(self.correction))
        object.__setattr__(self, "centering", Centering(self.centering))
        object.__setattr__(self, "noise_corrected", bool(self.noise_corrected))

    @property
    def label(self) -> str:
        s = f"{self.correction.value}/{self.centering.value}"
        return s + "/2trial" if self.noise_corrected else s


@dataclass(frozen=True)
class TrialPair:
    """Two recordings of the same stimuli x units grid."""

    trial1: np.ndarray
    trial2: np.ndarray

    def __post_init__(self):
        a = check_matrix(self.trial1)
        b = check_matrix(self.trial2)
        if a.shape != b.shape:
            raise ShapeMismatch(f"trial shapes differ: {a.shape} vs {b.shape}")
        object.__setattr__(self, "trial1", a)
        object.__setattr__(self, "trial2", b)

    @property
    def shape(self):
        return self.trial1.shape

    def mean(self) -> np.ndarray:
        return 0.5 * (self.trial1 + self.trial2)

    def take(self, rows=None, cols=None) -> "TrialPair":
        a, b = self.trial1, self.trial2
        if rows is not None:
            a, b = a[rows], b[rows]
        if cols is not None:
            a, b = a[:, cols], b[:, cols]
        return TrialPair(a, b)


@dataclass(frozen=True)
class TermBreakdown:
    t1: float
    t2: float
    t3: float
    t4: float
    t5: float
    A: float
    B: float

    @classmethod
    def assemble(cls, t, centered: bool = True) -> "TermBreakdown":
        t1, t2, t3, t4, t5 = (float(x) for x in t)
        if centered:
            return cls(t1, t2, t3, t4, t5, t1 - 2 * t2 + t5, t3 - 2 * t4 + t5)
        return cls(t1, t2, t3, t4, t5, t1, t3)

    def as_tuple(self):
        return (self.t1, self.t2, self.t3, self.t4, self.t5)


@dataclass(frozen=True)
class DimEstimate:
    value: float
    variant: EstimatorVariant
    terms: TermBreakdown
    valid: bool
    diagnostics: tuple = field(default_factory=tuple)

    def __float__(self):
        return self.value


Data = Union[np.ndarray, TrialPair]


def check_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array (no copy when possible)."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise NotTwoDimensional(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise NotTwoDimensional(f"empty matrix of shape {arr.shape}")
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise NonFiniteInput(f"non-finite entry at (row={bad[0]}, col={bad[1]})")
    return arr


def check_weights(weights, n: int, min_positive: int = 1) -> np.ndarray:
    s = np.asarray(weights, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] != n:
        raise ShapeMismatch(f"weights must have length {n}, got shape {s.shape}")
    if not np.isfinite(s).all():
        raise NonFiniteInput("weights contain non-finite values")
    if (s < 0).any():
        raise DegenerateWeights("weights must be nonnegative")
    n_pos = int(np.count_nonzero(s > 0))
    if n_pos < min_positive:
        raise DegenerateWeights(
            f"need at least {min_positive} strictly positive weights, got {n_pos}"
        )
    return s


def _split(data: Data):
    if isinstance(data, TrialPair):
        return data.trial1, data.trial2, True
    x = check_matrix(data)
    return x, x, False


# -- restricted-sum expansions -------------------------------------------------
#
# Write G = D + H with D = diag(g) and H the off-diagonal part.  Removing the
# diagonal up front means a restricted sum only needs the set partitions
# that keep the two indices of each Gram factor apart, which avoids
# subtracting the large positive diagonal contributions from one another.
# The aggregates are
#   trG = sum g        sg2 = sum g^2      Sh = sum H
#   gRh = g.Rh         gCh = g.Ch         RhCh, RhRh, ChCh
#   HH = sum H*H       HHt = sum H*H^T
# with Rh / Ch the row / column sums of H.


def _pattern_sums(a, distinct):
    """Sums over row indices of the five Gram-product patterns.

    t1: G_ii G_jj   t2: G_ii G_jl   t3: G_ij^2   t4: G_ij G_jl   t5: G_ij G_lr

    With ``distinct`` the row indices within each term are pairwise
    distinct.  Works elementwise, so array-valued aggregates give one set of
    sums per entry.
    """
    trG, sg2, Sh = a["trG"], a["sg2"], a["Sh"]
    if distinct:
        return [
            trG * trG - sg2,
            trG * Sh - a["gRh"] - a["gCh"],
            a["HH"],
            a["RhCh"] - a["HHt"],
            Sh * Sh - a["RhRh"] - a["ChCh"] - 2 * a["RhCh"] + a["HH"] + a["HHt"],
        ]
    S = Sh + trG
    return [
        trG * trG,
        trG * S,
        a["HH"] + sg2,
        a["RhCh"] + a["gRh"] + a["gCh"] + sg2,
        S * S,
    ]


def _rank_one_aggregates(x, y, z, u, v, p, q, w):
    """Aggregates of the Gram a b^T from sums of a, b, ab, a^2, b^2, a^2 b,
    a b^2 and a^2 b^2."""
    return dict(
        trG=z,
        sg2=w,
        Sh=x * y - z,
        gRh=p * y - w,
        gCh=q * x - w,
        RhCh=z * x * y - y * p - x * q + w,
        RhRh=u * y * y - 2 * y * p + w,
        ChCh=v * x * x - 2 * x * q + w,
        HH=u * v - w,
        HHt=z * z - w,
    )


def _distinct_weight_sums(s):
    """Normalizers of the distinct-row patterns for sample weights ``s``.

    Returns the sums over pairwise distinct indices of s_i^2 s_j^2 (t1, t3),
    s_i^2 s_j s_l (t2, t4) and s_i s_j s_l s_r (t5).  Computed by a dynamic
    program over the samples that only adds nonnegative numbers; expressing
    them through power sums of ``s`` cancels badly when few weights are
    nonzero.
    """
    s = np.asarray(s, dtype=np.float64)
    s2 = s * s
    # e[k]: elementary symmetric sums of s of order k
    # f[k]: sums of one marked factor s_i^2 times k other distinct s factors
    # h:    sums of s_i^2 s_j^2 over unordered pairs
    e = np.zeros(5)
    e[0] = 1.0
    f = np.zeros(3)
    h = 0.0
    for si, qi in zip(s, s2):
        h += qi * f[0]
        f[2] += si * f[1] + qi * e[2]
        f[1] += si * f[0] + qi * e[1]
        f[0] += qi
        e[4] += si * e[3]
        e[3] += si * e[2]
        e[2] += si * e[1]
        e[1] += si
    pair = 2.0 * h
    triple = 2.0 * f[2]
    return np.array([pair, triple, pair, triple, 24.0 * e[4]])


def _column_aggregates(X, Y, same, dtype=np.float64):
    """Blocked per-column sums of the eight monomials used by the a == b part."""
    Q = X.shape[1]
    parts = []
    for start in range(0, X.shape[0], _BLOCK_ROWS):
        xb = X[start : start + _BLOCK_ROWS].astype(dtype, copy=False)
        yb = xb if same else Y[start : start + _BLOCK_ROWS].astype(dtype, copy=False)
        out = np.empty((8, Q), dtype=dtype)
        out[0] = xb.sum(axis=0)
        out[1] = out[0] if same else yb.sum(axis=0)
        xy = xb * yb
        out[2] = xy.sum(axis=0)
        out[3] = out[2] if same else np.einsum("ia,ia->a", xb, xb)
        out[4] = out[2] if same else np.einsum("ia,ia->a", yb, yb)
        out[5] = np.einsum("ia,ia->a", xy, xb)
        out[6] = out[5] if same else np.einsum("ia,ia->a", xy, yb)
        out[7] = np.einsum("ia,ia->a", xy, xy)
        del xy
        parts.append(out)
    if len(parts) == 1:
        return parts[0]
    return np.sum(np.stack(parts), axis=0)


class Contraction:
    """Precomputed aggregates from which every restricted sum follows.

    ``X`` and ``Y`` are already oriented (rows = samples, columns =
    features) and already scaled by any row weights.  For a single matrix
    pass the same array twice.
    """

    def __init__(self, X: np.ndarray, Y: np.ndarray, weights: Optional[np.ndarray] = None):
        self.X = X
        self.Y = Y
        self.same = X is Y
        self.n_samples, self.n_features = X.shape
        self.weights = weights

        G = X @ X.T if self.same else X @ Y.T
        g = np.diagonal(G).copy()
        np.fill_diagonal(G, 0.0)
        Rh = G.sum(axis=1)
        Ch = Rh if self.same else G.sum(axis=0)
        HH = np.einsum("ij,ij->i", G, G).sum()
        HHt = HH if self.same else np.einsum("ij,ji->i", G, G).sum()
        del G
        self._gram = dict(
            trG=g.sum(),
            sg2=np.sum(g * g),
            Sh=Rh.sum(),
            gRh=np.sum(g * Rh),
            gCh=np.sum(g * Ch),
            RhCh=np.sum(Rh * Ch),
            RhRh=np.sum(Rh * Rh),
            ChCh=np.sum(Ch * Ch),
            HH=HH,
            HHt=HHt,
        )
        # the a == b part over all rows is the pattern algebra applied to
        # each column's rank-one Gram X[:, a] Y[:, a]^T; the distinct-row
        # version is computed lazily
        self._cols = _rank_one_aggregates(*_column_aggregates(X, Y, self.same))
        self._cols_distinct = None

        s = np.ones(self.n_samples) if weights is None else weights
        s1, s2 = np.sum(s), np.sum(s * s)
        self._norm_all = np.array([s2 * s2, s2 * s1 * s1, s2 * s2, s2 * s1 * s1, s1**4])
        self._norm_distinct = _distinct_weight_sums(s)

    def r(self, i, j, k, l) -> float:
        """Unnormalized sum over a != b of ``X[i,a] Y[j,a] X[k,b] Y[l,b]``."""
        X, Y = self.X, self.Y
        full = (X[i] @ Y[j]) * (X[k] @ Y[l])
        diag = np.sum(X[i] * Y[j] * X[k] * Y[l])
        return float(full - diag)

    def _distinct_diag(self):
        # extended precision: the distinct-row closed forms subtract power sums
        agg = _column_aggregates(self.X, self.Y, self.same, np.longdouble)
        per_col = _pattern_sums(_rank_one_aggregates(*agg), True)
        return np.array([np.sum(t) for t in per_col], dtype=np.float64)

    def pattern_sums(self, row_distinct: bool, col_distinct: bool) -> np.ndarray:
        """Raw sums of the five terms under the given index restrictions."""
        full = np.array(_pattern_sums(self._gram, row_distinct))
        if not col_distinct:
            return full
        if self.n_features < 2:
            raise FeatureAxisTooSmall("the a != b sum needs at least 2 features")
        if row_distinct:
            if self._cols_distinct is None:
                self._cols_distinct = self._distinct_diag()
            diag = self._cols_distinct
        else:
            diag = np.array([np.sum(t) for t in _pattern_sums(self._cols, False)])
        return full - diag

    def normalizers(self, row_distinct: bool, col_distinct: bool) -> np.ndarray:
        rows = self._norm_distinct if row_distinct else self._norm_all
        Q = self.n_features
        return rows * (Q * (Q - 1) if col_distinct else Q * Q)

    def terms(self, correction: Correction) -> np.ndarray:
        correction = Correction(correction)
        rd, cd = correction.row_distinct, correction.col_distinct
        return self.pattern_sums(rd, cd) / self.normalizers(rd, cd)


def _orient(data: Data, centering: Centering):
    X, Y, pair = _split(data)
    if centering is Centering.NEURON:
        X, Y = (X.T, X.T) if X is Y else (X.T, Y.T)
    return X, Y, pair


def _check_sizes(n_samples, n_features, correction, centering, weights):
    sample_err, feature_err = InsufficientRows, InsufficientColumns
    sample_name, feature_name = "rows", "columns"
    if centering is Centering.NEURON:
        sample_err, feature_err = InsufficientColumns, InsufficientRows
        sample_name, feature_name = "columns", "rows"
    if correction.row_distinct and n_samples < 4:
        raise sample_err(
            f"{correction.value} correction needs at least 4 {sample_name}, got {n_samples}"
        )
    if correction.col_distinct and n_features < 2:
        raise feature_err(
            f"{correction.value} correction needs at least 2 {feature_name}, got {n_features}"
        )
    if weights is None:
        return None
    return check_weights(weights, n_samples, 4 if correction.row_distinct else 1)


def _weighted(X, Y, s):
    if s is None:
        return X, Y
    Xw = X * s[:, None]
    return (Xw, Xw) if X is Y else (Xw, Y * s[:, None])


def unequal_pair_contraction(data: Data, axis: str = "column", weights=None) -> Contraction:
    """Build the contraction context for ``data``.

    ``axis`` names the feature axis: ``"column"`` treats rows as samples,
    ``"row"`` works on the transpose.  Weights, if given, scale the samples.
    """
    if axis not in ("column", "row"):
        raise ValueError(f"axis must be 'column' or 'row', got {axis!r}")
    X, Y, _ = _orient(data, Centering.NEURON if axis == "row" else Centering.TASK)
    if X.shape[1] < 2:
        raise FeatureAxisTooSmall(
            f"feature axis has length {X.shape[1]}; the unequal pair sum is empty"
        )
    s = None if weights is None else check_weights(weights, X.shape[0])
    Xw, Yw = _weighted(X, Y, s)
    return Contraction(Xw, Yw, s)


def _contexts(data, variant, weights, symmetrize):
    X, Y, pair = _orient(data, variant.centering)
    s = _check_sizes(X.shape[0], X.shape[1], variant.correction, variant.centering, weights)
    Xw, Yw = _weighted(X, Y, s)
    ctxs = [Contraction(Xw, Yw, s)]
    if pair and symmetrize:
        ctxs.append(Contraction(Yw, Xw, s))
    return ctxs, pair


def _breakdown(ctxs, variant):
    t = np.mean([c.terms(variant.correction) for c in ctxs], axis=0)
    return TermBreakdown.assemble(t, centered=variant.centering is not Centering.NONE)


def compute_terms(
    data: Data,
    variant: EstimatorVariant = EstimatorVariant(),
    weights=None,
    symmetrize: bool = False,
) -> TermBreakdown:
    """The five t-terms and the assembled A and B for one estimator variant.

    Parameters
    ----------
    data : array (P, Q) or TrialPair
        Sample matrix, or two trials for the noise-corrected estimator.
    variant : EstimatorVariant
        ``variant.noise_corrected`` is informational; a TrialPair input is
        what switches on the two-trial products.
    weights : array, optional
        Nonnegative scale per sample (per row, or per column under neuron
        centering).  A summand is multiplied by the weight of each of its
        four row slots, counted with multiplicity, and each term is
        normalized by the matching sum of weight products.
    symmetrize : bool
        For trial pairs, also evaluate the swapped trial assignment and
        average.  Both assignments give the same sums, so this only costs
        time; kept for parity with other implementations.
    """
    variant = EstimatorVariant(*_fields(variant))
    ctxs, _ = _contexts(data, variant, weights, symmetrize)
    return _breakdown(ctxs, variant)


def _fields(variant):
    if isinstance(variant, EstimatorVariant):
        return variant.correction, variant.centering, variant.noise_corrected
    return tuple(variant)


def _finish(terms: TermBreakdown, variant: EstimatorVariant) -> DimEstimate:
    A, B = terms.A, terms.B
    notes = []
    if not math.isfinite(A) or not math.isfinite(B):
        notes.append("non-finite numerator or denominator")
    elif B <= 0:
        notes.append(f"denominator nonpositive (B={B!r})")
    if notes:
        return DimEstimate(math.nan, variant, terms, False, tuple(notes))
    return DimEstimate(A / B, variant, terms, True, ())


def estimate_dimensionality(
    data: Data,
    variant: EstimatorVariant = EstimatorVariant(),
    weights=None,
    symmetrize: bool = False,
) -> DimEstimate:
    """Participation-ratio estimate ``A / B``.

    A nonpositive denominator (possible for the unbiased estimators on tiny
    or very noisy samples) gives ``valid=False`` and a NaN value instead of
    an exception.
    """
    variant = EstimatorVariant(*_fields(variant))
    variant = replace(variant, noise_corrected=isinstance(data, TrialPair))
    ctxs, _ = _contexts(data, variant, weights, symmetrize)
    return _finish(_breakdown(ctxs, variant), variant)


def estimate_all_variants(
    data: Data,
    weights=None,
    centering: Centering = Centering.TASK,
    symmetrize: bool = False,
) -> Mapping[Correction, DimEstimate]:
    """naive, row, col and both estimates sharing one contraction pass."""
    base = EstimatorVariant(Correction.BOTH, centering, isinstance(data, TrialPair))
    ctxs, _ = _contexts(data, base, weights, symmetrize)
    out = {}
    for corr in Correction:
        variant = replace(base, correction=corr)
        out[corr] = _finish(_breakdown(ctxs, variant), variant)
    return out
