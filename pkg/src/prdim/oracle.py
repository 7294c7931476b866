"""Brute-force references for the estimators.

``direct_terms`` writes out each t-term as the full product tensor over its
row and column indices and masks the tuples the estimator excludes.  No
inclusion-exclusion identity is used, so agreement with
:mod:`prdim.estimator` is a genuine check of the contraction algebra.
Sums run in long double: a term that nearly cancels can otherwise lose more
digits in the reference than in the estimator under test.
Cost is O(P^4 Q^2) memory and time; keep inputs tiny.

``population_reference`` stands in for the infinite matrix with one very
large draw from a generative process.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEstimate, MatrixTooLargeForOracle
from .estimator import (
    Centering,
    Correction,
    EstimatorVariant,
    TermBreakdown,
    TrialPair,
    _check_sizes,
    _orient,
    compute_terms,
)

MAX_SAMPLES = 12
MAX_FEATURES = 8

# Row-slot layout of each term: which row index feeds X[.,a], Y[.,a],
# X[.,b], Y[.,b].  Index letters are the distinct row indices of the term.
_PATTERNS = {
    1: "iijj",
    2: "iijl",
    3: "ijij",
    4: "ijjl",
    5: "ijlr",
}


@functools.lru_cache(maxsize=None)
def _distinct_mask(n_idx, P):
    grids = np.meshgrid(*([np.arange(P)] * n_idx), indexing="ij")
    mask = np.ones((P,) * n_idx, dtype=bool)
    for a, b in itertools.combinations(range(n_idx), 2):
        mask &= grids[a] != grids[b]
    return mask


def _term_tensor(X, Y, s, pattern):
    """Full tensor of summands and of weight products for one term.

    Returns (values, weights) where ``values`` has shape (P,)*k + (Q, Q)
    indexed by the k distinct row letters then (a, b).
    """
    letters = "".join(sorted(set(pattern), key=pattern.index))
    # every slot carries the weight of its row, so "iijj" weighs s_i^2 s_j^2
    factors = [M * s[:, None] for M in (X, Y, X, Y)]
    subs = ",".join(letter + col for letter, col in zip(pattern, "aabb"))
    vals = np.einsum(f"{subs}->{letters}ab", *factors)
    wts = np.einsum(",".join(pattern) + "->" + letters, s, s, s, s)
    return vals, wts


def _direct_from_oriented(X, Y, s):
    """Direct terms for every correction: {Correction: 5-vector}."""
    P, Q = X.shape
    col_ne = ~np.eye(Q, dtype=bool)
    out = {c: np.empty(5) for c in Correction}
    for t, pattern in _PATTERNS.items():
        vals, wts = _term_tensor(X, Y, s, pattern)
        k = wts.ndim
        # masked sums over (a, b), then over the row tuples
        by_cols = {False: vals.sum(axis=(-2, -1)), True: np.where(col_ne, vals, 0).sum(axis=(-2, -1))}
        row_ne = _distinct_mask(k, P)
        for c in Correction:
            per_row = by_cols[c.col_distinct]
            n_cols = Q * (Q - 1) if c.col_distinct else Q * Q
            if c.row_distinct:
                num, den = per_row[row_ne].sum(), wts[row_ne].sum() * n_cols
            else:
                num, den = per_row.sum(), wts.sum() * n_cols
            # empty index sets (too few rows or columns) give nan
            out[c][t - 1] = num / den if den else np.nan
    return out


def _prepare(data, variant, weights):
    X, Y, _ = _orient(data, variant.centering)
    P, Q = X.shape
    if P > MAX_SAMPLES or Q > MAX_FEATURES:
        raise MatrixTooLargeForOracle(
            f"oracle limited to {MAX_SAMPLES} samples x {MAX_FEATURES} features, got {P}x{Q}"
        )
    s = _check_sizes(P, Q, variant.correction, variant.centering, weights)
    if s is None:
        s = np.ones(P)
    ld = np.longdouble
    return X.astype(ld), Y.astype(ld), np.asarray(s, dtype=ld)


def direct_terms_all(data, centering=Centering.TASK, weights=None):
    """Direct terms for all four corrections at once (shares the tensors)."""
    variant = EstimatorVariant(Correction.BOTH, centering)
    X, Y, s = _prepare(data, variant, weights)
    raw = _direct_from_oriented(X, Y, s)
    centered = variant.centering is not Centering.NONE
    return {c: TermBreakdown.assemble(raw[c], centered) for c in Correction}


def direct_terms(data, variant=EstimatorVariant(), weights=None) -> TermBreakdown:
    variant = EstimatorVariant(variant.correction, variant.centering, variant.noise_corrected)
    X, Y, s = _prepare(data, variant, weights)
    raw = _direct_from_oriented(X, Y, s)[variant.correction]
    return TermBreakdown.assemble(raw, variant.centering is not Centering.NONE)


def direct_r(X, Y, i, j, k, l) -> float:
    """Sum over a != b of X[i,a] Y[j,a] X[k,b] Y[l,b] by explicit loops."""
    Q = X.shape[1]
    total = 0.0
    for a in range(Q):
        for b in range(Q):
            if a != b:
                total += X[i, a] * Y[j, a] * X[k, b] * Y[l, b]
    return total


# -- population reference ------------------------------------------------------


@dataclass(frozen=True)
class PopulationReference:
    A_pop: float
    B_pop: float
    gamma_pop: float
    reference_size: tuple
    standard_error_A: float
    standard_error_B: float


def population_reference(spec, P_ref, Q_ref, seed, centering=Centering.TASK, n_folds=10):
    """A, B and gamma from naive formulas on one large draw.

    Standard errors come from splitting rows and columns into ``n_folds``
    contiguous groups and evaluating the same formulas on the diagonal
    blocks: SE = std(block values) / sqrt(n_folds).
    """
    from .synth import generate

    Phi = generate(spec, P_ref, Q_ref, seed)
    variant = EstimatorVariant(Correction.NAIVE, centering)
    terms = compute_terms(Phi, variant)
    if terms.B <= 0:
        raise InvalidEstimate("reference denominator is not positive")
    rows = np.array_split(np.arange(P_ref), n_folds)
    cols = np.array_split(np.arange(Q_ref), n_folds)
    blocks = [compute_terms(Phi[np.ix_(r, c)], variant) for r, c in zip(rows, cols)]
    a = np.array([b.A for b in blocks])
    b = np.array([b.B for b in blocks])
    return PopulationReference(
        A_pop=terms.A,
        B_pop=terms.B,
        gamma_pop=terms.A / terms.B,
        reference_size=(P_ref, Q_ref),
        standard_error_A=float(a.std(ddof=1) / np.sqrt(n_folds)),
        standard_error_B=float(b.std(ddof=1) / np.sqrt(n_folds)),
    )


__all__ = [
    "PopulationReference",
    "direct_terms",
    "direct_terms_all",
    "direct_r",
    "population_reference",
    "TrialPair",
]
