"""Subsampling sweeps for saturation curves.

Each (P, Q, repetition) cell draws rows and columns uniformly without
replacement from the full matrix using its own Philox stream, so a cell's
draw depends only on the base seed and the cell coordinates, never on the
order cells are run in.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .errors import GridExceedsData, PreconditionError, PRDimError
from .estimator import (
    Centering,
    Correction,
    DimEstimate,
    EstimatorVariant,
    TrialPair,
    TermBreakdown,
    check_matrix,
    estimate_all_variants,
    estimate_dimensionality,
)
from .synth import stream

_SWEEP_STREAM = 7


@dataclass(frozen=True)
class SweepRecord:
    P: int
    Q: int
    repetition: int
    seed: int
    variant: EstimatorVariant
    estimate: DimEstimate
    seconds: float


@dataclass
class SweepResult:
    records: List[SweepRecord]
    grid_p: tuple
    grid_q: tuple
    repetitions: int
    base_seed: int
    variants: tuple
    meta: dict = field(default_factory=dict)

    def cells(self):
        return sorted({(r.P, r.Q) for r in self.records})

    def values(self, variant, P, Q) -> np.ndarray:
        """Estimates (NaN where invalid) for one cell across repetitions."""
        return np.array(
            [
                r.estimate.value if r.estimate.valid else np.nan
                for r in self.records
                if r.variant == variant and r.P == P and r.Q == Q
            ]
        )


def cell_seed(base_seed: int, P: int, Q: int, rep: int) -> int:
    """Deterministic per-cell seed derived from the base seed and coordinates."""
    return int(stream(base_seed, _SWEEP_STREAM, P, Q, rep).integers(0, 2**63 - 1))


def _draw(data, P, Q, seed):
    n_rows, n_cols = data.shape
    rng = stream(seed, 0)
    rows = np.sort(rng.choice(n_rows, size=P, replace=False))
    cols = np.sort(rng.choice(n_cols, size=Q, replace=False))
    if isinstance(data, TrialPair):
        return data.take(rows, cols)
    return data[np.ix_(rows, cols)]


def _failed(variant, exc):
    nan = float("nan")
    terms = TermBreakdown(nan, nan, nan, nan, nan, nan, nan)
    return DimEstimate(nan, variant, terms, False, (f"{type(exc).__name__}: {exc}",))


def _run_cell(data, P, Q, rep, base_seed, variants, centering):
    seed = cell_seed(base_seed, P, Q, rep)
    t0 = time.perf_counter()
    sub = _draw(data, P, Q, seed)
    try:
        ests = estimate_all_variants(sub, centering=centering)
        results = [ests[v.correction] for v in variants]
    except PRDimError:
        # a cell too small for some correction: evaluate one by one so the
        # admissible variants still report
        results = []
        for v in variants:
            try:
                results.append(estimate_dimensionality(sub, v))
            except PRDimError as e:
                results.append(_failed(v, e))
    dt = (time.perf_counter() - t0) / max(len(variants), 1)
    return [SweepRecord(P, Q, rep, seed, v, e, dt) for v, e in zip(variants, results)]


def subsample_sweep(
    data,
    grid_p: Sequence[int],
    grid_q: Sequence[int],
    repetitions: int = 1,
    variants: Sequence = tuple(Correction),
    base_seed: int = 0,
    centering: Centering = Centering.TASK,
    n_jobs: int = 1,
) -> SweepResult:
    """Estimate every requested variant on random P x Q submatrices.

    ``grid_p`` and ``grid_q`` are crossed.  Invalid estimates, including
    cells too small for a correction, are kept with their diagnostics.
    Records are ordered by (P, Q, repetition, variant) whatever ``n_jobs``.
    """
    if not isinstance(data, TrialPair):
        data = check_matrix(data)
    if repetitions < 1:
        raise PreconditionError("repetitions must be >= 1")
    centering = Centering(centering)
    paired = isinstance(data, TrialPair)
    variants = tuple(
        EstimatorVariant(getattr(v, "correction", v), centering, paired) for v in variants
    )
    n_rows, n_cols = data.shape
    grid_p = tuple(int(p) for p in grid_p)
    grid_q = tuple(int(q) for q in grid_q)
    for p in grid_p:
        if p > n_rows or p < 1:
            raise GridExceedsData(f"grid P={p} outside 1..{n_rows}")
    for q in grid_q:
        if q > n_cols or q < 1:
            raise GridExceedsData(f"grid Q={q} outside 1..{n_cols}")
    jobs = [(p, q, r) for p in grid_p for q in grid_q for r in range(repetitions)]

    def run(job):
        return _run_cell(data, *job, base_seed, variants, centering)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            chunks = list(pool.map(run, jobs))
    else:
        chunks = [run(j) for j in jobs]
    records = [rec for chunk in chunks for rec in chunk]
    return SweepResult(records, grid_p, grid_q, repetitions, base_seed, variants)
