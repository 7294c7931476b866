"""Predicted bias/variance of the naive and corrected estimators, and the
joint-dimensionality alignment decomposition.

Kernel moments are plug-in averages on a large matrix standing in for the
population: ``k(x_i, x_j) = (1/Q) sum_a Phi[i,a] Phi[j,a]`` on the sample
side and ``k~(w_a, w_b) = (1/P) sum_i Phi[i,a] Phi[i,b]`` on the feature side.
Averages of two-point quantities such as ``<k(x,y)^2>`` run over distinct
pairs ``i != j`` so the diagonal does not leak into them.

The alignment decomposition uses uncentered kernels.  For fixed matrices
and the naive uncentered estimator,

    1/gamma_joint = sum_i kappa_i/gamma_i
                    + sum_{i!=j} sqrt(kappa_i kappa_j/(gamma_i gamma_j)) CKA_ij

holds exactly, where ``kappa_i`` is the squared share of total sum of squares
carried by manifold ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import DegenerateKernel, PreconditionError, RowCountMismatch
from .estimator import (
    Centering,
    Correction,
    EstimatorVariant,
    check_matrix,
    estimate_dimensionality,
)


@dataclass(frozen=True)
class KernelMoments:
    c: float
    c_prime: float
    c_tilde: float
    c_tilde_prime: float
    psi: float
    psi_tilde: float
    gamma_pop: float


def _side_moments(K: np.ndarray):
    """(c, c', psi) for one kernel matrix; consumes ``K``."""
    n = K.shape[0]
    diag = np.diag(K).copy()
    mean_diag = diag.mean()
    if mean_diag == 0:
        raise DegenerateKernel("<k(x,x)> is zero")
    psi = mean_diag**2 / np.mean(diag**2)
    np.square(K, out=K)
    np.fill_diagonal(K, 0.0)
    # per-y average of k(x,y)^2 over x != y
    per_y = K.sum(axis=0) / (n - 1)
    k2 = per_y.mean()
    if k2 == 0:
        raise DegenerateKernel("<k(x,y)^2> is zero")
    c = np.mean(per_y**2) / k2**2
    c_prime = (K @ diag).sum() / (n * (n - 1)) / (k2 * mean_diag)
    return float(c), float(c_prime), float(psi)


def estimate_kernel_moments(phi_ref, centering: Centering = Centering.NONE) -> KernelMoments:
    """Plug-in kernel moments treating ``phi_ref`` as the population.

    ``gamma_pop`` is the naive estimate on the same matrix; uncentered by
    default, matching the kernels the moments are built from.
    """
    phi = check_matrix(phi_ref)
    P, Q = phi.shape
    if P < 2 or Q < 2:
        raise PreconditionError("kernel moments need at least 2 rows and 2 columns")
    c, cp, psi = _side_moments(phi @ phi.T / Q)
    ct, ctp, psit = _side_moments(phi.T @ phi / P)
    est = estimate_dimensionality(phi, EstimatorVariant(Correction.NAIVE, centering))
    return KernelMoments(c, cp, ct, ctp, psi, psit, est.value)


def predict_bias_variance(m: KernelMoments, P: float, Q: float, variant="naive") -> Tuple[float, float]:
    """Leading-order (bias, variance) of gamma_naive or gamma_both at size P x Q.

    The formulas are first-order in 1/P and 1/Q and taken as printed; in
    particular the naive variance can come out negative when the
    ``-2 gamma (gamma - 1)`` term dominates.
    """
    variant = Correction(getattr(variant, "value", variant))
    if variant not in (Correction.NAIVE, Correction.BOTH):
        raise PreconditionError("bias prediction is available for naive and both only")
    if P < 1 or Q < 1:
        raise PreconditionError("P and Q must be >= 1")
    g = m.gamma_pop
    shared_bias = 4 * g * ((m.c - m.c_prime) / P + (m.c_tilde - m.c_tilde_prime) / Q)
    shared_var = 4 * g**2 / P * (1 / m.psi + m.c - 2 * m.c_prime) + 4 * g**2 / Q * (
        1 / m.psi_tilde + m.c_tilde - 2 * m.c_tilde_prime
    )
    if variant is Correction.BOTH:
        return shared_bias, shared_var
    bias = shared_bias - g * (g - 1) * (1 / (P * m.psi) + 1 / (Q * m.psi_tilde))
    var = shared_var - 2 * g * (g - 1) * (1 / P + 1 / Q)
    return bias, var


# -- alignment -----------------------------------------------------------------


@dataclass
class AlignmentReport:
    per_manifold: List[Tuple[float, float]]  # (kappa_i, gamma_i)
    gamma_joint: float
    gamma_align: float
    gamma_ortho: float
    exd: float
    cka_matrix: np.ndarray
    weighted_mean_cka: float
    decomposition_residual: float  # relative gap of the 1/gamma_joint expansion
    identity_residual: float  # gap of the exact weighted-CKA identity

    @property
    def kappas(self) -> np.ndarray:
        return np.array([k for k, _ in self.per_manifold])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([g for _, g in self.per_manifold])


def cka_matrix(manifolds: Sequence[np.ndarray]) -> np.ndarray:
    """Uncentered CKA: ||A^T B||_F^2 / (||A^T A||_F ||B^T B||_F).

    Equals tr(K_a K_b) / sqrt(tr(K_a^2) tr(K_b^2)) without forming P x P
    kernels.
    """
    n = len(manifolds)
    cross = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = np.sum(np.square(manifolds[i].T @ manifolds[j]))
            cross[i, j] = cross[j, i] = v
    norms = np.sqrt(np.diag(cross))
    if np.any(norms == 0):
        raise DegenerateKernel("a manifold has an all-zero kernel")
    return cross / np.outer(norms, norms)


def alignment_report(
    manifolds: Sequence,
    variant: EstimatorVariant = EstimatorVariant(Correction.NAIVE, Centering.NONE),
) -> AlignmentReport:
    """Joint, aligned and orthogonal dimensionality of several manifolds.

    The manifolds share stimuli (rows) and may have different unit counts.
    ``gamma_joint`` is estimated on their column concatenation.  Centered
    variants are accepted but the identities are only exact uncentered.
    """
    mats = [check_matrix(m) for m in manifolds]
    if len(mats) < 2:
        raise PreconditionError("alignment needs at least 2 manifolds")
    P = mats[0].shape[0]
    for i, m in enumerate(mats):
        if m.shape[0] != P:
            raise RowCountMismatch(f"manifold {i} has {m.shape[0]} rows, expected {P}")

    ss = np.array([np.sum(np.square(m)) for m in mats])
    if ss.sum() == 0:
        raise DegenerateKernel("all manifolds are zero")
    kappa = (ss / ss.sum()) ** 2
    gamma = np.array([_gamma(m, variant) for m in mats])
    gamma_joint = _gamma(np.hstack(mats), variant)

    cka = cka_matrix(mats)
    w = np.sqrt(np.outer(kappa / gamma, kappa / gamma))
    off = ~np.eye(len(mats), dtype=bool)
    inv_ortho = float(np.sum(kappa / gamma))
    inv_align = float(np.sum(np.sqrt(kappa / gamma)) ** 2)
    inv_joint_pred = inv_ortho + float(np.sum(w[off] * cka[off]))
    weighted_mean = float(np.sum(w[off] * cka[off]) / np.sum(w[off]))

    inv_joint = 1.0 / gamma_joint
    denom = inv_align - inv_ortho
    lhs = (inv_joint - inv_ortho) / denom if denom != 0 else math.nan
    return AlignmentReport(
        per_manifold=list(zip(kappa.tolist(), gamma.tolist())),
        gamma_joint=gamma_joint,
        gamma_align=1.0 / inv_align,
        gamma_ortho=1.0 / inv_ortho,
        exd=(gamma_joint - 1.0 / inv_align) / gamma_joint,
        cka_matrix=cka,
        weighted_mean_cka=weighted_mean,
        decomposition_residual=abs(inv_joint - inv_joint_pred) / abs(inv_joint),
        identity_residual=abs(lhs - weighted_mean),
    )


def _gamma(m, variant):
    est = estimate_dimensionality(m, variant)
    if not est.valid:
        raise DegenerateKernel(f"dimensionality undefined: {'; '.join(est.diagnostics)}")
    return est.value
