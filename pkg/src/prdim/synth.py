"""Synthetic generative processes with known dimensionality.

Two families:

* ``linear``: ``Phi[i, a] = x_i . w_a + eps``, with ``x`` and ``w`` standard
  normal in ``d`` dimensions.  The noise-free population PR is ``d``.
* ``rff``: ``Phi[i, a] = sin(x_i . w_a + b_a) + eps`` with ``w`` standard
  normal, ``b ~ U(-pi/2, pi/2)`` and ``x ~ N(0, input_scale^2 I_d)``.  The
  representation manifold is curved; its local dimensionality is ``d`` but
  its global PR is not.

Randomness: every entity (latents, unit parameters, phases, per-trial noise)
gets its own Philox stream keyed by ``(seed, entity)``.  Philox is a
counter-based generator, so a stream's values do not depend on how many
draws other streams made, and the first rows of a larger draw match a
smaller draw with the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .estimator import TrialPair


class Kind(str, Enum):
    LINEAR = "linear"
    RFF = "rff"


class NoiseMode(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


# stream ids
_LATENT, _UNIT, _PHASE, _NOISE = 0, 1, 2, 3


@dataclass(frozen=True)
class PopulationSpec:
    kind: Kind = Kind.LINEAR
    latent_dim: int = 1
    noise_std: float = 0.0
    input_scale: float = 1.0
    noise_mode: NoiseMode = NoiseMode.ADDITIVE
    # linear only: put latents on the sphere of radius sqrt(d)
    latent_on_sphere: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "noise_mode", NoiseMode(self.noise_mode))
        if int(self.latent_dim) != self.latent_dim or self.latent_dim < 1:
            raise ValueError(f"latent_dim must be a positive integer, got {self.latent_dim}")
        object.__setattr__(self, "latent_dim", int(self.latent_dim))
        if not self.noise_std >= 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if not self.input_scale > 0:
            raise ValueError(f"input_scale must be > 0, got {self.input_scale}")

    @property
    def ground_truth_dim(self) -> float:
        return float(self.latent_dim)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, key...)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def signal(spec: PopulationSpec, P: int, Q: int, seed: int) -> np.ndarray:
    """Noise-free activations phi(x_i, w_a)."""
    if P < 1 or Q < 1:
        raise ValueError(f"P and Q must be >= 1, got {P}, {Q}")
    d = spec.latent_dim
    x = stream(seed, _LATENT).standard_normal((P, d))
    w = stream(seed, _UNIT).standard_normal((Q, d))
    if spec.kind is Kind.LINEAR:
        if spec.latent_on_sphere:
            x *= np.sqrt(d) / np.linalg.norm(x, axis=1, keepdims=True)
        return x @ w.T
    b = stream(seed, _PHASE).uniform(-np.pi / 2, np.pi / 2, size=Q)
    return np.sin(spec.input_scale * x @ w.T + b)


def _add_noise(spec, phi, seed, trial):
    if spec.noise_std == 0:
        return phi.copy()
    eps = stream(seed, _NOISE, trial).normal(0.0, spec.noise_std, size=phi.shape)
    if spec.noise_mode is NoiseMode.MULTIPLICATIVE:
        return (1.0 + eps) * phi
    return phi + eps


def generate(spec: PopulationSpec, P: int, Q: int, seed: int) -> np.ndarray:
    """One P x Q sample matrix; identical to ``generate_trial_pair(...).trial1``."""
    return _add_noise(spec, signal(spec, P, Q, seed), seed, 0)


def generate_trial_pair(spec: PopulationSpec, P: int, Q: int, seed: int) -> TrialPair:
    """Two trials sharing the signal draw with independent noise."""
    phi = signal(spec, P, Q, seed)
    return TrialPair(_add_noise(spec, phi, seed, 0), _add_noise(spec, phi, seed, 1))


# Default saturation-curve grid: doublings from 25 to 1600.
DEFAULT_GRID = (25, 50, 100, 200, 400, 800, 1600)
