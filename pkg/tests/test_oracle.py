import numpy as np
import pytest

from prdim import oracle
from prdim.errors import MatrixTooLargeForOracle
from prdim.estimator import Correction, EstimatorVariant, TrialPair, compute_terms
from prdim.synth import PopulationSpec

from .conftest import rel_err

# gamma_pop of the noise-free RFF model (d=2, input_scale=1) from one
# 5000 x 5000 draw with seed 11, task centering.  Computed by
# population_reference and frozen here as a regression constant.
RFF_D2_GAMMA_POP = 7.1861994214301665


def test_all_ones_4x2():
    t = oracle.direct_terms(np.ones((4, 2)), EstimatorVariant("both", "task"))
    assert t.A == 0.0 and t.B == 0.0


def test_identity_naive_t1():
    t = oracle.direct_terms(np.eye(2), EstimatorVariant("naive", "none"))
    assert t.t1 == 0.25


def test_size_cap():
    with pytest.raises(MatrixTooLargeForOracle):
        oracle.direct_terms(np.ones((13, 3)))
    with pytest.raises(MatrixTooLargeForOracle):
        oracle.direct_terms(np.ones((5, 9)))
    # under neuron centering the cap applies to the transpose
    oracle.direct_terms(np.ones((8, 12)) + np.arange(12), EstimatorVariant("both", "neuron"))


def test_direct_terms_mutual_check(rng):
    X = rng.standard_normal((6, 4))
    for c in Correction:
        v = EstimatorVariant(c, "task")
        assert rel_err(oracle.direct_terms(X, v).as_tuple(), compute_terms(X, v).as_tuple()) <= 1e-10


def test_direct_r_loop(rng):
    X, Y = rng.standard_normal((2, 4, 3))
    expected = sum(
        X[0, a] * Y[1, a] * X[2, b] * Y[3, b] for a in range(3) for b in range(3) if a != b
    )
    assert oracle.direct_r(X, Y, 0, 1, 2, 3) == pytest.approx(expected, rel=1e-14)


def test_trial_pair_oracle(rng):
    X, Y = rng.standard_normal((2, 5, 4))
    for c in Correction:
        v = EstimatorVariant(c, "task")
        a = oracle.direct_terms(TrialPair(X, Y), v)
        b = compute_terms(TrialPair(X, Y), v)
        assert rel_err(b.as_tuple(), a.as_tuple()) <= 1e-10


def test_weighted_oracle_counts_multiplicity(rng):
    # with weights (c, ..., c) every term is unchanged
    X = rng.standard_normal((5, 3))
    a = oracle.direct_terms(X, EstimatorVariant("naive"), weights=np.full(5, 3.0))
    b = oracle.direct_terms(X, EstimatorVariant("naive"))
    assert rel_err(a.as_tuple(), b.as_tuple()) <= 1e-13


def test_population_linear_rank_one():
    ref = oracle.population_reference(PopulationSpec("linear", 1), 5000, 5000, seed=11)
    assert abs(ref.gamma_pop - 1) <= 1e-3
    assert ref.gamma_pop == ref.A_pop / ref.B_pop and ref.B_pop > 0


def test_population_linear_d50():
    ref = oracle.population_reference(PopulationSpec("linear", 50), 5000, 5000, seed=11)
    assert 49 <= ref.gamma_pop <= 51
    assert ref.standard_error_A > 0 and ref.standard_error_B > 0
    assert ref.reference_size == (5000, 5000)


def test_population_rff_regression():
    ref = oracle.population_reference(PopulationSpec("rff", 2), 5000, 5000, seed=11)
    assert ref.gamma_pop == pytest.approx(RFF_D2_GAMMA_POP, rel=1e-9)


def test_population_reference_stable_under_doubling():
    spec = PopulationSpec("linear", 5)
    small = oracle.population_reference(spec, 1000, 1000, seed=3)
    big = oracle.population_reference(spec, 2000, 2000, seed=4)
    # propagate the A and B standard errors to gamma
    def se(r):
        return r.gamma_pop * np.hypot(r.standard_error_A / r.A_pop, r.standard_error_B / r.B_pop)

    assert abs(small.gamma_pop - big.gamma_pop) <= 3 * np.hypot(se(small), se(big))
