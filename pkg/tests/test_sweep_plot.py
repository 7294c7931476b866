import xml.etree.ElementTree as ET

import pytest

from prdim.errors import GridExceedsData, NoValidRecords
from prdim.estimator import Correction, EstimatorVariant, estimate_dimensionality
from prdim.local import BallSpec, radius_sweep
from prdim.plot import emit_plot
from prdim.sweep import subsample_sweep
from prdim.synth import PopulationSpec, generate, generate_trial_pair

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def phi():
    return generate(PopulationSpec("linear", 4, noise_std=0.3), 60, 40, seed=2)


def test_full_grid_equals_direct(phi):
    res = subsample_sweep(phi, [60], [40], variants=list(Correction))
    assert len(res.records) == 4
    for r in res.records:
        direct = estimate_dimensionality(phi, r.variant)
        assert r.estimate.value == pytest.approx(direct.value, rel=1e-12)


def test_record_count_and_determinism(phi):
    a = subsample_sweep(phi, [10, 20, 30], [15, 40], repetitions=3, base_seed=5)
    b = subsample_sweep(phi, [10, 20, 30], [15, 40], repetitions=3, base_seed=5, n_jobs=3)
    assert len(a.records) == 3 * 2 * 3 * 4
    keys = {(r.P, r.Q, r.repetition, r.variant.correction) for r in a.records}
    assert len(keys) == len(a.records)
    for x, y in zip(a.records, b.records):
        assert (x.P, x.Q, x.repetition, x.seed, x.variant) == (y.P, y.Q, y.repetition, y.seed, y.variant)
        assert x.estimate.terms == y.estimate.terms
    # fresh draw per repetition
    seeds = {r.seed for r in a.records if (r.P, r.Q) == (10, 15)}
    assert len(seeds) == 3


def test_invalid_cells_are_kept(phi):
    # 2 rows cannot support the row correction: records stay, flagged invalid
    res = subsample_sweep(phi, [2], [40], variants=list(Correction))
    assert len(res.records) == 4
    flags = {r.variant.correction: r.estimate.valid for r in res.records}
    assert not flags[Correction.ROW] and not flags[Correction.BOTH]


def test_grid_exceeds_data(phi):
    with pytest.raises(GridExceedsData):
        subsample_sweep(phi, [61], [10])
    with pytest.raises(GridExceedsData):
        subsample_sweep(phi, [10], [41])


def test_trial_pair_sweep():
    tp = generate_trial_pair(PopulationSpec("linear", 3, noise_std=0.5), 50, 30, 1)
    res = subsample_sweep(tp, [20], [30], variants=["both"])
    assert res.records[0].variant.noise_corrected


def test_sweep_values(phi):
    res = subsample_sweep(phi, [20, 40], [40], repetitions=2)
    v = res.values(EstimatorVariant("both"), 20, 40)
    assert v.shape == (2,)


def _series(path):
    root = ET.parse(path).getroot()
    assert root.tag == SVG + "svg"
    return [g.get("id") for g in root.iter(SVG + "g") if (g.get("id") or "").startswith("series-")]


def test_plot_four_variants(phi, tmp_path):
    res = subsample_sweep(phi, [10, 20, 40], [40], repetitions=2)
    path = tmp_path / "s.svg"
    emit_plot(res, path)
    ids = _series(path)
    assert sorted(ids) == sorted(f"series-{c.value}/task" for c in Correction)
    assert "naive" in path.read_text()


def test_plot_single_point(phi, tmp_path):
    res = subsample_sweep(phi, [20], [40], variants=["naive"])
    path = tmp_path / "p.svg"
    emit_plot(res, path)
    assert _series(path) == ["series-naive/task"]


def test_plot_local(tmp_path):
    X = generate(PopulationSpec("rff", 2), 60, 30, seed=0)
    res = radius_sweep(X, BallSpec(), [1.0, 2.0, 4.0])
    path = tmp_path / "l.svg"
    emit_plot(res, path)
    assert _series(path)


def test_plot_nothing_valid(phi, tmp_path):
    res = subsample_sweep(phi, [2], [40], variants=["row"])
    with pytest.raises(NoValidRecords):
        emit_plot(res, tmp_path / "x.svg")
