"""Counting layer: scan statistics, drift runs, heralded g2."""

import numpy as np
import pytest

from mzweak import detection as det
from mzweak import pointer as ptr
from mzweak import quantum as qm
from mzweak.errors import ZeroDenominator
from mzweak.rng import stream

SIGMA = 475.0


def paper_state(theta=0.0, g=50.0, sigma=SIGMA):
    couplers = [ptr.CouplerSpec("spatial", "A", g), ptr.CouplerSpec("diagonal", "B", g)]
    return ptr.evolve_and_postselect(
        qm.pre_state(), couplers, qm.post_state(theta), sigma=sigma
    )


def single_gaussian():
    return det.single_beam_state(SIGMA)


# ------------------------------------------------------------ expected rate


def test_expected_rate_peak_is_mean_rate():
    cfg = det.ScanConfig(mean_rate=1234.0)
    assert det.expected_rate(single_gaussian(), "x", 0.0, cfg) == pytest.approx(1234.0)


def test_expected_rate_far_tail_negligible():
    cfg = det.ScanConfig(mean_rate=1000.0, n_points=241, step=25.0)
    rate = det.expected_rate(single_gaussian(), "x", 5.0 * SIGMA, cfg)
    assert rate < 1e-4 * 1000.0


def test_expected_rate_grid_sum_matches_analytic_flux():
    # sum_i F(p_i) * step ~= core * integral I(u) du = core * total_norm
    cfg = det.ScanConfig(mean_rate=1000.0)
    state = single_gaussian()
    flux = ptr.windowed_intensity(state, "x", cfg.positions, cfg.fiber_core)
    grid_sum = float(np.sum(flux) * cfg.step)
    analytic = cfg.fiber_core * state.total_norm()
    assert abs(grid_sum - analytic) / analytic < 0.01


def test_expected_rate_propagates_empty_state():
    from mzweak.errors import EmptyState

    empty = ptr.BranchState((), SIGMA, 0.0, True)
    with pytest.raises(EmptyState):
        det.expected_rate(empty, "x", 0.0, det.ScanConfig())


# ------------------------------------------------------------------- scans


def test_scan_zero_rate_gives_all_zero_counts():
    cfg = det.ScanConfig(mean_rate=0.0, repeats=3)
    rec = det.simulate_scan(single_gaussian(), cfg, "x", det.DriftModel(), seed=1)
    assert rec.counts.shape == (61, 3)
    assert np.all(rec.counts == 0)


def test_scan_counts_track_expected_rate():
    cfg = det.ScanConfig(mean_rate=1e5, repeats=50, n_points=21, step=150.0)
    rec = det.simulate_scan(paper_state(), cfg, "y", det.DriftModel(), seed=7)
    rates = np.asarray(det.expected_rate(paper_state(), "y", cfg.positions, cfg))
    means = rec.counts.mean(axis=1)
    z = (means - rates) / np.sqrt(rates / cfg.repeats)
    assert np.all(np.abs(z) < 3.0)


def test_scan_poisson_variance_matches_mean():
    cfg = det.ScanConfig(mean_rate=500.0, repeats=10_000, n_points=5, step=400.0)
    rec = det.simulate_scan(single_gaussian(), cfg, "x", det.DriftModel(), seed=11)
    mean = rec.counts.mean(axis=1)
    var = rec.counts.var(axis=1)
    # sample variance of Poisson has variance ~ (2 lam^2 + lam) / R
    sigma_var = np.sqrt((2 * mean**2 + mean) / cfg.repeats)
    assert np.all(np.abs(var - mean) < 4.0 * sigma_var)


def test_scan_bit_determinism():
    cfg = det.ScanConfig(mean_rate=800.0, repeats=4)
    a = det.simulate_scan(paper_state(), cfg, "x", det.DriftModel(), seed=3)
    b = det.simulate_scan(paper_state(), cfg, "x", det.DriftModel(), seed=3)
    assert np.array_equal(a.counts, b.counts)
    c = det.simulate_scan(paper_state(), cfg, "x", det.DriftModel(), seed=4)
    assert not np.array_equal(a.counts, c.counts)


def test_scan_csv_roundtrip(tmp_path):
    cfg = det.ScanConfig(mean_rate=900.0, repeats=3, theta=45.0)
    rec = det.simulate_scan(paper_state(45.0), cfg, "y", det.DriftModel(), seed=5)
    path = tmp_path / "scan.csv"
    rec.save_csv(path)
    back = det.ScanRecord.load_csv(path)
    assert back.theta == rec.theta
    assert back.axis == rec.axis
    assert back.seed == rec.seed
    assert np.array_equal(back.positions, rec.positions)
    assert np.array_equal(back.counts, rec.counts)


def test_scan_record_validation():
    with pytest.raises(ValueError):
        det.ScanRecord(0.0, "x", np.arange(3.0), np.array([[1], [2]]))
    with pytest.raises(ValueError):
        det.ScanRecord(0.0, "x", np.arange(2.0), np.array([[1], [-2]]))


def test_scan_config_validation():
    with pytest.raises(ValueError):
        det.ScanConfig(step=0.0)
    with pytest.raises(ValueError):
        det.ScanConfig(n_points=2)
    with pytest.raises(ValueError):
        det.ScanConfig(repeats=0)
    with pytest.raises(ValueError):
        det.ScanConfig(fiber_core=-1.0)


def test_scan_default_grid_spans_3mm_centered():
    cfg = det.ScanConfig()
    assert cfg.positions[0] == -1500.0
    assert cfg.positions[-1] == 1500.0
    assert len(cfg.positions) == 61


# -------------------------------------------------------------- drift runs


def test_drift_model_validation_and_offsets():
    with pytest.raises(ValueError):
        det.DriftModel(kind="brownian")
    with pytest.raises(ValueError):
        det.DriftModel(step_sigma=-1.0)
    none = det.DriftModel()
    assert np.all(none.offsets(5, stream(0, 99)) == 0.0)
    walk = det.DriftModel("random-walk", 2.0, initial_offset=3.0)
    offs = walk.offsets(1000, stream(0, 98))
    assert abs(np.mean(np.diff(offs))) < 0.5  # zero-mean steps
    assert np.std(np.diff(offs)) == pytest.approx(2.0, rel=0.1)


def test_drift_none_centers_have_statistical_scatter_only():
    from mzweak.analysis import fit_gaussian

    cfg = det.ScanConfig(mean_rate=20000.0, repeats=1)
    recs = det.simulate_drift_run(cfg, det.DriftModel(), 30, seed=21)
    centers = [fit_gaussian(r.positions, r.counts[:, 0]).center for r in recs]
    assert np.std(centers) < 1.5  # the ~0.7 um Poisson fit floor only


def test_drift_random_walk_variance_grows_with_profile_index():
    from mzweak.analysis import fit_gaussian

    cfg = det.ScanConfig(mean_rate=20000.0, repeats=1)
    walk = det.DriftModel("random-walk", step_sigma=2.0)
    early, late = [], []
    for seed in range(10):
        recs = det.simulate_drift_run(cfg, walk, 60, seed=1000 + seed)
        centers = np.array([fit_gaussian(r.positions, r.counts[:, 0]).center for r in recs])
        early.append(centers[5])
        late.append(centers[55])
    # Var(delta_p) = p * step^2: tenfold index, tenfold variance
    assert np.var(late) > 3.0 * np.var(early)


def test_strong_regime_scan_frequencies_match_joint_distribution():
    # strong coupling: branches separate; sample photon positions from the
    # branch mixture (cross terms ~ exp(-50) are negligible) and classify
    g = 20.0 * SIGMA
    state = ptr.evolve(
        qm.pre_state(),
        [ptr.CouplerSpec("spatial", "A", g), ptr.CouplerSpec("diagonal", "B", g)],
        sigma=SIGMA,
    )
    weights = np.array([abs(b.coeff) ** 2 for b in state.branches])
    assert abs(weights.sum() - 1.0) < 1e-12
    rng = stream(123, 77)
    n = 100_000
    which = rng.choice(len(weights), size=n, p=weights)
    xs = np.array([state.branches[k].dx for k in which]) + rng.normal(0, SIGMA, n)
    ys = np.array([state.branches[k].dy for k in which]) + rng.normal(0, SIGMA, n)
    freq_a = np.count_nonzero(ys > g / 2) / n
    freq_bp = np.count_nonzero((ys <= g / 2) & (xs > g / 2)) / n
    freq_bm = np.count_nonzero((ys <= g / 2) & (xs < -g / 2)) / n
    uncond, _ = qm.joint_disturbing_distribution(qm.pair(0.0))
    for label, freq in (("A", freq_a), ("B+", freq_bp), ("B-", freq_bm)):
        p = uncond.probability(label)
        assert abs(freq - p) < 4.0 * np.sqrt(p * (1 - p) / n)


# --------------------------------------------------------------------- g2


def test_g2_statistic_arithmetic():
    assert det.g2_statistic(det.G2Counts(10**6, 10**3, 10**3, 1)) == pytest.approx(1.0)
    assert det.g2_statistic(det.G2Counts(10**6, 10**3, 10**3, 0)) == 0.0
    with pytest.raises(ZeroDenominator):
        det.g2_statistic(det.G2Counts(10**6, 0, 10**3, 0))
    with pytest.raises(ZeroDenominator):
        det.g2_counting_sigma(det.G2Counts(0, 0, 0, 0))


def test_g2_counts_validation():
    with pytest.raises(ValueError):
        det.G2Counts(100, 10, 10, 11)
    with pytest.raises(ValueError):
        det.G2Counts(-1, 0, 0, 0)


def test_source_model_validation():
    with pytest.raises(ValueError):
        det.SourceModel(pair_rate=-0.1)
    with pytest.raises(ValueError):
        det.SourceModel(heralding_efficiency=1.5)
    with pytest.raises(ValueError):
        det.SourceModel(pair_rate=0.01, multi_pair_prob=0.4)  # mean unreachable


def test_ideal_heralded_source_g2_zero():
    source = det.SourceModel(
        pair_rate=0.1, multi_pair_prob=0.0, heralding_efficiency=1.0, n_windows=200_000
    )
    counts = det.simulate_heralded_counts(source, seed=17)
    assert counts.triple == 0
    assert det.g2_statistic(counts) == 0.0


def test_poissonian_source_g2_near_one():
    source = det.SourceModel(
        pair_rate=0.2, multi_pair_prob=None, heralding_efficiency=0.6, n_windows=2_000_000
    )
    counts = det.simulate_heralded_counts(source, seed=23)
    g2 = det.g2_statistic(counts)
    assert abs(g2 - 1.0) < 3.0 * det.g2_counting_sigma(counts)


def test_g2_monotone_in_multi_pair_probability():
    grid = [0.0, 5e-4, 1e-3, 2e-3, 4e-3]
    means = []
    for p2 in grid:
        vals = []
        for s in range(10):
            source = det.SourceModel(
                pair_rate=0.05, multi_pair_prob=p2, heralding_efficiency=0.6,
                n_windows=300_000,
            )
            counts = det.simulate_heralded_counts(source, seed=500 + s)
            vals.append(det.g2_statistic(counts))
        means.append(np.mean(vals))
    assert all(b >= a for a, b in zip(means, means[1:]))


def test_g2_simulation_determinism():
    source = det.SourceModel(n_windows=300_000)
    a = det.simulate_heralded_counts(source, seed=9)
    b = det.simulate_heralded_counts(source, seed=9)
    assert a == b
    c = det.simulate_heralded_counts(source, seed=10)
    assert a != c
