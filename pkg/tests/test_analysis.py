"""Profile fitting, bootstrap, weak-value scaling, systematic band, export."""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mzweak import analysis as ana
from mzweak import detection as det
from mzweak import pointer as ptr
from mzweak import quantum as qm
from mzweak.errors import DegenerateProfile, NonConvergence, ZeroScale

SIGMA = 475.0
GRID = det.ScanConfig().positions  # 61 points, 50 um steps


def synth_profile(center, width=400.0, amplitude=1200.0, offset=10.0, grid=GRID):
    return amplitude * np.exp(-((grid - center) ** 2) / (2 * width**2)) + offset


def paper_state(theta=0.0):
    couplers = [ptr.CouplerSpec("spatial", "A", 50.0), ptr.CouplerSpec("diagonal", "B", 50.0)]
    return ptr.evolve_and_postselect(
        qm.pre_state(), couplers, qm.post_state(theta), sigma=SIGMA
    )


def make_dist(centers, theta=0.0, axis="x"):
    return ana.CenterDistribution(np.asarray(centers, dtype=float), theta, axis)


# ----------------------------------------------------------------- fitting


def test_fit_recovers_noiseless_parameters():
    fit = ana.fit_gaussian(GRID, synth_profile(12.3))
    assert abs(fit.center - 12.3) < 0.01
    assert abs(fit.center - 12.3) / 12.3 < 1e-6
    assert abs(fit.width - 400.0) / 400.0 < 1e-6
    assert abs(fit.amplitude - 1200.0) / 1200.0 < 1e-6
    assert abs(fit.offset - 10.0) / 10.0 < 1e-6
    assert fit.converged and fit.n_iterations <= 200
    assert fit.residual_norm < 1e-6


@given(st.floats(-200, 200), st.floats(200, 700), st.floats(100, 5000))
def test_fit_recovers_noiseless_parameters_range(center, width, amplitude):
    fit = ana.fit_gaussian(GRID, synth_profile(center, width, amplitude))
    assert abs(fit.center - center) < 1e-4 * max(1.0, abs(center))
    assert abs(fit.width - width) / width < 1e-6


def test_fit_symmetric_profile_center_is_midpoint():
    counts = synth_profile(0.0)  # exactly symmetric about the grid midpoint
    fit = ana.fit_gaussian(GRID, counts)
    assert abs(fit.center - 0.0) < 1e-9


def test_fit_degenerate_profiles_raise():
    with pytest.raises(DegenerateProfile):
        ana.fit_gaussian(GRID, np.zeros_like(GRID))
    with pytest.raises(DegenerateProfile):
        ana.fit_gaussian(GRID, np.full_like(GRID, 7.0))


def test_fit_requires_five_points():
    with pytest.raises(ValueError):
        ana.fit_gaussian(np.arange(4.0), np.array([1.0, 2.0, 3.0, 1.0]))


def test_fit_nonconvergence_budget():
    rng = np.random.default_rng(5)
    noisy = rng.poisson(synth_profile(30.0)).astype(float)
    with pytest.raises(NonConvergence):
        ana.fit_gaussian(GRID, noisy, max_iter=1)
    result = ana.fit_gaussian(GRID, noisy, max_iter=1, raise_on_failure=False)
    assert not result.converged
    full = ana.fit_gaussian(GRID, noisy)
    assert full.converged


def test_fit_center_error_scale_poisson_profile():
    # repeated-simulation oracle: micron-scale center errors at kHz peaks
    cfg = det.ScanConfig(mean_rate=1000.0, repeats=1)
    centers = []
    for seed in range(25):
        rec = det.simulate_scan(det.single_beam_state(SIGMA), cfg, "x", det.DriftModel(), seed)
        centers.append(ana.fit_gaussian(rec.positions, rec.counts[:, 0]).center)
    scatter = np.std(centers)
    assert 1.0 < scatter < 10.0


# --------------------------------------------------------------- bootstrap


def test_bootstrap_single_repeat_all_identical():
    cfg = det.ScanConfig(mean_rate=1000.0, repeats=1)
    rec = det.simulate_scan(det.single_beam_state(SIGMA), cfg, "x", det.DriftModel(), seed=2)
    dist = ana.bootstrap_centers(rec, n_bootstrap=500, seed=3)
    assert dist.centers.size == 500
    assert np.all(dist.centers == dist.centers[0])


def test_bootstrap_deterministic_under_seed():
    cfg = det.ScanConfig(mean_rate=1000.0, repeats=8)
    rec = det.simulate_scan(det.single_beam_state(SIGMA), cfg, "x", det.DriftModel(), seed=2)
    a = ana.bootstrap_centers(rec, n_bootstrap=300, seed=4)
    b = ana.bootstrap_centers(rec, n_bootstrap=300, seed=4)
    assert np.array_equal(a.centers, b.centers)
    c = ana.bootstrap_centers(rec, n_bootstrap=300, seed=5)
    assert not np.array_equal(a.centers, c.centers)


def test_bootstrap_spread_matches_resimulation_scatter():
    # oracle: scatter of single-repeat fits across independent re-simulations
    cfg16 = det.ScanConfig(mean_rate=1000.0, repeats=16)
    rec = det.simulate_scan(det.single_beam_state(SIGMA), cfg16, "x", det.DriftModel(), seed=31)
    boot_sigma = np.std(ana.bootstrap_centers(rec, n_bootstrap=2000, seed=1).centers)

    cfg1 = det.ScanConfig(mean_rate=1000.0, repeats=1)
    direct = []
    for s in range(40):
        one = det.simulate_scan(det.single_beam_state(SIGMA), cfg1, "x", det.DriftModel(), 400 + s)
        direct.append(ana.fit_gaussian(one.positions, one.counts[:, 0]).center)
    direct_sigma = np.std(direct)
    assert boot_sigma / direct_sigma < 1.5
    assert direct_sigma / boot_sigma < 1.5


def test_bootstrap_drop_policy_errors_on_flat_records():
    flat = det.ScanRecord(0.0, "x", GRID, np.zeros((61, 2), dtype=int), seed=0)
    with pytest.raises(NonConvergence):
        ana.bootstrap_centers(flat, n_bootstrap=100, seed=1)


# --------------------------------------------------------- weak-value ratio


def test_weak_value_zero_and_unit_anchors():
    rng = np.random.default_rng(0)
    ref0 = make_dist(rng.normal(0.0, 3.0, 1000), theta=45.0)
    ref1 = make_dist(ref0.centers + 49.7, theta=90.0)
    zero = ana.weak_value_estimate(make_dist(ref0.centers), ref0, ref1)
    unit = ana.weak_value_estimate(make_dist(ref1.centers), ref0, ref1)
    assert abs(zero.mean) < 1e-12
    assert abs(unit.mean - 1.0) < 1e-12
    assert zero.stat_sigma == 0.0


@given(st.floats(-500, 500))
def test_weak_value_translation_invariance(shift):
    rng = np.random.default_rng(1)
    x = rng.normal(50.0, 4.0, 400)
    x0 = rng.normal(0.0, 4.0, 400)
    x1 = rng.normal(49.0, 4.0, 400)
    base = ana.weak_value_draws(make_dist(x), make_dist(x0), make_dist(x1))
    moved = ana.weak_value_draws(
        make_dist(x + shift), make_dist(x0 + shift), make_dist(x1 + shift)
    )
    assert np.allclose(base, moved, atol=1e-9)


def test_weak_value_reported_shift_and_scale():
    # a 53.468 um shift against a 60.08 um scale reads 0.890
    rng = np.random.default_rng(2)
    x0 = rng.normal(0.0, 1e-9, 800)
    target = make_dist(x0 + 53.468)
    ref0 = make_dist(x0, theta=45.0)
    ref1 = make_dist(x0 + 60.08, theta=90.0)
    est = ana.weak_value_estimate(target, ref0, ref1)
    assert abs(est.mean - 53.468 / 60.08) < 1e-9
    assert abs(est.mean - 0.890) < 1e-3


def test_weak_value_zero_scale_raises():
    rng = np.random.default_rng(3)
    ref0 = make_dist(rng.normal(0.0, 0.1, 200))
    ref1 = make_dist(ref0.centers + 0.5)  # scale below 1 um
    with pytest.raises(ZeroScale):
        ana.weak_value_draws(make_dist(ref0.centers), ref0, ref1)


def test_stat_sigma_shrinks_with_rate():
    sigmas = []
    for rate in (250.0, 1000.0, 4000.0):
        dists = {}
        for theta in (0.0, 45.0, 90.0):
            repeats = 8 if theta == 0.0 else 3
            cfg = det.ScanConfig(mean_rate=rate, repeats=repeats, theta=theta)
            rec = det.simulate_scan(paper_state(theta), cfg, "x", det.DriftModel(), seed=60)
            dists[theta] = ana.bootstrap_centers(rec, n_bootstrap=1200, seed=61)
        est = ana.weak_value_estimate(dists[0.0], dists[45.0], dists[90.0])
        sigmas.append(est.stat_sigma)
    assert sigmas[0] > sigmas[1] > sigmas[2]
    # quadrupled rate should halve sigma, allow a generous window
    assert 1.4 < sigmas[0] / sigmas[1] < 2.9
    assert 1.4 < sigmas[1] / sigmas[2] < 2.9


# ---------------------------------------------------------- systematic band


def test_systematic_band_requires_profiles_and_scale():
    with pytest.raises(ValueError):
        ana.systematic_band([], 50.0)
    cfg = det.ScanConfig(mean_rate=20000.0, repeats=1)
    recs = det.simulate_drift_run(cfg, det.DriftModel(), 10, seed=70)
    with pytest.raises(ValueError):
        ana.systematic_band(recs, 0.0)


def test_systematic_band_monotone_in_step_sigma():
    cfg = det.ScanConfig(mean_rate=20000.0, repeats=1)
    bands = []
    for step in (0.0, 1.0, 2.0):
        drift = det.DriftModel("random-walk", step) if step else det.DriftModel()
        recs = det.simulate_drift_run(cfg, drift, 60, seed=71)
        bands.append(ana.systematic_band(recs, 49.7))
    assert bands[0] < bands[1] < bands[2]


# ----------------------------------------------------------------- export


def test_export_empty_summary_is_valid(tmp_path):
    summary = ana.export_results(tmp_path, {}, [], {}, seed=1, n_bootstrap=0)
    loaded = ana.load_summary(tmp_path / "summary.json")
    assert loaded == summary
    assert loaded["results"] == {}


def test_export_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(4)
    centers = rng.normal(50.0, 3.0, 50)
    dist = make_dist(centers, theta=0.0, axis="x")
    ref0 = make_dist(rng.normal(0.0, 3.0, 50), theta=45.0, axis="x")
    ref1 = make_dist(rng.normal(49.0, 3.0, 50), theta=90.0, axis="x")
    draws = ana.weak_value_draws(dist, ref0, ref1)
    est = ana.weak_value_estimate(dist, ref0, ref1, sys_band=0.07)
    summary = ana.export_results(
        tmp_path, {"x": est}, [dist, ref0, ref1], {"x": draws}, seed=9, n_bootstrap=50
    )
    loaded = ana.load_summary(tmp_path / "summary.json")
    assert loaded["results"]["x"]["weak_value_mean"] == est.mean  # bit-exact
    assert loaded["results"]["x"]["stat_sigma"] == est.stat_sigma
    assert loaded == summary

    rows = (tmp_path / "centers.csv").read_text().strip().splitlines()[1:]
    parsed = [float(r.split(",")[3]) for r in rows[: centers.size]]
    assert np.array_equal(np.array(parsed), centers)

    wrows = (tmp_path / "weak_values.csv").read_text().strip().splitlines()[1:]
    wparsed = np.array([float(r.split(",")[2]) for r in wrows])
    assert np.array_equal(wparsed, draws)


def test_export_contains_both_axes(tmp_path):
    rng = np.random.default_rng(6)
    dists = {}
    draws = {}
    ests = {}
    for axis in ("x", "y"):
        ref0 = make_dist(rng.normal(0, 3, 40), 45.0, axis)
        ref1 = make_dist(rng.normal(49, 3, 40), 90.0, axis)
        tgt = make_dist(rng.normal(49, 3, 40), 0.0, axis)
        draws[axis] = ana.weak_value_draws(tgt, ref0, ref1)
        ests[axis] = ana.weak_value_estimate(tgt, ref0, ref1)
        dists[axis] = tgt
    summary = ana.export_results(
        tmp_path, ests, list(dists.values()), draws, seed=1, n_bootstrap=40
    )
    assert set(summary["results"]) == {"x", "y"}


def test_load_summary_rejects_unknown_schema(tmp_path):
    path = tmp_path / "summary.json"
    path.write_text(json.dumps({"schema_version": 999}))
    with pytest.raises(ValueError):
        ana.load_summary(path)
