"""Monte Carlo photon-counting layer: fiber scans, beam drift, heralded g2.

Count model: each (position, repeat) cell of a scan draws an independent
Poisson count whose mean is the fiber-core-integrated marginal intensity,
normalized so the grid peak of the undrifted profile yields
``ScanConfig.mean_rate`` counts per dwell. Every cell consumes its own RNG
stream (see :mod:`mzweak.rng`), so serial and parallel evaluation produce
bit-identical records.

The heralded-source event model runs per coincidence window: a number of
photon pairs is emitted, the reference detector clicks with the heralding
efficiency per idler, and each signal photon routes through the 50:50
splitter to one of the two scan fibers. Scan counts, by contrast, are plain
Poisson aggregates (long-dwell regime); sub-Poissonian timing structure only
matters for the g2 estimate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import ZeroDenominator
from .pointer import BranchState, Branch, DEFAULT_SIGMA_UM, windowed_intensity


@dataclass(frozen=True)
class ScanConfig:
    """Geometry and statistics of one fiber scan.

    Defaults follow the production protocol: 61 positions in 50 um steps
    (3 mm span), 50 um fiber core, 16 repeats for the target angle.
    ``start=None`` centers the grid on 0. ``mean_rate`` is counts per dwell
    at the profile peak; ``dwell`` (seconds) is retained as metadata.
    """

    start: float | None = None
    step: float = 50.0
    n_points: int = 61
    repeats: int = 16
    theta: float = 0.0
    fiber_core: float = 50.0
    mean_rate: float = 1000.0
    dwell: float = 1.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if self.n_points < 3:
            raise ValueError("n_points must be >= 3")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.fiber_core > 0:
            raise ValueError("fiber_core must be > 0")
        if self.mean_rate < 0:
            raise ValueError("mean_rate must be >= 0")
        if self.start is None:
            object.__setattr__(self, "start", -0.5 * self.step * (self.n_points - 1))

    @property
    def positions(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n_points)


@dataclass(frozen=True)
class ScanRecord:
    """Raw coincidence counts of one scan: counts[position, repeat]."""

    theta: float
    axis: str
    positions: np.ndarray
    counts: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        cnt = np.asarray(self.counts, dtype=np.int64)
        if cnt.ndim != 2 or cnt.shape[0] != pos.shape[0]:
            raise ValueError("counts must be (n_points, repeats)")
        if np.any(cnt < 0):
            raise ValueError("counts must be non-negative")
        pos.setflags(write=False)
        cnt.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "counts", cnt)

    @property
    def repeats(self) -> int:
        return self.counts.shape[1]

    def save_csv(self, path) -> None:
        """Columns: theta_deg, axis, position_um, repeat_idx, counts."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if self.seed is not None:
                fh.write(f"# seed={int(self.seed)}\n")
            writer = csv.writer(fh)
            writer.writerow(["theta_deg", "axis", "position_um", "repeat_idx", "counts"])
            for i, u in enumerate(self.positions):
                for r in range(self.repeats):
                    writer.writerow(
                        [repr(float(self.theta)), self.axis, repr(float(u)), r,
                         int(self.counts[i, r])]
                    )

    @classmethod
    def load_csv(cls, path) -> "ScanRecord":
        seed = None
        rows = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            first = fh.readline()
            if first.startswith("# seed="):
                seed = int(first.strip().split("=", 1)[1])
            else:
                fh.seek(0)
            reader = csv.DictReader(fh)
            for row in reader:
                rows.append(row)
        if not rows:
            raise ValueError(f"{path}: empty scan file")
        theta = float(rows[0]["theta_deg"])
        axis = rows[0]["axis"]
        positions = []
        for row in rows:
            u = float(row["position_um"])
            if u not in positions:
                positions.append(u)
        n_rep = 1 + max(int(row["repeat_idx"]) for row in rows)
        counts = np.zeros((len(positions), n_rep), dtype=np.int64)
        index = {u: i for i, u in enumerate(positions)}
        for row in rows:
            counts[index[float(row["position_um"])], int(row["repeat_idx"])] = int(row["counts"])
        return cls(theta, axis, np.array(positions), counts, seed)


@dataclass(frozen=True)
class DriftModel:
    """Slow beam-center drift: none, or a Gaussian random walk per profile."""

    kind: str = "none"
    step_sigma: float = 0.0
    initial_offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "random-walk"):
            raise ValueError(f"kind must be 'none' or 'random-walk', got {self.kind!r}")
        if self.step_sigma < 0:
            raise ValueError("step_sigma must be >= 0")

    def offsets(self, n: int, rng) -> np.ndarray:
        """Beam-center offset before each of n profiles (um)."""
        if self.kind == "none" or self.step_sigma == 0.0:
            return np.full(n, self.initial_offset)
        steps = rng.normal(0.0, self.step_sigma, size=n)
        return self.initial_offset + np.cumsum(steps)


def expected_rate(state: BranchState, axis: str, position, config: ScanConfig):
    """Mean counts per dwell at a fiber position.

    Integrates the marginal intensity over the fiber core and scales so the
    peak grid position of the undrifted profile yields ``mean_rate``.
    """
    flux = windowed_intensity(state, axis, position, config.fiber_core)
    peak = float(np.max(windowed_intensity(state, axis, config.positions, config.fiber_core)))
    if peak <= 0.0:
        return np.zeros_like(flux) if np.ndim(position) else 0.0
    scaled = config.mean_rate * flux / peak
    return scaled if np.ndim(position) else float(scaled[0])


def _rate_profile(state, axis, config, offset=0.0) -> np.ndarray:
    """Rates over the scan grid with the beam center displaced by ``offset``."""
    return np.asarray(expected_rate(state, axis, config.positions - offset, config))


def simulate_scan(state: BranchState, config: ScanConfig, axis: str, drift: DriftModel, seed: int) -> ScanRecord:
    """Poisson scan record, one drift offset per repeat, one stream per cell."""
    tkey = rngmod.theta_key(config.theta)
    akey = rngmod.AXIS_KEY[axis]
    walk = rngmod.stream(seed, rngmod.SCAN_DRIFT, tkey, akey)
    offsets = drift.offsets(config.repeats, walk)
    counts = np.zeros((config.n_points, config.repeats), dtype=np.int64)
    for r in range(config.repeats):
        rates = _rate_profile(state, axis, config, offsets[r])
        for i in range(config.n_points):
            cell = rngmod.stream(seed, rngmod.SCAN_COUNTS, tkey, akey, i, r)
            counts[i, r] = cell.poisson(rates[i])
    return ScanRecord(config.theta, axis, config.positions, counts, seed)


def single_beam_state(sigma: float = DEFAULT_SIGMA_UM) -> BranchState:
    """A plain Gaussian beam (one arm open, no couplers): the drift-run probe."""
    return BranchState((Branch(1.0 + 0.0j, None, 0.0, 0.0),), sigma, 0.0, True)


def simulate_drift_run(
    config: ScanConfig,
    drift: DriftModel,
    n_profiles: int,
    seed: int,
    *,
    axis: str = "x",
    sigma: float = DEFAULT_SIGMA_UM,
) -> list:
    """Repeated single-repeat scans of a single-arm beam with accumulating drift."""
    state = single_beam_state(sigma)
    akey = rngmod.AXIS_KEY[axis]
    walk = rngmod.stream(seed, rngmod.DRIFT_WALK, akey)
    offsets = drift.offsets(n_profiles, walk)
    records = []
    for p in range(n_profiles):
        rates = _rate_profile(state, axis, config, offsets[p])
        counts = np.zeros((config.n_points, 1), dtype=np.int64)
        for i in range(config.n_points):
            cell = rngmod.stream(seed, rngmod.DRIFT_RUN, akey, p, i)
            counts[i, 0] = cell.poisson(rates[i])
        records.append(ScanRecord(config.theta, axis, config.positions, counts, seed))
    return records


@dataclass(frozen=True)
class SourceModel:
    """Heralded pair source feeding the 50:50 split to the two scan fibers.

    In the pair model (``multi_pair_prob`` a number) the pair count per
    window is 0, 1 or 2 with P(2) = multi_pair_prob and mean ``pair_rate``;
    the reference detector clicks per idler with the heralding efficiency,
    so the herald is pair-correlated and the heralded g2 is suppressed.

    ``multi_pair_prob=None`` selects the coherent (Poissonian) comparison
    source: the signal photon number is Poisson with mean ``pair_rate`` and
    the reference clicks independently of the signal (an uncorrelated tap of
    the same scaled intensity), which makes the heralded g2 exactly 1 in the
    limit of infinite windows.

    ``window`` (seconds) is metadata: the 312.5 ps coincidence window.
    """

    pair_rate: float = 0.05
    multi_pair_prob: float | None = 7e-4
    heralding_efficiency: float = 0.6
    split_ratio: float = 0.5
    n_windows: int = 1_000_000
    window: float = 312.5e-12

    def __post_init__(self):
        if self.pair_rate < 0:
            raise ValueError("pair_rate must be >= 0")
        if not 0 <= self.heralding_efficiency <= 1:
            raise ValueError("heralding_efficiency must be in [0, 1]")
        if not 0 <= self.split_ratio <= 1:
            raise ValueError("split_ratio must be in [0, 1]")
        if self.n_windows < 1:
            raise ValueError("n_windows must be >= 1")
        if self.multi_pair_prob is not None:
            p2 = self.multi_pair_prob
            p1 = self.pair_rate - 2.0 * p2
            if not 0 <= p2 <= 1:
                raise ValueError("multi_pair_prob must be in [0, 1]")
            if p1 < 0 or p1 + p2 > 1:
                raise ValueError("pair_rate and multi_pair_prob give no valid pair distribution")


@dataclass(frozen=True)
class G2Counts:
    """Heralded coincidence tallies: reference singles, heralded singles at
    each split output, and triple coincidences."""

    n_reference: int
    c1: int
    c2: int
    triple: int

    def __post_init__(self):
        for name in ("n_reference", "c1", "c2", "triple"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.triple > min(self.c1, self.c2):
            raise ValueError("triple coincidences cannot exceed either singles channel")


_G2_CHUNK = 1_000_000


def simulate_heralded_counts(source: SourceModel, seed: int) -> G2Counts:
    """Window-by-window event simulation of the heralded source."""
    n_ref = c1 = c2 = triple = 0
    remaining = source.n_windows
    chunk_idx = 0
    eta = source.heralding_efficiency
    q = source.split_ratio
    while remaining > 0:
        m = min(remaining, _G2_CHUNK)
        gen = rngmod.stream(seed, rngmod.G2, chunk_idx)
        if source.multi_pair_prob is None:
            # coherent light: reference tap independent of the signal field
            n = gen.poisson(source.pair_rate, size=m)
            herald = gen.random(m) < -np.expm1(-eta * source.pair_rate)
        else:
            p2 = source.multi_pair_prob
            p1 = source.pair_rate - 2.0 * p2
            u = gen.random(m)
            n = np.where(u < p2, 2, np.where(u < p2 + p1, 1, 0)).astype(np.int64)
            herald = gen.random(m) < (1.0 - (1.0 - eta) ** n)
        k1 = gen.binomial(n, q)
        s1 = k1 >= 1
        s2 = (n - k1) >= 1
        n_ref += int(np.count_nonzero(herald))
        c1 += int(np.count_nonzero(herald & s1))
        c2 += int(np.count_nonzero(herald & s2))
        triple += int(np.count_nonzero(herald & s1 & s2))
        remaining -= m
        chunk_idx += 1
    return G2Counts(n_ref, c1, c2, triple)


def g2_statistic(counts: G2Counts) -> float:
    """Heralded cross-correlation N(R) C(S1,S2|R) / (C(S1|R) C(S2|R))."""
    if counts.c1 == 0 or counts.c2 == 0 or counts.n_reference == 0:
        raise ZeroDenominator("need n_reference > 0 and both singles channels > 0")
    return counts.n_reference * counts.triple / (counts.c1 * counts.c2)


def g2_counting_sigma(counts: G2Counts) -> float:
    """Poisson-propagated standard error of the g2 estimate.

    With zero triples, returns the one-triple scale N(R)/(C1 C2) as the
    resolution of the estimator.
    """
    if counts.c1 == 0 or counts.c2 == 0 or counts.n_reference == 0:
        raise ZeroDenominator("need n_reference > 0 and both singles channels > 0")
    scale = counts.n_reference / (counts.c1 * counts.c2)
    if counts.triple == 0:
        return scale
    g2 = g2_statistic(counts)
    rel = np.sqrt(
        1.0 / counts.triple + 1.0 / counts.c1 + 1.0 / counts.c2 + 1.0 / counts.n_reference
    )
    return float(g2 * rel)
