"""Continuous Gaussian-pointer dynamics with closed-form moments.

The transverse beam state on each axis is a superposition of displaced
Gaussian modes

    xi_a(u) = (2 pi sigma^2)^(-1/4) exp(-(u - a)^2 / (4 sigma^2)),

normalized so the intensity |xi|^2 has rms width sigma and the overlap of two
modes is <xi_a|xi_b> = exp(-(a - b)^2 / (8 sigma^2)). The x and y axes are an
exact product (the two couplers act on orthogonal axes), so a joint state is
a finite list of branches (coefficient, system basis index, dx, dy).

Couplers are translation evolutions exp(-i g S P_axis): the path coupler
(tilted plate) shifts the target arm by g along y; the diagonal-polarization
coupler (beam-displacer stack) splits the target arm into a +g diagonal and a
-g anti-diagonal component along x. The displacer stack is also constructible
element by element (Jones matrices plus single-polarization displacers) and
must agree with the exponential form; see ``diagonal_coupler_composite``.

Default beam width: sigma = 475 um (a 1.9 mm beam read as 4 sigma full
width); the alternative collimation reading 1.5 mm gives the 375 um preset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import EmptyState, VanishingPostSelection
from .quantum import ARM_INDICES, SystemState, hwp_jones

DEFAULT_SIGMA_UM = 475.0
COLLIMATION_SIGMA_UM = 375.0

COEFF_PRUNE_TOL = 1e-15

_KIND_AXIS = {"spatial": "y", "diagonal": "x"}


def gaussian_amplitude(u, center: float, sigma: float):
    """Pointer mode amplitude xi_center(u)."""
    u = np.asarray(u, dtype=float)
    return (2.0 * np.pi * sigma**2) ** (-0.25) * np.exp(-((u - center) ** 2) / (4.0 * sigma**2))


def mode_overlap(a: float, b: float, sigma: float) -> float:
    """<xi_a|xi_b> = exp(-(a-b)^2 / (8 sigma^2))."""
    return float(np.exp(-((a - b) ** 2) / (8.0 * sigma**2)))


def first_moment(a: float, b: float, sigma: float) -> float:
    """integral u xi_a(u) xi_b(u) du = midpoint times overlap."""
    return 0.5 * (a + b) * mode_overlap(a, b, sigma)


@dataclass(frozen=True)
class GaussianMode:
    """A single displaced pointer mode (center and rms intensity width, um)."""

    center: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def amplitude(self, u):
        return gaussian_amplitude(u, self.center, self.sigma)


@dataclass(frozen=True)
class Branch:
    """One term of the joint superposition.

    ``label`` is a basis index 0..3 (AH, AV, BH, BV) before post-selection
    and None once the system degree of freedom has been projected out.
    """

    coeff: complex
    label: int | None
    dx: float
    dy: float

    def __post_init__(self):
        if not (np.isfinite(self.dx) and np.isfinite(self.dy) and np.isfinite(abs(self.coeff))):
            raise ValueError("branch fields must be finite")


@dataclass(frozen=True)
class BranchState:
    """Finite superposition of Gaussian pointer branches.

    ``arm_phase`` records the relative A/B phase that was applied before
    post-selection (radians); ``postselected`` marks states whose system part
    has been projected out (labels None, generally un-normalized).
    """

    branches: tuple
    sigma: float
    arm_phase: float = 0.0
    postselected: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "branches", tuple(self.branches))

    def total_norm(self) -> float:
        """Squared norm including Gaussian overlaps between branches."""
        acc = 0.0
        for k in self.branches:
            for l in self.branches:
                if k.label != l.label:
                    continue
                acc += np.real(
                    k.coeff * np.conj(l.coeff)
                    * mode_overlap(k.dx, l.dx, self.sigma)
                    * mode_overlap(k.dy, l.dy, self.sigma)
                )
        return float(acc)


def _merged(branches, sigma, arm_phase, postselected) -> BranchState:
    acc = {}
    for b in branches:
        key = (b.label, b.dx, b.dy)
        acc[key] = acc.get(key, 0.0) + b.coeff
    kept = tuple(
        Branch(c, lab, dx, dy)
        for (lab, dx, dy), c in acc.items()
        if abs(c) >= COEFF_PRUNE_TOL
    )
    return BranchState(kept, sigma, arm_phase, postselected)


@dataclass(frozen=True)
class CouplerSpec:
    """A von Neumann coupler: kind 'spatial' (y axis) or 'diagonal' (x axis),
    target arm, displacement g in um."""

    kind: str
    arm: str
    g: float

    def __post_init__(self):
        if self.kind not in _KIND_AXIS:
            raise ValueError(f"kind must be 'spatial' or 'diagonal', got {self.kind!r}")
        if self.arm not in ARM_INDICES:
            raise ValueError(f"arm must be 'A' or 'B', got {self.arm!r}")
        if not self.g >= 0:
            raise ValueError("g must be non-negative")

    @property
    def axis(self) -> str:
        return _KIND_AXIS[self.kind]

    def is_weak(self, sigma: float) -> bool:
        """Diagnostic only: g below a third of the beam width."""
        return self.g < sigma / 3.0


def initial_branch_state(state: SystemState, sigma: float = DEFAULT_SIGMA_UM) -> BranchState:
    """Attach unshifted pointer modes to every system basis component."""
    branches = [
        Branch(complex(amp), j, 0.0, 0.0)
        for j, amp in enumerate(np.asarray(state))
        if abs(amp) >= COEFF_PRUNE_TOL
    ]
    return _merged(branches, sigma, 0.0, False)


def _shifted(branch: Branch, axis: str, shift: float) -> Branch:
    if axis == "x":
        return Branch(branch.coeff, branch.label, branch.dx + shift, branch.dy)
    return Branch(branch.coeff, branch.label, branch.dx, branch.dy + shift)


def apply_spatial_coupler(state: BranchState, arm: str, g: float) -> BranchState:
    """exp(-i g Y_arm P_y): shifts the target arm's branches by g along y."""
    idx = ARM_INDICES[arm]
    out = [
        _shifted(b, "y", g) if b.label in idx else b
        for b in state.branches
    ]
    return _merged(out, state.sigma, state.arm_phase, state.postselected)


def apply_diagonal_coupler(state: BranchState, arm: str, g: float) -> BranchState:
    """exp(-i g X_arm P_x): splits the target arm into +g diagonal and -g
    anti-diagonal components along x."""
    h_idx, v_idx = ARM_INDICES[arm]
    r = 1.0 / np.sqrt(2.0)
    out = []
    for b in state.branches:
        if b.label == h_idx or b.label == v_idx:
            # decompose into diagonal (+g) and anti-diagonal (-g) eigenmodes
            sign = 1.0 if b.label == h_idx else -1.0
            out.append(Branch(b.coeff * r * r, h_idx, b.dx + g, b.dy))
            out.append(Branch(b.coeff * r * r, v_idx, b.dx + g, b.dy))
            out.append(Branch(sign * b.coeff * r * r, h_idx, b.dx - g, b.dy))
            out.append(Branch(-sign * b.coeff * r * r, v_idx, b.dx - g, b.dy))
        else:
            out.append(b)
    return _merged(out, state.sigma, state.arm_phase, state.postselected)


def build_coupler(spec: CouplerSpec):
    """Return the branch transformation for a coupler spec."""
    if spec.kind == "spatial":
        return lambda st: apply_spatial_coupler(st, spec.arm, spec.g)
    return lambda st: apply_diagonal_coupler(st, spec.arm, spec.g)


def apply_jones(state: BranchState, arm: str, jones: np.ndarray) -> BranchState:
    """Apply a 2x2 polarization Jones matrix to branches on one arm."""
    h_idx, v_idx = ARM_INDICES[arm]
    out = []
    for b in state.branches:
        if b.label == h_idx or b.label == v_idx:
            col = 0 if b.label == h_idx else 1
            out.append(Branch(b.coeff * jones[0, col], h_idx, b.dx, b.dy))
            out.append(Branch(b.coeff * jones[1, col], v_idx, b.dx, b.dy))
        else:
            out.append(b)
    return _merged(out, state.sigma, state.arm_phase, state.postselected)


def apply_displacer(state: BranchState, arm: str, shift: float) -> BranchState:
    """Polarizing beam displacer on one arm: shifts the vertical (e-ray)
    component by ``shift`` along x, leaves the horizontal (o-ray) in place."""
    _, v_idx = ARM_INDICES[arm]
    out = [
        _shifted(b, "x", shift) if b.label == v_idx else b
        for b in state.branches
    ]
    return _merged(out, state.sigma, state.arm_phase, state.postselected)


def diagonal_coupler_composite(arm: str, g: float):
    """Optical-element construction of the diagonal coupler.

    Half-wave plates at 22.5 deg sandwich a displacer pair (e-ray shifted by
    -g, then +g) with 45 deg half-wave plates interleaved, which swaps the
    e/o roles between the displacers. Displacement signs are oriented so the
    stack equals exp(-i g X_arm P_x) (diagonal component toward +x) on every
    basis state.
    """
    hwp_225 = hwp_jones(22.5)
    hwp_45 = hwp_jones(45.0)

    def transform(state: BranchState) -> BranchState:
        st = apply_jones(state, arm, hwp_225)
        st = apply_displacer(st, arm, -g)
        st = apply_jones(st, arm, hwp_45)
        st = apply_displacer(st, arm, +g)
        st = apply_jones(st, arm, hwp_45)
        st = apply_jones(st, arm, hwp_225)
        return st

    return transform


def block_arm(state: BranchState, arm: str) -> BranchState:
    """Drop every branch on the given arm (state becomes un-normalized)."""
    idx = ARM_INDICES[arm]
    kept = [b for b in state.branches if b.label not in idx]
    if not kept:
        raise EmptyState("blocking removed every branch")
    return _merged(kept, state.sigma, state.arm_phase, state.postselected)


def apply_arm_phase(state: BranchState, phase: float) -> BranchState:
    """Multiply arm-B branches by exp(i phase) (imperfect phase lock)."""
    if phase == 0.0:
        return state
    factor = np.exp(1j * phase)
    idx = ARM_INDICES["B"]
    out = [
        Branch(b.coeff * factor, b.label, b.dx, b.dy) if b.label in idx else b
        for b in state.branches
    ]
    return _merged(out, state.sigma, phase, state.postselected)


def postselect(state: BranchState, post: SystemState) -> BranchState:
    """Project the system part on <post|; the result is un-normalized and
    carries pointer-only branches (label None)."""
    phi = np.asarray(post)
    acc = {}
    for b in state.branches:
        key = (b.dx, b.dy)
        acc[key] = acc.get(key, 0.0) + b.coeff * np.conj(phi[b.label])
    branches = tuple(
        Branch(c, None, dx, dy) for (dx, dy), c in acc.items() if abs(c) >= COEFF_PRUNE_TOL
    )
    return BranchState(branches, state.sigma, state.arm_phase, True)


def evolve(
    pre: SystemState,
    couplers,
    *,
    sigma: float = DEFAULT_SIGMA_UM,
    blocked_arm: str | None = None,
    arm_phase: float = 0.0,
) -> BranchState:
    """Run the coupler sequence on the labelled branch state (no post-selection)."""
    seen = set()
    for spec in couplers:
        key = (spec.kind, spec.arm)
        if key in seen:
            raise ValueError(f"conflicting couplers: duplicate {key}")
        seen.add(key)
    state = initial_branch_state(pre, sigma)
    if blocked_arm is not None:
        state = block_arm(state, blocked_arm)
    for spec in couplers:
        state = build_coupler(spec)(state)
    return apply_arm_phase(state, arm_phase)


def evolve_and_postselect(
    pre: SystemState,
    couplers,
    post: SystemState,
    *,
    sigma: float = DEFAULT_SIGMA_UM,
    blocked_arm: str | None = None,
    arm_phase: float = 0.0,
) -> BranchState:
    """Coupler evolution followed by post-selection; un-normalized output."""
    state = evolve(pre, couplers, sigma=sigma, blocked_arm=blocked_arm, arm_phase=arm_phase)
    return postselect(state, post)


def _pair_iter(state: BranchState):
    for k in state.branches:
        for l in state.branches:
            if k.label == l.label:
                yield k, l


def _axis_shifts(branch: Branch, axis: str):
    return (branch.dx, branch.dy) if axis == "x" else (branch.dy, branch.dx)


def marginal_intensity(state: BranchState, axis: str, grid) -> np.ndarray:
    """Marginal intensity I(u) on the grid along one axis.

    I(u) = sum_kl c_k conj(c_l) xi(u - d_k) xi(u - d_l) O_perp(k, l) with
    O_perp the exact overlap along the other axis; distinct system labels do
    not interfere. The result is clipped at 0 against rounding dust.
    """
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    if not state.branches:
        raise EmptyState("no branches")
    u = np.asarray(grid, dtype=float)
    total = np.zeros_like(u)
    for k, l in _pair_iter(state):
        dk, pk = _axis_shifts(k, axis)
        dl, pl = _axis_shifts(l, axis)
        w = k.coeff * np.conj(l.coeff) * mode_overlap(pk, pl, state.sigma)
        total += np.real(
            w
            * gaussian_amplitude(u, dk, state.sigma)
            * gaussian_amplitude(u, dl, state.sigma)
        )
    return np.clip(total, 0.0, None)


def centroid_exact(state: BranchState, axis: str) -> float:
    """Mean position of the normalized marginal intensity, in closed form.

    Uses the Gaussian first-moment overlaps M(k, l) = midpoint * overlap;
    raises VanishingPostSelection when the total weight is at most 1e-12.
    """
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    if not state.branches:
        raise VanishingPostSelection("no branches survive post-selection")
    num = 0.0
    den = 0.0
    for k, l in _pair_iter(state):
        dk, pk = _axis_shifts(k, axis)
        dl, pl = _axis_shifts(l, axis)
        w = np.real(k.coeff * np.conj(l.coeff) * mode_overlap(pk, pl, state.sigma))
        num += w * first_moment(dk, dl, state.sigma)
        den += w * mode_overlap(dk, dl, state.sigma)
    if den <= 1e-12:
        raise VanishingPostSelection(f"post-selected weight {den:.3e} <= 1e-12")
    return float(num / den)


def first_order_shift(weak_val: complex, g: float) -> float:
    """Leading-order pointer shift g * Re(weak value), in um."""
    return float(g * np.real(weak_val))


def windowed_intensity(state: BranchState, axis: str, centers, width: float) -> np.ndarray:
    """Integral of the marginal intensity over [c - width/2, c + width/2].

    Closed form via the normal CDF of the pairwise product Gaussians; used
    for fiber-core integration.
    """
    if not state.branches:
        raise EmptyState("no branches")
    c = np.atleast_1d(np.asarray(centers, dtype=float))
    lo = c - 0.5 * width
    hi = c + 0.5 * width
    total = np.zeros_like(c)
    s = state.sigma
    for k, l in _pair_iter(state):
        dk, pk = _axis_shifts(k, axis)
        dl, pl = _axis_shifts(l, axis)
        w = np.real(
            k.coeff * np.conj(l.coeff)
            * mode_overlap(pk, pl, s)
            * mode_overlap(dk, dl, s)
        )
        m = 0.5 * (dk + dl)
        z = 1.0 / (s * np.sqrt(2.0))
        total += w * 0.5 * (erf((hi - m) * z) - erf((lo - m) * z))
    return np.clip(total, 0.0, None)


def write_profile_csv(path, grid, intensity) -> None:
    """Write an intensity profile as CSV (position_um, intensity)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("position_um,intensity\n")
        for u, i in zip(np.asarray(grid), np.asarray(intensity)):
            fh.write(f"{float(u)!r},{float(i)!r}\n")
