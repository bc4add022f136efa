"""Exact state calculus on the path (x) polarization space of the interferometer.

The Hilbert space is 4-dimensional with the frozen basis order

    index 0: A,H    index 1: A,V    index 2: B,H    index 3: B,V

(arm A / arm B, horizontal / vertical polarization). Every state vector and
every 4x4 operator in the package uses this order; serialized matrices are
row-major in the same order.

Conventions:
    * inner(a, b) = <a|b> conjugates its first argument.
    * The half-wave-plate Jones matrix with fast axis at ``theta`` degrees is
      S(theta) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]. With this convention
      the family of post-selected states |phi(theta)> has zero weak value at
      theta = 45 deg and unit weak value at theta = 90 deg, which is what the
      45/90 reference scans of the analysis chain rely on.
    * Conditional probabilities of intermediate projective outcomes are
      normalized to the undisturbed post-selection rate |<phi|psi>|^2 (Bayes
      chain P(outcome) * P(post | outcome) / P(post)). For path projectors
      this is the standard two-time conditional probability; for the diagonal
      polarization operators it is the experimentally reported yield ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotAnEigenvalue, OrthogonalPostSelection, VanishingPostSelection

BASIS_LABELS = ("AH", "AV", "BH", "BV")
ARM_INDICES = {"A": (0, 1), "B": (2, 3)}

ORTHOGONALITY_TOL = 1e-9
EIGENVALUE_TOL = 1e-9

_SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _frozen_complex_vector(values, n):
    arr = np.asarray(values, dtype=complex).reshape(n)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemState:
    """Amplitude vector on the 4-dim path x polarization space.

    ``normalized=False`` flags intentionally un-normalized intermediates
    (e.g. after blocking an arm); normalized states are checked to unit norm
    within 1e-12.
    """

    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        arr = _frozen_complex_vector(self.amplitudes, 4)
        object.__setattr__(self, "amplitudes", arr)
        if self.normalized and abs(np.linalg.norm(arr) - 1.0) > 1e-12:
            raise ValueError("state marked normalized has norm != 1")

    def __array__(self, dtype=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class SystemOperator:
    """A 4x4 complex matrix acting on the path x polarization space."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=complex).reshape(4, 4)
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    def __array__(self, dtype=None):
        return np.asarray(self.matrix, dtype=dtype)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def is_projector(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix @ self.matrix - self.matrix)) <= tol)


def inner(bra: SystemState, ket: SystemState) -> complex:
    """<bra|ket> with the first argument conjugated."""
    return complex(np.vdot(np.asarray(bra), np.asarray(ket)))


@dataclass(frozen=True)
class PrePostPair:
    """Pre- and post-selected states with the cached overlap <post|pre>."""

    pre: SystemState
    post: SystemState
    overlap: complex | None = None

    def __post_init__(self):
        ov = inner(self.post, self.pre)
        if self.overlap is None:
            object.__setattr__(self, "overlap", ov)
        elif abs(self.overlap - ov) > 1e-12:
            raise ValueError("cached overlap disagrees with stored states")

    def require_nonorthogonal(self, tol: float = ORTHOGONALITY_TOL) -> None:
        if abs(self.overlap) <= tol:
            raise OrthogonalPostSelection(
                f"|<post|pre>| = {abs(self.overlap):.3e} <= tolerance {tol:.1e}"
            )


@dataclass(frozen=True)
class OutcomeDistribution:
    """Labelled probabilities, either unconditional or post-selected."""

    outcomes: tuple
    kind: str  # "unconditional" | "conditional-on-postselection"

    def __post_init__(self):
        object.__setattr__(
            self, "outcomes", tuple((str(k), float(p)) for k, p in self.outcomes)
        )
        probs = np.array([p for _, p in self.outcomes])
        if np.any(probs < -1e-12) or np.any(probs > 1 + 1e-12):
            raise ValueError("probabilities out of [0, 1]")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")

    def probability(self, label: str) -> float:
        return dict(self.outcomes)[label]


def hwp_jones(theta_deg: float) -> np.ndarray:
    """Jones matrix of a half-wave plate with fast axis at theta degrees."""
    t = np.deg2rad(2.0 * float(theta_deg))
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s], [s, -c]], dtype=complex)


def pre_state() -> SystemState:
    """(|A,H> + |B,V>)/sqrt(2): the state prepared after the input splitter."""
    r = 1.0 / np.sqrt(2.0)
    return SystemState(np.array([r, 0.0, 0.0, r], dtype=complex))


def post_state(theta_deg: float) -> SystemState:
    """(|A> + |B>)/sqrt(2) (x) S(theta)|H>: post-selection at HWP angle theta."""
    if not np.isfinite(theta_deg):
        raise ValueError("theta must be finite")
    pol = hwp_jones(theta_deg) @ np.array([1.0, 0.0], dtype=complex)
    amps = np.kron(np.array([1.0, 1.0]) / np.sqrt(2.0), pol)
    return SystemState(amps)


def identity_operator() -> SystemOperator:
    return SystemOperator(np.eye(4, dtype=complex))


def observable(kind: str, arm: str) -> SystemOperator:
    """Path projector (``spatial``) or diagonal polarization (``diagonal``) on one arm.

    spatial:  |arm><arm| (x) 1, eigenvalues {0, 1}
    diagonal: |arm><arm| (x) sigma_1, eigenvalues {-1, 0, +1}
    """
    if arm not in ARM_INDICES:
        raise ValueError(f"arm must be 'A' or 'B', got {arm!r}")
    proj = np.zeros((4, 4), dtype=complex)
    i, j = ARM_INDICES[arm]
    if kind == "spatial":
        proj[i, i] = proj[j, j] = 1.0
    elif kind == "diagonal":
        proj[i:j + 1, i:j + 1] = _SIGMA1
    else:
        raise ValueError(f"kind must be 'spatial' or 'diagonal', got {kind!r}")
    return SystemOperator(proj)


def pair(theta_deg: float) -> PrePostPair:
    """Convenience constructor: standard pre-selection with post_state(theta)."""
    return PrePostPair(pre_state(), post_state(theta_deg))


def weak_value(op: SystemOperator, pp: PrePostPair, tol: float = ORTHOGONALITY_TOL) -> complex:
    """<post|op|pre> / <post|pre>; raises OrthogonalPostSelection below tol."""
    pp.require_nonorthogonal(tol)
    num = np.vdot(np.asarray(pp.post), np.asarray(op) @ np.asarray(pp.pre))
    return complex(num / pp.overlap)


def eigen_projectors(op: SystemOperator, tol: float = EIGENVALUE_TOL):
    """Spectral decomposition [(eigenvalue, projector)], degeneracies merged.

    Eigenvalues closer than ``tol`` are treated as one outcome; requires a
    Hermitian operator.
    """
    mat = np.asarray(op)
    if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
        raise ValueError("projective outcomes need a Hermitian operator")
    vals, vecs = np.linalg.eigh(mat)
    groups = []
    start = 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[start] > tol:
            sub = vecs[:, start:k]
            groups.append((float(np.mean(vals[start:k])), sub @ sub.conj().T))
            start = k
    return groups


def abl_conditional(
    op: SystemOperator,
    eigenvalue: float,
    pp: PrePostPair,
    tol: float = ORTHOGONALITY_TOL,
) -> float:
    """Conditional probability of an intermediate projective outcome.

    Computed as P(outcome) * P(post | outcome) / P(post) with
    P(post) = |<post|pre>|^2, i.e. the event yield relative to the
    undisturbed post-selection rate. Equals |<post|P_k|pre>|^2 / |<post|pre>|^2.
    """
    pp.require_nonorthogonal(tol)
    for lam, proj in eigen_projectors(op):
        if abs(lam - eigenvalue) <= EIGENVALUE_TOL:
            amp = np.vdot(np.asarray(pp.post), proj @ np.asarray(pp.pre))
            return float(abs(amp) ** 2 / abs(pp.overlap) ** 2)
    raise NotAnEigenvalue(f"{eigenvalue!r} not in spectrum of operator")


def abl_distribution(op: SystemOperator, pp: PrePostPair) -> tuple:
    """(eigenvalue, conditional probability) for the full spectrum of ``op``."""
    pp.require_nonorthogonal()
    out = []
    for lam, proj in eigen_projectors(op):
        amp = np.vdot(np.asarray(pp.post), proj @ np.asarray(pp.pre))
        out.append((lam, float(abs(amp) ** 2 / abs(pp.overlap) ** 2)))
    return tuple(out)


def sample_measure_postselect(op: SystemOperator, pp: PrePostPair, n_trials: int, rng):
    """Simulate projective measurement of ``op`` followed by post-selection.

    Per trial draws an eigenvalue with its Born probability, then a
    post-selection success on the collapsed state. An independent reference
    post-selection (no intermediate measurement) is drawn alongside, so that
    joint_counts[lam] / ref_count estimates abl_conditional(op, lam, ...).

    Returns (joint_counts: dict eigenvalue -> int, ref_count: int).
    """
    psi = np.asarray(pp.pre)
    phi = np.asarray(pp.post)
    specs = eigen_projectors(op)
    p_outcome = np.empty(len(specs))
    p_post_given = np.empty(len(specs))
    for k, (_, proj) in enumerate(specs):
        collapsed = proj @ psi
        w = float(np.real(np.vdot(collapsed, collapsed)))
        p_outcome[k] = w
        p_post_given[k] = abs(np.vdot(phi, collapsed)) ** 2 / w if w > 0 else 0.0
    p_outcome = p_outcome / p_outcome.sum()

    which = rng.choice(len(specs), size=n_trials, p=p_outcome)
    post_ok = rng.random(n_trials) < p_post_given[which]
    ref_ok = rng.random(n_trials) < abs(pp.overlap) ** 2

    joint = {}
    for k, (lam, _) in enumerate(specs):
        joint[lam] = int(np.count_nonzero(post_ok & (which == k)))
    return joint, int(np.count_nonzero(ref_ok))


def joint_disturbing_distribution(pp: PrePostPair):
    """Outcome statistics of the strong joint measurement on both arms.

    The path pointer on arm A and the diagonal-polarization pointer on arm B
    are both coupled strongly (shifted pointer states orthogonal), so exactly
    one of three records occurs per run: the arm-A pointer shifted ("A"), or
    the arm-B pointer shifted up ("B+") or down ("B-").

    Returns (unconditional, conditional-on-postselection) distributions; the
    conditional part projects each orthogonal branch onto the post-selected
    state and renormalizes.
    """
    psi = np.asarray(pp.pre)
    phi = np.asarray(pp.post)
    diag = np.array([1.0, 1.0]) / np.sqrt(2.0)
    anti = np.array([1.0, -1.0]) / np.sqrt(2.0)
    b_up = np.kron(np.array([0.0, 1.0]), diag)
    b_dn = np.kron(np.array([0.0, 1.0]), anti)
    proj_a = np.asarray(observable("spatial", "A"))
    branches = {
        "A": proj_a @ psi,
        "B+": np.outer(b_up, b_up.conj()) @ psi,
        "B-": np.outer(b_dn, b_dn.conj()) @ psi,
    }
    uncond = OutcomeDistribution(
        tuple((k, float(np.real(np.vdot(v, v)))) for k, v in branches.items()),
        kind="unconditional",
    )
    pp.require_nonorthogonal()
    weights = {k: abs(np.vdot(phi, v)) ** 2 for k, v in branches.items()}
    total = sum(weights.values())
    if total <= 0.0:
        raise VanishingPostSelection("no branch survives post-selection")
    cond = OutcomeDistribution(
        tuple((k, w / total) for k, w in weights.items()),
        kind="conditional-on-postselection",
    )
    return uncond, cond


def _qubit_rotation(angle: float) -> np.ndarray:
    """exp(-i * angle * sigma_2) = [[cos, -sin], [sin, cos]] on the qubit."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def qubit_pointer_excitation(arm: str, g: float, pp: PrePostPair) -> float:
    """Excitation probability of a qubit pointer coupled to the diagonal
    polarization on one arm, conditioned on post-selection.

    The coupling exp(-i g X_arm sigma2_q) is evolved exactly on the
    8-dimensional system (x) qubit space via the spectral decomposition of
    X_arm; the system is then projected on the post-selected state and the
    qubit measured in its energy basis.
    """
    pp.require_nonorthogonal()
    op = observable("diagonal", arm)
    u8 = np.zeros((8, 8), dtype=complex)
    for lam, proj in eigen_projectors(op):
        u8 += np.kron(proj, _qubit_rotation(g * lam))
    state8 = np.kron(np.asarray(pp.pre), np.array([1.0, 0.0], dtype=complex))
    evolved = u8 @ state8
    phi = np.asarray(pp.post)
    amp_ground = np.vdot(np.kron(phi, np.array([1.0, 0.0])), evolved)
    amp_excited = np.vdot(np.kron(phi, np.array([0.0, 1.0])), evolved)
    total = abs(amp_ground) ** 2 + abs(amp_excited) ** 2
    if total <= 1e-30:
        raise VanishingPostSelection("post-selected norm vanished under coupling")
    return float(abs(amp_excited) ** 2 / total)


def single_mode_qubit_response(alpha: float, beta: float, g: float):
    """Un-normalized qubit amplitudes after H-post-selecting one polarization mode.

    For a single mode alpha|diag> + beta|anti> (real alpha, beta with
    alpha^2 + beta^2 = 1) coupled to the qubit and post-selected on |H>, the
    qubit is left in (alpha+beta) cos(g) |0> + (alpha-beta) sin(g) |1>.
    Complex coefficients are not supported.
    """
    if isinstance(alpha, complex) or isinstance(beta, complex):
        raise ValueError("complex mode coefficients are unsupported")
    a, b = float(alpha), float(beta)
    if abs(a * a + b * b - 1.0) > 1e-9:
        raise ValueError("mode coefficients must satisfy alpha^2 + beta^2 = 1")
    return (a + b) * np.cos(g), (a - b) * np.sin(g)
