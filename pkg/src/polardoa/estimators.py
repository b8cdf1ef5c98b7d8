"""DOA estimators for the canonical 4-element array.

Both the closed-form (CF) estimator and C-MUSIC Method 2 start from the
geometric phases ``kappa1 = kappa cos(phi)`` and ``kappa2 = kappa sin(phi)``
(``kappa = 2 pi (r/lambda) sin(theta)``), recovered from cross-products of
antenna outputs in which the polarization factors share a common phase.
Per-sample products are accumulated before taking the argument, so the
average is a circular mean and never wraps.

Method 1 instead rescales the 3x3 covariance of the live antennas by a
diagonal matrix ``F_n`` so that its null space matches that of a
polarization-free steering vector.

Antenna numbers are 1-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .detection import EventDecision, ThresholdConfig, decide
from .errors import DegenerateDataError, UnsupportedCombinationError
from .model import ArrayConfig, SnapshotSet
from .numerics import hermitian_eig, right_null_space

ALGORITHMS = ("cf", "cmusic-m1", "cmusic-m2")

# z-score of an accumulator magnitude against its noise-only spread below
# which the phase is deemed unobservable
DEFAULT_MIN_CONFIDENCE = 3.0

_SQRT2 = math.sqrt(2.0)
_F = {
    1: (1.0, 1.0 / _SQRT2, 1.0),
    2: (1.0, -1.0, -1.0 / _SQRT2),
    3: (1.0, _SQRT2, -_SQRT2),
}
_F[4] = _F[1]

# sign pattern of [kappa1, kappa2] in each canonical element's geometric phase
_PHASE_SIGNS = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)


@dataclass(frozen=True)
class PhasePair:
    kappa1: float
    kappa2: float

    @property
    def kappa(self) -> float:
        return math.hypot(self.kappa1, self.kappa2)


@dataclass(frozen=True)
class DoaEstimate:
    theta_deg: float
    phi_deg: Optional[float]
    phases: Optional[PhasePair]
    method: str
    event: Optional[EventDecision] = None


@dataclass(frozen=True)
class MusicGrid:
    """Search grid: theta over [0, 90] and phi over [0, 360), row-major in theta."""

    theta_step: float = 1.0
    phi_step: float = 1.0

    def __post_init__(self):
        if not (self.theta_step > 0 and self.phi_step > 0):
            raise ValueError("grid steps must be positive")

    @property
    def thetas(self) -> np.ndarray:
        n = int(math.floor(90.0 / self.theta_step + 1e-9)) + 1
        return np.arange(n) * self.theta_step

    @property
    def phis(self) -> np.ndarray:
        n = int(math.ceil(360.0 / self.phi_step - 1e-9))
        return np.arange(n) * self.phi_step

    @property
    def theta_count(self) -> int:
        return len(self.thetas)

    @property
    def phi_count(self) -> int:
        return len(self.phis)


def f_matrix(n: int) -> np.ndarray:
    """Diagonal rescaling that strips polarization from the live-antenna covariance."""
    if n not in _F:
        raise ValueError(f"dead antenna must be 1..4, got {n}")
    return np.diag(_F[n])


def _require_canonical(snap: SnapshotSet) -> None:
    if snap.n_elements != 4:
        raise ValueError(f"estimators need the 4-element array, got {snap.n_elements} rows")


def _accumulate(terms: np.ndarray, snap: SnapshotSet, min_confidence: float, n_products: int = 1):
    """Sum per-sample products; refuse sums indistinguishable from zero or from noise."""
    acc = complex(np.sum(terms))
    mag = abs(acc)
    if snap.noise_power > 0 and min_confidence > 0:
        spread = snap.noise_power * math.sqrt(n_products * snap.m_samples)
        if mag <= min_confidence * spread:
            raise DegenerateDataError(
                f"cross-product accumulator |{mag:.3g}| is within {min_confidence} sigma of noise"
            )
    elif mag == 0:
        raise DegenerateDataError("cross-product accumulator is exactly zero")
    return acc


def phases_event1(snap: SnapshotSet, n: int,
                  min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> PhasePair:
    """Steering phases when antenna ``n`` is dark, from the three live antennas."""
    _require_canonical(snap)
    x1, x2, x3, x4 = snap.samples
    acc = lambda t: _accumulate(t, snap, min_confidence)  # noqa: E731
    if n == 1:
        k2 = 0.5 * np.angle(acc(x2 * x4.conj()))
        k1 = np.angle(acc(x2 * x3.conj())) - k2
    elif n == 2:
        k1 = 0.5 * np.angle(acc(-x1 * x3.conj()))
        k2 = np.angle(acc(-x1 * x4.conj())) - k1
    elif n == 3:
        k2 = 0.5 * np.angle(acc(-x2 * x4.conj()))
        k1 = np.angle(acc(x1 * x2.conj())) + k2
    elif n == 4:
        k1 = 0.5 * np.angle(acc(x1 * x3.conj()))
        k2 = np.angle(acc(x2 * x1.conj())) + k1
    else:
        raise ValueError(f"dead antenna must be 1..4, got {n}")
    return PhasePair(float(k1), float(k2))


def phases_event2(snap: SnapshotSet,
                  min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> PhasePair:
    """Steering phases when all four antennas are live.

    ``x1 x2* + x3* x4`` has phase ``kappa1 - kappa2`` and ``-x1 x4* + x3* x2``
    has phase ``kappa1 + kappa2``; the polarization terms add coherently.
    """
    _require_canonical(snap)
    x1, x2, x3, x4 = snap.samples
    d = np.angle(_accumulate(x1 * x2.conj() + x3.conj() * x4, snap, min_confidence, 2))
    s = np.angle(_accumulate(-x1 * x4.conj() + x3.conj() * x2, snap, min_confidence, 2))
    return PhasePair(float(0.5 * (s + d)), float(0.5 * (s - d)))


def cf_estimate(phases: PhasePair, r_over_lambda: float, eps_zero: float = 1e-9,
                event: Optional[EventDecision] = None) -> DoaEstimate:
    """Closed-form (theta, phi) from the steering phases."""
    if not r_over_lambda > 0:
        raise ValueError("r_over_lambda must be positive")
    kappa = phases.kappa
    if kappa < eps_zero or kappa == 0:
        return DoaEstimate(0.0, None, phases, "cf", event)
    phi = math.degrees(math.atan2(phases.kappa2, phases.kappa1)) % 360.0
    if phi >= 360.0:
        phi -= 360.0
    ratio = min(max(kappa / (2 * math.pi * r_over_lambda), 0.0), 1.0)
    return DoaEstimate(math.degrees(math.asin(ratio)), phi, phases, "cf", event)


@lru_cache(maxsize=32)
def _grid_kappas(grid: MusicGrid, r_over_lambda: float):
    th = np.radians(grid.thetas)
    ph = np.radians(grid.phis)
    kappa = 2 * np.pi * r_over_lambda * np.sin(th)
    k1 = kappa[:, None] * np.cos(ph)[None, :]
    k2 = kappa[:, None] * np.sin(ph)[None, :]
    return k1, k2


def _canonical_candidates(grid: MusicGrid, r_over_lambda: float, keep) -> np.ndarray:
    """Clean steering over the grid for the kept canonical elements, shape (Nt, Np, L)."""
    k1, k2 = _grid_kappas(grid, r_over_lambda)
    signs = _PHASE_SIGNS[list(keep)]
    psi = k1[..., None] * signs[:, 0] + k2[..., None] * signs[:, 1]
    return np.exp(1j * psi)


def music_spectrum(noise_subspace: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """``1 / ||E^H s||^2`` for every candidate steering vector (last axis)."""
    proj = candidates @ noise_subspace.conj()
    denom = np.sum(np.abs(proj) ** 2, axis=-1)
    return 1.0 / np.maximum(denom, np.finfo(float).tiny)


def _grid_argmax(noise_subspace: np.ndarray, candidates: np.ndarray, grid: MusicGrid):
    proj = candidates @ noise_subspace.conj()
    denom = np.sum(np.abs(proj) ** 2, axis=-1)
    # argmin of the denominator == argmax of the spectrum; first hit in row-major order
    i, j = np.unravel_index(int(np.argmin(denom)), denom.shape)
    theta = float(grid.thetas[i])
    phi = float(grid.phis[j]) if theta > 0 else None
    return theta, phi, i, j


def _grid_phases(grid: MusicGrid, r_over_lambda: float, i: int, j: int) -> PhasePair:
    k1, k2 = _grid_kappas(grid, r_over_lambda)
    return PhasePair(float(k1[i, j]), float(k2[i, j]))


def _live(n: Optional[int]) -> list[int]:
    return [k for k in range(4) if k != (n - 1 if n else 3)]


def cmusic_method1(snap: SnapshotSet, n: int, grid: MusicGrid = MusicGrid(),
                   noise_power: Optional[float] = None, r_over_lambda: float = 0.2,
                   event: Optional[EventDecision] = None) -> DoaEstimate:
    """C-MUSIC with the noise subspace taken as the null space of ``(R - sigma^2 I) F_n``."""
    _require_canonical(snap)
    s2 = snap.noise_power if noise_power is None else noise_power
    live = _live(n)
    x = snap.samples[live]
    r = x @ x.conj().T / snap.m_samples - s2 * np.eye(3)
    if not np.any(r):
        raise DegenerateDataError("live-antenna covariance is zero")
    e = right_null_space(r @ f_matrix(n), 2)
    cand = _canonical_candidates(grid, r_over_lambda, live)
    theta, phi, i, j = _grid_argmax(e, cand, grid)
    return DoaEstimate(theta, phi, _grid_phases(grid, r_over_lambda, i, j), "cmusic-m1", event)


def cmusic_method2(snap: SnapshotSet, event: EventDecision, grid: MusicGrid = MusicGrid(),
                   r_over_lambda: float = 0.2,
                   min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> DoaEstimate:
    """C-MUSIC on the covariance re-synthesized from estimated steering phases.

    Event 1 keeps the three live antennas; Event 2 drops antenna 4.
    """
    if event.dead is None:
        phases = phases_event2(snap, min_confidence)
    else:
        phases = phases_event1(snap, event.dead, min_confidence)
    live = _live(event.dead)
    psi = _PHASE_SIGNS[live] @ np.array([phases.kappa1, phases.kappa2])
    s_c = np.exp(1j * psi)
    eig = hermitian_eig(np.outer(s_c, s_c.conj()))
    e = eig.eigenvectors[:, 1:]
    cand = _canonical_candidates(grid, r_over_lambda, live)
    theta, phi, _, _ = _grid_argmax(e, cand, grid)
    return DoaEstimate(theta, phi, phases, "cmusic-m2", event)


def baseline_music(snap: SnapshotSet, arr: ArrayConfig, grid: MusicGrid = MusicGrid()) -> DoaEstimate:
    """Conventional 2-D MUSIC with polarization-blind unit-modulus steering."""
    if snap.n_elements != arr.n_elements:
        raise ValueError("snapshot rows do not match the array size")
    r = snap.samples @ snap.samples.conj().T / snap.m_samples
    if np.real(np.trace(r)) <= 0:
        raise DegenerateDataError("received data are identically zero")
    e = hermitian_eig(r).eigenvectors[:, 1:]
    th = np.radians(grid.thetas)
    ph = np.radians(grid.phis)
    beta = np.radians(arr.positions)
    kappa = 2 * np.pi * arr.radius * np.sin(th)
    psi = kappa[:, None, None] * np.cos(ph[None, :, None] - beta[None, None, :])
    theta, phi, _, _ = _grid_argmax(e, np.exp(1j * psi), grid)
    return DoaEstimate(theta, phi, None, "baseline-music")


def estimate(snap: SnapshotSet, cfg: ThresholdConfig, algorithm: str = "cf",
             grid: MusicGrid = MusicGrid(), array: ArrayConfig = ArrayConfig.canonical(),
             event: Optional[EventDecision] = None,
             min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> DoaEstimate:
    """Classify the event from received powers, then run ``algorithm`` for it.

    Pass ``event`` to reuse a decision already made on the same snapshots.
    """
    array.check_estimable()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if event is None:
        event = decide(snap, cfg)
    r = array.radius
    if algorithm == "cf":
        if event.dead is None:
            phases = phases_event2(snap, min_confidence)
        else:
            phases = phases_event1(snap, event.dead, min_confidence)
        eps = 1e-9 if snap.noise_power == 0 else 0.0
        return cf_estimate(phases, r, eps_zero=eps, event=event)
    if algorithm == "cmusic-m1":
        if event.dead is None:
            raise UnsupportedCombinationError("C-MUSIC Method 1 is not defined for event Omega2")
        return cmusic_method1(snap, event.dead, grid, cfg.noise_power, r, event)
    return cmusic_method2(snap, event, grid, r, min_confidence)
