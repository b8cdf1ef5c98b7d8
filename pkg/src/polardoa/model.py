"""Array geometry, polarized field response and snapshot synthesis.

A uniform circular array of short dipoles lies in the xy-plane. Element ``n``
(1-based) sits at azimuth ``beta_n = 360 (n-1) / N`` and its dipole axis makes
angle ``zeta_n`` with the x-axis. Angles are degrees at every public
interface; radii are expressed in wavelengths (r / lambda).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

SIGNAL_MODELS = ("gaussian-unit", "constant-unit")

CANONICAL_ALIGNMENT = (0.0, 45.0, 90.0, 135.0)
DEFAULT_RADIUS = 0.2
MAX_RADIUS = 0.25


def canonical_alignment() -> list[float]:
    """Dipole alignments that keep at most one element dark for any source."""
    return list(CANONICAL_ALIGNMENT)


def validate_alignment(zetas: Sequence[float], atol: float = 1e-9) -> bool:
    """True iff no two dipoles are parallel (alignments distinct modulo 180 deg)."""
    z = np.mod(np.asarray(zetas, dtype=float), 180.0)
    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            d = abs(z[i] - z[j])
            if min(d, 180.0 - d) <= atol:
                return False
    return True


@dataclass(frozen=True)
class ArrayConfig:
    """UCA geometry.

    ``radius`` is r / lambda. Estimators require the canonical four-element
    layout with ``radius <= 0.25`` so every phase used by the closed-form
    phase estimators stays on the principal branch.
    """

    n_elements: int = 4
    radius: float = DEFAULT_RADIUS
    alignments: tuple[float, ...] = CANONICAL_ALIGNMENT

    def __post_init__(self):
        object.__setattr__(self, "alignments", tuple(float(z) for z in self.alignments))
        if self.n_elements < 3:
            raise ValueError(f"need at least 3 elements, got {self.n_elements}")
        if len(self.alignments) != self.n_elements:
            raise ValueError(
                f"{len(self.alignments)} alignments given for {self.n_elements} elements"
            )
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @classmethod
    def canonical(cls, radius: float = DEFAULT_RADIUS) -> "ArrayConfig":
        return cls(4, radius, CANONICAL_ALIGNMENT)

    @property
    def positions(self) -> tuple[float, ...]:
        return tuple(360.0 * n / self.n_elements for n in range(self.n_elements))

    @property
    def is_canonical(self) -> bool:
        return self.n_elements == 4 and np.allclose(self.alignments, CANONICAL_ALIGNMENT)

    def check_estimable(self) -> None:
        """Raise ValueError unless the geometry satisfies the estimator preconditions."""
        if not self.is_canonical:
            raise ValueError("estimators require the canonical 4-element alignment [0, 45, 90, 135]")
        if self.radius > MAX_RADIUS:
            raise ValueError(f"radius {self.radius} exceeds r/lambda <= {MAX_RADIUS}")


@dataclass(frozen=True)
class SourceParams:
    """Ground-truth DOA and polarization of the single source, in degrees.

    gamma = 90 is admitted so the all-dark case (theta = gamma = 90) can be
    represented.
    """

    theta: float
    phi: float
    gamma: float
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 90.0:
            raise ValueError(f"theta must lie in [0, 90], got {self.theta}")
        if not 0.0 <= self.phi < 360.0:
            raise ValueError(f"phi must lie in [0, 360), got {self.phi}")
        if not 0.0 <= self.gamma <= 90.0:
            raise ValueError(f"gamma must lie in [0, 90], got {self.gamma}")
        if not 0.0 <= self.eta < 360.0:
            raise ValueError(f"eta must lie in [0, 360), got {self.eta}")

    def replace(self, **changes) -> "SourceParams":
        kw = dict(theta=self.theta, phi=self.phi, gamma=self.gamma, eta=self.eta)
        kw.update(changes)
        return SourceParams(**kw)


@dataclass(frozen=True)
class FieldComponents:
    e_x: complex
    e_y: complex

    @property
    def degenerate(self) -> bool:
        return self.e_x == 0 and self.e_y == 0


@dataclass(frozen=True)
class SteeringVector:
    """Compound manifold ``a_n = e_n * a_s_n`` with its two factors."""

    compound: np.ndarray
    field_part: np.ndarray
    phase_part: np.ndarray

    def dead_element(self, rtol: float = 1e-12) -> Optional[int]:
        """1-based index of the single element with ``|a_n| < rtol * max|a|``, if any.

        Returns None when every element is alive; raises ValueError when more
        than one element is dark (degenerate source).
        """
        mag = np.abs(self.compound)
        top = mag.max()
        if top == 0:
            raise ValueError("all elements are dark (theta = gamma = 90)")
        dark = np.flatnonzero(mag < rtol * top)
        if len(dark) > 1:
            raise ValueError(f"elements {list(dark + 1)} are simultaneously dark")
        return int(dark[0]) + 1 if len(dark) else None


@dataclass(frozen=True)
class SnapshotSet:
    """N x M complex samples plus the powers used to generate them."""

    samples: np.ndarray
    noise_power: float
    signal_powers: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=complex)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ValueError(f"samples must be an N x M matrix with M >= 1, got shape {x.shape}")
        if self.noise_power < 0:
            raise ValueError("noise_power must be non-negative")
        object.__setattr__(self, "samples", x)

    @property
    def n_elements(self) -> int:
        return self.samples.shape[0]

    @property
    def m_samples(self) -> int:
        return self.samples.shape[1]

    def scaled(self, c: complex) -> "SnapshotSet":
        return SnapshotSet(self.samples * c, self.noise_power * abs(c) ** 2,
                           self.signal_powers, self.seed)


def field_components(src: SourceParams) -> FieldComponents:
    th, ph, ga, et = np.radians([src.theta, src.phi, src.gamma, src.eta])
    # exact zeros at 90 deg so the all-dark case is detected without rounding residue
    cos_th = 0.0 if src.theta == 90.0 else np.cos(th)
    cos_ga = 0.0 if src.gamma == 90.0 else np.cos(ga)
    pol = np.exp(1j * et) * np.sin(ga) * cos_th
    e_x = pol * np.cos(ph) - np.sin(ph) * cos_ga
    e_y = pol * np.sin(ph) + np.cos(ph) * cos_ga
    return FieldComponents(complex(e_x), complex(e_y))


def element_voltage(f: FieldComponents, zeta: float) -> complex:
    z = np.radians(zeta)
    return f.e_x * np.cos(z) + f.e_y * np.sin(z)


def steering_phases(arr: ArrayConfig, theta: float, phi: float) -> np.ndarray:
    """Geometric phases ``2 pi (r/lambda) sin(theta) cos(phi - beta_n)`` in radians."""
    kappa = 2 * np.pi * arr.radius * np.sin(np.radians(theta))
    beta = np.radians(arr.positions)
    return kappa * np.cos(np.radians(phi) - beta)


def steering_vector(arr: ArrayConfig, src: SourceParams) -> SteeringVector:
    f = field_components(src)
    e = np.array([element_voltage(f, z) for z in arr.alignments])
    a_s = np.exp(1j * steering_phases(arr, src.theta, src.phi))
    return SteeringVector(compound=e * a_s, field_part=e, phase_part=a_s)


def average_rsnr(a: np.ndarray, noise_power: float, signal_power: float = 1.0) -> float:
    """Mean over elements of ``|a_n|^2 P_s / sigma^2`` (linear)."""
    return float(np.mean(np.abs(a) ** 2) * signal_power / noise_power)


def noise_power_for_rsnr(a: np.ndarray, rsnr_db: float, signal_power: float = 1.0) -> float:
    """Noise power that puts the average received SNR at ``rsnr_db``."""
    return float(np.mean(np.abs(a) ** 2) * signal_power / 10 ** (rsnr_db / 10))


def trial_seed(master_seed: int, *index: int) -> int:
    """64-bit seed for the substream identified by ``(master_seed, *index)``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(i) for i in index))
    return int(ss.generate_state(1, np.uint64)[0])


def complex_normal(rng: np.random.Generator, shape, power: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian draws with ``E|z|^2 = power``."""
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z * np.sqrt(power / 2)


def draw_signal(rng: np.random.Generator, m: int, signal_model: str, batch=()) -> np.ndarray:
    if signal_model == "gaussian-unit":
        return complex_normal(rng, (*batch, m))
    if signal_model == "constant-unit":
        return np.ones((*batch, m), dtype=complex)
    raise ValueError(f"unknown signal model {signal_model!r}; expected one of {SIGNAL_MODELS}")


def synthesize(arr: ArrayConfig, src: SourceParams, m_samples: int, noise_power: float,
               signal_model: str = "gaussian-unit", seed: int = 0) -> SnapshotSet:
    """Draw ``x(m) = a s(m) + w(m)`` for m = 1..M; deterministic in ``seed``."""
    if m_samples < 1:
        raise ValueError(f"m_samples must be >= 1, got {m_samples}")
    if noise_power < 0:
        raise ValueError(f"noise_power must be >= 0, got {noise_power}")
    a = steering_vector(arr, src).compound
    rng = np.random.default_rng(seed)
    s = draw_signal(rng, m_samples, signal_model)
    w = complex_normal(rng, (arr.n_elements, m_samples), noise_power)
    x = np.outer(a, s) + w
    return SnapshotSet(x, float(noise_power), np.abs(s) ** 2, int(seed))


def synthesize_batch(a: np.ndarray, m_samples: int, noise_power: float, trials: int,
                     rng: np.random.Generator, signal_model: str = "gaussian-unit") -> np.ndarray:
    """Vectorized draw of ``trials`` snapshot matrices, shape (trials, N, M)."""
    a = np.asarray(a, dtype=complex)
    s = draw_signal(rng, m_samples, signal_model, batch=(trials,))
    w = complex_normal(rng, (trials, len(a), m_samples), noise_power)
    return a[None, :, None] * s[:, None, :] + w


def omega1_source(theta: float, phi: float, dead: int) -> SourceParams:
    """A linearly polarized source that darkens antenna ``dead`` of the canonical array.

    Solves ``e_n = 0`` for gamma with eta in {0, 180}: the dipole at
    ``zeta_n`` sees ``sin(gamma) cos(theta) cos(phi - zeta_n) = sin(phi - zeta_n) cos(gamma)``.
    """
    if theta >= 90.0:
        raise ValueError("theta must be below 90 deg")
    d = np.radians(phi - CANONICAL_ALIGNMENT[dead - 1])
    ratio = np.sin(d) / (np.cos(np.radians(theta)) * np.cos(d)) if np.cos(d) != 0 else np.inf
    gamma = np.degrees(np.arctan(abs(ratio)))
    eta = 0.0 if ratio >= 0 else 180.0
    return SourceParams(theta, phi, float(min(gamma, 90.0)), eta)
