"""Dead-element detection on per-antenna received power.

An antenna whose measured power falls below the threshold ``K`` is declared
dark (hypothesis H0). ``K`` is designed so that a truly dark antenna, whose
power is pure noise, clears it with probability ``alpha`` only.

Antenna numbers are 1-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import SnapshotSet
from .numerics import chi2_cdf, chi2_cdf_inverse, noncentral_chi2_sf, q_inverse

TECHNIQUES = ("exact-chi2", "clt")


@dataclass(frozen=True)
class ThresholdConfig:
    alpha: float = 0.001
    technique: str = "exact-chi2"
    noise_power: float = 1.0
    m_samples: int = 50

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.technique not in TECHNIQUES:
            raise ValueError(f"unknown technique {self.technique!r}; expected one of {TECHNIQUES}")
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be positive, got {self.noise_power}")
        if self.m_samples < 1:
            raise ValueError(f"m_samples must be >= 1, got {self.m_samples}")


@dataclass(frozen=True)
class PowerReport:
    powers: tuple[float, ...]
    threshold: float
    below: tuple[int, ...] = field(default=())


@dataclass(frozen=True)
class EventDecision:
    """``dead`` is the antenna declared dark (event Omega1,n) or None for Omega2."""

    dead: Optional[int]
    report: Optional[PowerReport] = None

    @property
    def kind(self) -> str:
        return "omega2" if self.dead is None else "omega1"

    @property
    def label(self) -> str:
        return "omega2" if self.dead is None else f"omega1,{self.dead}"


def measured_power(snap: SnapshotSet, n: int) -> float:
    """Average received power at antenna ``n``."""
    if not 1 <= n <= snap.n_elements:
        raise IndexError(f"antenna {n} out of range 1..{snap.n_elements}")
    return float(np.mean(np.abs(snap.samples[n - 1]) ** 2))


def measured_powers(snap: SnapshotSet) -> np.ndarray:
    return np.mean(np.abs(snap.samples) ** 2, axis=1)


def threshold(cfg: ThresholdConfig) -> float:
    """Decision level ``K`` such that a noise-only antenna exceeds it with probability alpha.

    exact-chi2 inverts the chi-square law of ``2M P / sigma^2``; clt uses the
    Gaussian approximation with mean ``sigma^2`` and variance ``sigma^4 / M``.
    """
    m, s2 = cfg.m_samples, cfg.noise_power
    if cfg.technique == "exact-chi2":
        return s2 / (2 * m) * chi2_cdf_inverse(2 * m, 1.0 - cfg.alpha)
    return s2 * (1.0 + q_inverse(cfg.alpha) / math.sqrt(m))


def report_powers(powers: Sequence[float], k: float) -> PowerReport:
    p = tuple(float(v) for v in powers)
    return PowerReport(p, float(k), tuple(i + 1 for i, v in enumerate(p) if v < k))


def classify(powers, k: Optional[float] = None) -> EventDecision:
    """Declare the lowest below-threshold antenna dark, else Omega2.

    ``powers`` is either a PowerReport or a sequence of measured powers with ``k``.
    """
    report = powers if isinstance(powers, PowerReport) else report_powers(powers, k)
    if not report.below:
        return EventDecision(None, report)
    # min() keeps the first (lowest index) on exact ties
    dead = min(report.below, key=lambda n: report.powers[n - 1])
    return EventDecision(dead, report)


def decide(snap: SnapshotSet, cfg: ThresholdConfig) -> EventDecision:
    return classify(measured_powers(snap), threshold(cfg))


def noncentrality(a_n: complex, signal_powers, noise_power: float) -> float:
    """Non-centrality of ``2M P_n / sigma^2``; uses the power ``|a_n|^2``."""
    if not noise_power > 0:
        raise ValueError("noise_power must be positive")
    return float(2.0 * abs(a_n) ** 2 * np.sum(signal_powers) / noise_power)


def prob_h0_given_omega1(k: float, noise_power: float, m_samples: int) -> float:
    """Probability that a dark antenna's power stays below ``k``."""
    if not noise_power > 0:
        raise ValueError("noise_power must be positive")
    return chi2_cdf(2 * m_samples, 2 * m_samples * k / noise_power)


def _compound(steering) -> np.ndarray:
    return np.asarray(getattr(steering, "compound", steering), dtype=complex)


def prob_identify_event1(steering, signal_powers, noise_power: float, k: float,
                         m_samples: int, dead: Optional[int] = None,
                         rtol: float = 1e-12) -> float:
    """Probability that the dark antenna alone falls below ``k``.

    ``dead`` defaults to the unique element with ``|a_n| < rtol * max|a|``;
    its residual response, if any, is ignored.
    """
    a = _compound(steering)
    if dead is None:
        mag = np.abs(a)
        dark = np.flatnonzero(mag < rtol * mag.max())
        if len(dark) != 1:
            raise ValueError(f"expected exactly one dark element, found {len(dark)}")
        dead = int(dark[0]) + 1
    u = 2 * m_samples * k / noise_power
    prob = prob_h0_given_omega1(k, noise_power, m_samples)
    for n, a_n in enumerate(a, start=1):
        if n != dead:
            prob *= noncentral_chi2_sf(2 * m_samples, noncentrality(a_n, signal_powers, noise_power), u)
    return prob


def prob_identify_event2(steering, signal_powers, noise_power: float, k: float,
                         m_samples: int) -> float:
    """Probability that every antenna clears ``k``."""
    a = _compound(steering)
    if np.any(a == 0):
        raise ValueError("event 2 requires every element response to be nonzero")
    u = 2 * m_samples * k / noise_power
    prob = 1.0
    for a_n in a:
        prob *= noncentral_chi2_sf(2 * m_samples, noncentrality(a_n, signal_powers, noise_power), u)
    return prob
