"""Seeded Monte Carlo experiments, analytic curves and complexity accounting.

Every trial draws from its own substream keyed by ``(master_seed, point,
trial)``, so results do not depend on execution order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .detection import TECHNIQUES, ThresholdConfig, decide, prob_identify_event1, \
    prob_identify_event2, threshold
from .errors import DoaError
from .estimators import ALGORITHMS, MusicGrid, estimate
from .model import SIGNAL_MODELS, ArrayConfig, SourceParams, complex_normal, noise_power_for_rsnr, \
    steering_vector, synthesize, synthesize_batch, trial_seed

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

# relative magnitude below which a scenario element counts as dark when
# labelling the ground-truth event (quoted angles are rounded)
SCENARIO_DEAD_RTOL = 1e-4

OMEGA11_SCENARIO = SourceParams(theta=70.529, phi=30.0, gamma=60.0, eta=0.0)
EVENT2_SCENARIO = SourceParams(theta=10.0, phi=45.0, gamma=45.0, eta=90.0)

# substream tags
_RMSE, _EVENT, _PROB = 1, 2, 3
_PROB_CHUNK = 10_000


@dataclass
class SweepSpec:
    phi_start: float = 0.0
    phi_stop: float = 360.0
    phi_step: float = 0.5
    phi_values: Optional[list[float]] = None
    rsnr_db: float = 20.0

    def phis(self) -> list[float]:
        if self.phi_values is not None:
            return [float(v) for v in self.phi_values]
        if self.phi_step <= 0:
            raise ValueError("phi_step must be positive")
        count = (self.phi_stop - self.phi_start) / self.phi_step
        if abs(count - round(count)) > 1e-9:
            raise ValueError("phi_step must divide the sweep range")
        return [self.phi_start + k * self.phi_step for k in range(int(round(count)))]


@dataclass
class ExperimentConfig:
    scenario: SourceParams = OMEGA11_SCENARIO
    array: ArrayConfig = field(default_factory=ArrayConfig.canonical)
    m_samples: int = 50
    alpha: float = 0.001
    technique: str = "clt"
    signal_model: str = "gaussian-unit"
    rsnr_grid_db: list[float] = field(default_factory=lambda: [5.0, 10.0, 15.0, 20.0])
    trials: int = 1000
    master_seed: int = 0
    algorithms: list[str] = field(default_factory=lambda: ["cf", "cmusic-m1", "cmusic-m2"])
    grid: MusicGrid = field(default_factory=MusicGrid)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output_path: Optional[str] = None

    def validate(self) -> "ExperimentConfig":
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.m_samples < 1:
            raise ValueError("m_samples must be >= 1")
        if not self.rsnr_grid_db:
            raise ValueError("rsnr_grid_db must not be empty")
        if self.technique not in TECHNIQUES:
            raise ValueError(f"unknown technique {self.technique!r}")
        if self.signal_model not in SIGNAL_MODELS:
            raise ValueError(f"unknown signal model {self.signal_model!r}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "scenario": {"theta", "phi", "gamma", "eta"},
    "array": {"radius", "alignments"},
    "experiment": {"m_samples", "alpha", "technique", "signal_model", "rsnr_grid_db",
                   "trials", "master_seed", "algorithms"},
    "grid": {"theta_step", "phi_step"},
    "sweep": {"phi_start", "phi_stop", "phi_step", "phi_values", "rsnr_db"},
}


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - set(_SECTIONS) - {"output_path"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name, keys in _SECTIONS.items():
        extra = set(data.get(name, {})) - keys
        if extra:
            raise ValueError(f"unknown keys in [{name}]: {sorted(extra)}")
    cfg = ExperimentConfig()
    sc = data.get("scenario", {})
    if sc:
        cfg.scenario = replace(cfg.scenario, **{k: float(v) for k, v in sc.items()})
    ar = data.get("array", {})
    if ar:
        align = tuple(ar.get("alignments", cfg.array.alignments))
        cfg.array = ArrayConfig(len(align), float(ar.get("radius", cfg.array.radius)), align)
    for k, v in data.get("experiment", {}).items():
        setattr(cfg, k, v)
    if "grid" in data:
        cfg.grid = MusicGrid(**{k: float(v) for k, v in data["grid"].items()})
    if "sweep" in data:
        cfg.sweep = SweepSpec(**data["sweep"])
    cfg.output_path = data.get("output_path")
    cfg.rsnr_grid_db = [float(v) for v in cfg.rsnr_grid_db]
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))


def scenario_dead(arr: ArrayConfig, src: SourceParams) -> Optional[int]:
    return steering_vector(arr, src).dead_element(SCENARIO_DEAD_RTOL)


def _event_label(dead: Optional[int]) -> str:
    return "omega2" if dead is None else f"omega1,{dead}"


def wrap_degrees(d):
    return (np.asarray(d) + 180.0) % 360.0 - 180.0


def _rmse(errors: list[float]) -> Optional[float]:
    if not errors:
        return None
    return math.sqrt(float(np.sum(np.square(errors))) / len(errors))


class _Tally:
    """Per-algorithm error accumulator for one sweep point."""

    def __init__(self):
        self.theta, self.phi = [], []
        self.theta_zero = 0
        self.failures = 0

    def add(self, est, src: SourceParams):
        self.theta.append(est.theta_deg - src.theta)
        if est.phi_deg is None:
            self.theta_zero += 1
        else:
            self.phi.append(float(wrap_degrees(est.phi_deg - src.phi)))

    def row(self) -> dict:
        return {
            "rmse_phi_deg": _rmse(self.phi),
            "rmse_theta_deg": _rmse(self.theta),
            "trials_used": len(self.theta),
            "theta_zero_count": self.theta_zero,
            "failures": self.failures,
        }


def _run_trials(cfg: ExperimentConfig, src: SourceParams, noise_power: float, tag: int,
                point: int):
    """Synthesize, classify and estimate ``cfg.trials`` times at one operating point."""
    tcfg = ThresholdConfig(cfg.alpha, cfg.technique, noise_power, cfg.m_samples)
    tallies = {alg: _Tally() for alg in cfg.algorithms}
    events = []
    for t in range(cfg.trials):
        snap = synthesize(cfg.array, src, cfg.m_samples, noise_power, cfg.signal_model,
                          trial_seed(cfg.master_seed, tag, point, t))
        event = decide(snap, tcfg)
        events.append(event.dead)
        for alg in cfg.algorithms:
            try:
                est = estimate(snap, tcfg, alg, cfg.grid, cfg.array, event=event)
            except DoaError:
                tallies[alg].failures += 1
                continue
            tallies[alg].add(est, src)
    return tallies, events


RMSE_HEADER = ["rsnr_db", "noise_power", "algorithm", "event_label", "rmse_phi_deg",
               "rmse_theta_deg", "trials_used", "theta_zero_count", "failures",
               "misclassification_rate"]


def run_rmse_sweep(cfg: ExperimentConfig) -> list[dict]:
    """RMSE of every algorithm at each average-RSNR point."""
    cfg.validate()
    src = cfg.scenario
    a = steering_vector(cfg.array, src).compound
    dead = scenario_dead(cfg.array, src)
    rows = []
    for point, rsnr in enumerate(cfg.rsnr_grid_db):
        s2 = noise_power_for_rsnr(a, rsnr)
        log.info("rmse sweep: %s dB (sigma^2=%.4g)", rsnr, s2)
        tallies, events = _run_trials(cfg, src, s2, _RMSE, point)
        miss = sum(e != dead for e in events) / len(events)
        for alg in cfg.algorithms:
            rows.append({"rsnr_db": rsnr, "noise_power": s2, "algorithm": alg,
                         "event_label": _event_label(dead), **tallies[alg].row(),
                         "misclassification_rate": miss})
    return rows


EVENT_HEADER = ["phi_deg", "noise_power", "algorithm", "event_label", "freq_omega1_1",
                "freq_omega1_2", "freq_omega1_3", "freq_omega1_4", "freq_omega2",
                "rmse_phi_deg", "rmse_theta_deg", "trials_used", "theta_zero_count", "failures"]


def run_event_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Event classification frequencies and RMSE while the azimuth sweeps."""
    cfg.validate()
    rows = []
    for point, phi in enumerate(cfg.sweep.phis()):
        src = cfg.scenario.replace(phi=float(phi) % 360.0)
        a = steering_vector(cfg.array, src).compound
        s2 = noise_power_for_rsnr(a, cfg.sweep.rsnr_db)
        tallies, events = _run_trials(cfg, src, s2, _EVENT, point)
        freqs = {f"freq_omega1_{n}": events.count(n) / len(events) for n in range(1, 5)}
        freqs["freq_omega2"] = events.count(None) / len(events)
        label = _event_label(scenario_dead(cfg.array, src))
        for alg in cfg.algorithms:
            rows.append({"phi_deg": src.phi, "noise_power": s2, "algorithm": alg,
                         "event_label": label, **freqs, **tallies[alg].row()})
    return rows


PROB_HEADER = ["event_label", "technique", "rsnr_db", "noise_power", "threshold", "analytic",
               "empirical", "stderr", "classified", "trials"]


def run_probability_curves(cfg: ExperimentConfig,
                           techniques: Sequence[str] = TECHNIQUES) -> list[dict]:
    """Analytic event-identification probability against Monte Carlo frequency.

    ``empirical`` counts the exact event the analytic expression describes
    (the dark antenna alone below ``K``, or every antenna above it);
    ``classified`` counts what ``classify`` returns, which also credits the
    lowest-power rule when several antennas fall below ``K``.
    """
    cfg.validate()
    if cfg.signal_model != "constant-unit":
        raise ValueError("probability curves require the constant-unit signal model")
    m = cfg.m_samples
    a = steering_vector(cfg.array, cfg.scenario).compound
    dead = scenario_dead(cfg.array, cfg.scenario)
    signal_powers = np.ones(m)
    rows = []
    for point, rsnr in enumerate(cfg.rsnr_grid_db):
        s2 = noise_power_for_rsnr(a, rsnr)
        ks = {t: threshold(ThresholdConfig(cfg.alpha, t, s2, m)) for t in techniques}
        hits = {t: 0 for t in techniques}
        classified = {t: 0 for t in techniques}
        for chunk, start in enumerate(range(0, cfg.trials, _PROB_CHUNK)):
            size = min(_PROB_CHUNK, cfg.trials - start)
            rng = np.random.default_rng(trial_seed(cfg.master_seed, _PROB, point, chunk))
            x = synthesize_batch(a, m, s2, size, rng, cfg.signal_model)
            p = np.mean(np.abs(x) ** 2, axis=2)
            for t in techniques:
                below = p < ks[t]
                if dead is None:
                    hits[t] += int(np.sum(~below.any(axis=1)))
                    classified[t] += int(np.sum(~below.any(axis=1)))
                else:
                    others = np.delete(below, dead - 1, axis=1)
                    hits[t] += int(np.sum(below[:, dead - 1] & ~others.any(axis=1)))
                    masked = np.where(below, p, np.inf)
                    lowest = np.argmin(masked, axis=1)
                    classified[t] += int(np.sum(below.any(axis=1) & (lowest == dead - 1)))
        for t in techniques:
            if dead is None:
                analytic = prob_identify_event2(a, signal_powers, s2, ks[t], m)
            else:
                analytic = prob_identify_event1(a, signal_powers, s2, ks[t], m, dead=dead)
            rows.append({
                "event_label": _event_label(dead), "technique": t, "rsnr_db": rsnr,
                "noise_power": s2, "threshold": ks[t], "analytic": analytic,
                "empirical": hits[t] / cfg.trials,
                "stderr": math.sqrt(max(analytic * (1 - analytic), 0.0) / cfg.trials),
                "classified": classified[t] / cfg.trials, "trials": cfg.trials,
            })
    return rows


def type1_error_rate(m_samples: int, alpha: float, technique: str, trials: int,
                     seed: int = 0, noise_power: float = 1.0) -> float:
    """Fraction of noise-only antennas whose measured power exceeds ``K``."""
    k = threshold(ThresholdConfig(alpha, technique, noise_power, m_samples))
    exceed = 0
    for chunk, start in enumerate(range(0, trials, 100_000)):
        size = min(100_000, trials - start)
        rng = np.random.default_rng(trial_seed(seed, chunk))
        w = complex_normal(rng, (size, m_samples), noise_power)
        exceed += int(np.sum(np.mean(np.abs(w) ** 2, axis=1) > k))
    return exceed / trials


@dataclass(frozen=True)
class ComplexityParams:
    n_elements: int = 4
    m_samples: int = 50
    n_theta: int = 91
    n_phi: int = 360
    precision_p: int = 1024

    def __post_init__(self):
        if min(self.n_elements, self.m_samples, self.n_theta, self.n_phi, self.precision_p) <= 0:
            raise ValueError("complexity parameters must all be positive")


def complexity_counts(p: ComplexityParams, algorithm: str, event: int) -> float:
    """Real multiplications after the event is known, per algorithm and event."""
    n, m, lp = p.n_elements, p.m_samples, math.log2(p.precision_p)
    grid = p.n_theta * p.n_phi
    if event not in (1, 2):
        raise ValueError(f"event must be 1 or 2, got {event}")
    if algorithm == "cf":
        return (8 * m if event == 1 else 16 * m) + 6 + 4 * lp
    if algorithm == "cmusic-m1":
        if event == 2:
            raise ValueError("C-MUSIC Method 1 is not applicable to event 2")
        return ((n - 1) ** 2 * (4 * m + 4) - 2 * (n - 1) + 12 * (n - 1) ** 3
                + grid * (4 * n * n - 10 * n + 5))
    if algorithm == "cmusic-m2":
        if event == 1:
            return 8 * m + 2 * lp + 1 + 12 * (n - 1) ** 3 + grid * (4 * n * n - 10 * n + 5)
        return 16 * m + 2 * lp + 1 + 12 * n ** 3 + grid * (4 * n * n - 2 * n - 1)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def complexity_gain_db(p: ComplexityParams, algorithm: str, event: int) -> float:
    """How much cheaper CF is than ``algorithm``, in dB."""
    return 10 * math.log10(complexity_counts(p, algorithm, event) / complexity_counts(p, "cf", event))
