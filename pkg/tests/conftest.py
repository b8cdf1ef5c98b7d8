import numpy as np
import pytest

from polardoa import ArrayConfig, SourceParams, steering_vector

_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _report(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
        if detail:
            line += f" :: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def canonical():
    return ArrayConfig.canonical()


def oracle_steering_phase(r_over_lambda, theta_deg, phi_deg, n_elements=4):
    """Spatial phase term, written out independently of the package."""
    beta = 2 * np.pi * np.arange(n_elements) / n_elements
    th, ph = np.radians(theta_deg), np.radians(phi_deg)
    return np.exp(1j * 2 * np.pi * r_over_lambda * np.sin(th) * np.cos(ph - beta))


def oracle_nearest_node(theta, phi, keep, r_over_lambda=0.2):
    """Grid node whose kept-element steering is closest to truth in the subspace sense."""
    thetas = np.arange(0, 91, dtype=float)
    phis = np.arange(0, 360, dtype=float)
    truth = oracle_steering_phase(r_over_lambda, theta, phi)[keep]
    th, ph = np.meshgrid(np.radians(thetas), np.radians(phis), indexing="ij")
    beta = 2 * np.pi * np.arange(4) / 4
    cand = np.exp(1j * 2 * np.pi * r_over_lambda * np.sin(th)[..., None]
                  * np.cos(ph[..., None] - beta))[..., keep]
    score = np.abs(cand @ truth.conj()) ** 2
    i, j = np.unravel_index(np.argmax(score), score.shape)
    return thetas[i], phis[j]


def random_source(rng, theta_range=(5.0, 85.0)):
    return SourceParams(theta=float(rng.uniform(*theta_range)), phi=float(rng.uniform(0, 360)),
                        gamma=float(rng.uniform(5, 85)), eta=float(rng.uniform(0, 360)))


def compound(src, arr=None):
    return steering_vector(arr or ArrayConfig.canonical(), src).compound
