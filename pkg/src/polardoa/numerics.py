"""Special functions and small dense eigen/null-space solvers.

The chi-square family is built on the regularized lower incomplete gamma
function, evaluated by its power series below ``a + 1`` and by a Lentz
continued fraction above. The Hermitian eigensolver is a cyclic complex
Jacobi iteration, adequate for the 3x3 and 4x4 covariances used here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ConvergenceError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _gamma_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cont_frac(a: float, x: float) -> float:
    # upper regularized Q(a, x) via modified Lentz
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cont_frac(a, x)


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), without cancellation."""
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cont_frac(a, x)


def chi2_cdf(dof: int, u: float) -> float:
    """Central chi-square CDF with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    return gamma_p(dof / 2.0, u / 2.0) if u > 0 else 0.0


def chi2_sf(dof: int, u: float) -> float:
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    return gamma_q(dof / 2.0, u / 2.0) if u > 0 else 1.0


def chi2_pdf(dof: int, u: float) -> float:
    if u <= 0:
        return 0.0
    a = dof / 2.0
    return math.exp((a - 1.0) * math.log(u) - u / 2.0 - a * math.log(2.0) - math.lgamma(a))


def chi2_cdf_inverse(dof: int, p: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Quantile of the central chi-square: safeguarded Newton inside a bisection bracket."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    lo, hi = 0.0, float(max(dof, 1))
    while chi2_cdf(dof, hi) < p:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ConvergenceError("could not bracket chi-square quantile")
    u = 0.5 * (lo + hi)
    for _ in range(max_iter):
        err = chi2_cdf(dof, u) - p
        if abs(err) <= tol:
            return u
        if err > 0:
            hi = u
        else:
            lo = u
        dens = chi2_pdf(dof, u)
        step = u - err / dens if dens > 0 else None
        u = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * _EPS * hi:
            return u
    raise ConvergenceError(f"chi-square inverse did not converge (dof={dof}, p={p})")


def noncentral_chi2_sf(dof: int, noncentrality: float, u: float, tail: float = 1e-15) -> float:
    """Survival function of the non-central chi-square as a Poisson mixture of central ones.

    The mixture is summed outward from the Poisson mode, so the cost grows with
    sqrt(noncentrality) rather than linearly. Whichever of the survival or
    distribution form is smaller at the mode is accumulated; because its
    central factor is monotone in the mixture index, each direction stops once
    the neglected mass is provably below ``tail``.
    """
    if noncentrality < 0:
        raise ValueError("noncentrality must be non-negative")
    if u <= 0:
        return 1.0
    lam = noncentrality / 2.0
    if lam == 0:
        return chi2_sf(dof, u)
    log_lam = math.log(lam)
    mode = int(lam)

    def weight(j: int) -> float:
        return math.exp(-lam + j * log_lam - math.lgamma(j + 1.0))

    use_sf = chi2_sf(dof + 2 * mode, u) <= 0.5
    # central factor: sf rises with j, cdf falls with j
    factor = (lambda j: chi2_sf(dof + 2 * j, u)) if use_sf else (lambda j: chi2_cdf(dof + 2 * j, u))

    total = 0.0
    limit = _MAX_ITER + int(40 * math.sqrt(lam) + 40)
    # upward from the mode
    for step, j in enumerate(range(mode, mode + limit + 1)):
        w, f = weight(j), factor(j)
        total += w * f
        ratio = lam / (j + 1.0)
        if ratio < 1.0:
            bound = w * ratio / (1.0 - ratio) * (1.0 if use_sf else f)
            if bound < tail:
                break
    else:
        raise ConvergenceError("non-central chi-square series did not terminate")
    # downward from just below the mode
    for j in range(mode - 1, max(mode - limit, -1), -1):
        w, f = weight(j), factor(j)
        total += w * f
        ratio = j / lam
        if j == 0:
            break
        if ratio < 1.0:
            bound = w * ratio / (1.0 - ratio) * (f if use_sf else 1.0)
            if bound < tail:
                break
    total = min(max(total, 0.0), 1.0)
    return total if use_sf else 1.0 - total


def noncentral_chi2_cdf(dof: int, noncentrality: float, u: float) -> float:
    return 1.0 - noncentral_chi2_sf(dof, noncentrality, u)


def gaussian_q(x: float) -> float:
    """Standard normal tail probability."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_inverse(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return -NormalDist().inv_cdf(p)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order; eigenvectors are the matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_eig(matrix, tol: float = 1e-12, max_sweeps: int = 100) -> EigenDecomposition:
    """Full eigendecomposition of a small Hermitian matrix by cyclic complex Jacobi."""
    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    skew = np.linalg.norm(a - a.conj().T)
    if skew > 1e-9 * max(np.linalg.norm(a), 1.0):
        raise ValueError(f"matrix is not Hermitian (|A - A^H| = {skew:.3g})")
    # symmetrize away rounding-level asymmetry
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if scale == 0:
        return EigenDecomposition(np.zeros(n), v)

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b <= _TINY:
                    continue
                phase = apq / b
                tau = (a[q, q].real - a[p, p].real) / (2.0 * b)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
                jpp, jpq = c, s
                jqp, jqq = -s * phase.conjugate(), c * phase.conjugate()
                colp, colq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = colp * jpp + colq * jqp
                a[:, q] = colp * jpq + colq * jqq
                rowp, rowq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = rowp * np.conj(jpp) + rowq * np.conj(jqp)
                a[q, :] = rowp * np.conj(jpq) + rowq * np.conj(jqq)
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = vp * jpp + vq * jqp
                v[:, q] = vp * jpq + vq * jqq
    else:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    w = np.real(np.diag(a))
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


def right_null_space(matrix, keep: int) -> np.ndarray:
    """The ``keep`` right singular vectors with smallest singular values, as columns."""
    a = np.asarray(matrix, dtype=complex)
    ncols = a.shape[1]
    if not 0 < keep < ncols:
        raise ValueError(f"keep must lie in [1, {ncols - 1}], got {keep}")
    _, _, vh = np.linalg.svd(a)
    return vh[ncols - keep:].conj().T
