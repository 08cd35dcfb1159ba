"""
Spectral model of the empirical delta operator and its limiting quadratic form.

The integral operator ``f -> int delta(., z) f(z) dtheta_n(z)`` is the matrix
``Delta / n``.  Its eigenpairs give the weights ``lambda_k`` and, after
Nystrom scaling ``phi_k(z_t) = sqrt(n) u_k[t]``, eigenfunction scores that
are orthonormal in L2(theta_n).  A Bartlett long-run covariance of the
scores describes the Gaussian vector ``zeta``; the null law of ``n * dcov``
is then simulated as ``sum_k lambda_k zeta_k**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DeltaMatrix, PairedSample, centered_matrices, delta_matrix
from .seeding import replication_rng

# relative tolerance for negative eigenvalues of Delta / n
NEGATIVE_TOL = 1e-8
DEFAULT_TRUNCATION = 0.999
MAX_COMPONENTS = 100
# draws per independently seeded chunk in simulate_null
CHUNK = 10_000


class NegativeSpectrumError(ValueError):
    """The delta matrix has materially negative eigenvalues.

    This signals a space that is not of negative type (or a bug upstream).
    """


@dataclass(frozen=True, eq=False)
class SpectralModel:
    n: int
    eigenvalues: np.ndarray
    scores: np.ndarray
    trace_full: float
    all_eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def kept(self) -> int:
        return len(self.eigenvalues)

    @property
    def truncation_loss(self) -> float:
        if self.trace_full <= 0:
            return 0.0
        return 1.0 - float(self.eigenvalues.sum()) / self.trace_full


@dataclass(frozen=True, eq=False)
class LongRunCovariance:
    sigma: np.ndarray
    bandwidth: int
    kernel: str = "bartlett"


@dataclass(frozen=True, eq=False)
class NullSample:
    draws: np.ndarray
    reps: int
    seed: int | None

    def mean(self) -> float:
        return float(self.draws.mean())


def empirical_spectrum(delta, truncation: float = DEFAULT_TRUNCATION,
                       max_components: int = MAX_COMPONENTS) -> SpectralModel:
    """Eigen-decompose ``Delta / n`` and keep the leading components.

    Eigenvalues down to ``-1e-8 * lambda_max`` are clipped to zero; anything
    more negative raises :class:`NegativeSpectrumError`.  The smallest ``K``
    whose eigenvalues reach ``truncation * trace_full`` is kept, capped at
    ``min(n, max_components)``.
    """
    values = np.asarray(getattr(delta, "values", delta), dtype=float)
    n = values.shape[0]
    if not np.allclose(values, values.T, rtol=0, atol=1e-12 * max(1.0, np.abs(values).max())):
        raise ValueError("delta matrix must be symmetric")
    if not 0 < truncation <= 1:
        raise ValueError("truncation must lie in (0, 1]")
    w, u = np.linalg.eigh(values / n)
    order = np.argsort(w)[::-1]
    w, u = w[order], u[:, order]
    lam_max = max(float(w[0]), 0.0)
    if w[-1] < -NEGATIVE_TOL * lam_max or (lam_max == 0.0 and w[-1] < -1e-300):
        raise NegativeSpectrumError(
            f"smallest eigenvalue {w[-1]:.3e} is below -{NEGATIVE_TOL:g} * {lam_max:.3e}")
    w = np.clip(w, 0.0, None)
    trace_full = float(w.sum())
    cap = min(n, max_components)
    if trace_full > 0:
        cum = np.cumsum(w)
        k = int(np.searchsorted(cum, truncation * trace_full * (1 - 1e-15)) + 1)
        k = min(k, cap)
    else:
        k = 0
    scores = math.sqrt(n) * u[:, :k].T
    return SpectralModel(n, w[:k].copy(), scores, trace_full, w, u)


def auto_bandwidth(n: int) -> int:
    """Default HAC bandwidth ``floor(n ** (1/3))``."""
    b = int(math.floor(n ** (1.0 / 3.0) + 1e-9))
    return min(b, n - 1)


def bartlett_weights(bandwidth: int) -> np.ndarray:
    lags = np.arange(bandwidth + 1)
    return 1.0 - lags / (bandwidth + 1.0)


def psd_project(sigma: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues of a symmetric matrix to zero."""
    sym = 0.5 * (sigma + sigma.T)
    w, v = np.linalg.eigh(sym)
    if np.all(w >= 0):
        return sym
    return (v * np.clip(w, 0.0, None)) @ v.T


def long_run_covariance(model: SpectralModel, bandwidth="auto") -> LongRunCovariance:
    """Bartlett-weighted long-run covariance of the eigenfunction scores.

    ``sigma_ij = sum_{|d|<=b} w(d) / (n-|d|) * sum_t s_i[t] s_j[t+d]`` with
    ``w(d) = 1 - |d|/(b+1)``, projected onto the PSD cone.
    """
    if model.kept < 1:
        raise ValueError("long_run_covariance needs at least one kept component")
    n = model.n
    b = auto_bandwidth(n) if bandwidth in ("auto", None) else int(bandwidth)
    if b < 0 or b >= n:
        raise ValueError(f"bandwidth must lie in [0, n-1], got {b} for n={n}")
    s = model.scores
    weights = bartlett_weights(b)
    sigma = (s @ s.T) / n
    for d in range(1, b + 1):
        gamma = (s[:, :-d] @ s[:, d:].T) / (n - d)
        sigma = sigma + weights[d] * (gamma + gamma.T)
    return LongRunCovariance(psd_project(sigma), b)


def _sqrt_factor(sigma: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (sigma + sigma.T))
    scale = max(float(np.abs(w).max()), 1e-300)
    if w.min() < -1e-10 * scale:
        raise ValueError("covariance is not positive semidefinite; project it first")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def simulate_null(model: SpectralModel, lrc: LongRunCovariance | np.ndarray | None,
                  reps: int, seed=0) -> NullSample:
    """Draw ``sum_k lambda_k zeta_k**2`` with ``zeta ~ N(0, sigma)``.

    Draws are produced in chunks of ``CHUNK`` replications, each from its own
    stream derived from ``seed`` and the chunk index, so results do not
    depend on how chunks are scheduled.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    lam = np.asarray(model.eigenvalues, dtype=float)
    k = len(lam)
    if k == 0:
        return NullSample(np.zeros(reps), reps, seed)
    sigma = np.eye(k) if lrc is None else np.asarray(getattr(lrc, "sigma", lrc), dtype=float)
    if sigma.shape != (k, k):
        raise ValueError(f"sigma has shape {sigma.shape}, expected {(k, k)}")
    root = _sqrt_factor(sigma)
    draws = np.empty(reps)
    for chunk, start in enumerate(range(0, reps, CHUNK)):
        stop = min(start + CHUNK, reps)
        rng = replication_rng(seed, chunk)
        zeta = rng.standard_normal((stop - start, k)) @ root
        draws[start:stop] = (zeta**2) @ lam
    return NullSample(draws, reps, seed)


def spectral_model(sample: PairedSample, truncation: float = DEFAULT_TRUNCATION,
                   max_components: int = MAX_COMPONENTS) -> SpectralModel:
    a, b = centered_matrices(sample)
    return empirical_spectrum(delta_matrix(a, b), truncation, max_components)


@dataclass(frozen=True)
class TraceReport:
    trace: float
    product: float
    gap: float
    diagonal_mean: float


def trace_identity_check(sample: PairedSample | DeltaMatrix) -> TraceReport:
    """Compare the untruncated eigenvalue sum with ``D(mu_n) * D(nu_n)``."""
    if isinstance(sample, PairedSample):
        a, b = centered_matrices(sample)
        delta = delta_matrix(a, b)
    else:
        delta = sample
        a, b = delta.x, delta.y
    n = delta.n
    w = np.linalg.eigvalsh(delta.values / n)
    trace = math.fsum(w.tolist())
    diag = math.fsum(np.diag(delta.values).tolist()) / n
    product = a.grand_mean * b.grand_mean
    return TraceReport(trace, product, abs(trace - product), diag)


def spectral_report(model: SpectralModel, lrc: LongRunCovariance | None, seed) -> dict:
    return {
        "n": model.n,
        "eigenvalues": model.eigenvalues.tolist(),
        "kept": model.kept,
        "trace_full": model.trace_full,
        "bandwidth": None if lrc is None else lrc.bandwidth,
        "sigma": None if lrc is None else lrc.sigma.ravel().tolist(),
        "seed": seed,
    }
