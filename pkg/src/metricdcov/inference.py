"""
Independence tests based on ``n * dcov``.

Three calibrations are offered:

* ``spectral`` simulates the limiting quadratic form from the empirical
  spectrum and a long-run covariance of the eigenfunction scores, so it
  accounts for serial dependence;
* ``block_bootstrap`` resamples X and Y with independent circular block
  bootstraps, which breaks cross-dependence and keeps serial dependence;
* ``permutation`` shuffles Y against X and is only valid for iid data.

p-values use the add-one rule ``(1 + #{null >= statistic}) / (reps + 1)``.
"""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import CenteredMatrix, PairedSample, centered_matrices, dcov_from_delta, delta_matrix
from .spectrum import (
    DEFAULT_TRUNCATION,
    MAX_COMPONENTS,
    empirical_spectrum,
    long_run_covariance,
    simulate_null,
)
from .seeding import replication_rng

METHODS = ("spectral", "block_bootstrap", "permutation")
MIN_SPECTRAL_N = 10
# relative tolerance when comparing null draws with the statistic (float ties)
TIE_RTOL = 1e-12
MAX_EXACT_N = 8


class DependenceWarning(UserWarning):
    """A test that assumes iid data was applied to a serially dependent source."""


@dataclass
class TestResult:
    statistic: float
    p_value: float
    method: str
    reps: int
    null_draws: np.ndarray
    seed: int | None
    config: dict = field(default_factory=dict)
    n: int = 0
    degenerate: bool = False

    __test__ = False  # not a pytest class

    def rejects(self, level: float = 0.05) -> bool:
        return self.p_value <= level

    def to_dict(self, include_draws: bool = False) -> dict:
        out = {
            "method": self.method,
            "n": self.n,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "reps": self.reps,
            "seed": self.seed,
            "degenerate": self.degenerate,
            "config": self.config,
        }
        if include_draws:
            out["null_draws"] = self.null_draws.tolist()
        return out


def add_one_pvalue(statistic: float, null_draws) -> float:
    draws = np.asarray(null_draws, dtype=float)
    threshold = statistic - TIE_RTOL * max(abs(statistic), 1e-300)
    return (1 + int(np.count_nonzero(draws >= threshold))) / (len(draws) + 1)


def _centered_fast(d: np.ndarray) -> np.ndarray:
    rows = d.mean(axis=1)
    return d - (rows[:, None] + rows[None, :]) + rows.mean()


def _ndcov_fast(a: np.ndarray, b: np.ndarray) -> float:
    """``n * dcov`` from two centred matrices (numpy summation, resampling path)."""
    return float(np.einsum("ij,ij->", a, b)) / a.shape[0]


def _atom_codes(d: np.ndarray):
    """Group points at distance zero; return (codes, atom distance matrix)."""
    zero = d == 0
    first = np.argmax(zero, axis=1)  # lowest index of each point's group
    reps, codes = np.unique(first, return_inverse=True)
    return codes.ravel(), d[np.ix_(reps, reps)]


class _Resampler:
    """``n * dcov`` of the re-indexed sample ``(x[ix], y[iy])``.

    Samples with few distinct points are reduced to the joint count table of
    their atoms, which gives the same statistic at a cost independent of n.
    Otherwise the distance matrices are re-indexed and centred directly.
    """

    MAX_CELLS = 4096

    def __init__(self, dx: np.ndarray, dy: np.ndarray):
        self.n = dx.shape[0]
        self.dx, self.dy = dx, dy
        self.atoms = None
        cx, ax = _atom_codes(dx)
        cy, ay = _atom_codes(dy)
        if len(ax) * len(ay) <= min(self.MAX_CELLS, self.n):
            self.atoms = (cx, ax, cy, ay)

    def __call__(self, ix, iy) -> float:
        if self.atoms is None:
            return _ndcov_fast(_centered_fast(self.dx[np.ix_(ix, ix)]),
                               _centered_fast(self.dy[np.ix_(iy, iy)]))
        cx, ax, cy, ay = self.atoms
        mx, my = len(ax), len(ay)
        counts = np.bincount(cx[ix] * my + cy[iy], minlength=mx * my).reshape(mx, my)
        p = counts / self.n
        px, py = p.sum(axis=1), p.sum(axis=0)
        rx, ry = ax @ px, ay @ py
        gx = ax - (rx[:, None] + rx[None, :]) + px @ rx
        gy = ay - (ry[:, None] + ry[None, :]) + py @ ry
        return self.n * float(np.sum((gx @ p @ gy) * p))


def _map_reps(func, reps: int, threads: int) -> np.ndarray:
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.fromiter(pool.map(func, range(reps)), dtype=float, count=reps)
    return np.fromiter(map(func, range(reps)), dtype=float, count=reps)


def spectral_test(sample: PairedSample, reps: int = 999, seed=0, *, bandwidth="auto",
                  truncation: float = DEFAULT_TRUNCATION,
                  max_components: int = MAX_COMPONENTS) -> TestResult:
    """Calibrate ``n * dcov`` against the simulated limiting quadratic form."""
    n = sample.n
    if n < MIN_SPECTRAL_N:
        raise ValueError(f"spectral_test needs n >= {MIN_SPECTRAL_N}, got {n}")
    a, b = centered_matrices(sample)
    delta = delta_matrix(a, b)
    statistic = n * dcov_from_delta(delta)
    model = empirical_spectrum(delta, truncation, max_components)
    config = {"bandwidth": bandwidth, "truncation": truncation}
    if model.kept == 0:
        return TestResult(statistic, 1.0, "spectral", reps, np.zeros(0), seed,
                          config, n, degenerate=True)
    lrc = long_run_covariance(model, bandwidth)
    config["bandwidth"] = lrc.bandwidth
    config["kept"] = model.kept
    null = simulate_null(model, lrc, reps, seed)
    return TestResult(statistic, add_one_pvalue(statistic, null.draws), "spectral", reps,
                      null.draws, seed, config, n)


def auto_block_length(n: int) -> int:
    return max(1, int(math.floor(n ** (1.0 / 3.0) + 1e-9)))


def circular_block_indices(n: int, block_length: int, rng) -> np.ndarray:
    """Index sequence of a circular moving-block resample of length ``n``."""
    blocks = -(-n // block_length)
    starts = rng.integers(n, size=blocks)
    idx = (starts[:, None] + np.arange(block_length)[None, :]) % n
    return idx.ravel()[:n]


def block_bootstrap_test(sample: PairedSample, block_length="auto", reps: int = 499, seed=0,
                         *, single_stream: bool = False, threads: int = 1) -> TestResult:
    """Calibrate ``n * dcov`` with independent circular block bootstraps of X and Y.

    With ``single_stream=True`` the same index resample is applied to both
    series (pairs kept); this is a diagnostic mode, not a test of
    independence.
    """
    n = sample.n
    if reps < 1:
        raise ValueError("reps must be >= 1")
    b = auto_block_length(n) if block_length in ("auto", None) else int(block_length)
    if not 1 <= b <= n:
        raise ValueError(f"block_length must lie in [1, n], got {b}")
    a, bm = centered_matrices(sample)
    statistic = n * dcov_from_delta(delta_matrix(a, bm))
    resampled = _Resampler(sample.space_x.pairwise(sample.xs), sample.space_y.pairwise(sample.ys))

    def one(r: int) -> float:
        rng = replication_rng(seed, r)
        ix = circular_block_indices(n, b, rng)
        iy = ix if single_stream else circular_block_indices(n, b, rng)
        return resampled(ix, iy)

    draws = _map_reps(one, reps, threads)
    config = {"block_length": b, "single_stream": single_stream}
    return TestResult(statistic, add_one_pvalue(statistic, draws), "block_bootstrap", reps,
                      draws, seed, config, n, degenerate=_degenerate(a, bm))


def permutation_test(sample: PairedSample, reps: int = 999, seed=0, *, exact: bool = False,
                     source=None, threads: int = 1) -> TestResult:
    """Permute Y against fixed X.

    ``exact=True`` enumerates all ``n!`` permutations (identity included) and
    returns the exact permutation p-value; it is capped at n <= 8.  Passing
    the generating process spec as ``source`` emits a
    :class:`DependenceWarning` when it is not iid.
    """
    if source is not None and not getattr(source, "is_iid", False):
        warnings.warn("permutation_test assumes iid observations; the source process is "
                      "serially dependent and the test may be miscalibrated",
                      DependenceWarning, stacklevel=2)
    n = sample.n
    a, b = centered_matrices(sample)
    statistic = n * dcov_from_delta(delta_matrix(a, b))
    resampled = _Resampler(sample.space_x.pairwise(sample.xs), sample.space_y.pairwise(sample.ys))
    identity = np.arange(n)
    if exact:
        if n > MAX_EXACT_N:
            raise ValueError(f"exact enumeration is capped at n <= {MAX_EXACT_N}")
        draws = np.array([resampled(identity, np.array(p))
                          for p in itertools.permutations(range(n))])
        threshold = statistic - TIE_RTOL * max(abs(statistic), 1e-300)
        p_value = float(np.count_nonzero(draws >= threshold)) / len(draws)
        return TestResult(statistic, p_value, "permutation", len(draws), draws, seed,
                          {"exact": True}, n, degenerate=_degenerate(a, b))
    if reps < 1:
        raise ValueError("reps must be >= 1")

    def one(r: int) -> float:
        return resampled(identity, replication_rng(seed, r).permutation(n))

    draws = _map_reps(one, reps, threads)
    return TestResult(statistic, add_one_pvalue(statistic, draws), "permutation", reps,
                      draws, seed, {"exact": False}, n, degenerate=_degenerate(a, b))


def _degenerate(a: CenteredMatrix, b: CenteredMatrix) -> bool:
    return a.grand_mean == 0.0 or b.grand_mean == 0.0


def run_test(sample: PairedSample, method: str = "spectral", reps: int = 999, seed=0,
             **options) -> TestResult:
    """Dispatch to one of the three tests by name (``block-bootstrap`` is accepted)."""
    method = method.replace("-", "_")
    if method == "spectral":
        return spectral_test(sample, reps, seed, **options)
    if method == "block_bootstrap":
        return block_bootstrap_test(sample, options.pop("block_length", "auto"), reps, seed, **options)
    if method == "permutation":
        return permutation_test(sample, reps, seed, **options)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
