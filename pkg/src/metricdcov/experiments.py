"""
Simulation experiments: consistency, null distribution and variance scaling.

Each experiment is a pure function of its config and master seed.  Cell
``c`` (position in the n grid) and replication ``r`` draw from the stream
``seed_sequence(seed, c, r)``; replications may run on several threads and
are collected in replication order, so reports do not depend on the thread
count.
"""
from __future__ import annotations

import copy
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from . import __version__
from .core import CostCapExceeded, centered_matrices, dcov, delta_matrix, vstat
from .processes import is_independent, population_dcov, spec_from_config
from .seeding import seed_sequence
from .spectrum import empirical_spectrum, long_run_covariance, simulate_null

# cell key of the spectral null stream in the null-distribution experiment
NULL_STREAM = 2**20


class ExperimentError(ValueError):
    pass


def _map(func, items, threads: int):
    items = list(items)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(i) for i in items]


def _grid(cfg: dict) -> list[int]:
    grid = [int(v) for v in cfg.get("n_grid", [])]
    if not grid:
        raise ExperimentError("experiment needs a non-empty n_grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ExperimentError("n_grid must be strictly increasing")
    return grid


def _seeds(cfg: dict, default: int) -> int:
    seeds = int(cfg.get("seeds", default))
    if seeds < 1:
        raise ExperimentError("seeds must be >= 1")
    return seeds


def _quantiles(values) -> dict:
    arr = np.asarray(values, dtype=float)
    q25, q50, q75 = np.quantile(arr, [0.25, 0.5, 0.75])
    return {"median": float(q50), "q25": float(q25), "q75": float(q75)}


def _report(kind: str, config: dict, **body) -> dict:
    return {"experiment": kind, "version": __version__, "config": copy.deepcopy(config), **body}


def convergence(config: dict, seed: int = 0, threads: int = 1, raw: bool = False) -> dict:
    """Median ``|dcov(theta_n) - dcov(theta)|`` over seeds for each n in the grid."""
    exp = config.get("experiment", {})
    spec = spec_from_config(config["process"])
    try:
        target = population_dcov(spec.joint())
    except (TypeError, CostCapExceeded) as exc:
        raise ExperimentError(f"convergence needs a finitely supported process: {exc}") from None
    grid = _grid(exp)
    seeds = _seeds(exp, 50)
    cells = []
    for c, n in enumerate(grid):
        errors = _map(lambda r: abs(dcov(spec.simulate(n, seed_sequence(seed, c, r))).dcov - target),
                      range(seeds), threads)
        cell = {"n": n, **_quantiles(errors)}
        if raw:
            cell["errors"] = errors
        cells.append(cell)
    medians = [cell["median"] for cell in cells]
    decreasing = None if len(grid) < 2 else all(b < a for a, b in zip(medians, medians[1:]))
    return _report("convergence", config, seed=seed, target=target, cells=cells,
                   strictly_decreasing=decreasing,
                   final_relative_error=(medians[-1] / target if target > 0 else None))


def nulldist(config: dict, seed: int = 0, threads: int = 1, raw: bool = False) -> dict:
    """Compare replicated ``n * dcov`` with one spectral null; report the mean of Q."""
    exp = config.get("experiment", {})
    spec = spec_from_config(config["process"])
    warning = None
    if not is_independent(spec):
        warning = "process has dependent X and Y; the experiment measures power, not level"
        warnings.warn(warning, stacklevel=2)
    n = int(exp.get("n", 500))
    replications = _seeds(exp, 1000)
    reps = int(exp.get("reps", 10_000))

    def one(r):
        est = dcov(spec.simulate(n, seed_sequence(seed, 0, r)))
        return est.statistic, est.q_statistic

    results = _map(one, range(replications), threads)
    statistics = np.array([s for s, _ in results])
    qs = np.array([q for _, q in results if q is not None], dtype=float)

    reference = spec.simulate(n, seed_sequence(seed, 0, 0))
    a, b = centered_matrices(reference)
    model = empirical_spectrum(delta_matrix(a, b), exp.get("truncation", 0.999))
    body = {"seed": seed, "n": n, "replications": replications, "reps": reps, "warning": warning}
    if model.kept:
        lrc = long_run_covariance(model, exp.get("bandwidth", "auto"))
        null = simulate_null(model, lrc, reps, seed_sequence(seed, NULL_STREAM))
        body["kept"] = model.kept
        body["bandwidth"] = lrc.bandwidth
        body["eigenvalues"] = model.eigenvalues.tolist()
        body["longrun_expected_q"] = float(
            (model.eigenvalues * np.diag(lrc.sigma)).sum() / model.eigenvalues.sum())
        null_draws = null.draws
    else:
        null_draws = np.zeros(reps)
    if replications > 1:
        body["ks_distance"] = float(stats.ks_2samp(statistics, null_draws).statistic)
        body["ks_undefined"] = False
    else:
        body["ks_distance"] = None
        body["ks_undefined"] = True
    if len(qs) > 1:
        mean_q, se_q = float(qs.mean()), float(qs.std(ddof=1) / np.sqrt(len(qs)))
        body.update(mean_q=mean_q, se_q=se_q, q_within_3se=bool(abs(mean_q - 1) <= 3 * se_q))
    else:
        body.update(mean_q=float(qs.mean()) if len(qs) else None, se_q=None, q_within_3se=None)
    body["statistic_quantiles"] = _quantiles(statistics)
    body["null_quantiles"] = _quantiles(null_draws)
    if raw:
        body["statistics"] = statistics.tolist()
        body["null_draws"] = null_draws.tolist()
    return _report("nulldist", config, **body)


def _h2_vstat(sample) -> float:
    a, b = centered_matrices(sample)
    delta = delta_matrix(a, b).values
    return vstat(lambda i, j: delta[i, j] / 15.0, sample, 2, on_indices=True)


def varscaling(config: dict, seed: int = 0, threads: int = 1, raw: bool = False) -> dict:
    """Empirical ``n**2 Var(V)`` of the second Hoeffding term across the n grid."""
    exp = config.get("experiment", {})
    spec = spec_from_config(config["process"])
    grid = _grid(exp)
    if len(grid) < 2:
        raise ExperimentError("varscaling needs an n_grid of length >= 2")
    warning = None
    if not is_independent(spec):
        warning = "process has dependent X and Y; the second Hoeffding term is not degenerate"
        warnings.warn(warning, stacklevel=2)
    seeds = _seeds(exp, 200)
    cells = []
    for c, n in enumerate(grid):
        values = np.array(_map(lambda r: _h2_vstat(spec.simulate(n, seed_sequence(seed, c, r))),
                               range(seeds), threads))
        var = float(values.var(ddof=1)) if seeds > 1 else 0.0
        cell = {"n": n, "mean": float(values.mean()), "var": var, "n2_var": n * n * var}
        if raw:
            cell["values"] = values.tolist()
        cells.append(cell)
    ratios = []
    for lo, hi in zip(cells, cells[1:]):
        ratios.append(hi["n2_var"] / lo["n2_var"] if lo["n2_var"] > 0 else None)
    return _report("varscaling", config, seed=seed, cells=cells, ratios=ratios, warning=warning)


EXPERIMENTS = {"convergence": convergence, "nulldist": nulldist, "varscaling": varscaling}


def run_experiment(config: dict, seed: int = 0, threads: int = 1, raw: bool = False) -> dict:
    kind = config.get("experiment", {}).get("kind")
    if kind not in EXPERIMENTS:
        raise ExperimentError(f"unknown experiment kind {kind!r}; choose from {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[kind](config, seed=seed, threads=threads, raw=raw)
