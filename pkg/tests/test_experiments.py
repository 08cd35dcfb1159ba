import warnings

import pytest

import oracles
from metricdcov.experiments import ExperimentError, run_experiment

CHAIN = {"kind": "markov_pair", "P": [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]],
         "emit_x": [0.0, 1.0, 3.0], "emit_y": [0.0, 2.0, 1.0]}
CHAIN_Y = dict(CHAIN, emit_x=[0.0, 2.0, 1.0])
PRODUCT = {"kind": "independent_product", "x": CHAIN, "y": CHAIN_Y}


def config(kind, process, **exp):
    return {"process": process, "experiment": {"kind": kind, **exp}}


class TestConvergence:
    def test_report(self):
        rep = run_experiment(config("convergence", CHAIN, n_grid=[20, 80], seeds=5), seed=1)
        assert rep["target"] == pytest.approx(4 / 9)
        assert [c["n"] for c in rep["cells"]] == [20, 80]
        assert all(c["q25"] <= c["median"] <= c["q75"] for c in rep["cells"])
        assert rep["config"]["experiment"]["n_grid"] == [20, 80]

    def test_single_cell(self):
        rep = run_experiment(config("convergence", CHAIN, n_grid=[30], seeds=3))
        assert rep["strictly_decreasing"] is None and len(rep["cells"]) == 1

    def test_product_target_zero(self):
        rep = run_experiment(config("convergence", PRODUCT, n_grid=[50, 400], seeds=10), seed=2)
        assert rep["target"] == pytest.approx(0, abs=1e-15)
        assert rep["cells"][1]["median"] < rep["cells"][0]["median"]
        assert rep["final_relative_error"] is None

    def test_refuses_continuous(self):
        with pytest.raises(ExperimentError):
            run_experiment(config("convergence", {"kind": "ar1_latent", "rho": 0.5},
                                  n_grid=[10]))

    @pytest.mark.parametrize("grid", [[], [100, 100], [200, 100]])
    def test_grid_validation(self, grid):
        with pytest.raises(ExperimentError):
            run_experiment(config("convergence", CHAIN, n_grid=grid, seeds=2))

    def test_seeds_validation(self):
        with pytest.raises(ExperimentError):
            run_experiment(config("convergence", CHAIN, n_grid=[10], seeds=0))

    def test_threads_and_raw(self):
        cfg = config("convergence", CHAIN, n_grid=[20, 40], seeds=6)
        a = run_experiment(cfg, seed=3, threads=1, raw=True)
        b = run_experiment(cfg, seed=3, threads=4, raw=True)
        assert a == b and len(a["cells"][0]["errors"]) == 6


class TestNulldist:
    def test_single_replication(self):
        rep = run_experiment(config("nulldist", PRODUCT, n=40, seeds=1, reps=100))
        assert rep["ks_undefined"] and rep["ks_distance"] is None

    def test_report(self):
        rep = run_experiment(config("nulldist", PRODUCT, n=60, seeds=30, reps=500), seed=4)
        assert 0 <= rep["ks_distance"] <= 1 and rep["se_q"] > 0
        assert rep["longrun_expected_q"] > 0 and rep["warning"] is None

    def test_ks_matches_oracle(self):
        rep = run_experiment(config("nulldist", PRODUCT, n=30, seeds=20, reps=300), seed=5,
                             raw=True)
        expected = oracles.ks_distance(rep["statistics"], rep["null_draws"])
        assert rep["ks_distance"] == pytest.approx(expected, abs=1e-12)

    def test_dependent_warns(self):
        with pytest.warns(UserWarning):
            rep = run_experiment(config("nulldist", CHAIN, n=40, seeds=3, reps=50))
        assert rep["warning"]


class TestVarscaling:
    def test_short_grid(self):
        with pytest.raises(ExperimentError):
            run_experiment(config("varscaling", PRODUCT, n_grid=[50], seeds=3))

    def test_constant_marginal(self):
        const = {"kind": "iid", "atoms": [[0, 0], [0, 1]], "probs": [0.5, 0.5]}
        rep = run_experiment(config("varscaling", const, n_grid=[20, 40], seeds=5))
        assert all(c["var"] == 0 for c in rep["cells"]) and rep["ratios"] == [None]

    def test_dependent_warns(self):
        with pytest.warns(UserWarning):
            rep = run_experiment(config("varscaling", CHAIN, n_grid=[20, 40], seeds=3))
        assert rep["warning"]

    def test_report(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            rep = run_experiment(config("varscaling", PRODUCT, n_grid=[30, 60], seeds=10))
        assert len(rep["ratios"]) == 1 and rep["cells"][0]["n2_var"] > 0


def test_unknown_kind():
    with pytest.raises(ExperimentError):
        run_experiment(config("bootstrap", CHAIN))
