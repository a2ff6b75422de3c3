import json
import math

import numpy as np
import pytest

from driftxplain.errors import ValidationError
from driftxplain.evalharness import (
    CheckerboardResult,
    ExperimentGrid,
    GmmConfig,
    _sign_test_p,
    eval_benchmarks,
    eval_checkerboard,
    eval_identifiability,
    eval_prototypes,
    write_results_csv,
    write_results_json,
)


class TestGmmConfig:
    def test_parse(self):
        cfg = GmmConfig.parse("100/8/2")
        assert (cfg.dim, cfg.n_gauss, cfg.n_class) == (100, 8, 2)
        assert cfg.label == "100/8/2"

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValidationError):
            GmmConfig.parse("2/2")
        with pytest.raises(ValidationError):
            GmmConfig.parse("a/b/c")
        with pytest.raises(ValidationError):
            GmmConfig.parse("2/2/1")  # one class has no drift

    def test_spec_carries_the_shape(self):
        spec = GmmConfig(dim=3, n_gauss=4, n_class=5).spec(seed=7)
        assert (spec.dim, spec.n_gauss_per_class, spec.n_class) == (3, 4, 5)
        assert spec.seed == 7


class TestExperimentGrid:
    def test_coerces_config_strings(self):
        grid = ExperimentGrid(configs=("2/2/2", GmmConfig(2, 2, 10)))
        assert all(isinstance(c, GmmConfig) for c in grid.configs)

    def test_validation(self):
        with pytest.raises(ValidationError):
            ExperimentGrid(configs=())
        with pytest.raises(ValidationError):
            ExperimentGrid(configs=("2/2/2",), classifiers=("svm",))
        with pytest.raises(ValidationError):
            ExperimentGrid(configs=("2/2/2",), methods=("spectral",))
        with pytest.raises(ValidationError):
            ExperimentGrid(configs=("2/2/2",), runs=0)


class TestSignTest:
    def test_exact_values(self):
        assert _sign_test_p(10, 10) == pytest.approx(2.0**-10)
        assert _sign_test_p(0, 10) == pytest.approx(1.0)
        assert _sign_test_p(5, 10) == pytest.approx(
            sum(math.comb(10, j) for j in range(5, 11)) / 1024.0
        )
        assert _sign_test_p(0, 0) == 1.0

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(0)
        n, wins = 12, 9
        draws = rng.binomial(n, 0.5, size=200_000)
        assert _sign_test_p(wins, n) == pytest.approx((draws >= wins).mean(), abs=0.005)


SMALL = dict(runs=3, train_n=60, eval_n=40, seed=0)


class TestEvalIdentifiability:
    def test_smoke_and_determinism(self):
        grid = ExperimentGrid(configs=("2/2/2",), classifiers=("knn", "rf"), **SMALL)
        rows = eval_identifiability(grid)
        assert [(r.variant, r.metric) for r in rows] == [("knn", "mse"), ("rf", "mse")]
        for r in rows:
            assert r.experiment == "identifiability"
            assert r.config == "2/2/2"
            assert r.runs == 3
            assert 0.0 <= r.mean <= 1.0
            assert r.mean == pytest.approx(np.mean(r.values))
            assert r.std == pytest.approx(np.std(r.values, ddof=1))
        again = eval_identifiability(grid)
        assert again == rows

    def test_distinct_runs_see_distinct_mixtures(self):
        grid = ExperimentGrid(configs=("2/2/2",), **SMALL)
        rows = eval_identifiability(grid)
        assert len(set(rows[0].values)) == len(rows[0].values)


class TestEvalPrototypes:
    def test_smoke_and_metric_pairing(self):
        grid = ExperimentGrid(
            configs=("2/2/2",),
            methods=("kmeans-resampled", "kmeans-baseline"),
            **SMALL,
        )
        rows = eval_prototypes(grid)
        keys = [(r.variant, r.metric) for r in rows]
        assert keys == [
            ("kmeans-resampled", "i_at_prototypes"),
            ("kmeans-resampled", "char_at_prototypes"),
            ("kmeans-baseline", "i_at_prototypes"),
            ("kmeans-baseline", "char_at_prototypes"),
        ]
        for r in rows:
            if r.metric == "i_at_prototypes":
                assert 0.0 <= r.mean <= 1.0
            assert r.runs == 3

    def test_two_class_prototypes_sit_on_certain_regions(self):
        # with 2 classes half the components are pure bin 1 or pure bin 2,
        # so identifiability-weighted prototypes should score high
        grid = ExperimentGrid(configs=("2/2/2",), runs=5, train_n=200, eval_n=10, seed=1)
        rows = eval_prototypes(grid)
        i_row = next(r for r in rows if r.metric == "i_at_prototypes")
        assert i_row.mean > 0.7


class TestEvalCheckerboard:
    def test_smoke(self):
        result = eval_checkerboard(runs=4, n_per_bin=120, seed=0)
        assert isinstance(result, CheckerboardResult)
        assert result.runs == 4
        assert len(result.scores) == len(result.baselines) == 4
        assert result.wins + result.ties <= 4
        assert 0.0 <= result.p_value <= 1.0
        rows = result.rows()
        assert [r.metric for r in rows] == ["score", "baseline", "p_value"]
        assert rows[0].config == "3x3"

    def test_baseline_matches_random_guessing(self):
        # flagging a uniformly random f-cell set scores (f + c - 2fc/G)/G
        # in expectation; check the formula by brute force enumeration
        rng = np.random.default_rng(1)
        G, f, c = 9, 4, 3
        changed = set(rng.choice(G, size=c, replace=False).tolist())
        scores = []
        for _ in range(20000):
            flagged = set(rng.choice(G, size=f, replace=False).tolist())
            scores.append(len(flagged ^ changed) / G)
        assert np.mean(scores) == pytest.approx((f + c - 2 * f * c / G) / G, abs=0.01)

    def test_i_mass_rule(self):
        result = eval_checkerboard(runs=3, n_per_bin=120, seed=2, flag_rule="i-mass")
        assert result.flag_rule == "i-mass"
        assert len(result.scores) == 3

    def test_unknown_rule(self):
        with pytest.raises(ValidationError):
            eval_checkerboard(flag_rule="entropy")


class TestEvalBenchmarks:
    def _table(self, n=120):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(n, 4))
        y = x[:, 0] + 0.1 * rng.normal(size=n)
        return x, y

    def test_regression_smoke(self):
        x, y = self._table()
        rows = eval_benchmarks(x, y, task="regression", name="toy", runs=3, seed=0)
        assert len(rows) == 1
        assert rows[0].experiment == "benchmark"
        assert rows[0].config == "toy"
        assert rows[0].runs == 3
        assert 0.0 <= rows[0].mean <= 1.0

    def test_classification_smoke(self):
        x, _ = self._table()
        labels = np.array(["a", "b"] * 60)
        rows = eval_benchmarks(
            x, labels, task="classification", runs=3, seed=1, classifiers=("knn", "rf")
        )
        assert [r.variant for r in rows] == ["knn", "rf"]

    def test_determinism(self):
        x, y = self._table()
        a = eval_benchmarks(x, y, runs=2, seed=5)
        b = eval_benchmarks(x, y, runs=2, seed=5)
        assert a == b

    def test_unknown_task(self):
        x, y = self._table()
        with pytest.raises(ValidationError):
            eval_benchmarks(x, y, task="ranking")


class TestResultWriters:
    def _rows(self):
        grid = ExperimentGrid(configs=("2/2/2",), **SMALL)
        return eval_identifiability(grid)

    def test_csv_values_parse_back(self, tmp_path):
        rows = self._rows()
        path = tmp_path / "r.csv"
        write_results_csv(path, rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "experiment,config,variant,metric,mean,std,runs,values"
        cells = lines[1].split(",")
        assert cells[0] == "identifiability"
        assert float(cells[4]) == rows[0].mean
        values = tuple(float(v) for v in cells[7].split("|"))
        assert values == rows[0].values

    def test_json_document(self, tmp_path):
        rows = self._rows()
        path = tmp_path / "r.json"
        write_results_json(path, rows)
        doc = json.loads(path.read_text())
        assert doc[0]["experiment"] == "identifiability"
        assert tuple(doc[0]["values"]) == rows[0].values
