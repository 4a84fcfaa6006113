import math

import numpy as np
import pytest

from itboost.boosting import (
    BoostConfig,
    Model,
    init_score,
    gradient,
    load_model,
    load_trace_csv,
    logistic_gradient,
    loss_value,
    parse_config_file,
    save_model,
    squared_gradient,
    train,
)
from itboost.data import Dataset
from itboost.trees import RegressionTree, TreeNode
from conftest import random_dataset
from reference import ReferenceGBDT


class TestGradients:
    def test_logistic_at_zero(self):
        assert logistic_gradient(1, 0.0) == pytest.approx(0.5, abs=1e-12)
        assert logistic_gradient(-1, 0.0) == pytest.approx(-0.5, abs=1e-12)

    def test_logistic_known_value(self):
        assert logistic_gradient(1, 2.0) == pytest.approx(1.0 / (1.0 + math.exp(2.0)), abs=1e-12)
        assert logistic_gradient(1, 2.0) == pytest.approx(0.119203, abs=1e-6)

    def test_logistic_sign_matches_label(self):
        rng = np.random.default_rng(0)
        F = rng.normal(scale=3, size=100)
        assert np.all(logistic_gradient(np.ones(100), F) > 0)
        assert np.all(logistic_gradient(-np.ones(100), F) < 0)
        assert np.all(np.abs(logistic_gradient(np.ones(100), F)) < 1)

    def test_logistic_extreme_scores_safe(self):
        with np.errstate(all="raise"):
            g = logistic_gradient(np.array([1.0, -1.0]), np.array([1000.0, -1000.0]))
        assert np.all(np.isfinite(g))
        assert g[0] == pytest.approx(math.exp(-1000.0), abs=1e-300)

    def test_logistic_asymptote_at_500(self):
        g = logistic_gradient(1.0, 600.0)
        assert g == pytest.approx(math.exp(-600.0), rel=1e-12)

    def test_squared(self):
        assert squared_gradient(1, 1.0) == 0.0
        assert squared_gradient(1, 1.3) == pytest.approx(-0.3)
        assert squared_gradient(-1, 0.2) == pytest.approx(-1.2)

    def test_logistic_matches_finite_differences(self):
        h = 1e-5
        for y in (-1.0, 1.0):
            for F in np.linspace(-10, 10, 25):
                fd = (loss_value(y, F + h, "logistic") - loss_value(y, F - h, "logistic")) / (2 * h)
                g = logistic_gradient(y, F)
                assert abs(g - (-fd)) / abs(g) < 1e-8


class TestInitScore:
    def test_balanced_logistic_zero(self):
        assert init_score(np.array([1, -1, 1, -1]), "logistic") == pytest.approx(0.0, abs=1e-15)

    def test_three_quarters_positive(self):
        labels = np.array([1, 1, 1, -1])
        assert init_score(labels, "logistic") == pytest.approx(math.log(3), abs=1e-12)

    def test_squared_is_mean(self):
        labels = np.array([1, 1, 1, -1, -1, -1, 1, -1, 1, 1])
        assert init_score(labels, "squared") == pytest.approx(np.mean(labels))

    def test_single_class_logistic_rejected(self):
        with pytest.raises(ValueError):
            init_score(np.array([1, 1, 1]), "logistic")


class TestPredict:
    def _stump(self, value):
        return RegressionTree(root=TreeNode(value=value), n_features=2)

    def test_no_trees_returns_base_score(self):
        model = Model(base_score=0.7, n_features=2, trees=[], config=BoostConfig())
        assert model.predict_score(np.array([1.0, 2.0])) == 0.7

    def test_zero_score_maps_to_half_and_positive_label(self):
        model = Model(base_score=0.0, n_features=2, trees=[], config=BoostConfig())
        assert model.predict_proba(np.array([0.0, 0.0])) == 0.5
        assert model.predict_label(np.array([0.0, 0.0])) == 1

    def test_stump_arithmetic(self):
        cfg = BoostConfig(learning_rate=0.1)
        model = Model(
            base_score=0.3, n_features=2, trees=[self._stump(1.0), self._stump(-0.5)], config=cfg
        )
        assert model.predict_score(np.array([9.9, 9.9])) == pytest.approx(0.35, abs=1e-12)

    def test_dimension_mismatch(self):
        model = Model(base_score=0.0, n_features=3, trees=[], config=BoostConfig())
        with pytest.raises(ValueError):
            model.predict_score(np.ones((4, 2)))

    def test_extreme_scores_clamped(self):
        cfg = BoostConfig(learning_rate=1.0)
        model = Model(base_score=500.0, n_features=1, trees=[], config=cfg)
        proba = model.predict_proba(np.zeros((1, 1)))
        assert np.all(np.isfinite(proba)) and proba[0] <= 1.0


class TestTrain:
    def test_single_iteration_single_tree(self):
        ds = random_dataset(30, 2, seed=1)
        model, trace = train(ds, BoostConfig(iterations=1, loss="squared"))
        assert len(model.trees) == 1
        assert trace.n_iterations == 1
        # length-1 histories all parse to one phrase
        assert np.all(trace.trust[0].raw_complexity == 1)
        assert np.all(trace.trust[0].normalized == 0.0)

    def test_enabled_equals_magnitude_only_at_m1(self):
        ds = random_dataset(40, 3, seed=2)
        m_enabled, _ = train(ds, BoostConfig(iterations=1, loss="squared", trust="enabled"))
        m_mag, _ = train(ds, BoostConfig(iterations=1, loss="squared", trust="magnitude-only"))
        assert m_enabled.trees[0].to_tokens() == m_mag.trees[0].to_tokens()

    def test_degenerate_histories_make_enabled_equal_magnitude_only(self):
        # logistic residuals never change sign, so every history is constant
        # and min-max normalisation collapses: tau is 1 for everyone.
        ds = random_dataset(50, 3, seed=3)
        m_enabled, tr = train(ds, BoostConfig(iterations=8, loss="logistic", trust="enabled"))
        m_mag, _ = train(ds, BoostConfig(iterations=8, loss="logistic", trust="magnitude-only"))
        for a, b in zip(m_enabled.trees, m_mag.trees):
            assert a.to_tokens() == b.to_tokens()
        for state in tr.trust:
            assert state.raw_complexity.max() == state.raw_complexity.min()

    def test_disabled_matches_independent_reference_byte_for_byte(self):
        for seed in (0, 1):
            ds = random_dataset(60, 3, seed=seed)
            cfg = BoostConfig(iterations=8, learning_rate=0.1, max_depth=3, loss="logistic", trust="disabled", seed=seed)
            model, _ = train(ds, cfg)
            ref = ReferenceGBDT(8, 0.1, 3, 1, "logistic").fit(ds.features, ds.labels)
            assert model.base_score == ref.base_score
            ref_trees = ref.to_regression_trees()
            assert len(model.trees) == len(ref_trees)
            for mine, theirs in zip(model.trees, ref_trees):
                assert mine.to_tokens() == theirs.to_tokens()

    def test_monotone_training_loss_disabled_squared(self):
        for seed in (4, 5):
            ds = random_dataset(45, 2, seed=seed)
            _, trace = train(ds, BoostConfig(iterations=25, loss="squared", trust="disabled", seed=seed))
            losses = np.array(trace.train_loss)
            assert np.all(losses[1:] <= losses[:-1] + 1e-12)

    def test_each_tree_fit_does_not_increase_its_own_weighted_sse(self):
        # with the weights used at round m, the post-update residuals cannot
        # have larger weighted SSE than the pre-update residuals (the zero
        # tree is always available)
        ds = random_dataset(45, 2, seed=6)
        _, trace = train(ds, BoostConfig(iterations=20, loss="squared", trust="enabled", seed=6))
        for m in range(len(trace.gradients) - 1):
            w = trace.trust[m].weights
            before = float(np.sum(w * trace.gradients[m] ** 2))
            after = float(np.sum(w * trace.gradients[m + 1] ** 2))
            assert after <= before + 1e-12 * max(1.0, before)

    def test_determinism_bytes(self, tmp_path):
        ds = random_dataset(50, 3, seed=7)
        cfg = BoostConfig(iterations=10, loss="squared", trust="enabled", seed=7)
        paths = []
        for run in range(2):
            model, trace = train(ds, cfg)
            mp = tmp_path / f"model{run}.txt"
            tp = tmp_path / f"trace{run}.csv"
            save_model(model, mp)
            trace.to_csv(tp)
            paths.append((mp.read_bytes(), tp.read_bytes()))
        assert paths[0][0] == paths[1][0]
        assert paths[0][1] == paths[1][1]

    def test_incremental_lz_is_bit_identical(self, tmp_path):
        ds = random_dataset(40, 2, seed=8)
        for encoding in ("binary-sign", "binary-delta", "quantized"):
            cfg = BoostConfig(iterations=12, loss="squared", encoding=encoding, trust="enabled")
            m_full, tr_full = train(ds, cfg, incremental_lz=False)
            m_incr, tr_incr = train(ds, cfg, incremental_lz=True)
            for a, b in zip(m_full.trees, m_incr.trees):
                assert a.to_tokens() == b.to_tokens()
            for sa, sb in zip(tr_full.trust, tr_incr.trust):
                assert np.array_equal(sa.raw_complexity, sb.raw_complexity)

    def test_quantized_and_delta_encodings_run(self):
        ds = random_dataset(30, 2, seed=9)
        for encoding in ("binary-delta", "quantized"):
            model, trace = train(ds, BoostConfig(iterations=5, loss="squared", encoding=encoding))
            assert len(model.trees) == 5
            assert trace.trust[-1].raw_complexity.max() >= 1

    def test_disabled_skips_history_bookkeeping(self):
        ds = random_dataset(30, 2, seed=10)
        _, trace = train(ds, BoostConfig(iterations=4, loss="squared", trust="disabled"))
        for state in trace.trust:
            assert np.all(state.weights == 1.0)
            assert np.all(state.raw_complexity == 0)

    def test_encoding_irrelevant_when_disabled(self):
        ds = random_dataset(30, 2, seed=14)
        models = []
        for encoding in ("binary-sign", "binary-delta", "quantized"):
            cfg = BoostConfig(iterations=6, loss="squared", encoding=encoding, trust="disabled")
            model, _ = train(ds, cfg)
            models.append([t.to_tokens() for t in model.trees])
        assert models[0] == models[1] == models[2]


class TestModelSerialization:
    def test_round_trip(self, tmp_path):
        ds = random_dataset(40, 3, seed=11)
        cfg = BoostConfig(iterations=6, loss="logistic", trust="enabled", seed=11)
        model, _ = train(ds, cfg)
        path = tmp_path / "model.txt"
        save_model(model, path)
        back = load_model(path)
        assert back.base_score == model.base_score
        assert back.config == model.config
        np.testing.assert_array_equal(back.predict_score(ds.features), model.predict_score(ds.features))
        path2 = tmp_path / "model2.txt"
        save_model(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not a model\n")
        with pytest.raises(ValueError):
            load_model(path)


class TestTraceCsv:
    def test_round_trip_values(self, tmp_path):
        ds = random_dataset(25, 2, seed=12)
        _, trace = train(ds, BoostConfig(iterations=5, loss="squared", trust="enabled"))
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        row_ids, states = load_trace_csv(path)
        np.testing.assert_array_equal(row_ids, trace.row_ids)
        assert sorted(states) == [1, 2, 3, 4, 5]
        for m, state in states.items():
            np.testing.assert_array_equal(state.raw_complexity, trace.trust[m - 1].raw_complexity)
            np.testing.assert_allclose(state.weights, trace.trust[m - 1].weights, rtol=0, atol=0)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            BoostConfig(iterations=0)
        with pytest.raises(ValueError):
            BoostConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            BoostConfig(learning_rate=1.5)
        with pytest.raises(ValueError):
            BoostConfig(loss="absolute")
        with pytest.raises(ValueError):
            BoostConfig(trust="sometimes")

    def test_defaults(self):
        cfg = BoostConfig()
        assert cfg.iterations == 100
        assert cfg.learning_rate == 0.1
        assert cfg.max_depth == 3
        assert cfg.min_samples_leaf == 1
        assert cfg.seed == 42

    def test_config_file_parsing(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# experiment\niterations = 7\nloss = squared\n\nlearning_rate = 0.2\n")
        mapping = parse_config_file(path)
        cfg = BoostConfig.from_mapping(mapping)
        assert cfg.iterations == 7
        assert cfg.loss == "squared"
        assert cfg.learning_rate == 0.2

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            BoostConfig.from_mapping({"depth": "3"})
