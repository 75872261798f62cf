"""The boosting loop: weights, constant fit, stopping, and invariants."""
import numpy as np
import pytest

from conftest import random_costs, random_problem
from rebel.boost import (NumericOverflowError, StrongClassifier, TrainConfig,
                         fit_constant, init_weights, predict, predict_all, train,
                         update_weights)
from rebel.costs import CostMatrix, dataset_terms, loss_floor
from rebel.io import Dataset, model_to_text
from rebel.loss import surrogate_loss
from rebel.weak import WeightState, accumulate_split, split_value


def separable_problem(seed=0, n=60, k=3):
    """Well-separated blobs; training certifies zero risk quickly."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(1, k + 1, size=n)
    centers = np.arange(k)[:, None] * 10.0
    features = np.column_stack([
        centers[labels - 1, 0] + rng.uniform(-1, 1, n),
        rng.normal(size=n),
    ])
    return Dataset.from_arrays(features, labels, k), CostMatrix.uniform(k)


class TestWeights:
    def test_init_copies(self, rng):
        data, costs = random_problem(1, n=20, d=2, k=3)
        w = init_weights(costs, data)
        cp, cm, _, _ = dataset_terms(costs, data.labels)
        np.testing.assert_array_equal(w.w_plus, cp)
        np.testing.assert_array_equal(w.w_minus, cm)
        w.w_plus += 1.0
        np.testing.assert_array_equal(init_weights(costs, data).w_plus, cp)

    def test_update_worked_example(self):
        w = WeightState(w_plus=np.array([[1.0, 1.0]]), w_minus=np.array([[1.0, 1.0]]))
        update_weights(w, np.array([1]), np.array([np.log(2.0), -np.log(2.0)]))
        np.testing.assert_allclose(w.w_plus, [[2.0, 0.5]], rtol=1e-15)
        np.testing.assert_allclose(w.w_minus, [[0.5, 2.0]], rtol=1e-15)

    def test_update_preserves_geometric_mean(self, rng):
        """sqrt(w+ w-) is invariant: the shift cancels."""
        w = WeightState(w_plus=rng.uniform(0.5, 2.0, size=(10, 3)),
                        w_minus=rng.uniform(0.5, 2.0, size=(10, 3)))
        before = np.sqrt(w.w_plus * w.w_minus)
        update_weights(w, rng.choice([-1, 1], size=10), rng.normal(size=3))
        np.testing.assert_allclose(np.sqrt(w.w_plus * w.w_minus), before, rtol=1e-12)

    def test_overflow_raises_with_round(self):
        w = WeightState(w_plus=np.ones((2, 2)), w_minus=np.ones((2, 2)))
        with pytest.raises(NumericOverflowError) as info:
            update_weights(w, np.array([1, -1]), np.array([710.0, 0.0]), round_index=7)
        assert info.value.round_index == 7
        assert "7" in str(info.value)

    def test_fit_constant_favors_cheap_majority(self, rng):
        """Mostly class 1 and 0-1 costs: the offset ranks class 1 first."""
        labels = np.array([1] * 18 + [2] * 2)
        data = Dataset.from_arrays(rng.normal(size=(20, 2)), labels, 2)
        w = init_weights(CostMatrix.uniform(2), data)
        a0 = fit_constant(w, epsilon=1e-3)
        assert a0[0] > a0[1]


class TestTrainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(rounds=0).validate()
        with pytest.raises(ValueError):
            TrainConfig(rounds=5, tree_depth=0).validate()
        with pytest.raises(ValueError):
            TrainConfig(rounds=5, n_tau=0).validate()
        with pytest.raises(ValueError):
            TrainConfig(rounds=5, epsilon=-1.0).validate()


class TestTrainValidation:
    def test_rejects_mismatched_classes(self):
        data, _ = random_problem(2, n=20, d=2, k=3)
        with pytest.raises(ValueError):
            train(data, CostMatrix.uniform(4), TrainConfig(rounds=1))

    def test_rejects_all_constant_features(self):
        data = Dataset.from_arrays(np.ones((10, 2)), np.array([1, 2] * 5), 2)
        with pytest.raises(ValueError):
            train(data, CostMatrix.uniform(2), TrainConfig(rounds=1))

    def test_rejects_single_sample(self):
        data = Dataset.from_arrays(np.zeros((1, 2)), np.array([1]), 2)
        with pytest.raises(ValueError):
            train(data, CostMatrix.uniform(2), TrainConfig(rounds=1))


class TestTrainingInvariants:
    def test_loss_monotone_nonincreasing(self):
        for seed in range(10):
            data, costs = random_problem(seed, n=80, d=3, k=int(3 + seed % 3))
            _, trace = train(data, costs, TrainConfig(rounds=25))
            losses = [trace.loss_initial] + [r.loss for r in trace.rounds]
            for a, b in zip(losses, losses[1:]):
                assert b <= a + 1e-12

    def test_trace_loss_matches_recomputed_surrogate(self):
        for seed in range(8):
            data, costs = random_problem(seed + 50, n=70, d=3, k=3)
            model, trace = train(data, costs, TrainConfig(rounds=15))
            report = surrogate_loss(model, data, costs)
            assert report.surrogate == pytest.approx(trace.rounds[-1].loss, abs=1e-9)

    def test_round_accounting_identity(self):
        """Replay: each round's post-update loss is floor + achieved value - mean c*/2."""
        data, costs = random_problem(31, n=60, d=3, k=4)
        model, trace = train(data, costs, TrainConfig(rounds=10, fit_a0=False))
        floor, _ = loss_floor(costs, data.labels)
        w = init_weights(costs, data)
        c_star_bar = trace.c_star_bar
        for (learner, vector), record in zip(model.rounds, trace.rounds):
            out = learner.evaluate(data.features)
            value = split_value(accumulate_split(out, w), vector)
            assert floor + value - c_star_bar == pytest.approx(record.loss, abs=1e-12)
            update_weights(w, out, vector)

    def test_binary_uniform_scores_antisymmetric(self):
        data, _ = random_problem(9, n=80, d=4, k=2)
        for fit_a0 in (False, True):
            model, _ = train(data, CostMatrix.uniform(2),
                             TrainConfig(rounds=20, fit_a0=fit_a0))
            h = model.scores(data.features)
            assert np.max(np.abs(h[:, 0] + h[:, 1])) < 1e-9

    def test_deterministic(self):
        data, costs = random_problem(17, n=60, d=3, k=3)
        cfg = TrainConfig(rounds=12, tree_depth=2)
        model_a, _ = train(data, costs, cfg)
        model_b, _ = train(data, costs, cfg)
        assert model_to_text(model_a) == model_to_text(model_b)

    def test_prefix_models_reproduce_trace(self):
        """Truncating the round list replays the recorded error path."""
        data, costs = random_problem(23, n=70, d=3, k=3)
        model, trace = train(data, costs, TrainConfig(rounds=8))
        for t, record in enumerate(trace.rounds, start=1):
            prefix = StrongClassifier(k=model.k, d=model.d, a0=model.a0,
                                      rounds=model.rounds[:t], fingerprint="")
            preds = predict_all(prefix, data.features)
            assert float(np.mean(preds != data.labels)) == pytest.approx(
                record.train_error, abs=1e-15)

    def test_certificate_stop_means_zero_risk(self):
        data, costs = separable_problem()
        model, trace = train(data, costs, TrainConfig(rounds=200))
        assert trace.stopped == "certificate"
        assert trace.rounds[-1].loss < trace.certificate
        assert trace.rounds[-1].train_risk == 0.0

    def test_early_stop_can_be_disabled(self):
        data, costs = separable_problem()
        _, trace = train(data, costs, TrainConfig(rounds=40,
                                                  early_stop_on_certificate=False))
        assert trace.stopped in ("rounds", "floor")
        assert len(trace.rounds) >= 1

    def test_phi_stays_in_unit_range_above_certificate(self):
        for seed in (2, 12, 22):
            data, costs = random_problem(seed, n=80, d=3, k=3)
            _, trace = train(data, costs, TrainConfig(rounds=25))
            prev = trace.loss_initial
            for record in trace.rounds:
                if prev >= trace.certificate and np.isfinite(record.phi):
                    assert -1e-12 <= record.phi <= 1.0 + 1e-12
                prev = record.loss


class TestPredict:
    def test_tie_goes_to_lowest_index(self):
        model = StrongClassifier(k=3, d=2, a0=np.array([0.5, 0.5, 0.0]),
                                 rounds=[], fingerprint="")
        label, scores = predict(model, np.array([0.0, 0.0]))
        assert label == 1
        np.testing.assert_array_equal(scores, [0.5, 0.5, 0.0])

    def test_shape_validation(self):
        model = StrongClassifier(k=2, d=3, a0=np.zeros(2), rounds=[], fingerprint="")
        with pytest.raises(ValueError):
            predict(model, np.zeros(2))
        with pytest.raises(ValueError):
            model.scores(np.zeros((4, 2)))

    def test_predict_all_matches_predict(self, rng):
        from conftest import random_model
        model = random_model(3, k=3, d=4, rounds=5)
        x = rng.normal(size=(20, 4))
        batch = predict_all(model, x)
        singles = [predict(model, x[i])[0] for i in range(20)]
        np.testing.assert_array_equal(batch, singles)
