import numpy as np
import pytest

from robust_reject import (
    AttackConfig,
    AttackMethod,
    DataConfig,
    Family,
    LabeledDataset,
    RejectClassifier,
    SurrogateSpec,
    TrainConfig,
    TrainingDivergedError,
    adversarial_training,
    attack_closed_form,
    attack_pga,
    generate,
    loss_values,
    make_adversarial_dataset,
    predict,
    predict_batch,
    sgd_train,
)

DSL = SurrogateSpec(Family.DOUBLE_SIGMOID, d=0.2, rho=0.5, mu=2.65)


def small_dataset(seed=0, flip=0.05):
    train, _ = generate(DataConfig(seed=seed, flip_fraction=flip))
    return train


class TestPredict:
    CLF = RejectClassifier(w=np.array([1.0, 0.0]), b=0.0, rho=0.5)

    def test_zero_score_rejects(self):
        assert predict(self.CLF, [0.0, 0.3]) == 0

    def test_boundary_is_inclusive(self):
        assert predict(self.CLF, [0.5, 0.0]) == 0
        assert predict(self.CLF, [-0.5, 0.0]) == 0

    def test_confident_sides(self):
        assert predict(self.CLF, [0.51, 0.0]) == 1
        assert predict(self.CLF, [-0.51, 0.0]) == -1

    def test_batch_agrees_with_scalar(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(-1, 1, size=(50, 2))
        batch = predict_batch(self.CLF, X)
        assert all(batch[i] == predict(self.CLF, X[i]) for i in range(len(X)))

    def test_rho_must_be_non_negative(self):
        with pytest.raises(ValueError):
            RejectClassifier(w=np.ones(2), b=0.0, rho=-0.1)


class TestSgdTrain:
    def test_deterministic(self):
        ds = small_dataset()
        cfg = TrainConfig(loss=DSL, epochs=5, seed=3)
        a = sgd_train(ds, cfg)
        b = sgd_train(ds, cfg)
        assert np.array_equal(a.w, b.w) and a.b == b.b and a.rho == b.rho

    def test_zero_epochs_returns_initialization(self):
        ds = small_dataset()
        clf = sgd_train(ds, TrainConfig(loss=DSL, epochs=0, w_init="zeros", rho_init=0.7))
        assert np.array_equal(clf.w, np.zeros(2)) and clf.b == 0.0 and clf.rho == 0.7

    def test_zero_learning_rate_keeps_initialization(self):
        ds = small_dataset()
        clf = sgd_train(ds, TrainConfig(loss=DSL, epochs=3, learning_rate=0.0,
                                        w_init="zeros", rho_init=0.4))
        assert np.array_equal(clf.w, np.zeros(2)) and clf.rho == 0.4

    def test_loss_decreases_over_training(self):
        ds = small_dataset()
        history: list = []
        sgd_train(ds, TrainConfig(loss=DSL, epochs=40, seed=1), history=history)
        assert history[-1] <= history[0]

    def test_separable_data_reaches_low_reject_risk(self):
        # on flip-free data the trained classifier's empirical 0-d-1 risk
        # must end below 0.1
        ds = small_dataset(seed=4, flip=0.0)
        clf = sgd_train(ds, TrainConfig(loss=DSL, epochs=300, seed=4))
        pred = predict_batch(clf, ds.points)
        rejected = pred == 0
        mis = (~rejected) & (pred != ds.labels)
        risk = (mis.sum() + 0.2 * rejected.sum()) / len(ds)
        assert risk < 0.1

    def test_rho_stays_non_negative(self):
        ds = small_dataset()
        clf = sgd_train(ds, TrainConfig(loss=DSL, epochs=10, rho_init=0.0, seed=2))
        assert clf.rho >= 0.0

    def test_empty_dataset_rejected(self):
        empty = LabeledDataset(np.empty((0, 2)), np.empty(0, dtype=int))
        with pytest.raises(ValueError, match="empty"):
            sgd_train(empty, TrainConfig(loss=DSL))

    def test_divergence_raises_with_epoch(self):
        ds = small_dataset()
        cfg = TrainConfig(loss=SurrogateSpec(Family.LOGISTIC, d=0.2, mu=2.65),
                          learning_rate=1.7e308, epochs=3, seed=0)
        with pytest.raises(TrainingDivergedError, match="epoch"):
            sgd_train(ds, cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(loss=DSL, learning_rate=-1.0)
        with pytest.raises(ValueError):
            TrainConfig(loss=DSL, batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(loss=DSL, w_init="ones")


class TestClosedFormAttack:
    def test_margin_drop_identity(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            clf = RejectClassifier(w=rng.normal(size=2), b=float(rng.normal()), rho=0.2)
            x = rng.uniform(-0.7, 0.7, size=2)
            y = int(rng.choice([-1, 1]))
            gamma = float(rng.uniform(0, 0.3))
            xp = attack_closed_form(clf, x, y, gamma)
            want = y * float(clf.score(x)) - gamma * np.linalg.norm(clf.w)
            assert y * float(clf.score(xp)) == pytest.approx(want, abs=1e-12)

    def test_zero_radius_identity(self):
        clf = RejectClassifier(w=np.array([0.3, 0.4]), b=0.1, rho=0.2)
        x = np.array([0.5, -0.2])
        assert np.array_equal(attack_closed_form(clf, x, 1, 0.0), x)

    def test_label_sign_symmetry(self):
        clf = RejectClassifier(w=np.array([0.6, -0.8]), b=0.0, rho=0.1)
        x = np.array([0.1, 0.2])
        dp = attack_closed_form(clf, x, 1, 0.25) - x
        dm = attack_closed_form(clf, x, -1, 0.25) - x
        np.testing.assert_allclose(dp, -dm, atol=1e-15)

    def test_never_beaten_by_random_search(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            clf = RejectClassifier(w=rng.normal(size=2), b=float(rng.normal()), rho=0.3)
            x = rng.uniform(-0.7, 0.7, size=2)
            y = int(rng.choice([-1, 1]))
            gamma = float(rng.uniform(0.01, 0.3))
            best = y * float(clf.score(attack_closed_form(clf, x, y, gamma)))
            dirs = rng.normal(size=(1000, 2))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            radii = rng.uniform(0, gamma, size=(1000, 1))
            margins = y * (clf.score(x[None, :] + radii * dirs))
            assert margins.min() >= best - 1e-12

    def test_batch_form(self):
        clf = RejectClassifier(w=np.array([1.0, 1.0]), b=0.0, rho=0.2)
        X = np.array([[0.1, 0.2], [-0.3, 0.0]])
        y = np.array([1, -1])
        out = attack_closed_form(clf, X, y, 0.1)
        for i in range(2):
            np.testing.assert_allclose(out[i], attack_closed_form(clf, X[i], y[i], 0.1))

    def test_zero_weights_error(self):
        clf = RejectClassifier(w=np.zeros(2), b=0.0, rho=0.2)
        with pytest.raises(ValueError, match="zero weight"):
            attack_closed_form(clf, np.zeros(2), 1, 0.1)

    def test_feasibility(self):
        clf = RejectClassifier(w=np.array([2.0, -1.0]), b=0.0, rho=0.2)
        x = np.array([0.2, 0.1])
        xp = attack_closed_form(clf, x, 1, 0.17)
        assert np.linalg.norm(xp - x) <= 0.17 + 1e-12


class TestPgaAttack:
    def test_matches_closed_form_margin(self):
        rng = np.random.default_rng(10)
        atk = AttackConfig(gamma=0.2, method=AttackMethod.PGA)
        for _ in range(100):
            clf = RejectClassifier(w=rng.normal(size=2) * float(rng.uniform(0.5, 2.0)),
                                   b=float(rng.normal() * 0.2), rho=0.5)
            x = rng.uniform(-0.7, 0.7, size=2)
            y = int(rng.choice([-1, 1]))
            xp = attack_pga(clf, x, y, atk, DSL)
            xc = attack_closed_form(clf, x, y, atk.gamma)
            assert y * clf.score(xp) == pytest.approx(y * clf.score(xc), abs=1e-6)
            assert np.linalg.norm(xp - x) <= atk.gamma + 1e-12

    def test_zero_radius(self):
        clf = RejectClassifier(w=np.ones(2), b=0.0, rho=0.5)
        x = np.array([0.3, 0.3])
        out = attack_pga(clf, x, 1, AttackConfig(gamma=0.0, method=AttackMethod.PGA), DSL)
        assert np.array_equal(out, x)

    def test_stalls_on_flat_ramp_plateau(self):
        # margin sits inside the double-ramp rejection plateau: the gradient
        # is exactly zero, so ascent cannot move the point
        drl = SurrogateSpec(Family.DOUBLE_RAMP, d=0.2, rho=0.5, mu=0.55)
        clf = RejectClassifier(w=np.array([1.0, 0.0]), b=0.0, rho=0.5)
        x = np.array([0.1, 0.0])  # margin 0.1 in the flat zone [0.05, 0.1975]
        out = attack_pga(clf, x, 1, AttackConfig(gamma=0.02, method=AttackMethod.PGA), drl)
        assert np.array_equal(out, x)

    def test_attack_config_validation(self):
        with pytest.raises(ValueError):
            AttackConfig(gamma=-0.1)
        with pytest.raises(ValueError):
            AttackConfig(gamma=0.1, method=AttackMethod.PGA, pga_steps=0)
        with pytest.raises(ValueError):
            AttackConfig(gamma=0.1, method=AttackMethod.PGA, pga_step_size=-0.5)

    def test_default_step_size_is_tenth_of_radius(self):
        assert AttackConfig(gamma=0.3).step_size == pytest.approx(0.03)


class TestAdversarialDataset:
    def test_empty_subset_keeps_data(self):
        ds = small_dataset()
        clf = RejectClassifier(w=np.array([1.0, 0.0]), b=0.0, rho=0.5)
        adv = make_adversarial_dataset(ds, clf, AttackConfig(gamma=0.2, subset=()), DSL)
        assert np.array_equal(adv.points, ds.points)

    def test_subset_only_moves_selected_points(self):
        ds = small_dataset()
        clf = RejectClassifier(w=np.array([1.0, 0.0]), b=0.0, rho=0.5)
        adv = make_adversarial_dataset(ds, clf, AttackConfig(gamma=0.2, subset=(0, 5)), DSL)
        moved = np.any(adv.points != ds.points, axis=1)
        assert set(np.where(moved)[0]) == {0, 5}

    def test_full_attack_feasibility(self):
        ds = small_dataset()
        clf = RejectClassifier(w=np.array([0.8, -0.6]), b=0.1, rho=0.5)
        adv = make_adversarial_dataset(ds, clf, AttackConfig(gamma=0.15), DSL)
        dist = np.linalg.norm(adv.points - ds.points, axis=1)
        assert dist.max() <= 0.15 + 1e-12

    def test_out_of_range_subset(self):
        ds = small_dataset()
        clf = RejectClassifier(w=np.ones(2), b=0.0, rho=0.5)
        with pytest.raises(ValueError, match="subset"):
            make_adversarial_dataset(ds, clf, AttackConfig(gamma=0.1, subset=(10**6,)), DSL)


class TestAdversarialTraining:
    def test_identity_pipeline_reproduces_clean_training(self):
        # gamma = 0 and identical configs: step 3 re-runs step 1 exactly
        ds = small_dataset(seed=6)
        cfg = TrainConfig(loss=DSL, epochs=5, seed=6)
        direct = sgd_train(ds, cfg)
        piped = adversarial_training(ds, cfg, cfg, AttackConfig(gamma=0.0))
        assert np.array_equal(direct.w, piped.w)
        assert direct.b == piped.b and direct.rho == piped.rho

    def test_shifted_retraining_changes_parameters(self):
        ds = small_dataset(seed=6)
        base = TrainConfig(loss=DSL, epochs=5, seed=6)
        shifted = TrainConfig(loss=SurrogateSpec(Family.DOUBLE_SIGMOID, d=0.2, rho=0.5,
                                                 mu=2.65, beta=0.1), epochs=5, seed=6)
        clf = adversarial_training(ds, base, shifted, AttackConfig(gamma=0.2))
        assert not np.array_equal(clf.w, sgd_train(ds, base).w)

    def test_deterministic(self):
        ds = small_dataset(seed=8)
        base = TrainConfig(loss=DSL, epochs=3, seed=8)
        a = adversarial_training(ds, base, base, AttackConfig(gamma=0.1))
        b = adversarial_training(ds, base, base, AttackConfig(gamma=0.1))
        assert np.array_equal(a.w, b.w) and a.rho == b.rho


def test_normalized_classifier_keeps_predictions():
    rng = np.random.default_rng(12)
    clf = RejectClassifier(w=np.array([3.0, -4.0]), b=0.5, rho=1.0)
    norm = clf.normalized()
    assert np.linalg.norm(norm.w) == pytest.approx(1.0)
    X = rng.uniform(-1, 1, size=(200, 2))
    assert np.array_equal(predict_batch(clf, X), predict_batch(norm, X))
