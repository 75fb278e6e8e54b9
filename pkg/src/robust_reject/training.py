"""Linear reject-option classifiers: SGD training, attacks, adversarial pipeline.

Training minimizes the empirical surrogate risk over Theta = (w, b, rho)
with plain minibatch SGD; rho is projected to stay non-negative. Attacks
move a point inside the L2 ball of radius gamma so as to shrink its
margin: the closed form x - y*gamma*w/||w|| is the exact worst case for
linear scores; projected gradient ascent on the surrogate is provided for
pipeline fidelity and stalls on exactly-flat loss regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .data import LabeledDataset
from .losses import SurrogateSpec, loss_values, margin_grads, rho_grads

__all__ = [
    "REJECT",
    "RejectClassifier",
    "TrainConfig",
    "AttackMethod",
    "AttackConfig",
    "TrainingDivergedError",
    "predict",
    "predict_batch",
    "sgd_train",
    "attack_closed_form",
    "attack_pga",
    "make_adversarial_dataset",
    "adversarial_training",
]

REJECT = 0  # predicted label for abstention


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class RejectClassifier:
    """Linear scorer f(x) = w . x + b with rejection half-width rho."""

    w: np.ndarray
    b: float
    rho: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).reshape(-1)
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")

    def score(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.w + self.b

    def normalized(self) -> "RejectClassifier":
        """Scale (w, b, rho) by 1/||w||; predictions are unchanged.

        Maps a trained classifier into the unit-norm hypothesis class the
        calibration analyses assume.
        """
        nw = float(np.linalg.norm(self.w))
        if nw == 0.0:
            raise ValueError("cannot normalize a zero weight vector")
        return RejectClassifier(self.w / nw, self.b / nw, self.rho / nw)


@dataclass(frozen=True)
class TrainConfig:
    loss: SurrogateSpec
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    rho_init: float = 0.5
    w_init: str = "seeded-gaussian"  # or "zeros"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.rho_init < 0:
            raise ValueError("rho_init must be >= 0")
        if self.w_init not in ("seeded-gaussian", "zeros"):
            raise ValueError(f"unknown w_init {self.w_init!r}")


class AttackMethod(str, Enum):
    CLOSED_FORM = "closed-form"
    PGA = "pga"


@dataclass(frozen=True)
class AttackConfig:
    gamma: float
    method: AttackMethod = AttackMethod.CLOSED_FORM
    pga_steps: int = 40
    pga_step_size: float | None = None  # defaults to gamma / 10
    subset: tuple[int, ...] | None = None  # None = attack every index

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.method is AttackMethod.PGA:
            if self.pga_steps < 1:
                raise ValueError("pga_steps must be >= 1")
            if self.pga_step_size is not None and self.pga_step_size <= 0:
                raise ValueError("pga_step_size must be > 0")

    @property
    def step_size(self) -> float:
        return self.gamma / 10.0 if self.pga_step_size is None else self.pga_step_size


def predict(clf: RejectClassifier, x) -> int:
    """+1 if f(x) > rho, 0 (reject) if |f(x)| <= rho, -1 if f(x) < -rho."""
    f = float(clf.score(np.asarray(x, dtype=float)))
    if f > clf.rho:
        return 1
    if f < -clf.rho:
        return -1
    return REJECT


def predict_batch(clf: RejectClassifier, X) -> np.ndarray:
    f = clf.score(X)
    return np.where(f > clf.rho, 1, np.where(f < -clf.rho, -1, REJECT))


def sgd_train(ds: LabeledDataset, cfg: TrainConfig,
              history: list | None = None) -> RejectClassifier:
    """Minibatch SGD on the empirical surrogate risk over (w, b, rho).

    Deterministic for a fixed config: one PCG64 stream drives the init and
    every epoch's shuffle. If `history` is given it collects the full-data
    mean loss after each epoch.
    """
    if len(ds) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    if cfg.w_init == "seeded-gaussian":
        theta = rng.normal(0.0, 0.01, size=3)
        w, b = theta[:2].copy(), float(theta[2])
    else:
        w, b = np.zeros(2), 0.0
    rho = float(cfg.rho_init)
    X = ds.points
    y = ds.labels.astype(float)
    n = len(ds)
    lr = cfg.learning_rate
    spec = cfg.loss
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            Xb, yb = X[idx], y[idx]
            m = yb * (Xb @ w + b)
            g = margin_grads(spec, m, rho=rho)
            w -= lr * ((g * yb)[:, None] * Xb).mean(axis=0)
            b -= lr * float((g * yb).mean())
            rho = max(rho - lr * float(rho_grads(spec, m, rho=rho).mean()), 0.0)
        epoch_loss = float(loss_values(spec, y * (X @ w + b), rho=rho).mean())
        if not (np.isfinite(epoch_loss) and np.all(np.isfinite(w)) and np.isfinite(b)):
            raise TrainingDivergedError(f"non-finite parameters or loss at epoch {epoch}")
        if history is not None:
            history.append(epoch_loss)
    return RejectClassifier(w=w, b=b, rho=rho)


def attack_closed_form(clf: RejectClassifier, x, y, gamma: float):
    """Worst-case L2 perturbation for a linear score: x - y*gamma*w/||w||.

    Minimizes y*f(x') over the ball B(x, gamma); broadcasts over rows of x
    when given an (N, 2) array with matching labels.
    """
    nw = float(np.linalg.norm(clf.w))
    if nw == 0.0:
        raise ValueError("attack undefined for a zero weight vector")
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x - (float(y) * gamma / nw) * clf.w
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    return x - (gamma / nw) * y * clf.w[None, :]


def attack_pga(clf: RejectClassifier, x, y, cfg: AttackConfig,
               loss: SurrogateSpec):
    """Projected gradient ascent on the surrogate loss within B(x, gamma).

    Steps follow the L2-normalized gradient direction (the raw gradient
    magnitude vanishes on saturated loss regions, which would stall far
    from the ball boundary); iterates are projected back onto the ball.
    A zero gradient stalls the ascent, e.g. on flat ramp plateaus.
    """
    x = np.asarray(x, dtype=float)
    if cfg.gamma == 0.0:
        return x.copy()
    xp = x.copy()
    step = cfg.step_size
    for _ in range(cfg.pga_steps):
        m = float(y) * float(clf.score(xp))
        g = float(margin_grads(loss, m, rho=clf.rho))
        grad = g * float(y) * clf.w
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            break
        xp = xp + step * grad / norm
        delta = xp - x
        dn = float(np.linalg.norm(delta))
        if dn > cfg.gamma:
            xp = x + delta * (cfg.gamma / dn)
    return xp


def _subset_indices(atk: AttackConfig, n: int) -> np.ndarray:
    if atk.subset is None:
        return np.arange(n)
    idx = np.asarray(atk.subset, dtype=int)
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("attack subset index out of range")
    return idx


def make_adversarial_dataset(ds: LabeledDataset, clf: RejectClassifier,
                             atk: AttackConfig, loss: SurrogateSpec) -> LabeledDataset:
    """Replace the selected points by their perturbed versions under clf."""
    idx = _subset_indices(atk, len(ds))
    pts = ds.points.copy()
    if atk.gamma > 0 and len(idx):
        if atk.method is AttackMethod.CLOSED_FORM:
            pts[idx] = attack_closed_form(clf, pts[idx], ds.labels[idx], atk.gamma)
        else:
            for i in idx:
                pts[i] = attack_pga(clf, pts[i], int(ds.labels[i]), atk, loss)
    return LabeledDataset(pts, ds.labels.copy(), seed=ds.seed,
                          is_test=ds.is_test, config=ds.config)


def adversarial_training(train: LabeledDataset, base_cfg: TrainConfig,
                         shifted_cfg: TrainConfig, atk: AttackConfig) -> RejectClassifier:
    """Three-step robust training.

    1. fit Theta* on the clean data with the unshifted loss,
    2. perturb the selected training points at radius gamma under Theta*,
    3. refit on the perturbed data with the shifted loss.
    """
    base = sgd_train(train, base_cfg)
    adv = make_adversarial_dataset(train, base, atk, base_cfg.loss)
    return sgd_train(adv, shifted_cfg)
