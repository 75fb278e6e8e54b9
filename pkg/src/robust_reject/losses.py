"""Margin losses for reject-option classification under L2 perturbations.

Target losses (0-d-1 reject loss and its gamma-shifted adversarial form)
and trainable surrogates (shifted double sigmoid, shifted double ramp,
plus convex references logistic / hinge). All losses are functions of the
margin m = y*f(x); every family is non-increasing in the margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Family",
    "SurrogateSpec",
    "LossValue",
    "loss_values",
    "margin_grads",
    "rho_grads",
    "evaluate",
    "target_ld",
    "target_ld_eq6",
    "target_ld_gamma_linear",
    "target_ld_gamma_sup_oracle",
    "dsl",
    "drl",
    "convex_reference_loss",
]


class Family(str, Enum):
    TARGET_LD = "target-ld"
    TARGET_LD_GAMMA = "target-ld-gamma"
    DOUBLE_SIGMOID = "dsl"
    DOUBLE_RAMP = "drl"
    LOGISTIC = "logistic"
    HINGE = "hinge"


@dataclass(frozen=True)
class SurrogateSpec:
    """Parametrized margin loss.

    d     rejection cost, in (0, 0.5)
    rho   rejection half-width, >= 0
    mu    steepness (sigmoid) / ramp-slope (ramp) parameter, > 0
    beta  right shift, >= 0 (surrogates targeting the gamma-shifted loss
          need beta >= gamma)
    gamma perturbation radius, >= 0 (enters the evaluated loss only for
          the target family; for surrogates it records the radius the
          loss is meant to surrogate, used by the calibration checks)
    """

    family: Family
    d: float = 0.2
    rho: float = 0.5
    mu: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.d < 0.5:
            raise ValueError(f"d must be in (0, 0.5), got {self.d}")
        if self.mu <= 0.0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.rho < 0.0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class LossValue:
    """Loss value with a valid subgradient w.r.t. the margin."""

    value: float
    subgradient: float


def _sigma(u):
    """Decreasing sigmoid 1 / (1 + e^u), overflow-safe for large |u|."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    eneg = np.exp(-u[pos])
    out[pos] = eneg / (1.0 + eneg)
    out[~pos] = 1.0 / (1.0 + np.exp(u[~pos]))
    return out


def _dsl_parts(m, rho, spec):
    s1 = _sigma(spec.mu * (m - spec.beta - rho))
    s2 = _sigma(spec.mu * (m - spec.beta + rho))
    return s1, s2


def _drl_active(m, rho, spec):
    # hinge activity masks, left-slope convention at kinks (<=)
    mp = np.asarray(m, dtype=float) - spec.beta
    a1 = mp <= spec.mu + rho
    a2 = mp <= -spec.mu**2 + rho
    a3 = mp <= spec.mu - rho
    a4 = mp <= -spec.mu**2 - rho
    return a1, a2, a3, a4


def loss_values(spec: SurrogateSpec, margins, rho: float | None = None):
    """Vectorized loss values at the given margins.

    `rho` overrides spec.rho (used during training where the rejection
    threshold is a live parameter).
    """
    m = np.asarray(margins, dtype=float)
    r = spec.rho if rho is None else rho
    fam = spec.family
    if fam is Family.TARGET_LD:
        return (1.0 - spec.d) * (m < -r) + spec.d * (m <= r)
    if fam is Family.TARGET_LD_GAMMA:
        g = spec.gamma
        return (1.0 - spec.d) * (m < -r + g) + spec.d * (m <= r + g)
    if fam is Family.DOUBLE_SIGMOID:
        s1, s2 = _dsl_parts(m, r, spec)
        return 2.0 * spec.d * s1 + 2.0 * (1.0 - spec.d) * s2
    if fam is Family.DOUBLE_RAMP:
        mp = m - spec.beta
        mu, d = spec.mu, spec.d
        pos = lambda a: np.maximum(0.0, a)
        first = pos(mu + r - mp) - pos(-(mu**2) + r - mp)
        second = pos(mu - r - mp) - pos(-(mu**2) - r - mp)
        return (d / mu) * first + ((1.0 - d) / mu) * second
    if fam is Family.LOGISTIC:
        return np.logaddexp(0.0, -spec.mu * (m - spec.beta))
    if fam is Family.HINGE:
        return np.maximum(0.0, 1.0 - (m - spec.beta))
    raise ValueError(f"unknown family {fam!r}")


def margin_grads(spec: SurrogateSpec, margins, rho: float | None = None):
    """Vectorized subgradients d(loss)/d(margin); left slope at kinks."""
    m = np.asarray(margins, dtype=float)
    r = spec.rho if rho is None else rho
    fam = spec.family
    if fam in (Family.TARGET_LD, Family.TARGET_LD_GAMMA):
        return np.zeros_like(m)
    if fam is Family.DOUBLE_SIGMOID:
        s1, s2 = _dsl_parts(m, r, spec)
        d, mu = spec.d, spec.mu
        return -mu * (2.0 * d * s1 * (1.0 - s1) + 2.0 * (1.0 - d) * s2 * (1.0 - s2))
    if fam is Family.DOUBLE_RAMP:
        a1, a2, a3, a4 = _drl_active(m, r, spec)
        d, mu = spec.d, spec.mu
        return (d / mu) * (a2.astype(float) - a1) + ((1.0 - d) / mu) * (a4.astype(float) - a3)
    if fam is Family.LOGISTIC:
        return -spec.mu * _sigma(spec.mu * (m - spec.beta))
    if fam is Family.HINGE:
        return np.where(m - spec.beta <= 1.0, -1.0, 0.0)
    raise ValueError(f"unknown family {fam!r}")


def rho_grads(spec: SurrogateSpec, margins, rho: float | None = None):
    """Vectorized subgradients d(loss)/d(rho) for the trainable families."""
    m = np.asarray(margins, dtype=float)
    r = spec.rho if rho is None else rho
    fam = spec.family
    if fam is Family.DOUBLE_SIGMOID:
        s1, s2 = _dsl_parts(m, r, spec)
        d, mu = spec.d, spec.mu
        return mu * (2.0 * d * s1 * (1.0 - s1) - 2.0 * (1.0 - d) * s2 * (1.0 - s2))
    if fam is Family.DOUBLE_RAMP:
        a1, a2, a3, a4 = _drl_active(m, r, spec)
        d, mu = spec.d, spec.mu
        return (d / mu) * (a1.astype(float) - a2) - ((1.0 - d) / mu) * (a3.astype(float) - a4)
    # target indicators and logistic/hinge do not depend on rho
    return np.zeros_like(m)


def evaluate(spec: SurrogateSpec, margin: float) -> LossValue:
    """Scalar loss evaluation with subgradient."""
    return LossValue(
        value=float(loss_values(spec, margin)),
        subgradient=float(margin_grads(spec, margin)),
    )


def target_ld(margin: float, f_abs: float, spec: SurrogateSpec) -> LossValue:
    """0-d-1 reject-option loss from (margin, |f(x)|).

    value = 1{margin < -rho} + d * 1{|f(x)| <= rho}

    The misclassification indicator is strict at -rho: the predictor
    outputs -1 only for f(x) strictly below -rho, so margin == -rho is a
    rejection (cost d), not an error. This keeps the (margin, |f|) form
    identical to the margin-only convex-combination form for y in {-1,+1}.
    """
    if spec.family is not Family.TARGET_LD:
        raise ValueError("target_ld requires family=TARGET_LD")
    if f_abs < 0:
        raise ValueError(f"f_abs must be >= 0, got {f_abs}")
    value = float(margin < -spec.rho) + spec.d * float(f_abs <= spec.rho)
    return LossValue(value=value, subgradient=0.0)


def target_ld_eq6(margin: float, spec: SurrogateSpec) -> LossValue:
    """0-d-1 loss in margin-only form.

    value = (1-d) * 1{m < -rho} + d * 1{m <= rho}
    """
    if spec.family is not Family.TARGET_LD:
        raise ValueError("target_ld_eq6 requires family=TARGET_LD")
    d, r = spec.d, spec.rho
    value = (1.0 - d) * float(margin < -r) + d * float(margin <= r)
    return LossValue(value=value, subgradient=0.0)


def target_ld_gamma_linear(margin: float, spec: SurrogateSpec) -> LossValue:
    """Adversarial robust reject-option loss, closed form for linear scores.

    value = (1-d) * 1{m < -rho + gamma} + d * 1{m <= rho + gamma}

    i.e. the 0-d-1 loss shifted right by the perturbation radius gamma.
    """
    if spec.family is not Family.TARGET_LD_GAMMA:
        raise ValueError("target_ld_gamma_linear requires family=TARGET_LD_GAMMA")
    d, r, g = spec.d, spec.rho, spec.gamma
    value = (1.0 - d) * float(margin < -r + g) + d * float(margin <= r + g)
    return LossValue(value=value, subgradient=0.0)


def target_ld_gamma_sup_oracle(
    w: np.ndarray,
    rho: float,
    x: np.ndarray,
    y: int,
    spec: SurrogateSpec,
    n_dirs: int,
    seed: int = 0,
) -> LossValue:
    """Brute-force evaluation of the two suprema in the adversarial loss.

    Each indicator's supremum over the L2 ball B(x, gamma) is taken over
    n_dirs random sphere directions plus the analytic worst direction
    -y*gamma*w. Test oracle only; must agree with target_ld_gamma_linear
    for unit-norm w.
    """
    if n_dirs < 1:
        raise ValueError(f"n_dirs must be >= 1, got {n_dirs}")
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(w) - 1.0) > 1e-9:
        raise ValueError("oracle requires ||w|| = 1")
    g = spec.gamma
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_dirs, x.size))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cands = np.vstack([x[None, :], x[None, :] + g * dirs, x[None, :] - y * g * w])
    worst = float(np.min(y * (cands @ w)))
    d = spec.d
    sup_mis = float(worst < -rho)
    sup_rej = float(worst <= rho)
    return LossValue(value=(1.0 - d) * sup_mis + d * sup_rej, subgradient=0.0)


def dsl(margin: float, spec: SurrogateSpec) -> LossValue:
    """Shifted double sigmoid loss.

    value = 2d * s(m - beta - rho) + 2(1-d) * s(m - beta + rho)

    with s(a) = 1 / (1 + e^{mu*a}); beta = 0 recovers the plain double
    sigmoid loss. The gradient uses s'(a) = -mu * s(a) * (1 - s(a)).
    """
    if spec.family is not Family.DOUBLE_SIGMOID:
        raise ValueError("dsl requires family=DOUBLE_SIGMOID")
    return evaluate(spec, margin)


def drl(margin: float, spec: SurrogateSpec) -> LossValue:
    """Shifted double ramp loss.

    With m' = m - beta and [a]+ = max(0, a),

    value = (d/mu)   * ([mu + rho - m']+  - [-mu^2 + rho - m']+)
          + ((1-d)/mu) * ([mu - rho - m']+ - [-mu^2 - rho - m']+)

    Piecewise linear; at kinks the subgradient is the left slope.
    """
    if spec.family is not Family.DOUBLE_RAMP:
        raise ValueError("drl requires family=DOUBLE_RAMP")
    return evaluate(spec, margin)


def convex_reference_loss(margin: float, spec: SurrogateSpec) -> LossValue:
    """Shifted convex reference losses.

    logistic: log(1 + e^{-mu*(m - beta)})    hinge: [1 - (m - beta)]+
    """
    if spec.family not in (Family.LOGISTIC, Family.HINGE):
        raise ValueError("convex_reference_loss requires LOGISTIC or HINGE")
    return evaluate(spec, margin)
