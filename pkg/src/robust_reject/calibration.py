"""Numeric verification of the reject-option calibration conditions.

A margin surrogate of the gamma-shifted 0-d-1 loss is calibrated iff

  (I)  inf_{rho-gamma < a <= ||x||} C(a, 1/2)  >  inf_{0 <= a <= ||x||} C(a, 1/2)
  (II) inf_{-||x|| <= a <= rho+gamma} C(a, eta) >  inf_{-||x|| <= a <= ||x||} C(a, eta)
       for every eta in (1/2, 1]

i.e. the conditional-risk minimizer sits in [0, rho-gamma] at eta = 1/2
and jumps beyond rho+gamma for any eta > 1/2. Both infima are certified
at grid resolution only; every verdict carries the grid spacing. Strict
comparisons use STRICTNESS_TOL, so equality counts as NOT satisfied.

Checks for eta < 1/2 are redundant: C(a, eta) = C(-a, 1-eta) for every
margin loss, so condition (II) at eta mirrors itself at 1 - eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import Family, SurrogateSpec
from .risk import AlphaGrid, RiskProfile, conditional_risk_curve, margin_loss_fn, \
    target_excess_risk_closed_form

__all__ = [
    "STRICTNESS_TOL",
    "ConditionResult",
    "CalibrationReport",
    "DeltaCurve",
    "eta_left",
    "eta_right",
    "check_eta_half",
    "check_eta_gt_half",
    "calibration_report",
    "delta_curve",
    "is_quasiconcave",
    "minima_jump_diagnostic",
]

STRICTNESS_TOL = 1e-12

SYMMETRY_NOTE = (
    "etas below 1/2 are not checked: C(alpha, eta) = C(-alpha, 1-eta) for any "
    "margin loss, so each eta < 1/2 check mirrors the one at 1 - eta"
)


def eta_left(d: float) -> float:
    """Posterior threshold (1-d)/(2-d) where the target excess-risk cases change."""
    return (1.0 - d) / (2.0 - d)


def eta_right(d: float) -> float:
    """Posterior threshold 1/(2-d) where the target excess-risk cases change."""
    return 1.0 / (2.0 - d)


@dataclass(frozen=True)
class ConditionResult:
    satisfied: bool
    lhs_inf: float
    rhs_inf: float
    margin: float
    eta: float
    region_lhs: tuple[float, float]
    grid_spacing: float
    argmin_alpha: float  # global-grid argmin of C(., eta) over the rhs region


@dataclass(frozen=True)
class CalibrationReport:
    eta_half_result: ConditionResult
    results: tuple[ConditionResult, ...]
    overall: bool
    params: SurrogateSpec | None
    xi_offsets: tuple[float, ...]
    notes: str = SYMMETRY_NOTE


@dataclass(frozen=True)
class DeltaCurve:
    """Grid estimate of the uniform pseudo-calibration function.

    deltas[i] = inf of surrogate excess risk over grid pairs (eta, alpha)
    whose target excess risk is >= epsilons[i]; math.inf where the
    constraint set is empty.
    """

    epsilons: tuple[float, ...]
    deltas: tuple[float, ...]
    eta_grid: tuple[float, ...]
    alpha_grid: AlphaGrid


def _resolve_regions(loss, rho, gamma):
    if rho is None or gamma is None:
        if not isinstance(loss, SurrogateSpec):
            raise ValueError("rho and gamma are required for callable losses")
        rho = loss.rho if rho is None else rho
        gamma = loss.gamma if gamma is None else gamma
    if isinstance(loss, SurrogateSpec) and loss.family in (Family.DOUBLE_SIGMOID, Family.DOUBLE_RAMP):
        if loss.beta < gamma:
            raise ValueError(
                f"shifted surrogate needs beta >= gamma, got beta={loss.beta}, gamma={gamma}"
            )
    return rho, gamma


def _condition(loss, eta, lhs_mask, rhs_mask, region_lhs, grid) -> ConditionResult:
    values = conditional_risk_curve(loss, eta, grid)
    lhs = float(values[lhs_mask].min())
    rhs_vals = values[rhs_mask]
    rhs = float(rhs_vals.min())
    argmin = float(grid.points[rhs_mask][int(np.argmin(rhs_vals))])
    margin = lhs - rhs
    return ConditionResult(
        satisfied=margin > STRICTNESS_TOL,
        lhs_inf=lhs,
        rhs_inf=rhs,
        margin=margin,
        eta=eta,
        region_lhs=region_lhs,
        grid_spacing=grid.spacing,
        argmin_alpha=argmin,
    )


def check_eta_half(loss, x_norm: float = 1.0, grid: AlphaGrid | None = None,
                   *, rho: float | None = None, gamma: float | None = None) -> ConditionResult:
    """Condition (I) at eta = 1/2."""
    rho, gamma = _resolve_regions(loss, rho, gamma)
    grid = grid or AlphaGrid()
    if rho - gamma >= x_norm:
        raise ValueError(f"empty lhs region: rho - gamma = {rho - gamma} >= x_norm = {x_norm}")
    pts = grid.points
    lhs_mask = (pts > rho - gamma) & (pts <= x_norm)
    rhs_mask = (pts >= 0.0) & (pts <= x_norm)
    return _condition(loss, 0.5, lhs_mask, rhs_mask, (rho - gamma, x_norm), grid)


def check_eta_gt_half(loss, eta: float, x_norm: float = 1.0, grid: AlphaGrid | None = None,
                      *, rho: float | None = None, gamma: float | None = None) -> ConditionResult:
    """Condition (II) at one eta in (1/2, 1]."""
    if not 0.5 < eta <= 1.0:
        raise ValueError(f"eta must be in (1/2, 1], got {eta}")
    rho, gamma = _resolve_regions(loss, rho, gamma)
    grid = grid or AlphaGrid()
    pts = grid.points
    lhs_mask = (pts >= -x_norm) & (pts <= rho + gamma)
    rhs_mask = (pts >= -x_norm) & (pts <= x_norm)
    return _condition(loss, eta, lhs_mask, rhs_mask, (-x_norm, rho + gamma), grid)


def calibration_report(loss, eta_list, x_norm: float = 1.0, grid: AlphaGrid | None = None,
                       *, xi_offsets: tuple[float, ...] = (0.04, 0.01),
                       rho: float | None = None, gamma: float | None = None) -> CalibrationReport:
    """Condition (I) plus condition (II) at each listed eta and at 0.5 + xi."""
    grid = grid or AlphaGrid()
    etas = sorted(set(float(e) for e in eta_list) | {0.5 + xi for xi in xi_offsets})
    for e in etas:
        if not 0.5 < e <= 1.0:
            raise ValueError(f"eta list must lie in (1/2, 1], got {e}")
    half = check_eta_half(loss, x_norm, grid, rho=rho, gamma=gamma)
    results = tuple(
        check_eta_gt_half(loss, e, x_norm, grid, rho=rho, gamma=gamma) for e in etas
    )
    overall = half.satisfied and all(r.satisfied for r in results)
    return CalibrationReport(
        eta_half_result=half,
        results=results,
        overall=overall,
        params=loss if isinstance(loss, SurrogateSpec) else None,
        xi_offsets=tuple(xi_offsets),
    )


def delta_curve(target: SurrogateSpec, surrogate, epsilons, eta_grid,
                alpha_grid: AlphaGrid | None = None) -> DeltaCurve:
    """Estimate delta(eps) = inf { surrogate excess | target excess >= eps }.

    The target excess risk is the closed form of the gamma-shifted 0-d-1
    loss (no discretization on the constraint side); the surrogate excess
    uses the grid minimum per eta. Empty constraint sets yield math.inf.
    """
    if target.family not in (Family.TARGET_LD, Family.TARGET_LD_GAMMA):
        raise ValueError("target must be a target-loss spec")
    eps = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps) or any(b <= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be positive and strictly increasing")
    if isinstance(surrogate, SurrogateSpec) and \
            surrogate.family in (Family.DOUBLE_SIGMOID, Family.DOUBLE_RAMP) and \
            surrogate.beta < target.gamma:
        raise ValueError("shifted surrogate needs beta >= target.gamma")
    alpha_grid = alpha_grid or AlphaGrid()
    etas = np.asarray(sorted(float(e) for e in eta_grid))
    f = margin_loss_fn(surrogate)
    a = alpha_grid.points
    la = np.asarray(f(a), dtype=float)
    lna = np.asarray(f(-a), dtype=float)
    sur = etas[:, None] * la[None, :] + (1.0 - etas[:, None]) * lna[None, :]
    sur_excess = sur - sur.min(axis=1, keepdims=True)
    tgt_excess = target_excess_risk_closed_form(
        a[None, :], etas[:, None], target.d, target.rho, target.gamma
    )
    deltas = []
    for e in eps:
        feasible = tgt_excess >= e
        deltas.append(float(sur_excess[feasible].min()) if feasible.any() else math.inf)
    return DeltaCurve(
        epsilons=tuple(eps),
        deltas=tuple(deltas),
        eta_grid=tuple(etas.tolist()),
        alpha_grid=alpha_grid,
    )


def is_quasiconcave(profile: RiskProfile, tol: float = 1e-12) -> bool:
    """True iff the sampled risk rises (or stays flat) then falls (or stays flat).

    Plateaus are allowed; comparisons use tol. Monotone profiles are the
    degenerate cases of the characterization.
    """
    diffs = np.diff(profile.values)
    decreasing = np.where(diffs < -tol)[0]
    if decreasing.size == 0:
        return True
    return bool(np.all(diffs[decreasing[0]:] <= tol))


def minima_jump_diagnostic(loss, etas, x_norm: float = 1.0, grid: AlphaGrid | None = None,
                           *, rho: float | None = None,
                           gamma: float | None = None) -> list[tuple[float, float]]:
    """Conditional-risk argmin per eta.

    For eta = 0.5 the minimizer is reported from the non-negative half of
    the grid (C(., 1/2) is symmetric about 0, so the location is defined
    up to sign). A calibrated configuration shows argmin in [0, rho-gamma]
    at eta = 0.5 and argmin > rho+gamma at every listed eta above 0.5.
    """
    etas = [float(e) for e in etas]
    if etas != sorted(etas):
        raise ValueError("etas must be sorted ascending")
    if 0.5 not in etas:
        raise ValueError("etas must contain 0.5")
    _resolve_regions(loss, rho, gamma)  # validates beta >= gamma for shifted surrogates
    grid = grid or AlphaGrid()
    pts = grid.points
    out = []
    for e in etas:
        values = conditional_risk_curve(loss, e, grid)
        mask = (pts >= 0.0) & (pts <= x_norm) if e == 0.5 else \
               (pts >= -x_norm) & (pts <= x_norm)
        sel = values[mask]
        out.append((e, float(pts[mask][int(np.argmin(sel))])))
    return out
