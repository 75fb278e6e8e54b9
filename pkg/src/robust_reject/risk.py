"""Conditional risk of margin losses over score grids.

The conditional (inner) risk of a margin loss at score alpha under
posterior eta is C(alpha, eta) = eta*l(alpha) + (1-eta)*l(-alpha).
Infima over continuous score intervals are certified at grid resolution
only; symmetric grids are built with exactly mirrored points so the
symmetry identity C(alpha, eta) == C(-alpha, 1-eta) holds to float
equality on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .losses import SurrogateSpec, loss_values

__all__ = [
    "AlphaGrid",
    "RiskProfile",
    "margin_loss_fn",
    "conditional_risk",
    "conditional_risk_curve",
    "min_conditional_risk",
    "excess_risk",
    "target_excess_risk_closed_form",
    "min_target_inner_risk",
    "risk_profile",
]


@dataclass(frozen=True)
class AlphaGrid:
    """Uniform inclusive grid of candidate scores alpha = w . x."""

    lo: float = -1.0
    hi: float = 1.0
    n: int = 4001
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 3:
            raise ValueError(f"need n >= 3, got {self.n}")
        pts = np.linspace(self.lo, self.hi, self.n)
        if self.lo == -self.hi:
            # exact antisymmetry: points[i] == -points[n-1-i]
            pts = 0.5 * (pts - pts[::-1])
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)


@dataclass(frozen=True)
class RiskProfile:
    """Conditional risk sampled over a grid for one fixed eta."""

    eta: float
    grid: AlphaGrid
    values: np.ndarray
    argmin_alpha: float
    min_value: float


def margin_loss_fn(loss):
    """Vectorized margins -> values callable from a spec or a callable."""
    if isinstance(loss, SurrogateSpec):
        return lambda m: loss_values(loss, m)
    if callable(loss):
        return loss
    raise TypeError(f"loss must be a SurrogateSpec or callable, got {type(loss)!r}")


def _check_eta(eta: float):
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")


def conditional_risk(loss, alpha: float, eta: float) -> float:
    """C(alpha, eta) = eta*l(alpha) + (1-eta)*l(-alpha)."""
    _check_eta(eta)
    f = margin_loss_fn(loss)
    return float(eta * f(alpha) + (1.0 - eta) * f(-alpha))


def conditional_risk_curve(loss, eta: float, grid: AlphaGrid) -> np.ndarray:
    """C(. , eta) evaluated at every grid point."""
    _check_eta(eta)
    f = margin_loss_fn(loss)
    a = grid.points
    return eta * np.asarray(f(a), dtype=float) + (1.0 - eta) * np.asarray(f(-a), dtype=float)


def min_conditional_risk(loss, eta: float, grid: AlphaGrid) -> tuple[float, float]:
    """Grid minimum of C(. , eta); ties break toward the smallest alpha."""
    values = conditional_risk_curve(loss, eta, grid)
    i = int(np.argmin(values))  # first occurrence = smallest alpha
    return float(grid.points[i]), float(values[i])


def excess_risk(loss, alpha: float, eta: float, grid: AlphaGrid) -> float:
    """C(alpha, eta) minus the grid minimum of C(. , eta)."""
    _, mn = min_conditional_risk(loss, eta, grid)
    return conditional_risk(loss, alpha, eta) - mn


def min_target_inner_risk(eta, d: float):
    """Minimal inner risk of the gamma-shifted 0-d-1 loss: min(eta, 1-eta, d)."""
    e = np.asarray(eta, dtype=float)
    return np.minimum(np.minimum(e, 1.0 - e), d)


def target_excess_risk_closed_form(alpha, eta, d: float, rho: float, gamma: float):
    """Closed-form excess inner risk of the gamma-shifted 0-d-1 loss.

    Five score regions split at -rho-gamma, -rho+gamma, rho-gamma,
    rho+gamma, each with a rejection branch (min(eta,1-eta) >= d) and
    prediction branches on the sign of 2*eta - 1. Broadcasts over alpha
    and eta. Requires rho >= gamma >= 0 (region ordering) and
    rho + gamma < 1 (all regions reachable inside the unit ball).
    """
    if gamma < 0 or gamma > rho:
        raise ValueError(f"need 0 <= gamma <= rho, got gamma={gamma}, rho={rho}")
    if rho + gamma >= 1.0:
        raise ValueError(f"need rho + gamma < 1, got {rho + gamma}")
    a, e = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(eta, dtype=float))
    if np.any((e < 0) | (e > 1)):
        raise ValueError("eta must be in [0, 1]")
    reject = np.minimum(e, 1.0 - e) - d >= 0
    pos = 2.0 * e - 1.0 > 0
    neg = 2.0 * e - 1.0 < 0
    zero = np.zeros_like(e)

    r1 = np.where(reject, e - d, np.where(pos, np.abs(2 * e - 1), zero))
    r2 = np.where(reject, (1 - d) * e,
                  np.where(pos, e - (1 - e) * (1 - d), np.where(neg, (1 - e) * d, zero)))
    r3 = np.where(reject, zero, np.where(pos, d - (1 - e), np.where(neg, d - e, zero)))
    r4 = np.where(reject, (1 - d) * (1 - e),
                  np.where(pos, e * d, np.where(neg, (1 - e) - e * (1 - d), zero)))
    r5 = np.where(reject, 1 - e - d, np.where(neg, np.abs(2 * e - 1), zero))

    out = np.where(a < -rho - gamma, r1,
          np.where(a < -rho + gamma, r2,
          np.where(a <= rho - gamma, r3,
          np.where(a <= rho + gamma, r4, r5))))
    return out if out.ndim else float(out)


def risk_profile(loss, eta: float, grid: AlphaGrid) -> RiskProfile:
    """Sample C(. , eta) over the grid; data behind the risk figures."""
    values = conditional_risk_curve(loss, eta, grid)
    i = int(np.argmin(values))
    values.setflags(write=False)
    return RiskProfile(
        eta=eta,
        grid=grid,
        values=values,
        argmin_alpha=float(grid.points[i]),
        min_value=float(values[i]),
    )
