"""Fisher information, Cramer-Rao bounds and the cost/uncertainty acceptance filter."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGeometryError, IllConditionedError, InvalidInputError
from .geo import GeodeticPoint, NedPoint


@dataclass(frozen=True)
class CrlbConfig:
    noise_variance_m2: float = 9.0
    condition_limit: float = 1e8
    tau_cost: float = 50.0
    tau_crlb_m: float = 10.0

    def __post_init__(self):
        for name in ("noise_variance_m2", "condition_limit", "tau_cost", "tau_crlb_m"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be > 0")


class Method(enum.Enum):
    TOF = "ToF"
    TDOA = "TDoA"


class RejectReason(enum.Enum):
    NONE = "none"
    ILL_CONDITIONED = "ill-conditioned"
    NOT_CONVERGED = "not-converged"
    COST = "cost"
    CRLB = "crlb"


@dataclass(frozen=True)
class PositionEstimate:
    float: int
    group_id: int
    t_center: float
    position: GeodeticPoint
    position_ned: NedPoint
    cost: float
    sigma_x_m: float
    sigma_y_m: float
    n_slbs: int
    method: Method = Method.TOF
    converged: bool = True
    well_conditioned: bool = True
    accepted: bool = False
    reject_reason: RejectReason = RejectReason.NONE


def _xy(p) -> np.ndarray:
    if isinstance(p, NedPoint):
        return np.array(p.xy, dtype=float)
    return np.asarray(p, dtype=float)


def _unit_vectors(p_star, slbs) -> np.ndarray:
    p = _xy(p_star)
    anchors = np.array([_xy(s) for s in slbs], dtype=float).reshape(-1, 2)
    delta = p - anchors
    r = np.hypot(delta[:, 0], delta[:, 1])
    if np.any(r == 0.0):
        raise DegenerateGeometryError("estimate coincides with an anchor position")
    return delta / r[:, None]


def fisher_information(p_star, slbs: Sequence, sigma2: float) -> np.ndarray:
    """Range-measurement FIM at ``p_star`` (east/north order).

    ``F = (1/sigma2) * sum_i u_i u_i^T`` with ``u_i`` the unit vector from anchor
    ``i`` to the estimate.
    """
    u = _unit_vectors(p_star, slbs)
    return (u.T @ u) / sigma2


def tdoa_fisher_information(p_star, slbs: Sequence, sigma2: float) -> np.ndarray:
    """FIM for range differences against ``slbs[0]``.

    Each arrival carries independent range-equivalent noise of variance
    ``sigma2``, so the differences share the reference error:
    ``Sigma = sigma2 * (I + 1 1^T)``.
    """
    u = _unit_vectors(p_star, slbs)
    g = u[1:] - u[0]
    m = len(g)
    cov = sigma2 * (np.eye(m) + np.ones((m, m)))
    return g.T @ np.linalg.solve(cov, g)


def _check_conditioning(f: np.ndarray, condition_limit: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (2, 2) or not np.all(np.isfinite(f)):
        raise IllConditionedError("FIM must be a finite 2x2 matrix")
    eig = np.linalg.eigvalsh(0.5 * (f + f.T))
    if eig[0] <= 0.0 or eig[1] / eig[0] > condition_limit:
        raise IllConditionedError(f"FIM eigenvalues {eig} exceed condition limit {condition_limit:g}")
    return f


def covariance(f: np.ndarray, condition_limit: float = 1e8) -> np.ndarray:
    return np.linalg.inv(_check_conditioning(f, condition_limit))


def crlb_sigmas(f: np.ndarray, condition_limit: float = 1e8) -> tuple[float, float]:
    """Per-axis standard deviation bounds ``(sigma_x, sigma_y)`` from ``F^-1``."""
    cov = covariance(f, condition_limit)
    return math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])


def chi2_2dof_quantile(confidence: float) -> float:
    if not 0.0 < confidence < 1.0:
        raise InvalidInputError("confidence must lie in (0, 1)")
    return -2.0 * math.log1p(-confidence)


def uncertainty_ellipse(f: np.ndarray, confidence: float = 0.95,
                        condition_limit: float = 1e8) -> tuple[float, float, float]:
    """Semi-major, semi-minor axes (m) and orientation of the major axis.

    Orientation is in radians counter-clockwise from east, in ``(-pi/2, pi/2]``.
    """
    cov = covariance(f, condition_limit)
    vals, vecs = np.linalg.eigh(cov)
    q = chi2_2dof_quantile(confidence)
    major = vecs[:, 1]
    angle = math.atan2(major[1], major[0])
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return math.sqrt(q * vals[1]), math.sqrt(q * vals[0]), angle


def apply_filter(estimate: PositionEstimate, cfg: CrlbConfig = CrlbConfig()) -> PositionEstimate:
    """Set ``accepted`` and the first failing ``reject_reason``.

    Thresholds are inclusive: ``cost <= tau_cost`` and both sigmas ``<= tau_crlb_m``.
    Position fields are never modified.
    """
    reason = _reject_reason(estimate, cfg)
    return replace(estimate, accepted=reason is RejectReason.NONE, reject_reason=reason)


def _reject_reason(e: PositionEstimate, cfg: CrlbConfig) -> RejectReason:
    if not e.well_conditioned or not (math.isfinite(e.sigma_x_m) and math.isfinite(e.sigma_y_m)):
        return RejectReason.ILL_CONDITIONED
    if not e.converged:
        return RejectReason.NOT_CONVERGED
    if not e.cost <= cfg.tau_cost:
        return RejectReason.COST
    if not (e.sigma_x_m <= cfg.tau_crlb_m and e.sigma_y_m <= cfg.tau_crlb_m):
        return RejectReason.CRLB
    return RejectReason.NONE


def sigmas_or_nan(f: Optional[np.ndarray], condition_limit: float) -> tuple[float, float, bool]:
    """``(sigma_x, sigma_y, well_conditioned)`` without raising."""
    if f is None:
        return math.nan, math.nan, False
    try:
        sx, sy = crlb_sigmas(f, condition_limit)
    except IllConditionedError:
        return math.nan, math.nan, False
    return sx, sy, True
