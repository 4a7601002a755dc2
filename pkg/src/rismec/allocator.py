"""Per-slot resource allocation: device CPU speed and uplink power.

The communication subproblem for a fixed RIS configuration is

    minimize  V * sum(p) + K * A / R(p),   R(p) = W * sum_b log2(1 + a_b p_b)
    s.t.      p >= 0,  p_min <= sum(p) <= p_max

with ``K = Y + Z``. It is convex, and stationarity gives water-filling
``p_b = max(0, mu - 1/a_b)`` with a common level ``mu``. Without an active
total-power bound the level solves ``mu * R(mu)**2 = K A W / (V ln 2)``.
On a fixed active set of ``k`` bins that equation reads
``(k u + S) exp(u / 2) = C`` in ``u = ln mu``, which is solved exactly with
the principal branch of the Lambert W function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw

from rismec.model import LN2, SystemConfig, eval_rate


class NoUsableSubcarrier(ValueError):
    """Every subcarrier has a zero channel-to-noise ratio."""


@dataclass(frozen=True)
class CommSolverSettings:
    """``kkt_tol`` bounds the normalized KKT residual of returned solutions.

    With ``verify`` set, every solution is checked against that bound and a
    violation raises ``ArithmeticError``.
    """

    kkt_tol: float = 1e-6
    verify: bool = False

    def __post_init__(self):
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")


def solve_local_cpu(w_l: float, y: float, z: float, v: float, cfg: SystemConfig) -> float:
    """Minimizer of ``V gamma f**3 + (Y + Z) w_l / f`` over the CPU range."""
    weight = y + z
    if weight <= 0.0:
        return cfg.f_l_min
    f = (weight * w_l / (3.0 * v * cfg.gamma)) ** 0.25
    return min(max(f, cfg.f_l_min), cfg.f_l_max)


def comm_objective(p_bins, cnr, a_bits, y, z, v, cfg: SystemConfig) -> float:
    rate = eval_rate(p_bins, cnr, cfg.W)
    delay = math.inf if rate <= 0 else a_bits / rate
    weight = y + z
    return v * float(np.sum(p_bins)) + (weight * delay if weight > 0 else 0.0)


def waterfill_total(cnr: np.ndarray, total: float) -> np.ndarray:
    """Classic water-filling spending exactly ``total`` watts."""
    floor = np.full(cnr.shape, np.inf)
    pos = cnr > 0
    floor[pos] = 1.0 / cnr[pos]
    order = np.argsort(floor, kind="stable")
    t = floor[order]
    k_max = int(np.count_nonzero(pos))
    csum = np.cumsum(t[:k_max])
    k = np.arange(1, k_max + 1)
    levels = (total + csum) / k
    upper = np.append(t[1:k_max], np.inf)
    valid = levels <= upper
    mu = levels[int(np.argmax(valid))]
    p = np.maximum(0.0, mu - floor)
    p[~pos] = 0.0
    return p * (total / p.sum())


def _interior_level(cnr_sorted: np.ndarray, rhs: float, W: float) -> float:
    """Water level solving ``mu * R(mu)**2 = rhs`` for descending ``cnr_sorted``."""
    k = np.arange(1, cnr_sorted.size + 1, dtype=float)
    s = np.cumsum(np.log(cnr_sorted))
    c = math.sqrt(rhs) * LN2 / W
    # w e^w = c e^{s/(2k)} / (2k), evaluated in log space to avoid overflow
    log_arg = math.log(c) + s / (2.0 * k) - np.log(2.0 * k)
    w = _lambertw_from_log(log_arg)
    u = 2.0 * w - s / k
    lower = -np.log(cnr_sorted)
    upper = np.append(lower[1:], np.inf)
    slack = 1e-12 * np.maximum(1.0, np.abs(u))
    valid = (u >= lower - slack) & (u <= upper + slack)
    if valid.any():
        idx = int(np.argmax(valid))
    else:  # rounding at a breakpoint
        idx = int(np.argmin(np.maximum(lower - u, u - upper)))
    return math.exp(u[idx])


def _lambertw_from_log(log_x: np.ndarray) -> np.ndarray:
    out = np.empty_like(log_x)
    small = log_x < 500.0
    out[small] = lambertw(np.exp(log_x[small])).real
    # W(x) ~ L - ln L for large x; two Newton steps on w + ln w = L
    big = ~small
    if big.any():
        L = log_x[big]
        w = L - np.log(L)
        for _ in range(4):
            w = w - (w + np.log(w) - L) / (1.0 + 1.0 / w)
        out[big] = w
    return out


def solve_power_allocation(
    cnr,
    a_bits: float,
    y: float,
    z: float,
    v: float,
    cfg: SystemConfig,
    settings: CommSolverSettings | None = None,
) -> np.ndarray:
    """Optimal per-subcarrier powers for the given channel-to-noise ratios.

    Raises
    ------
    NoUsableSubcarrier
        If every entry of ``cnr`` is zero.
    """
    cnr = np.asarray(cnr, dtype=float)
    pos = cnr > 0
    if not pos.any():
        raise NoUsableSubcarrier("no usable subcarrier")
    weight = y + z
    if weight <= 0.0:
        p = waterfill_total(cnr, cfg.p_min)
    else:
        rhs = weight * a_bits * cfg.W / (v * LN2)
        order = np.argsort(-cnr[pos], kind="stable")
        mu = _interior_level(cnr[pos][order], rhs, cfg.W)
        p = np.zeros_like(cnr)
        p[pos] = np.maximum(0.0, mu - 1.0 / cnr[pos])
        total = p.sum()
        if total > cfg.p_max:
            p = waterfill_total(cnr, cfg.p_max)
        elif total < cfg.p_min:
            p = waterfill_total(cnr, cfg.p_min)
    if settings is not None and settings.verify:
        res = kkt_residual(p, cnr, a_bits, y, z, v, cfg)
        if not res <= settings.kkt_tol:
            raise ArithmeticError(f"KKT residual {res:.3g} above {settings.kkt_tol:.3g}")
    return p


def kkt_residual(p_bins, cnr, a_bits, y, z, v, cfg: SystemConfig, bound_rtol: float = 1e-9) -> float:
    """Normalized violation of the KKT conditions at ``p_bins``.

    The returned value is the worst of stationarity on active bins, dual
    feasibility on inactive bins, and the sign/complementarity condition on
    the total-power multiplier, each divided by the magnitude of the
    objective gradient. It is zero at the optimum.
    """
    p = np.asarray(p_bins, dtype=float)
    cnr = np.asarray(cnr, dtype=float)
    rate = eval_rate(p, cnr, cfg.W)
    if rate <= 0:
        return math.inf
    weight = y + z
    delay_grad = weight * a_bits * cfg.W * cnr / (rate**2 * LN2 * (1.0 + cnr * p))
    grad = v - delay_grad
    scale = v + float(np.max(delay_grad))
    active = p > 0
    if not active.any():
        return math.inf
    # net multiplier of the total-power constraints: lam = lam_max - lam_min
    lam = -float(np.mean(grad[active]))
    stat = float(np.max(np.abs(grad[active] + lam)))
    dual = float(np.max(np.maximum(0.0, -(grad[~active] + lam)), initial=0.0))
    total = p.sum()
    if abs(total - cfg.p_max) <= bound_rtol * cfg.p_max:
        sign = max(0.0, -lam)
    elif abs(total - cfg.p_min) <= bound_rtol * cfg.p_min:
        sign = max(0.0, lam)
    else:
        sign = abs(lam)
    return max(stat, dual, sign) / scale
