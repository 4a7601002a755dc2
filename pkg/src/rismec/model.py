"""Domain records and closed-form delay/power evaluation for one time slot.

Everything here is SI: watts, hertz, seconds, bits and CPU cycles. Human
units (mW, GHz, dBm) only show up in the manifest parser.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from rismec.ris import RisConfig

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
LN2 = math.log(2.0)

# d_u is replaced by this multiple of d_max when the uplink rate is zero
RATE_ZERO_CAP_FACTOR = 10.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1e3


@dataclass(frozen=True)
class Geometry:
    """2D positions in meters."""

    device: tuple[float, float] = (10.0, 30.0)
    ris: tuple[float, float] = (-5.0, 2.5)
    ap: tuple[float, float] = (0.0, 0.0)

    @property
    def device_ris(self) -> float:
        return math.dist(self.device, self.ris)

    @property
    def ris_ap(self) -> float:
        return math.dist(self.ris, self.ap)

    @property
    def device_ap(self) -> float:
        return math.dist(self.device, self.ap)


@dataclass(frozen=True)
class SystemConfig:
    """Physical constants of the device, uplink, RIS and edge host.

    Defaults reproduce the reference scenario: 16 subcarriers of 1 MHz at
    3.5 GHz, a 100-element RIS and a 4-tap Rayleigh channel per link.
    """

    gamma: float = 1e-27
    p_min: float = 1e-4
    p_max: float = 0.1
    f_c: float = 3.5e9
    W: float = 1e6
    B: int = 16
    n0: float = dbm_to_watt(-174.0)
    f_max: float = 10e9
    f_l_min: float = 1e7
    f_l_max: float = 1e9
    geometry: Geometry = field(default_factory=Geometry)
    n_elements: int = 100
    l_taps: int = 4
    # (device->RIS, RIS->AP, device->AP)
    pathloss_exponents: tuple[float, float, float] = (2.0, 2.0, 4.0)

    def __post_init__(self):
        if not 0 < self.p_min < self.p_max:
            raise ValueError(f"need 0 < p_min < p_max, got {self.p_min}, {self.p_max}")
        if not 0 < self.f_l_min < self.f_l_max:
            raise ValueError(
                f"need 0 < f_l_min < f_l_max, got {self.f_l_min}, {self.f_l_max}"
            )
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.n_elements < 0:
            raise ValueError(f"n_elements must be >= 0, got {self.n_elements}")
        if not 1 <= self.l_taps <= self.B:
            raise ValueError(f"need 1 <= l_taps <= B, got {self.l_taps}")
        for name in ("n0", "gamma", "W", "f_c", "f_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if len(self.pathloss_exponents) != 3:
            raise ValueError("pathloss_exponents needs three entries")

    @property
    def noise_power(self) -> float:
        """Noise power per subcarrier, N0 * W."""
        return self.n0 * self.W


@dataclass(frozen=True)
class TaskArrival:
    w_l: float
    a_bits: float
    w_r: float

    def __post_init__(self):
        if not (self.w_l > 0 and self.a_bits > 0 and self.w_r > 0):
            raise ValueError(f"task demands must be positive: {self}")


@dataclass(frozen=True)
class EdgeState:
    """Share of the edge CPU granted to the device in this slot."""

    sigma: float

    def __post_init__(self):
        if not 0 < self.sigma <= 1:
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")


@dataclass(frozen=True, eq=False)
class SlotDecision:
    """Controls applied in one slot.

    ``cnr`` caches the per-bin channel-to-noise ratio obtained with ``ris``
    so the slot can be evaluated without recomputing the cascade.
    ``degenerate`` flags slots where no subcarrier had a usable channel.
    """

    f_l: float
    p_bins: np.ndarray
    ris: RisConfig
    cnr: np.ndarray | None = None
    degenerate: bool = False

    def check(self, cfg: SystemConfig, rtol: float = 1e-9) -> None:
        if not cfg.f_l_min <= self.f_l <= cfg.f_l_max:
            raise ValueError(f"f_l={self.f_l} outside [{cfg.f_l_min}, {cfg.f_l_max}]")
        if self.p_bins.shape != (cfg.B,) or np.any(self.p_bins < 0):
            raise ValueError("p_bins must be B non-negative entries")
        total = float(self.p_bins.sum())
        if not cfg.p_min * (1 - rtol) <= total <= cfg.p_max * (1 + rtol):
            raise ValueError(f"total power {total} outside [{cfg.p_min}, {cfg.p_max}]")


@dataclass(frozen=True)
class SlotMetrics:
    d_l: float
    d_u: float
    d_r: float
    d_tot: float
    p_l: float
    p_u: float
    p_tot: float
    rate: float
    outage: bool
    rate_capped: bool = False


def eval_local(w_l: float, f_l: float, gamma: float) -> tuple[float, float]:
    """Local processing delay ``w_l / f_l`` and CPU power ``gamma * f_l**3``."""
    if not (w_l > 0 and f_l > 0 and gamma > 0):
        raise ValueError("eval_local needs positive w_l, f_l and gamma")
    return w_l / f_l, gamma * f_l**3


def eval_rate(p_bins, cnr, W: float) -> float:
    """Shannon sum rate in bits/s over all subcarriers."""
    p_bins = np.asarray(p_bins, dtype=float)
    cnr = np.asarray(cnr, dtype=float)
    return float(W * np.sum(np.log1p(cnr * p_bins)) / LN2)


def eval_slot(
    decision: SlotDecision,
    arrival: TaskArrival,
    edge: EdgeState,
    cnr,
    cfg: SystemConfig,
    d_max: float,
) -> SlotMetrics:
    d_l, p_l = eval_local(arrival.w_l, decision.f_l, cfg.gamma)
    rate = eval_rate(decision.p_bins, cnr, cfg.W)
    capped = rate <= 0.0
    if capped:
        d_u = RATE_ZERO_CAP_FACTOR * d_max
        logger.warning("zero uplink rate: d_u=inf capped to %g s", d_u)
    else:
        d_u = arrival.a_bits / rate
    d_r = arrival.w_r / (edge.sigma * cfg.f_max)
    p_u = float(np.sum(decision.p_bins))
    d_tot = d_l + d_u + d_r
    return SlotMetrics(
        d_l=d_l,
        d_u=d_u,
        d_r=d_r,
        d_tot=d_tot,
        p_l=p_l,
        p_u=p_u,
        p_tot=p_l + p_u,
        rate=rate,
        outage=d_tot > d_max,
        rate_capped=capped,
    )
