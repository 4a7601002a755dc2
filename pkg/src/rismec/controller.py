"""Drift-plus-penalty control with average-delay and outage virtual queues."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from rismec.allocator import (
    CommSolverSettings,
    NoUsableSubcarrier,
    solve_local_cpu,
    solve_power_allocation,
)
from rismec.channel import ChannelRealization, cascaded_cnr
from rismec.model import (
    EdgeState,
    SlotDecision,
    SlotMetrics,
    SystemConfig,
    TaskArrival,
    eval_slot,
)
from rismec.ris import (
    RisConfig,
    RisSearchSpace,
    flat_optimize,
    greedy_optimize,
    random_config,
    realize_flat,
)


class Scheme(str, enum.Enum):
    OPTIMIZED = "optimized"
    FLAT = "flat"
    RANDOM = "random"
    DIRECT = "direct"


@dataclass(frozen=True)
class ControllerConfig:
    """Trade-off weight and QoS targets.

    With ``outage_constraint`` off the outage queue stays at zero, but the
    outage indicator is still measured against ``d_max``.
    """

    v: float
    d_avg: float = 0.1
    d_max: float = 0.11
    epsilon: float = 0.01
    outage_constraint: bool = True

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("v must be positive")
        if not (self.d_avg > 0 and self.d_max > 0):
            raise ValueError("delay targets must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class VirtualQueues:
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not (0 <= self.y < np.inf and 0 <= self.z < np.inf):
            raise ValueError(f"queues must be finite and non-negative: {self}")


@dataclass(frozen=True)
class SchemeOptions:
    """Knobs of the RIS configurators."""

    space: RisSearchSpace = RisSearchSpace()
    flat_phase_grid: int = 16
    # "lorentzian": flat design deployed on Lorentzian elements; "ideal": truly flat
    flat_realization: str = "lorentzian"
    solver: CommSolverSettings = CommSolverSettings()

    def __post_init__(self):
        if self.flat_realization not in ("lorentzian", "ideal"):
            raise ValueError(f"unknown flat_realization {self.flat_realization!r}")


def configure_ris(
    scheme: Scheme,
    ch: ChannelRealization,
    cfg: SystemConfig,
    options: SchemeOptions,
    rng: np.random.Generator | None = None,
) -> RisConfig:
    scheme = Scheme(scheme)
    if scheme is Scheme.DIRECT or ch.n_elements == 0:
        return RisConfig.none()
    if scheme is Scheme.OPTIMIZED:
        return greedy_optimize(ch, options.space, cfg)
    if scheme is Scheme.FLAT:
        design = flat_optimize(ch, options.flat_phase_grid)
        if options.flat_realization == "ideal":
            return design
        return realize_flat(design, options.space, ch.freqs)
    if rng is None:
        raise ValueError("the random scheme needs an rng")
    return random_config(rng, options.space, ch.freqs, ch.n_elements)


def decide(
    queues: VirtualQueues,
    arrival: TaskArrival,
    ch: ChannelRealization,
    edge: EdgeState,
    scheme: Scheme,
    cfg: SystemConfig,
    ctrl: ControllerConfig,
    options: SchemeOptions = SchemeOptions(),
    rng: np.random.Generator | None = None,
) -> SlotDecision:
    """Per-slot decision minimizing the drift-plus-penalty surrogate.

    The surrogate separates into a CPU-speed problem, solved in closed
    form, and a communication problem, where the scheme's configurator
    fixes the RIS first and the powers are then optimal for that RIS.
    ``edge`` is not needed by the minimization since the remote delay does
    not depend on any control; it is accepted so callers pass the full slot
    state.
    """
    y, z = queues.y, queues.z
    f_l = solve_local_cpu(arrival.w_l, y, z, ctrl.v, cfg)
    ris = configure_ris(scheme, ch, cfg, options, rng)
    cnr = cascaded_cnr(ch, ris, cfg)
    try:
        p = solve_power_allocation(cnr, arrival.a_bits, y, z, ctrl.v, cfg, options.solver)
        degenerate = False
    except NoUsableSubcarrier:
        p = np.full(cfg.B, cfg.p_min / cfg.B)
        degenerate = True
    return SlotDecision(f_l=f_l, p_bins=p, ris=ris, cnr=cnr, degenerate=degenerate)


def surrogate_objective(
    decision: SlotDecision,
    queues: VirtualQueues,
    arrival: TaskArrival,
    edge: EdgeState,
    cfg: SystemConfig,
    ctrl: ControllerConfig,
) -> float:
    """``V p_tot + (Y + Z) d_tot``, the quantity each slot minimizes."""
    m = eval_slot(decision, arrival, edge, decision.cnr, cfg, ctrl.d_max)
    return ctrl.v * m.p_tot + (queues.y + queues.z) * m.d_tot


def update_queues(
    queues: VirtualQueues, metrics: SlotMetrics, ctrl: ControllerConfig
) -> VirtualQueues:
    y = max(0.0, queues.y + metrics.d_tot - ctrl.d_avg)
    if not ctrl.outage_constraint:
        return VirtualQueues(y, 0.0)
    z = max(0.0, queues.z + float(metrics.outage) - ctrl.epsilon)
    return VirtualQueues(y, z)
