"""Slot loop, run summaries and the per-slot record / summary files."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import IO, Callable, Iterable

import numpy as np

from rismec.channel import draw_channel
from rismec.controller import (
    ControllerConfig,
    Scheme,
    SchemeOptions,
    VirtualQueues,
    decide,
    update_queues,
)
from rismec.model import EdgeState, SystemConfig, TaskArrival, eval_slot

logger = logging.getLogger(__name__)

RECORD_COLUMNS = (
    "t", "scheme", "V", "p_l", "p_u", "p_tot", "f_l", "rate",
    "d_l", "d_u", "d_r", "d_tot", "outage", "Y", "Z",
)
SUMMARY_QUANTILES = (0.5, 0.9, 0.99, 0.999)

# independent generator per randomness source; order is part of the format
_STREAMS = ("los", "ris_ap", "device_ris", "arrival", "edge", "ris_random")


class QueueExplosion(RuntimeError):
    """The average-delay queue grew past the divergence bound."""


@dataclass(frozen=True)
class ScenarioSpec:
    system: SystemConfig
    ctrl: ControllerConfig
    scheme: Scheme = Scheme.OPTIMIZED
    horizon: int = 100_000
    seed: int = 0
    mean_w_l: float = 5e5
    mean_a_bits: float = 2e6
    mean_w_r: float = 5e7
    sigma_low: float = 0.5
    sigma_high: float = 1.0
    options: SchemeOptions = SchemeOptions()
    explosion_factor: float = 1e3

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if min(self.mean_w_l, self.mean_a_bits, self.mean_w_r) <= 0:
            raise ValueError("arrival means must be positive")
        if not 0 < self.sigma_low <= self.sigma_high <= 1:
            raise ValueError("need 0 < sigma_low <= sigma_high <= 1")


@dataclass(frozen=True)
class RunSummary:
    scheme: str
    v: float
    avg_power: float
    avg_delay: float
    avg_p_l: float
    avg_p_u: float
    outage_prob: float
    y_over_t: float
    z_over_t: float
    q50: float
    q90: float
    q99: float
    q999: float
    n_records: int
    degenerate_slots: int
    delays: np.ndarray = field(repr=False, compare=False, default=None)
    powers: np.ndarray = field(repr=False, compare=False, default=None)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.repr}

    def survivor(self, x) -> np.ndarray:
        return survivor_function(self.delays, x)


@dataclass(frozen=True)
class Streams:
    los: np.random.Generator
    ris_ap: np.random.Generator
    device_ris: np.random.Generator
    arrival: np.random.Generator
    edge: np.random.Generator
    ris_random: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> Streams:
        children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
        return cls(*(np.random.default_rng(c) for c in children))

    @property
    def channel(self):
        return (self.los, self.ris_ap, self.device_ris)


def _positive_poisson(rng: np.random.Generator, mean: float) -> float:
    while True:
        x = rng.poisson(mean)
        if x > 0:
            return float(x)


def draw_arrival(rng: np.random.Generator, spec: ScenarioSpec) -> TaskArrival:
    """Poisson demands; zero draws are redrawn."""
    return TaskArrival(
        w_l=_positive_poisson(rng, spec.mean_w_l),
        a_bits=_positive_poisson(rng, spec.mean_a_bits),
        w_r=_positive_poisson(rng, spec.mean_w_r),
    )


def draw_edge(rng: np.random.Generator, spec: ScenarioSpec) -> EdgeState:
    """Edge CPU share uniform on (sigma_low, sigma_high]."""
    u = rng.random()  # [0, 1)
    return EdgeState(spec.sigma_high - (spec.sigma_high - spec.sigma_low) * u)


def survivor_function(delays, x) -> np.ndarray:
    """Empirical ``Pr{delay > x}`` for each entry of ``x``."""
    d = np.sort(np.asarray(delays, dtype=float))
    x = np.asarray(x, dtype=float)
    return (d.size - np.searchsorted(d, x, side="right")) / d.size


def survivor_table(delays, probs) -> np.ndarray:
    """Delay levels exceeded with the given probabilities (CCDF inverse)."""
    d = np.sort(np.asarray(delays, dtype=float))
    probs = np.asarray(probs, dtype=float)
    # smallest x with Pr{delay > x} <= p
    idx = np.ceil((1.0 - probs) * d.size).astype(int) - 1
    return d[np.clip(idx, 0, d.size - 1)]


class RecordWriter:
    """Buffered CSV writer for per-slot records."""

    def __init__(self, stream: IO[str], batch: int = 4096):
        self._writer = csv.writer(stream, lineterminator="\n")
        self._writer.writerow(RECORD_COLUMNS)
        self._buf: list[tuple] = []
        self._batch = batch

    def write(self, row: tuple) -> None:
        self._buf.append(row)
        if len(self._buf) >= self._batch:
            self.flush()

    def flush(self) -> None:
        self._writer.writerows(self._buf)
        self._buf.clear()


def _fmt(x) -> str:
    return repr(float(x))


def run_scenario(
    spec: ScenarioSpec,
    sink: RecordWriter | Callable[[tuple], None] | None = None,
) -> RunSummary:
    """Simulate ``spec.horizon`` slots and summarize them.

    Each slot draws the channel, the task and the edge share, decides,
    evaluates the realized metrics and updates the virtual queues. Rows in
    the order of ``RECORD_COLUMNS`` go to ``sink`` when given; Y and Z are
    the queue values the slot's decision was based on.
    """
    system, ctrl = spec.system, spec.ctrl
    streams = Streams.from_seed(spec.seed)
    write = getattr(sink, "write", sink)
    T = spec.horizon
    delays = np.empty(T)
    powers = np.empty(T)
    sum_p_l = sum_p_u = 0.0
    outages = degenerate = 0
    queues = VirtualQueues()
    bound = spec.explosion_factor * ctrl.d_avg * T
    scheme = spec.scheme.value
    for t in range(T):
        ch = draw_channel(streams.channel, system)
        arrival = draw_arrival(streams.arrival, spec)
        edge = draw_edge(streams.edge, spec)
        decision = decide(
            queues, arrival, ch, edge, spec.scheme, system, ctrl, spec.options,
            streams.ris_random,
        )
        m = eval_slot(decision, arrival, edge, decision.cnr, system, ctrl.d_max)
        if write is not None:
            write((
                t, scheme, _fmt(ctrl.v), _fmt(m.p_l), _fmt(m.p_u), _fmt(m.p_tot),
                _fmt(decision.f_l), _fmt(m.rate), _fmt(m.d_l), _fmt(m.d_u),
                _fmt(m.d_r), _fmt(m.d_tot), int(m.outage), _fmt(queues.y), _fmt(queues.z),
            ))
        delays[t] = m.d_tot
        powers[t] = m.p_tot
        sum_p_l += m.p_l
        sum_p_u += m.p_u
        outages += m.outage
        degenerate += decision.degenerate
        queues = update_queues(queues, m, ctrl)
        if queues.y > bound:
            raise QueueExplosion(
                f"Y={queues.y:.3g} s exceeds {bound:.3g} s at slot {t}; "
                "the delay target looks infeasible"
            )
    if isinstance(sink, RecordWriter):
        sink.flush()
    q = np.quantile(delays, SUMMARY_QUANTILES)
    return RunSummary(
        scheme=scheme,
        v=ctrl.v,
        avg_power=float(powers.mean()),
        avg_delay=float(delays.mean()),
        avg_p_l=sum_p_l / T,
        avg_p_u=sum_p_u / T,
        outage_prob=outages / T,
        y_over_t=queues.y / T,
        z_over_t=queues.z / T,
        q50=float(q[0]),
        q90=float(q[1]),
        q99=float(q[2]),
        q999=float(q[3]),
        n_records=T,
        degenerate_slots=int(degenerate),
        delays=delays,
        powers=powers,
    )


def _with_v(spec: ScenarioSpec, v: float) -> ScenarioSpec:
    return replace(spec, ctrl=replace(spec.ctrl, v=float(v)))


def sweep_v(spec: ScenarioSpec, v_values: Iterable[float], jobs: int = 1) -> list[RunSummary]:
    """One run per V, all sharing ``spec.seed``; results sorted by V."""
    v_values = sorted(float(v) for v in v_values)
    if not v_values:
        raise ValueError("v_values must be non-empty")
    specs = [_with_v(spec, v) for v in v_values]
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_scenario, specs))
    return [run_scenario(s) for s in specs]
