"""Lorentzian RIS elements and the configurators used by each scheme.

An element with oscillator strength ``s``, resonance ``f_res`` and quality
factor ``chi`` reflects

    phi(f) = s f^2 / (f_res^2 - f^2 + j (f_res / (2 chi)) f)

at frequency ``f``. The damping ``f_res / (2 chi)`` is always derived.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numba import njit

from rismec.channel import ChannelRealization
from rismec.model import SystemConfig

MODES = ("lorentzian", "flat", "none")


def lorentzian_response(s, f_res, chi, f):
    """Complex reflection coefficient; broadcasts over all arguments.

    Evaluated as ``2 chi s / (2 chi (r^2 - 1) + j r)`` with ``r = f_res / f``,
    which is algebraically the same and gives exactly ``-2j chi s`` at
    resonance.
    """
    r = np.asarray(f_res, dtype=float) / np.asarray(f, dtype=float)
    two_chi = 2.0 * np.asarray(chi, dtype=float)
    return (two_chi * s) / (two_chi * (r * r - 1.0) + 1j * r)


def feasible_strength(f_res: float, chi: float, freqs) -> float:
    """Largest strength in [0, 1] keeping ``|phi| <= 1`` on every subcarrier."""
    peak = np.max(np.abs(lorentzian_response(1.0, f_res, chi, freqs)))
    return float(min(1.0, 1.0 / peak))


@dataclass(frozen=True)
class RisElementConfig:
    s: float
    f_res: float
    chi: float

    def response(self, f):
        return lorentzian_response(self.s, self.f_res, self.chi, f)


@dataclass(frozen=True, eq=False)
class RisConfig:
    """Configuration of all N elements.

    In ``lorentzian`` mode the arrays ``s``, ``f_res`` and ``chi`` describe
    each element. In ``flat`` mode only ``phase`` is used and every element
    reflects ``exp(j phase)`` at all frequencies. ``none`` means no RIS.
    """

    mode: str
    s: np.ndarray
    f_res: np.ndarray
    chi: np.ndarray
    phase: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown RIS mode {self.mode!r}")
        if self.mode == "flat" and self.phase is None:
            raise ValueError("flat mode needs phases")

    @classmethod
    def none(cls) -> RisConfig:
        empty = np.zeros(0)
        return cls("none", empty, empty, empty)

    @classmethod
    def flat(cls, phase) -> RisConfig:
        phase = np.asarray(phase, dtype=float)
        n = phase.shape[0]
        return cls("flat", np.ones(n), np.zeros(n), np.zeros(n), phase=phase)

    @property
    def n_elements(self) -> int:
        if self.mode == "flat":
            return len(self.phase)
        return len(self.s)

    @property
    def elements(self) -> list[RisElementConfig]:
        if self.mode != "lorentzian":
            raise ValueError(f"{self.mode} configs have no Lorentzian elements")
        return [
            RisElementConfig(float(s), float(f), float(c))
            for s, f, c in zip(self.s, self.f_res, self.chi)
        ]

    def response(self, freqs) -> np.ndarray:
        """Element responses on ``freqs``, shape (N, B)."""
        freqs = np.asarray(freqs, dtype=float)
        if self.mode == "none":
            return np.zeros((0, freqs.size), dtype=complex)
        if self.mode == "flat":
            return np.repeat(np.exp(1j * self.phase)[:, None], freqs.size, axis=1)
        return lorentzian_response(
            self.s[:, None], self.f_res[:, None], self.chi[:, None], freqs[None, :]
        )

    def to_rows(self) -> list[tuple[float, float, float]]:
        """Per-element triples for logging: (s, f_res, chi), or (1, phase, 0)."""
        if self.mode == "flat":
            return [(1.0, float(p), 0.0) for p in self.phase]
        return [(float(s), float(f), float(c)) for s, f, c in zip(self.s, self.f_res, self.chi)]


@dataclass(frozen=True)
class RisSearchSpace:
    """Discrete candidate sets for resonance frequency and quality factor.

    ``omega=None`` stands for the subcarrier center frequencies themselves.
    """

    omega: tuple[float, ...] | None = None
    chi_set: tuple[float, ...] = (10.0, 25.0, 50.0, 100.0)

    def __post_init__(self):
        if self.omega is not None and len(self.omega) == 0:
            raise ValueError("omega must be non-empty")
        if len(self.chi_set) == 0:
            raise ValueError("chi_set must be non-empty")

    def omega_values(self, freqs) -> np.ndarray:
        if self.omega is None:
            return np.asarray(freqs, dtype=float)
        return np.asarray(self.omega, dtype=float)

    def candidates(self, freqs):
        """Candidate table enumerated with omega outer and chi inner.

        Returns ``(f_res, chi, s, phi)`` where ``phi`` has shape (K, B) and
        each row is already scaled by its feasible strength.
        """
        key = (tuple(self.omega_values(freqs)), tuple(self.chi_set), tuple(np.asarray(freqs, float)))
        return _candidate_table(*key)


@lru_cache(maxsize=32)
def _candidate_table(omega: tuple, chi_set: tuple, freqs: tuple):
    freqs = np.array(freqs)
    f_res = np.repeat(np.array(omega), len(chi_set))
    chi = np.tile(np.array(chi_set, dtype=float), len(omega))
    unit = lorentzian_response(1.0, f_res[:, None], chi[:, None], freqs[None, :])
    s = np.minimum(1.0, 1.0 / np.max(np.abs(unit), axis=1))
    phi = s[:, None] * unit
    for arr in (f_res, chi, s, phi):
        arr.flags.writeable = False
    return f_res, chi, s, phi


def greedy_optimize(
    ch: ChannelRealization,
    space: RisSearchSpace,
    cfg: SystemConfig,
    return_trace: bool = False,
):
    """Element-by-element maximization of the summed channel-to-noise ratio.

    All elements start switched off (``s = 0``). Each element in turn gets
    the (f_res, chi) candidate, at its feasible strength, that maximizes the
    sum over subcarriers of the CNR with the other elements held fixed. A
    candidate is kept only if it does not lower the sum, so the trace is
    non-decreasing; otherwise the element stays off. Ties go to the first
    candidate in (omega, chi) order.

    Returns the :class:`RisConfig`, and with ``return_trace`` also the sum
    CNR before the first and after every element visit (length N + 1).
    """
    f_res_c, chi_c, s_c, phi = space.candidates(ch.freqs)
    cascade = np.ascontiguousarray(ch.cascade.T)  # (N, B)
    # gain of element n alone, per candidate: sum_b |c_nb|^2 |phi_kb|^2
    own = (np.abs(cascade) ** 2) @ (np.abs(phi) ** 2).T  # (N, K)
    choice, trace = _greedy_pass(ch.h_los.astype(complex), cascade, phi, own)
    on = choice >= 0
    pick = np.where(on, choice, 0)
    s = np.where(on, s_c[pick], 0.0)
    f_res = f_res_c[pick]
    chi = chi_c[pick]
    config = RisConfig("lorentzian", s, f_res, chi)
    if return_trace:
        return config, np.asarray(trace) / cfg.noise_power
    return config


def flat_optimize(
    ch: ChannelRealization,
    phase_grid_size: int = 16,
    cfg: SystemConfig | None = None,
    return_trace: bool = False,
):
    """Greedy phase selection for an idealized frequency-flat RIS.

    Every element reflects ``exp(j theta_n)`` at all subcarriers with
    ``theta_n`` picked from ``phase_grid_size`` uniformly spaced phases in
    [0, 2 pi). Elements are visited in order and each takes the phase that
    maximizes the summed channel power gain given the others.
    """
    if phase_grid_size < 2:
        raise ValueError("phase_grid_size must be >= 2")
    grid = 2.0 * np.pi * np.arange(phase_grid_size) / phase_grid_size
    rot = np.exp(1j * grid)
    cascade = np.ascontiguousarray(ch.cascade.T)  # (N, B)
    choice, trace = _flat_pass(ch.h_los.astype(complex), cascade, rot)
    phases = grid[choice]
    config = RisConfig.flat(phases)
    if return_trace:
        scale = cfg.noise_power if cfg is not None else 1.0
        return config, np.asarray(trace) / scale
    return config


@njit(cache=True)
def _greedy_pass(h_los, cascade, phi, own):
    N, B = cascade.shape
    K = phi.shape[0]
    total = h_los.copy()
    choice = np.full(N, -1, dtype=np.int64)
    trace = np.empty(N + 1)
    trace[0] = np.sum(np.abs(total) ** 2)
    for n in range(N):
        best = -np.inf
        k_best = 0
        for k in range(K):
            acc = 0.0
            for b in range(B):
                acc += (np.conj(total[b]) * cascade[n, b] * phi[k, b]).real
            gain = 2.0 * acc + own[n, k]
            if gain > best:
                best = gain
                k_best = k
        if best >= 0.0:
            choice[n] = k_best
            for b in range(B):
                total[b] += cascade[n, b] * phi[k_best, b]
        trace[n + 1] = np.sum(np.abs(total) ** 2)
    return choice, trace


@njit(cache=True)
def _flat_pass(h_los, cascade, rot):
    N, B = cascade.shape
    total = h_los.copy()
    choice = np.zeros(N, dtype=np.int64)
    trace = np.empty(N + 1)
    trace[0] = np.sum(np.abs(total) ** 2)
    for n in range(N):
        corr = 0j
        for b in range(B):
            corr += np.conj(total[b]) * cascade[n, b]
        best = -np.inf
        k_best = 0
        for k in range(rot.shape[0]):
            gain = (rot[k] * corr).real
            if gain > best:
                best = gain
                k_best = k
        choice[n] = k_best
        for b in range(B):
            total[b] += cascade[n, b] * rot[k_best]
        trace[n + 1] = np.sum(np.abs(total) ** 2)
    return choice, trace


def realize_flat(flat: RisConfig, space: RisSearchSpace, freqs) -> RisConfig:
    """Map a flat design onto Lorentzian hardware.

    Each element takes the feasible (f_res, chi) candidate whose response
    over the subcarriers is closest, in least squares, to the intended
    constant ``exp(j theta_n)``.
    """
    f_res_c, chi_c, s_c, phi = space.candidates(freqs)
    target = np.exp(1j * flat.phase)  # (N,)
    # ||phi_k - t||^2 = ||phi_k||^2 - 2 Re(conj(t) sum_b phi_kb) + B
    dist = np.sum(np.abs(phi) ** 2, axis=1)[None, :] - 2.0 * (
        np.conj(target)[:, None] * phi.sum(axis=1)[None, :]
    ).real
    k = np.argmin(dist, axis=1)
    return RisConfig("lorentzian", s_c[k].copy(), f_res_c[k].copy(), chi_c[k].copy())


def random_config(
    rng: np.random.Generator, space: RisSearchSpace, freqs, n_elements: int
) -> RisConfig:
    """Uniform draws from the feasible set, independently per element."""
    omega = space.omega_values(freqs)
    chi_set = np.asarray(space.chi_set, dtype=float)
    f_res = omega[rng.integers(len(omega), size=n_elements)]
    chi = chi_set[rng.integers(len(chi_set), size=n_elements)]
    unit = lorentzian_response(1.0, f_res[:, None], chi[:, None], np.asarray(freqs)[None, :])
    s_max = np.minimum(1.0, 1.0 / np.max(np.abs(unit), axis=1)) if n_elements else np.zeros(0)
    s = rng.uniform(0.0, 1.0, size=n_elements) * s_max
    return RisConfig("lorentzian", s, f_res, chi)


def max_amplitude(config: RisConfig, freqs: Sequence[float]) -> float:
    """Largest ``|phi_n(f_b)|`` over all elements and subcarriers."""
    resp = config.response(freqs)
    return float(np.max(np.abs(resp))) if resp.size else 0.0
