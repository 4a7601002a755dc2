"""Frequency-selective Rayleigh block-fading channels for the three links.

Each scalar link gets ``L`` i.i.d. complex Gaussian taps whose variances
sum to one; the subcarrier response is the ``B``-point DFT of the
zero-padded tap vector, scaled by a free-space-style pathloss evaluated at
the subcarrier's own frequency.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from rismec.model import SPEED_OF_LIGHT, SystemConfig

RngLike = Union[np.random.Generator, Sequence[np.random.Generator]]


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-subcarrier responses of one slot.

    Attributes
    ----------
    h_los : (B,) complex
        Direct device -> AP response.
    g : (B, N) complex
        RIS -> AP response, one row per subcarrier.
    h : (B, N) complex
        Device -> RIS response, one row per subcarrier.
    freqs : (B,) float
        Subcarrier center frequencies in Hz.
    """

    h_los: np.ndarray
    g: np.ndarray
    h: np.ndarray
    freqs: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.g.shape[1]

    @property
    def cascade(self) -> np.ndarray:
        """Reflected-path coefficients ``g[b, n] * h[b, n]``, shape (B, N)."""
        return self.g * self.h


def bin_frequencies(cfg: SystemConfig) -> np.ndarray:
    """Subcarrier centers placed symmetrically around the carrier."""
    b = np.arange(cfg.B)
    return cfg.f_c + (b - (cfg.B - 1) / 2.0) * cfg.W


def pathloss(distance: float, exponent: float, freqs: np.ndarray) -> np.ndarray:
    """Power gain ``(c / (4 pi f))**2 * d**-exponent`` per frequency."""
    return (SPEED_OF_LIGHT / (4.0 * np.pi * freqs)) ** 2 * distance ** (-exponent)


@lru_cache(maxsize=16)
def _link_tables(cfg: SystemConfig):
    """Scaled DFT matrices (L, B) per link: tap vector @ table -> response."""
    freqs = bin_frequencies(cfg)
    L, B = cfg.l_taps, cfg.B
    dft = np.exp(-2j * np.pi * np.outer(np.arange(L), np.arange(B)) / B)
    geo = cfg.geometry
    e_h, e_g, e_los = cfg.pathloss_exponents
    tables = []
    for d, e in ((geo.device_ap, e_los), (geo.ris_ap, e_g), (geo.device_ris, e_h)):
        t = dft * np.sqrt(pathloss(d, e, freqs) * 0.5 / L)[None, :]
        t.flags.writeable = False
        tables.append(t)
    freqs.flags.writeable = False
    return freqs, tuple(tables)


def _draw_link(rng: np.random.Generator, n: int, table: np.ndarray) -> np.ndarray:
    L = table.shape[0]
    taps = rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))
    return taps @ table  # (n, B)


def draw_channel(rng: RngLike, cfg: SystemConfig) -> ChannelRealization:
    """Draw one block-fading realization.

    ``rng`` is either a single generator shared by all links or a sequence
    of three generators used for the direct, RIS->AP and device->RIS links
    respectively. Separate streams keep the direct link identical across
    runs that differ only in the number of RIS elements.
    """
    if isinstance(rng, np.random.Generator):
        rng_los = rng_g = rng_h = rng
    else:
        rng_los, rng_g, rng_h = rng
    freqs, (t_los, t_g, t_h) = _link_tables(cfg)
    N = cfg.n_elements
    h_los = _draw_link(rng_los, 1, t_los)[0]
    g = _draw_link(rng_g, N, t_g).T
    h = _draw_link(rng_h, N, t_h).T
    return ChannelRealization(h_los=h_los, g=g, h=h, freqs=freqs)


def cascaded_cnr(ch: ChannelRealization, ris, cfg: SystemConfig) -> np.ndarray:
    """Per-subcarrier channel-to-noise ratio of direct plus reflected paths.

    ``ris`` is a :class:`rismec.ris.RisConfig`; a config in ``none`` mode
    reflects nothing.
    """
    total = ch.h_los.astype(complex)
    if ris.mode != "none" and ris.n_elements:
        if ris.n_elements != ch.n_elements:
            raise ValueError(
                f"RIS has {ris.n_elements} elements, channel has {ch.n_elements}"
            )
        phi = ris.response(ch.freqs)  # (N, B)
        total = total + np.einsum("bn,nb->b", ch.cascade, phi)
    return np.abs(total) ** 2 / cfg.noise_power
