"""Closed-form average interference, SINR and rate, plus region labels.

Per cell-1 user ``i`` with ``l_i`` bits per real dimension::

    Q_i    = const * 2**(-2 l_i)              (unit channel variance)
    I_qi   = N * P2_i * Q_i                   (uniform power in cell 2)
    SINR_i = G * P1_i / (noise + I_qi)
    r_i    = log2(1 + SINR_i)

``G`` is the zero-forcing array gain, ``M - 2N + 1`` by default (one for the
square ``M = 2N`` case).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from backhaul.channel import analytic_q, quantizer_const
from backhaul.errors import DomainError
from backhaul.geometry import ScenarioConfig, UserGeometry, build_geometry, rx_powers

__all__ = [
    "AnalyticalModel",
    "Region",
    "analytic_interference",
    "analytic_sinr",
    "analytic_sinr_distance",
    "classify_region",
    "noise_for_region_boundary",
    "rate_stats",
    "stationarity_terms",
]


def analytic_interference(p_other, bits, users: int, const: float):
    """Mean quantization-induced interference ``N * P2 * Q(bits)``."""
    return users * np.asarray(p_other, dtype=float) * analytic_q(bits, const)


def analytic_sinr(p_own, p_other, bits, users: int, noise_power: float, const: float, gain: float = 1.0):
    """Average SINR ``G * P1 / (noise + N * P2 * Q)``; ``gain=1`` drops the array gain."""
    interference = analytic_interference(p_other, bits, users, const)
    return gain * np.asarray(p_own, dtype=float) / (noise_power + interference)


def analytic_sinr_distance(d_own, d_other, bits, cfg: ScenarioConfig, const: float, gain: float = 1.0):
    """Same quantity written directly in distances and the path-loss constants."""
    d1 = np.asarray(d_own, dtype=float) / cfg.reference_distance
    d2 = np.asarray(d_other, dtype=float) / cfg.reference_distance
    pk = cfg.per_user_tx_power * cfg.reference_loss
    num = pk * d1 ** (-cfg.path_loss_exponent)
    den = cfg.noise_power + pk * cfg.users_per_cell * d2 ** (-cfg.path_loss_exponent) * analytic_q(bits, const)
    return gain * num / den


def rate_stats(rates) -> tuple[float, float]:
    """Population mean and variance of per-user rates."""
    r = np.asarray(rates, dtype=float).ravel()
    if r.size == 0:
        raise DomainError("rate_stats needs at least one rate")
    return float(r.mean()), float(r.var())


class Region(str, enum.Enum):
    REGION1 = "region1"
    REGION2 = "region2"
    NEITHER = "neither"


@dataclass(frozen=True)
class AnalyticalModel:
    """Closed-form link model over a fixed geometry.

    ``bits`` arguments are per-user arrays of shape ``(..., N)``; ``np.inf``
    means unquantized CSI (zero interference).
    """

    p_own: np.ndarray
    p_other: np.ndarray
    noise_power: float
    const: float
    gain: float = 1.0

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, geom: Sequence[UserGeometry] | None = None) -> "AnalyticalModel":
        geom = build_geometry(cfg) if geom is None else geom
        p_own, p_other = rx_powers(geom)
        return cls(
            p_own=p_own,
            p_other=p_other,
            noise_power=cfg.noise_power,
            const=quantizer_const(cfg.antennas, cfg.clip_sigmas),
            gain=cfg.gain,
        )

    @property
    def users(self) -> int:
        return len(self.p_own)

    def q(self, bits):
        return analytic_q(bits, self.const)

    def interference(self, bits):
        return analytic_interference(self.p_other, bits, self.users, self.const)

    def sinr(self, bits):
        return analytic_sinr(self.p_own, self.p_other, bits, self.users, self.noise_power, self.const, self.gain)

    def sir(self, bits):
        """Signal to quantization interference, ``P1 / I_q``."""
        return self.p_own / self.interference(bits)

    def rates(self, bits):
        return np.log2(1.0 + self.sinr(bits))

    def sum_rate(self, bits) -> float:
        return float(np.sum(self.rates(bits), axis=-1))

    def rate_table(self, max_bits: int) -> np.ndarray:
        """``table[i, l]`` = rate of user ``i`` given ``l`` bits, ``l = 0..max_bits``."""
        levels = np.arange(max_bits + 1, dtype=float)
        grid = np.broadcast_to(levels[:, None], (levels.size, self.users))
        return self.rates(grid).T.copy()


def classify_region(model: AnalyticalModel, bits, rho_hi: float = 10.0, rho_lo: float = 3.0):
    """Label each user's operating region and the cell as a whole.

    Region 1 (interference dominated): ``I > rho_hi * noise`` and
    ``I < P1 / rho_hi``. Region 2 (interference comparable to noise):
    ``noise / rho_lo <= I <= rho_lo * noise`` and ``I < P1 / rho_hi``.
    Anything else is `Region.NEITHER`. The aggregate label is the common
    label when all users agree, otherwise `Region.NEITHER`.

    Returns
    -------
    (list of Region, Region)
    """
    interference = np.asarray(model.interference(bits), dtype=float)
    noise = model.noise_power
    below_signal = interference < model.p_own / rho_hi
    r1 = (interference > rho_hi * noise) & below_signal
    r2 = (interference >= noise / rho_lo) & (interference <= rho_lo * noise) & below_signal
    labels = [
        Region.REGION1 if a else Region.REGION2 if b else Region.NEITHER
        for a, b in zip(np.atleast_1d(r1), np.atleast_1d(r2))
    ]
    aggregate = labels[0] if len(set(labels)) == 1 else Region.NEITHER
    return labels, aggregate


def stationarity_terms(model: AnalyticalModel, bits) -> np.ndarray:
    """``I P1 / ((I + noise)(P1 + I + noise))`` per user.

    Proportional to the marginal rate per bit (with ``P1`` scaled by the
    array gain), so it is common to all unclipped users at a sum-rate
    optimum of the relaxed problem.
    """
    i = model.interference(bits)
    s = model.gain * model.p_own
    n = model.noise_power
    return i * s / ((i + n) * (s + i + n))


def noise_for_region_boundary(cfg: ScenarioConfig, last_region1_bits: int = 25) -> float:
    """Noise power that ends Region 1 after ``last_region1_bits`` bits per user.

    Under equal allocation the weakest interference is ``I_min(b)``. All
    users stay interference dominated at ``b`` when ``noise < I_min(b) /
    rho_hi``, and at least one leaves at ``b + 1`` when ``noise >= I_min(b) /
    (4 rho_hi)``. The geometric centre of that window, ``I_min(b) / (2
    rho_hi)``, is returned.
    """
    model = AnalyticalModel.from_config(cfg)
    weakest = float(np.min(model.interference(np.full(model.users, float(last_region1_bits)))))
    return weakest / (2.0 * cfg.region_rho_hi)
