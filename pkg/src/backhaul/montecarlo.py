"""Monte-Carlo trials of the full pipeline and their aggregation.

One trial draws every channel, quantizes the exchanged cross channels with
the allocation's integer bits, builds both stations' beams and measures the
cell-1 users. Each trial owns an RNG stream keyed by ``(seed, trial_index)``
(see `backhaul.channel.trial_rng`), and aggregation always runs over trials
sorted by index, so results do not depend on batching or ordering.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from backhaul.allocation import BitAllocation, allocate
from backhaul.analysis import AnalyticalModel, rate_stats
from backhaul.beamforming import PrecoderSet, link_powers, zf_beams
from backhaul.channel import (
    ChannelRealization,
    draw_channel_batch,
    quantize_cross_channels,
)
from backhaul.errors import DomainError, SingularStackError
from backhaul.geometry import ScenarioConfig, UserGeometry, build_geometry

__all__ = [
    "MAX_REDRAWS",
    "SimulationResult",
    "TrialBatch",
    "run_experiment",
    "run_trial",
    "simulate",
]

log = logging.getLogger(__name__)

MAX_REDRAWS = 5
CHUNK = 2048
VARIANCE_BATCHES = 20


@dataclass(frozen=True)
class TrialBatch:
    """Per-trial measurements, rows sorted by trial index."""

    trial_indices: np.ndarray
    rates: np.ndarray
    interference: np.ndarray
    redraws: int
    clipped: int


@dataclass(frozen=True)
class SimulationResult:
    scheme: str
    budget: float
    fractional_bits: np.ndarray
    integer_bits: np.ndarray
    # per user, empirical
    rate: np.ndarray
    rate_stderr: np.ndarray
    interference: np.ndarray
    interference_stderr: np.ndarray
    # per user, closed form at the fractional allocation
    analytic_rate: np.ndarray
    analytic_interference: np.ndarray
    # aggregates over users
    rate_mean: float
    rate_mean_stderr: float
    rate_variance: float
    rate_variance_stderr: float
    analytic_rate_mean: float
    analytic_rate_variance: float
    trials: int
    redraws: int
    quantizer_clipped: int
    allocation_clipped: int
    rng_seed: int

    @property
    def users(self) -> int:
        return len(self.rate)

    @property
    def avg_bits(self) -> float:
        return self.budget / self.users


def _measure(real: ChannelRealization, active: np.ndarray):
    q2 = real.cross2_q[..., active, :] if active.any() else None
    q1 = real.cross1_q[..., active, :] if active.any() else None
    w1, bad1 = zf_beams(real.own1, q2)
    w2, bad2 = zf_beams(real.own2, q1)
    return link_powers(real, PrecoderSet(w1=w1, w2=w2)), bad1 | bad2


def _take(real: ChannelRealization, idx) -> ChannelRealization:
    return ChannelRealization(
        own1=real.own1[idx], cross1=real.cross1[idx], own2=real.own2[idx], cross2=real.cross2[idx]
    )


def simulate(
    cfg: ScenarioConfig,
    geom: Sequence[UserGeometry],
    bits,
    trial_indices: Iterable[int] | None = None,
    channels: ChannelRealization | None = None,
    chunk: int = CHUNK,
) -> TrialBatch:
    """Run trials for one integer allocation.

    Parameters
    ----------
    bits : array_like of int, shape (N,)
        Bits per real dimension for each cell-1 user (mirrored in cell 2).
    trial_indices : iterable of int, optional
        Defaults to ``range(cfg.trials)``. Any order is accepted.
    channels : ChannelRealization, optional
        Pre-drawn batch aligned with ``trial_indices``. Lets several
        allocations share the same draws.
    """
    bits = np.asarray(bits)
    if bits.shape != (cfg.users_per_cell,):
        raise DomainError(f"expected {cfg.users_per_cell} bit counts, got shape {bits.shape}")
    if np.any(bits < 0) or np.any(bits != np.round(bits)):
        raise DomainError("bits must be non-negative integers")
    bits = bits.astype(np.int64)
    idx = np.array(list(range(cfg.trials) if trial_indices is None else trial_indices), dtype=np.int64)
    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    if channels is not None:
        if channels.own1.shape[0] != len(order):
            raise DomainError("pre-drawn channels do not match the trial indices")
        channels = _take(channels, order)
    active = bits > 0
    rates, interference = [], []
    redraws = clipped = 0
    for start in range(0, len(idx), chunk):
        sl = slice(start, start + chunk)
        if channels is None:
            real = draw_channel_batch(geom, cfg.antennas, cfg.rng_seed, idx[sl])
        else:
            real = _take(channels, sl)
        real = quantize_cross_channels(real, geom, bits, cfg.clip_sigmas)
        lp, bad = _measure(real, active)
        sinr = lp.signal / (cfg.noise_power + lp.intra + lp.inter)
        r, inter = np.log2(1.0 + sinr), lp.inter
        clipped += real.clipped
        for k in np.flatnonzero(bad):
            t = int(idx[sl][k])
            r[k], inter[k], extra, c = _redraw(cfg, geom, bits, t)
            redraws += extra
            clipped += c
        rates.append(r)
        interference.append(inter)
    return TrialBatch(
        trial_indices=idx,
        rates=np.concatenate(rates),
        interference=np.concatenate(interference),
        redraws=redraws,
        clipped=clipped,
    )


def _redraw(cfg, geom, bits, trial_index):
    active = bits > 0
    for attempt in range(1, MAX_REDRAWS + 1):
        real = draw_channel_batch(geom, cfg.antennas, cfg.rng_seed, [trial_index], attempt=attempt)
        real = quantize_cross_channels(real, geom, bits, cfg.clip_sigmas)
        lp, bad = _measure(real, active)
        if not bad[0]:
            log.debug("trial %d redrawn %d time(s)", trial_index, attempt)
            sinr = lp.signal / (cfg.noise_power + lp.intra + lp.inter)
            return np.log2(1.0 + sinr[0]), lp.inter[0], attempt, real.clipped
    raise SingularStackError(
        f"trial {trial_index}: ZF stack still singular after {MAX_REDRAWS} redraws",
        trial_index=trial_index,
    )


def run_trial(cfg: ScenarioConfig, geom: Sequence[UserGeometry], allocation, trial_index: int):
    """One pipeline pass; returns per-user ``(rates, interference)``."""
    bits = allocation.integer_bits if isinstance(allocation, BitAllocation) else allocation
    out = simulate(cfg, geom, bits, [trial_index])
    return out.rates[0], out.interference[0]


def _stderr(x: np.ndarray, axis=0):
    n = x.shape[axis]
    if n < 2:
        return np.full(np.delete(x.shape, axis), np.nan) if x.ndim > 1 else np.nan
    return x.std(axis=axis, ddof=1) / np.sqrt(n)


def _variance_stderr(rates: np.ndarray) -> float:
    """Batch-means standard error of the across-user variance of mean rates."""
    batches = min(VARIANCE_BATCHES, rates.shape[0])
    if batches < 2:
        return float("nan")
    parts = np.array_split(rates, batches)
    values = np.array([p.mean(axis=0).var() for p in parts])
    return float(values.std(ddof=1) / np.sqrt(batches))


def summarize(
    cfg: ScenarioConfig,
    alloc: BitAllocation,
    batch: TrialBatch,
    model: AnalyticalModel,
) -> SimulationResult:
    per_user = batch.rates.mean(axis=0)
    rate_mean, rate_var = rate_stats(per_user)
    a_rate = model.rates(alloc.fractional_bits)
    a_mean, a_var = rate_stats(a_rate)
    return SimulationResult(
        scheme=alloc.scheme,
        budget=alloc.total_budget,
        fractional_bits=alloc.fractional_bits,
        integer_bits=alloc.integer_bits,
        rate=per_user,
        rate_stderr=_stderr(batch.rates),
        interference=batch.interference.mean(axis=0),
        interference_stderr=_stderr(batch.interference),
        analytic_rate=a_rate,
        analytic_interference=model.interference(alloc.fractional_bits),
        rate_mean=rate_mean,
        rate_mean_stderr=float(_stderr(batch.rates.mean(axis=1))),
        rate_variance=rate_var,
        rate_variance_stderr=_variance_stderr(batch.rates),
        analytic_rate_mean=a_mean,
        analytic_rate_variance=a_var,
        trials=len(batch.trial_indices),
        redraws=batch.redraws,
        quantizer_clipped=batch.clipped,
        allocation_clipped=int(np.count_nonzero(alloc.clipped)) if alloc.clipped is not None else 0,
        rng_seed=cfg.rng_seed,
    )


def run_experiment(
    cfg: ScenarioConfig,
    scheme: str,
    budget_sweep: Sequence[float],
    channels: ChannelRealization | None = None,
) -> list[SimulationResult]:
    """Allocate, simulate and aggregate for every budget, sorted by budget.

    All budgets reuse the same channel draws (common random numbers).
    """
    geom = build_geometry(cfg)
    model = AnalyticalModel.from_config(cfg, geom)
    if channels is None:
        channels = draw_channel_batch(geom, cfg.antennas, cfg.rng_seed, range(cfg.trials))
    results = []
    for budget in sorted(budget_sweep):
        alloc = allocate(scheme, geom, budget, model)
        batch = simulate(cfg, geom, alloc.integer_bits, channels=channels)
        results.append(summarize(cfg, alloc, batch, model))
    return results
