"""The four reference sweeps, as rows ready for CSV output.

Each experiment starts from a preset layered over the `ScenarioConfig`
defaults:

``interference-validate``  N=8, M=16, P=10, noise 1, users at the cell edge
                           (``d_own = d_other = d_o``) so every user sees
                           the same cross power.
``sumrate-compare``        N=4, M=8, users at the cell edge, noise 1.
``mean-sweep``,            default 8-user geometry with the noise set by
``fairness-frontier``,     `noise_for_region_boundary` (interference
``allocate``               dominated up to 25 bits per user), unless a noise
                           power is given explicitly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from backhaul.allocation import allocate
from backhaul.analysis import AnalyticalModel, classify_region, noise_for_region_boundary
from backhaul.channel import draw_channel_batch
from backhaul.errors import ConfigError
from backhaul.geometry import ScenarioConfig, build_geometry
from backhaul.montecarlo import run_experiment, simulate

__all__ = [
    "COLUMNS",
    "EXPERIMENTS",
    "FRONTIER_SCHEMES",
    "Preset",
    "SCHEMA",
    "allocation_table",
    "fairness_frontier",
    "gnuplot_script",
    "interference_validate",
    "mean_sweep",
    "preset_config",
    "sumrate_compare",
    "write_csv",
]

SCHEMA = "backhaul-csv/1"

EXPERIMENTS = ("interference-validate", "sumrate-compare", "mean-sweep", "fairness-frontier", "allocate")

FRONTIER_SCHEMES = ("conventional", "equal-sir", "equal-interference")

COLUMNS = {
    "interference-validate": ("l", "analytic_interference", "empirical_interference", "rel_error", "stderr"),
    "sumrate-compare": ("avg_bits", "sumrate_conventional", "sumrate_oracle", "gap_percent"),
    "mean-sweep": ("avg_bits", "scheme", "rate_mean", "stderr", "analytic_rate_mean", "clipped"),
    "fairness-frontier": ("avg_bits", "scheme", "variant", "rate_mean", "rate_variance", "clipped"),
    "allocate": ("user", "d1", "d2", "frac_bits", "int_bits", "sinr", "rate", "region"),
}


@dataclass(frozen=True)
class Preset:
    overrides: dict = field(default_factory=dict)
    edge_users: bool = False  # place every user at d_o unless positions are given
    calibrate_noise: bool = False
    bits: tuple = ()


PRESETS = {
    "interference-validate": Preset(
        dict(users_per_cell=8, antennas=16, per_user_tx_power=10.0, noise_power=1.0),
        edge_users=True,
        bits=tuple(range(3, 13)),
    ),
    "sumrate-compare": Preset(
        dict(users_per_cell=4, antennas=8, noise_power=1.0), edge_users=True, bits=tuple(range(3, 13))
    ),
    "mean-sweep": Preset(calibrate_noise=True, bits=tuple(range(3, 41))),
    "fairness-frontier": Preset(calibrate_noise=True, bits=tuple(range(3, 41))),
    "allocate": Preset(calibrate_noise=True, bits=(8,)),
}


def preset_config(experiment: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """``base`` (or the defaults) with the experiment's preset on top."""
    if experiment not in PRESETS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
    cfg = base or ScenarioConfig()
    return cfg.replace(**PRESETS[experiment].overrides)


def finalize_config(experiment: str, cfg: ScenarioConfig, explicit: Iterable[str] = ()) -> ScenarioConfig:
    """Apply the preset rules that depend on the final user count and noise.

    ``explicit`` names the fields the caller set by hand (config file or
    flags); those are never touched.
    """
    preset = PRESETS[experiment]
    explicit = set(explicit)
    if preset.edge_users and "user_positions" not in explicit:
        cfg = cfg.replace(user_positions=[cfg.reference_distance] * cfg.users_per_cell)
    if preset.calibrate_noise and "noise_power" not in explicit:
        cfg = cfg.replace(noise_power=noise_for_region_boundary(cfg))
    return cfg


def default_bits(experiment: str) -> tuple:
    return PRESETS[experiment].bits


def interference_validate(cfg: ScenarioConfig, bits: Sequence[int]) -> list[tuple]:
    """Closed-form vs simulated cross-cell interference, averaged over users.

    Every ``l`` reuses the same channel draws.
    """
    geom = build_geometry(cfg)
    model = AnalyticalModel.from_config(cfg, geom)
    channels = draw_channel_batch(geom, cfg.antennas, cfg.rng_seed, range(cfg.trials))
    rows = []
    for level in sorted(bits):
        b = np.full(cfg.users_per_cell, int(level))
        batch = simulate(cfg, geom, b, channels=channels)
        per_trial = batch.interference.mean(axis=1)
        empirical = float(per_trial.mean())
        analytic = float(np.mean(model.interference(b.astype(float))))
        stderr = float(per_trial.std(ddof=1) / math.sqrt(len(per_trial))) if len(per_trial) > 1 else math.nan
        rows.append((int(level), analytic, empirical, abs(empirical - analytic) / analytic, stderr))
    return rows


def sumrate_compare(cfg: ScenarioConfig, bits: Sequence[int]) -> list[tuple]:
    """Analytical sum rate of the equal split vs the exhaustive optimum.

    ``gap_percent`` is the conventional shortfall relative to the optimum.
    """
    geom = build_geometry(cfg)
    model = AnalyticalModel.from_config(cfg, geom)
    n = cfg.users_per_cell
    rows = []
    for level in sorted(bits):
        budget = int(level) * n
        conv = model.sum_rate(allocate("conventional", geom, budget).integer_bits.astype(float))
        best = model.sum_rate(allocate("oracle", geom, budget, model).integer_bits.astype(float))
        rows.append((int(level), conv, best, 100.0 * (best - conv) / best))
    return rows


def _sweep(cfg, bits, schemes, monte_carlo):
    geom = build_geometry(cfg)
    budgets = [float(b) * cfg.users_per_cell for b in sorted(bits)]
    out = {}
    if monte_carlo:
        channels = draw_channel_batch(geom, cfg.antennas, cfg.rng_seed, range(cfg.trials))
        for scheme in schemes:
            out[scheme] = run_experiment(cfg, scheme, budgets, channels=channels)
    else:
        model = AnalyticalModel.from_config(cfg, geom)
        for scheme in schemes:
            out[scheme] = [_analytic_only(scheme, geom, d, model) for d in budgets]
    return out


@dataclass(frozen=True)
class _AnalyticPoint:
    avg_bits: float
    analytic_rate_mean: float
    analytic_rate_variance: float
    allocation_clipped: int
    rate_mean: float = math.nan
    rate_mean_stderr: float = math.nan
    rate_variance: float = math.nan


def _analytic_only(scheme, geom, budget, model):
    alloc = allocate(scheme, geom, budget, model)
    rates = model.rates(alloc.fractional_bits)
    clipped = int(np.count_nonzero(alloc.clipped)) if alloc.clipped is not None else 0
    return _AnalyticPoint(budget / len(geom), float(rates.mean()), float(rates.var()), clipped)


def mean_sweep(
    cfg: ScenarioConfig,
    bits: Sequence[float],
    schemes: Sequence[str] = FRONTIER_SCHEMES,
    monte_carlo: bool = True,
) -> list[tuple]:
    """Rate mean per scheme and average bits; ``monte_carlo=False`` leaves
    the empirical columns as NaN."""
    rows = []
    for scheme, results in _sweep(cfg, bits, schemes, monte_carlo).items():
        for r in results:
            rows.append(
                (r.avg_bits, scheme, r.rate_mean, r.rate_mean_stderr, r.analytic_rate_mean, r.allocation_clipped)
            )
    rows.sort(key=lambda row: (row[0], schemes.index(row[1])))
    return rows


def fairness_frontier(
    cfg: ScenarioConfig,
    bits: Sequence[float],
    schemes: Sequence[str] = FRONTIER_SCHEMES,
    monte_carlo: bool = True,
) -> list[tuple]:
    """Rate mean and across-user variance, one analytic and (optionally)
    one empirical row per scheme and average bits."""
    rows = []
    for scheme, results in _sweep(cfg, bits, schemes, monte_carlo).items():
        for r in results:
            c = r.allocation_clipped
            rows.append((r.avg_bits, scheme, "analytic", r.analytic_rate_mean, r.analytic_rate_variance, c))
            if monte_carlo:
                rows.append((r.avg_bits, scheme, "empirical", r.rate_mean, r.rate_variance, c))
    rows.sort(key=lambda row: (row[0], schemes.index(row[1]), row[2]))
    return rows


def allocation_table(cfg: ScenarioConfig, scheme: str, budget: float):
    """Per-user allocation details and the cell's aggregate region.

    Returns
    -------
    rows : list of tuple
        ``(user, d1, d2, frac_bits, int_bits, sinr, rate, region)``.
    aggregate : Region
    alloc : BitAllocation
    """
    geom = build_geometry(cfg)
    model = AnalyticalModel.from_config(cfg, geom)
    alloc = allocate(scheme, geom, budget, model)
    sinr = model.sinr(alloc.fractional_bits)
    rates = np.log2(1.0 + sinr)
    labels, aggregate = classify_region(model, alloc.fractional_bits, cfg.region_rho_hi, cfg.region_rho_lo)
    rows = [
        (u.user_id, u.d_own, u.d_other, float(f), int(i), float(s), float(r), lab.value)
        for u, f, i, s, r, lab in zip(geom, alloc.fractional_bits, alloc.integer_bits, sinr, rates, labels)
    ]
    return rows, aggregate, alloc


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(stream: TextIO, experiment: str, rows: Iterable[Sequence]) -> None:
    """Schema comment line, header, then rows; LF endings, 17 significant digits."""
    stream.write(f"# schema={SCHEMA} experiment={experiment}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS[experiment])
    for row in rows:
        writer.writerow([_cell(v) for v in row])


_PLOTS = {
    "interference-validate": (
        "set logscale y\nset xlabel 'bits per real dimension'\nset ylabel 'interference'\n",
        "plot '{f}' using 1:2 with lines title 'analytic', '{f}' using 1:3:5 with yerrorbars title 'simulated'\n",
    ),
    "sumrate-compare": (
        "set xlabel 'average bits per user'\nset ylabel 'sum rate (bit/s/Hz)'\n",
        "plot '{f}' using 1:2 with linespoints title 'conventional', '{f}' using 1:3 with linespoints title 'oracle'\n",
    ),
    "mean-sweep": (
        "set xlabel 'average bits per user'\nset ylabel 'rate mean (bit/s/Hz)'\n",
        "plot for [s in 'conventional equal-sir equal-interference'] '{f}' "
        "using 1:(strcol(2) eq s ? $3 : NaN) with linespoints title s\n",
    ),
    "fairness-frontier": (
        "set xlabel 'rate mean (bit/s/Hz)'\nset ylabel 'rate variance'\n",
        "plot for [s in 'conventional equal-sir equal-interference'] '{f}' "
        "using (strcol(2) eq s && strcol(3) eq 'analytic' ? $4 : NaN):5 with linespoints title s\n",
    ),
}


def gnuplot_script(experiment: str, csv_path: str) -> str:
    """Companion gnuplot script for a CSV written by `write_csv`."""
    if experiment not in _PLOTS:
        raise ConfigError(f"no plot recipe for {experiment!r}")
    setup, plot = _PLOTS[experiment]
    head = "set datafile separator ','\nset datafile commentschars '#'\n"
    # the header row is data to gnuplot; skip it explicitly
    body = plot.replace("'{f}'", f"'{csv_path}' every ::1")
    return head + setup + body
