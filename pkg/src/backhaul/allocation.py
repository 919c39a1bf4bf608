"""Splitting a backhaul budget of ``D`` bits among the users of a cell.

``D`` counts bits per real dimension summed over users, so the average
``D / N`` is the per-user resolution ``l_i`` of the exchanged coefficients.

Schemes
-------
conventional        ``l_i = D / N``
equal-sir           ``l_i = a + 0.5 log2(P2_i / P1_i)``  (equal ``P1 / I_q``)
equal-interference  ``l_i = a + 0.5 log2(P2_i)``         (equal ``I_q``)
oracle              exhaustive search of integer splits for the best sum rate
greedy              one bit at a time to the largest marginal sum-rate gain

The water level ``a`` is solved so that the bits sum to ``D``. Users that
would get negative bits are set to zero and ``a`` is solved again over the
rest. Ties are always broken towards the lowest user index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from backhaul.analysis import AnalyticalModel
from backhaul.errors import DomainError, OracleSizeError
from backhaul.geometry import UserGeometry, rx_powers

__all__ = [
    "BitAllocation",
    "SCHEMES",
    "allocate",
    "conventional",
    "equal_interference",
    "equal_interference_distance",
    "equal_sir",
    "equal_sir_distance",
    "exhaustive_oracle",
    "greedy_bitload",
    "largest_remainder",
    "round_allocation",
    "water_fill",
]

SCHEMES = ("conventional", "equal-sir", "equal-interference", "oracle", "greedy")

ORACLE_GUARD = 10**7


@dataclass(frozen=True)
class BitAllocation:
    scheme: str
    fractional_bits: np.ndarray
    integer_bits: np.ndarray
    total_budget: float
    water_level: float | None = None
    clipped: np.ndarray | None = None

    @property
    def any_clipped(self) -> bool:
        return self.clipped is not None and bool(np.any(self.clipped))


def _check_budget(budget):
    if not np.isfinite(budget) or budget < 0:
        raise DomainError(f"budget must be finite and >= 0, got {budget!r}")


def largest_remainder(fractional, total: int | None = None) -> np.ndarray:
    """Round non-negative reals to integers summing exactly to ``total``.

    ``total`` defaults to the rounded sum. Floors are topped up by one, largest
    fractional part first, lowest index on ties.
    """
    x = np.asarray(fractional, dtype=float)
    if np.any(x < 0):
        raise DomainError("cannot round negative bit counts")
    if total is None:
        total = int(round(float(x.sum())))
    # absorb representation noise such as 2.9999999999999996
    near = np.abs(x - np.round(x)) < 1e-9
    x = np.where(near, np.round(x), x)
    base = np.floor(x).astype(np.int64)
    short = int(total) - int(base.sum())
    if short < 0 or short > x.size:
        raise DomainError(f"cannot reach total {total} from {x!r}")
    order = np.argsort(-(x - base), kind="stable")
    base[order[:short]] += 1
    return base


def round_allocation(alloc: BitAllocation) -> BitAllocation:
    return replace(alloc, integer_bits=largest_remainder(alloc.fractional_bits))


def water_fill(offsets, budget: float) -> tuple[np.ndarray, float, np.ndarray]:
    """Solve ``l_i = max(0, a + offsets_i)`` with ``sum(l) == budget``.

    Returns ``(bits, a, clipped)`` where ``clipped`` marks users held at zero.
    """
    _check_budget(budget)
    o = np.asarray(offsets, dtype=float)
    active = np.ones(o.size, dtype=bool)
    while True:
        level = (budget - o[active].sum()) / active.sum()
        trial = level + o
        # the active mean is budget / n >= 0, so only rounding can push a
        # user below zero by less than this; never drop everyone on it
        negative = active & (trial < -1e-12 * max(1.0, abs(level)))
        if not negative.any():
            break
        active &= ~negative
    bits = np.where(active, np.maximum(trial, 0.0), 0.0)
    return bits, float(level), ~active


def _from_fractional(scheme, bits, budget, level=None, clipped=None) -> BitAllocation:
    return BitAllocation(
        scheme=scheme,
        fractional_bits=bits,
        integer_bits=largest_remainder(bits, int(round(budget))),
        total_budget=float(budget),
        water_level=level,
        clipped=clipped,
    )


def conventional(users: int, budget: float) -> BitAllocation:
    _check_budget(budget)
    if users < 1:
        raise DomainError("need at least one user")
    bits = np.full(users, budget / users)
    return _from_fractional("conventional", bits, budget, clipped=np.zeros(users, dtype=bool))


def equal_sir(geom: Sequence[UserGeometry], budget: float) -> BitAllocation:
    """Bits that equalize ``P1 / I_q`` across users."""
    p_own, p_other = rx_powers(geom)
    bits, level, clipped = water_fill(0.5 * np.log2(p_other / p_own), budget)
    return _from_fractional("equal-sir", bits, budget, level, clipped)


def equal_sir_distance(geom: Sequence[UserGeometry], budget: float, gamma: float) -> BitAllocation:
    d_own = np.array([u.d_own for u in geom])
    d_other = np.array([u.d_other for u in geom])
    bits, level, clipped = water_fill(0.5 * np.log2((d_other / d_own) ** (-gamma)), budget)
    return _from_fractional("equal-sir", bits, budget, level, clipped)


def equal_interference(geom: Sequence[UserGeometry], budget: float) -> BitAllocation:
    """Bits that equalize the quantization interference ``N P2 Q``."""
    _, p_other = rx_powers(geom)
    bits, level, clipped = water_fill(0.5 * np.log2(p_other), budget)
    return _from_fractional("equal-interference", bits, budget, level, clipped)


def equal_interference_distance(geom: Sequence[UserGeometry], budget: float, gamma: float) -> BitAllocation:
    d_other = np.array([u.d_other for u in geom])
    bits, level, clipped = water_fill(0.5 * np.log2(d_other ** (-gamma)), budget)
    return _from_fractional("equal-interference", bits, budget, level, clipped)


def _int_budget(budget) -> int:
    if int(budget) != budget or budget < 0:
        raise DomainError(f"integer budget required, got {budget!r}")
    return int(budget)


def _compositions(parts: int, total: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to
    ``total``, in lexicographic order."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(parts - 1, total - first)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def exhaustive_oracle(model: AnalyticalModel, budget: int, guard: int = ORACLE_GUARD) -> BitAllocation:
    """Best integer split of ``budget`` for the analytical sum rate.

    Every composition is scored; the lexicographically smallest among the
    maximizers (relative tolerance 1e-12) wins.

    Raises
    ------
    OracleSizeError
        If the number of compositions exceeds ``guard``; use `greedy_bitload`.
    """
    d = _int_budget(budget)
    n = model.users
    count = math.comb(d + n - 1, n - 1)
    if count > guard:
        raise OracleSizeError(
            f"{count} allocations of {d} bits over {n} users exceed the guard of "
            f"{guard}; use the greedy allocator instead"
        )
    if n == 1:
        return BitAllocation("oracle", np.array([float(d)]), np.array([d]), float(d))
    table = model.rate_table(d)
    best_score, best = -np.inf, None
    # enumerate block by block on the first user's share to bound memory
    for first in range(d + 1):
        rest = _compositions(n - 1, d - first)
        score = np.full(len(rest), table[0, first])
        for k in range(n - 1):
            score = score + table[k + 1, rest[:, k]]
        top = score.max()
        if best is None or top > best_score + 1e-12 * max(1.0, abs(best_score)):
            pick = int(np.argmax(score >= top - 1e-12 * max(1.0, abs(top))))
            best_score = top
            best = np.concatenate([[first], rest[pick]])
    bits = best.astype(np.int64)
    return BitAllocation("oracle", bits.astype(float), bits, float(d))


def greedy_bitload(model: AnalyticalModel, budget: int) -> BitAllocation:
    """Hand out bits one at a time to the largest marginal sum-rate gain."""
    d = _int_budget(budget)
    table = model.rate_table(d)
    bits = np.zeros(model.users, dtype=np.int64)
    rows = np.arange(model.users)
    for _ in range(d):
        gain = table[rows, bits + 1] - table[rows, bits]
        bits[int(np.argmax(gain))] += 1
    return BitAllocation("greedy", bits.astype(float), bits, float(d))


def allocate(
    scheme: str,
    geom: Sequence[UserGeometry],
    budget: float,
    model: AnalyticalModel | None = None,
) -> BitAllocation:
    """Dispatch on a scheme name from `SCHEMES`."""
    if scheme == "conventional":
        return conventional(len(geom), budget)
    if scheme == "equal-sir":
        return equal_sir(geom, budget)
    if scheme == "equal-interference":
        return equal_interference(geom, budget)
    if scheme in ("oracle", "greedy"):
        if model is None:
            raise DomainError(f"scheme {scheme!r} needs an analytical rate model")
        if scheme == "oracle":
            return exhaustive_oracle(model, budget)
        return greedy_bitload(model, budget)
    raise DomainError(f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
