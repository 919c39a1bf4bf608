"""Rayleigh channel draws and uniform scalar quantization of exchanged CSI.

Channel entries are zero-mean circularly-symmetric complex Gaussian with
variance equal to the received power of the link, i.e. transmit power and
path loss are folded into the channel.

Quantization noise law
----------------------
A ``l``-bit midrise quantizer over ``[-c, c]`` per real dimension has step
``delta = 2c / 2**l`` and error power ``delta**2 / 12`` per dimension, so a
complex coefficient carries ``Q = const * 2**(-2 l)``. The law must decrease
with bits; ``const / 2**(-2 l)`` would grow and is not used.

By default each exchanged vector is quantized over its own peak range,
``c = max |Re|, |Im|`` over its ``2M`` real components, with ``c`` sent as side
information. Nothing is ever clipped, and the peak component itself lands
exactly half a step from its reconstruction level. A fixed range of
``clip_sigmas`` standard deviations is available instead; its overload noise
does not shrink with bits and dominates the granular noise past ~8 bits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from backhaul.errors import DomainError
from backhaul.geometry import UserGeometry, rx_powers

__all__ = [
    "ChannelRealization",
    "QuantizerSpec",
    "analytic_q",
    "clip_range_for",
    "peak_range",
    "quantizer_const",
    "draw_channel_batch",
    "draw_channels",
    "quantize",
    "quantize_vector",
    "quantize_cross_channels",
    "trial_rng",
]


@dataclass(frozen=True)
class QuantizerSpec:
    bits_per_real_dim: int
    clip_range: float

    def __post_init__(self):
        if int(self.bits_per_real_dim) != self.bits_per_real_dim or self.bits_per_real_dim < 0:
            raise DomainError(f"bits must be a non-negative integer, got {self.bits_per_real_dim!r}")
        if not self.clip_range > 0:
            raise DomainError(f"clip_range must be > 0, got {self.clip_range!r}")

    @property
    def levels(self) -> int:
        return 2 ** int(self.bits_per_real_dim)

    @property
    def step(self) -> float:
        return 2.0 * self.clip_range / self.levels

    @property
    def noise_variance(self) -> float:
        """Modelled error power per complex coefficient, ``step**2 / 6``."""
        return self.step**2 / 6.0


class Quantized(NamedTuple):
    hq: np.ndarray
    nq: np.ndarray
    clipped: int


@dataclass(frozen=True)
class ChannelRealization:
    """All channel vectors of one draw, or a batch of draws.

    Arrays have shape ``(..., N, M)``; a leading axis indexes trials when the
    realization is batched. Naming follows the cell-1 point of view:

    ``own1``   station 1 -> cell-1 users (perfectly known at station 1)
    ``cross1`` station 2 -> cell-1 users (sent to station 2 over the backhaul)
    ``own2``   station 2 -> cell-2 users
    ``cross2`` station 1 -> cell-2 users (sent to station 1 over the backhaul)
    """

    own1: np.ndarray
    cross1: np.ndarray
    own2: np.ndarray
    cross2: np.ndarray
    cross1_q: np.ndarray | None = None
    cross2_q: np.ndarray | None = None
    bits: np.ndarray | None = None
    clipped: int = 0

    @property
    def antennas(self) -> int:
        return self.own1.shape[-1]

    @property
    def users(self) -> int:
        return self.own1.shape[-2]


def trial_rng(seed: int, trial_index: int, attempt: int = 0) -> np.random.Generator:
    """Independent stream for one trial.

    The stream is seeded with ``SeedSequence([seed, trial_index])`` and, for
    redraws, ``SeedSequence([seed, trial_index, attempt])``. Results therefore
    depend only on the trial's own index and never on execution order.
    """
    entropy = [int(seed), int(trial_index)]
    if attempt:
        entropy.append(int(attempt))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _std_complex(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def draw_channels(
    geom: Sequence[UserGeometry], antennas: int, rng: np.random.Generator
) -> ChannelRealization:
    """Draw one realization; entry variance equals the link's received power."""
    if antennas < 1:
        raise DomainError(f"antennas must be >= 1, got {antennas}")
    p_own, p_other = rx_powers(geom)
    g = _std_complex(rng, (4, len(geom), antennas))
    s_own = np.sqrt(p_own)[:, None]
    s_other = np.sqrt(p_other)[:, None]
    return ChannelRealization(
        own1=g[0] * s_own,
        cross1=g[1] * s_other,
        own2=g[2] * s_own,
        cross2=g[3] * s_other,
    )


def draw_channel_batch(
    geom: Sequence[UserGeometry],
    antennas: int,
    seed: int,
    trial_indices: Sequence[int],
    attempt: int = 0,
) -> ChannelRealization:
    """Stack `draw_channels` over trials, one `trial_rng` stream each."""
    draws = [draw_channels(geom, antennas, trial_rng(seed, t, attempt)) for t in trial_indices]
    return ChannelRealization(
        own1=np.stack([d.own1 for d in draws]),
        cross1=np.stack([d.cross1 for d in draws]),
        own2=np.stack([d.own2 for d in draws]),
        cross2=np.stack([d.cross2 for d in draws]),
    )


def peak_range(h) -> np.ndarray:
    """Largest real or imaginary magnitude along the last axis, keepdims."""
    h = np.asarray(h, dtype=complex)
    return np.maximum(np.abs(h.real), np.abs(h.imag)).max(axis=-1, keepdims=True)


def quantize(h, bits, clip_range=None) -> Quantized:
    """Uniform midrise quantization of real and imaginary parts.

    ``bits`` and ``clip_range`` broadcast against ``h`` (pass ``(..., N, 1)``
    shaped arrays for per-vector values). ``clip_range=None`` uses each
    vector's `peak_range`. Components beyond ``[-c, c]`` land in the boundary
    cell and are counted in ``clipped``.
    """
    h = np.asarray(h, dtype=complex)
    if clip_range is None:
        # an all-zero vector still needs a positive range
        clip_range = np.maximum(peak_range(h), np.finfo(float).tiny)
    bits = np.asarray(bits)
    if np.any(bits < 0) or np.any(np.floor(bits) != bits):
        raise DomainError(f"bits must be non-negative integers, got {bits!r}")
    c = np.asarray(clip_range, dtype=float)
    if np.any(c <= 0):
        raise DomainError("clip_range must be > 0")
    levels = np.exp2(bits.astype(float))
    step = 2.0 * c / levels

    def q(x):
        idx = np.clip(np.floor((x + c) / step), 0.0, levels - 1.0)
        return -c + (idx + 0.5) * step

    hq = q(h.real) + 1j * q(h.imag)
    clipped = int(np.count_nonzero(np.abs(h.real) > c) + np.count_nonzero(np.abs(h.imag) > c))
    return Quantized(hq=hq, nq=h - hq, clipped=clipped)


def quantize_vector(h, spec: QuantizerSpec) -> tuple[np.ndarray, np.ndarray]:
    """Quantize one complex vector; returns ``(hq, nq)`` with ``h == hq + nq``."""
    out = quantize(h, spec.bits_per_real_dim, spec.clip_range)
    return out.hq, out.nq


def analytic_q(bits, const: float):
    """Quantization noise power ``const * 2**(-2 bits)``."""
    b = np.asarray(bits, dtype=float)
    if np.any(b < 0) or np.any(np.isnan(b)):
        raise DomainError(f"bits must be >= 0, got {bits!r}")
    out = const * np.exp2(-2.0 * b)
    return float(out) if out.ndim == 0 else out


def clip_range_for(power, clip_sigmas: float):
    """Clip range for a complex entry of variance ``power``."""
    return clip_sigmas * np.sqrt(np.asarray(power, dtype=float) / 2.0)


@lru_cache(maxsize=None)
def _mean_square_peak(n_real: int) -> float:
    """E[max^2] over ``n_real`` iid |N(0, 1/2)| variables."""
    s = np.sqrt(0.5)

    def density(x):
        cdf = special.erf(x / (s * np.sqrt(2.0)))
        pdf = 2.0 * np.exp(-0.5 * (x / s) ** 2) / (s * np.sqrt(2.0 * np.pi))
        return x * x * n_real * cdf ** (n_real - 1) * pdf

    value, _ = integrate.quad(density, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return value


def quantizer_const(antennas: int, clip_sigmas: float | None = None) -> float:
    """Zero-bit noise constant of the Q law, for unit channel variance.

    Fixed range: ``delta = 2 * clip_sigmas * sqrt(1/2) / 2**l`` and two real
    dimensions of ``delta**2 / 12`` give ``clip_sigmas**2 / 3``.

    Peak range: ``2M - 1`` components carry ``delta**2 / 12`` and the peak one
    ``delta**2 / 4``, i.e. ``(1 + 1/M) * delta**2 / 6`` per complex
    coefficient with ``delta**2 = 4 c**2 / 4**l`` averaged over the peak ``c``.
    """
    if clip_sigmas is not None:
        return clip_sigmas**2 / 3.0
    m = int(antennas)
    return (2.0 / 3.0) * (1.0 + 1.0 / m) * _mean_square_peak(2 * m)


def quantize_cross_channels(
    real: ChannelRealization,
    geom: Sequence[UserGeometry],
    bits,
    clip_sigmas: float | None = None,
) -> ChannelRealization:
    """Fill in the quantized cross channels exchanged over the backhaul.

    Cell-1 user ``i`` receives ``bits[i]``; its mirrored cell-2 peer gets the
    same. A fixed range follows from the known large-scale power, not from
    the instantaneous draw.
    """
    bits = np.asarray(bits)
    if clip_sigmas is None:
        c = None
    else:
        _, p_other = rx_powers(geom)
        c = clip_range_for(p_other, clip_sigmas)[:, None]
    b = bits[:, None]
    q1 = quantize(real.cross1, b, c)
    q2 = quantize(real.cross2, b, c)
    return replace(
        real,
        cross1_q=q1.hq,
        cross2_q=q2.hq,
        bits=bits.copy(),
        clipped=q1.clipped + q2.clipped,
    )
