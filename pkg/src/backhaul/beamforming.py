"""Coordinated zero-forcing precoders and instantaneous link quality.

Each station stacks the (conjugated) channels of its own users on top of the
quantized channels it received for the other cell's users and takes the
pseudo-inverse. Column ``j`` serves own user ``j`` and nulls every other row
of the stack. Transmit power is folded into the channels, so all beams carry
unit norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from backhaul.channel import ChannelRealization
from backhaul.errors import DomainError, SingularStackError

__all__ = [
    "PrecoderSet",
    "LinkPowers",
    "build_zf_precoder",
    "zf_beams",
    "build_precoders",
    "instantaneous_sinr",
    "link_powers",
    "per_user_rate",
    "stack_singular",
]

# smallest/largest singular value ratio below which a stack counts as singular
SINGULAR_RCOND = 1e-10


@dataclass(frozen=True)
class PrecoderSet:
    """Unit-norm beam matrices ``(..., M, N)`` of station 1 and station 2."""

    w1: np.ndarray
    w2: np.ndarray


@dataclass(frozen=True)
class LinkPowers:
    """Per cell-1 user powers ``(..., N)`` seen at the receiver."""

    signal: np.ndarray
    intra: np.ndarray
    inter: np.ndarray


def _stack(own_csi, other_csi) -> np.ndarray:
    own_csi = np.asarray(own_csi, dtype=complex)
    if other_csi is None:
        rows = own_csi
    else:
        rows = np.concatenate([own_csi, np.asarray(other_csi, dtype=complex)], axis=-2)
    # row r of the stack maps a beam w to h_r^H w
    return rows.conj()


def stack_singular(own_csi, other_csi, rcond: float = SINGULAR_RCOND) -> np.ndarray:
    """Boolean mask over the batch axes: True where the stack is rank deficient."""
    s = np.linalg.svd(_stack(own_csi, other_csi), compute_uv=False)
    return s[..., -1] <= rcond * s[..., 0]


def zf_beams(own_csi, other_csi) -> tuple[np.ndarray, np.ndarray]:
    """Batched beams plus a mask of singular stacks (their beams are junk)."""
    a = _stack(own_csi, other_csi)
    n = np.shape(own_csi)[-2]
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    bad = s[..., -1] <= SINGULAR_RCOND * s[..., 0]
    s = np.where(bad[..., None], 1.0, s)
    # pinv(a) = V diag(1/s) U^H; keep only the columns serving own users
    uh_own = np.swapaxes(u, -1, -2).conj()[..., :, :n]
    w = np.swapaxes(vh, -1, -2).conj() @ (uh_own / s[..., :, None])
    return w / np.linalg.norm(w, axis=-2, keepdims=True), bad


def build_zf_precoder(own_csi, other_csi, antennas: int | None = None) -> np.ndarray:
    """Zero-forcing beams for one station.

    Parameters
    ----------
    own_csi : array_like, shape (..., N, M)
        True channels of the station's own users.
    other_csi : array_like, shape (..., K, M) or None
        Quantized channels of the other cell's users to be nulled.
    antennas : int, optional
        Expected ``M``; checked when given.

    Returns
    -------
    numpy.ndarray, shape (..., M, N)
        Unit-norm columns, the normalized first ``N`` columns of the
        pseudo-inverse of the stacked constraint matrix.

    Raises
    ------
    SingularStackError
        If any stack in the batch is rank deficient. ``trial_index`` holds the
        flat batch position of the first offender.
    """
    a = _stack(own_csi, other_csi)
    rows, m = a.shape[-2:]
    if antennas is not None and m != antennas:
        raise DomainError(f"channel length {m} != antennas {antennas}")
    if rows > m:
        raise DomainError(f"{rows} constraints cannot be met with {m} antennas")
    w, bad = zf_beams(own_csi, other_csi)
    if np.any(bad):
        first = int(np.flatnonzero(np.ravel(bad))[0])
        raise SingularStackError(
            f"rank-deficient ZF stack (realization {first}); redraw the channel",
            trial_index=first,
        )
    return w


def build_precoders(real: ChannelRealization, active=None) -> PrecoderSet:
    """Both stations' beams from perfect own CSI and quantized cross CSI.

    ``active`` masks the other-cell users whose CSI was actually exchanged;
    users given zero bits send nothing and cannot be nulled.
    """
    if real.cross1_q is None or real.cross2_q is None:
        raise DomainError("realization has no quantized cross channels")
    if active is None:
        active = np.ones(real.users, dtype=bool)
    active = np.asarray(active, dtype=bool)
    q2 = real.cross2_q[..., active, :] if active.any() else None
    q1 = real.cross1_q[..., active, :] if active.any() else None
    return PrecoderSet(
        w1=build_zf_precoder(real.own1, q2),
        w2=build_zf_precoder(real.own2, q1),
    )


def link_powers(real: ChannelRealization, pre: PrecoderSet) -> LinkPowers:
    """Signal, same-cell and cross-cell interference powers for cell-1 users."""
    g_own = np.abs(real.own1.conj() @ pre.w1) ** 2  # (..., user i, beam j)
    g_cross = np.abs(real.cross1.conj() @ pre.w2) ** 2
    signal = np.diagonal(g_own, axis1=-2, axis2=-1)
    intra = g_own.sum(axis=-1) - signal
    return LinkPowers(signal=signal, intra=intra, inter=g_cross.sum(axis=-1))


def instantaneous_sinr(real: ChannelRealization, pre: PrecoderSet, noise_power: float) -> np.ndarray:
    """Per-user SINR of cell 1 for one realization (or a batch)."""
    lp = link_powers(real, pre)
    return lp.signal / (noise_power + lp.intra + lp.inter)


def per_user_rate(sinr):
    """``log2(1 + sinr)`` in bits/symbol/Hz."""
    x = np.asarray(sinr, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("SINR must be non-negative")
    out = np.log2(1.0 + x)
    return float(out) if out.ndim == 0 else out
