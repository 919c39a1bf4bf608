"""Linear two-cell layout and distance-based path loss.

Both base stations sit on a line ``bs_separation`` metres apart. A user at
distance ``d`` from its own station is ``bs_separation - d`` from the other
one. Cell-2 users mirror cell-1 users, so only cell 1 is described here.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from backhaul.errors import ConfigError, DomainError

__all__ = [
    "ScenarioConfig",
    "UserGeometry",
    "build_geometry",
    "apply_mapping",
    "load_config",
    "read_config_file",
    "path_loss",
    "rx_powers",
]


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one experiment.

    Powers are linear watts. ``antennas`` defaults to ``2 * users_per_cell``
    and ``user_positions`` to ``reference_distance * i / users_per_cell`` for
    ``i = 1..users_per_cell`` (200 m steps up to 1600 m for eight users).
    """

    users_per_cell: int = 8
    antennas: int | None = None
    per_user_tx_power: float = 10.0
    noise_power: float = 1.0
    path_loss_exponent: float = 3.8
    reference_distance: float = 1600.0
    reference_loss: float = 1.0
    bs_separation: float = 3200.0
    user_positions: tuple[float, ...] | None = None
    rng_seed: int = 0
    trials: int = 10_000
    # fixed quantizer range in per-real-dimension standard deviations;
    # None scales each exchanged vector by its own peak component
    clip_sigmas: float | None = None
    array_gain: float | None = None
    region_rho_hi: float = 10.0
    region_rho_lo: float = 3.0

    def __post_init__(self):
        n = self.users_per_cell
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
            raise ConfigError(f"users_per_cell must be a positive integer, got {n!r}")
        if self.antennas is None:
            object.__setattr__(self, "antennas", 2 * n)
        if self.user_positions is None:
            step = self.reference_distance / n
            object.__setattr__(
                self, "user_positions", tuple(step * (i + 1) for i in range(n))
            )
        else:
            object.__setattr__(
                self, "user_positions", tuple(float(d) for d in self.user_positions)
            )
        self._validate()

    def _validate(self):
        n, m = self.users_per_cell, self.antennas
        if not isinstance(m, (int, np.integer)) or m < 2 * n:
            raise ConfigError(
                f"antennas={m!r} must be an integer >= 2*users_per_cell={2 * n}"
            )
        if len(self.user_positions) != n:
            raise ConfigError(
                f"{len(self.user_positions)} user_positions given for {n} users"
            )
        for d in self.user_positions:
            if not 0.0 < d < self.bs_separation:
                raise ConfigError(
                    f"user position {d} outside (0, bs_separation={self.bs_separation})"
                )
        positive = {
            "per_user_tx_power": self.per_user_tx_power,
            "noise_power": self.noise_power,
            "path_loss_exponent": self.path_loss_exponent,
            "reference_distance": self.reference_distance,
            "reference_loss": self.reference_loss,
            "bs_separation": self.bs_separation,
            "region_rho_hi": self.region_rho_hi,
            "region_rho_lo": self.region_rho_lo,
        }
        for name, value in positive.items():
            if not _is_number(value) or not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
        if not isinstance(self.trials, (int, np.integer)) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigError(f"rng_seed must fit in 64 bits, got {self.rng_seed!r}")
        if self.clip_sigmas is not None and not self.clip_sigmas > 0:
            raise ConfigError(f"clip_sigmas must be > 0, got {self.clip_sigmas!r}")
        if self.array_gain is not None and self.array_gain <= 0:
            raise ConfigError(f"array_gain must be > 0, got {self.array_gain!r}")

    @property
    def gain(self) -> float:
        """Array-gain factor of the analytical SINR (M - 2N + 1 unless set)."""
        if self.array_gain is not None:
            return float(self.array_gain)
        return float(self.antennas - 2 * self.users_per_cell + 1)

    def replace(self, **changes: Any) -> "ScenarioConfig":
        if "users_per_cell" in changes:
            # derived defaults follow the new user count unless given explicitly
            changes.setdefault("antennas", None)
            changes.setdefault("user_positions", None)
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["user_positions"] = list(self.user_positions)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        kwargs = dict(data)
        for name in _FLOAT_FIELDS:
            if isinstance(kwargs.get(name), str):
                # YAML 1.1 reads exponent literals without a dot ("1e-15") as strings
                kwargs[name] = _to_float(name, kwargs[name])
        if kwargs.get("user_positions") is not None:
            kwargs["user_positions"] = tuple(_to_float("user_positions", d) for d in kwargs["user_positions"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


_FLOAT_FIELDS = (
    "per_user_tx_power",
    "noise_power",
    "path_loss_exponent",
    "reference_distance",
    "reference_loss",
    "bs_separation",
    "clip_sigmas",
    "array_gain",
    "region_rho_hi",
    "region_rho_lo",
)


def _is_number(value) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool)


def _to_float(name, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected a number, got {value!r}") from exc


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a YAML (or JSON) key-value file into a plain mapping."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed config: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of field names to values")
    return data


def apply_mapping(base: ScenarioConfig, data: Mapping[str, Any]) -> ScenarioConfig:
    """``base`` with the fields in ``data`` replaced; unknown keys raise."""
    merged = base.to_dict()
    if "users_per_cell" in data:
        # let the antenna count and the positions follow the new user count
        merged.pop("antennas")
        merged.pop("user_positions")
    merged.update(data)
    return ScenarioConfig.from_dict(merged)


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read a YAML (or JSON) key-value file on top of ``base``."""
    data = read_config_file(path)
    try:
        return apply_mapping(base or ScenarioConfig(), data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class UserGeometry:
    user_id: int
    d_own: float
    d_other: float
    rx_power_own: float
    rx_power_other: float


def path_loss(power, distance, cfg: ScenarioConfig):
    """Received power ``P * k * (d / d_o) ** -gamma``.

    Works elementwise on arrays. Non-positive distances raise `DomainError`.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise DomainError(f"distance must be finite and > 0, got {distance!r}")
    out = (
        np.asarray(power, dtype=float)
        * cfg.reference_loss
        * (d / cfg.reference_distance) ** (-cfg.path_loss_exponent)
    )
    return float(out) if out.ndim == 0 else out


def build_geometry(cfg: ScenarioConfig) -> list[UserGeometry]:
    users = []
    for i, d_own in enumerate(cfg.user_positions):
        d_other = cfg.bs_separation - d_own
        users.append(
            UserGeometry(
                user_id=i,
                d_own=d_own,
                d_other=d_other,
                rx_power_own=path_loss(cfg.per_user_tx_power, d_own, cfg),
                rx_power_other=path_loss(cfg.per_user_tx_power, d_other, cfg),
            )
        )
    return users


def rx_powers(geom: Sequence[UserGeometry]) -> tuple[np.ndarray, np.ndarray]:
    """Arrays of (own-station, other-station) received powers."""
    own = np.array([u.rx_power_own for u in geom], dtype=float)
    other = np.array([u.rx_power_other for u in geom], dtype=float)
    return own, other
