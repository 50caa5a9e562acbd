"""Geometric mmWave MIMO channel generation and the beamspace transform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, as_matrix, dft_matrix

GAIN_VARIANCE = 0.5  # total variance of the circularly-symmetric path gains
DEFAULT_ANGLE_SPREAD_DEG = 50.0


@dataclass(frozen=True)
class ChannelConfig:
    n_rx: int
    n_tx: int
    n_paths: int = 2
    angle_spread_deg: float = DEFAULT_ANGLE_SPREAD_DEG
    rng_seed: int | None = None
    # scale H by sqrt(n_rx * n_tx / n_paths) so that E|H_ij|^2 = GAIN_VARIANCE
    normalize: bool = True

    def __post_init__(self):
        if self.n_rx < 1 or self.n_tx < 1:
            raise DimensionError(f"antenna counts must be >= 1, got {self.n_rx}x{self.n_tx}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.angle_spread_deg > 0:
            raise ValueError(f"angle_spread_deg must be > 0, got {self.angle_spread_deg}")

    @property
    def scale(self) -> float:
        if not self.normalize:
            return 1.0
        return float(np.sqrt(self.n_rx * self.n_tx / self.n_paths))


@dataclass(frozen=True)
class ChannelRealization:
    """Ground-truth channel together with the path parameters that produced it."""

    h: np.ndarray
    gains: np.ndarray
    aod_deg: np.ndarray
    aoa_deg: np.ndarray
    scale: float = 1.0
    seed: int | None = None

    @property
    def n_rx(self) -> int:
        return self.h.shape[0]

    @property
    def n_tx(self) -> int:
        return self.h.shape[1]

    @property
    def n_paths(self) -> int:
        return len(self.gains)

    def to_record(self) -> dict:
        return {
            "n_rx": self.n_rx,
            "n_tx": self.n_tx,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "scale": self.scale,
            "gains": [[float(g.real), float(g.imag)] for g in self.gains],
            "aod_deg": [float(a) for a in self.aod_deg],
            "aoa_deg": [float(a) for a in self.aoa_deg],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ChannelRealization":
        gains = np.array([complex(re, im) for re, im in rec["gains"]], dtype=np.complex128)
        aod = np.asarray(rec["aod_deg"], dtype=float)
        aoa = np.asarray(rec["aoa_deg"], dtype=float)
        scale = float(rec.get("scale", 1.0))
        h = channel_from_paths(rec["n_rx"], rec["n_tx"], gains, aod, aoa, scale)
        return cls(h, gains, aod, aoa, scale, rec.get("seed"))


def ula_response(n: int, azimuth_rad: float) -> np.ndarray:
    """Unit-norm half-wavelength ULA steering vector."""
    if n < 1:
        raise DimensionError(f"array size must be >= 1, got {n}")
    return np.exp(1j * np.pi * np.arange(n) * np.sin(azimuth_rad)) / np.sqrt(n)


def wrap_angle_deg(angle):
    """Wrap angles modulo 180 degrees into ``(-90, 90]``."""
    return 90.0 - np.mod(90.0 - np.asarray(angle, dtype=float), 180.0)


def dft_grid_angles_deg(n: int) -> np.ndarray:
    """Azimuths whose ULA response equals a column of ``dft_matrix(n)``.

    Entry ``k`` matches column ``k``: ``sin(phi) = -2k/n`` wrapped into
    ``(-1, 1]``.
    """
    k = np.arange(n)
    u = 1.0 - np.mod(1.0 + 2.0 * k / n, 2.0)
    return np.rad2deg(np.arcsin(u))


def sample_path_params(cfg: ChannelConfig, rng: np.random.Generator):
    """Draw path gains and azimuths.

    Returns ``(gains, aod_deg, aoa_deg)``. Gains are CN(0, 1/2) in total
    variance; angles are zero-mean Laplace with standard deviation
    ``cfg.angle_spread_deg``, wrapped into ``(-90, 90]``.
    """
    n = cfg.n_paths
    gains = np.sqrt(GAIN_VARIANCE / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    # Laplace std = sqrt(2) * scale
    b = cfg.angle_spread_deg / np.sqrt(2.0)
    aod = wrap_angle_deg(rng.laplace(0.0, b, n))
    aoa = wrap_angle_deg(rng.laplace(0.0, b, n))
    return gains, aod, aoa


def channel_from_paths(n_rx, n_tx, gains, aod_deg, aoa_deg, scale=1.0) -> np.ndarray:
    """``scale * sum_k gains[k] a_R(aoa_k) a_T(aod_k)^H``."""
    gains = np.asarray(gains, dtype=np.complex128)
    a_r = np.column_stack([ula_response(n_rx, np.deg2rad(a)) for a in np.atleast_1d(aoa_deg)])
    a_t = np.column_stack([ula_response(n_tx, np.deg2rad(a)) for a in np.atleast_1d(aod_deg)])
    return scale * (a_r * gains) @ a_t.conj().T


def generate_channel(cfg: ChannelConfig, rng: np.random.Generator | None = None) -> ChannelRealization:
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    gains, aod, aoa = sample_path_params(cfg, rng)
    h = channel_from_paths(cfg.n_rx, cfg.n_tx, gains, aod, aoa, cfg.scale)
    return ChannelRealization(h, gains, aod, aoa, cfg.scale, cfg.rng_seed)


def _check_bases(shape, d_r, d_t):
    if d_r.shape != (shape[0], shape[0]) or d_t.shape != (shape[1], shape[1]):
        raise DimensionError(
            f"bases {d_r.shape}, {d_t.shape} do not match a {shape[0]}x{shape[1]} channel"
        )


def to_beamspace(h, d_r, d_t) -> np.ndarray:
    """``Z = D_R^H H D_T``."""
    h = as_matrix(h, "h")
    _check_bases(h.shape, d_r, d_t)
    return d_r.conj().T @ h @ d_t


def from_beamspace(z, d_r, d_t) -> np.ndarray:
    """``H = D_R Z D_T^H``."""
    z = as_matrix(z, "z")
    _check_bases(z.shape, d_r, d_t)
    return d_r @ z @ d_t.conj().T


def dft_bases(n_rx: int, n_tx: int):
    return dft_matrix(n_rx), dft_matrix(n_tx)
