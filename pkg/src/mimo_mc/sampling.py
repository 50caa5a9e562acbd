"""Random entry masks and the single-antenna-pair training protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, as_matrix


@dataclass(frozen=True)
class SamplingPattern:
    """Binary mask of observed entries and its ``(row, col)`` support list.

    The support is ordered by column-major linear index, which is also the
    order in which entries are trained.
    """

    mask: np.ndarray
    support: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return len(self.support)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @classmethod
    def from_mask(cls, mask) -> "SamplingPattern":
        mask = np.asarray(mask)
        if mask.ndim != 2 or not np.all((mask == 0) | (mask == 1)):
            raise ValueError("mask must be a 2-D 0/1 array")
        rows, cols = np.nonzero(mask.T)[::-1]  # column-major ordering
        return cls(mask.astype(float), tuple(zip(rows.tolist(), cols.tolist())))

    def to_record(self) -> dict:
        return {"shape": list(self.shape), "support": [list(p) for p in self.support]}


@dataclass(frozen=True)
class ObservedChannel:
    h_omega: np.ndarray
    pattern: SamplingPattern
    transmit_power: float = 1.0
    noise_var: float = 0.0
    training_len: int = 0

    @property
    def mask(self) -> np.ndarray:
        return self.pattern.mask

    @property
    def shape(self) -> tuple[int, int]:
        return self.h_omega.shape

    @property
    def snr_db(self) -> float:
        if self.noise_var == 0:
            return float("inf")
        return float(10 * np.log10(self.transmit_power / self.noise_var))

    def to_record(self) -> dict:
        values = [[float(self.h_omega[i, j].real), float(self.h_omega[i, j].imag)]
                  for i, j in self.pattern.support]
        return {
            **self.pattern.to_record(),
            "values": values,
            "transmit_power": self.transmit_power,
            "noise_var": self.noise_var,
            "training_len": self.training_len,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ObservedChannel":
        rows, cols = rec["shape"]
        mask = np.zeros((rows, cols))
        h_omega = np.zeros((rows, cols), dtype=np.complex128)
        for (i, j), (re, im) in zip(rec["support"], rec["values"]):
            mask[i, j] = 1.0
            h_omega[i, j] = complex(re, im)
        return cls(h_omega, SamplingPattern.from_mask(mask), rec["transmit_power"],
                   rec["noise_var"], rec["training_len"])


def generate_mask(n_rx: int, n_tx: int, m: int, rng: np.random.Generator) -> SamplingPattern:
    """Choose `m` distinct entries uniformly at random without replacement."""
    total = n_rx * n_tx
    if not 0 <= m <= total:
        raise ValueError(f"m must lie in [0, {total}], got {m}")
    idx = np.sort(rng.choice(total, size=m, replace=False))
    mask = np.zeros(total)
    mask[idx] = 1.0
    mask = mask.reshape(n_rx, n_tx, order="F")
    support = tuple((int(k % n_rx), int(k // n_rx)) for k in idx)
    return SamplingPattern(mask, support)


def simulate_training(h, pattern: SamplingPattern, p_t: float, noise_var: float,
                      rng: np.random.Generator) -> ObservedChannel:
    """Measure each support entry once with only antenna pair ``(i, j)`` active.

    The t-th symbol uses ``w = e_i``, ``f = e_j`` and ``s[t] = 1`` so that
    ``r[t] = sqrt(P_t) H_ij + n[t]``; the stored estimate is ``r[t] / sqrt(P_t)``.
    """
    h = as_matrix(h, "h")
    if h.shape != pattern.shape:
        raise DimensionError(f"channel {h.shape} does not match mask {pattern.shape}")
    if not p_t > 0:
        raise ValueError(f"transmit power must be > 0, got {p_t}")
    if noise_var < 0:
        raise ValueError(f"noise variance must be >= 0, got {noise_var}")
    m = pattern.m
    noise = np.sqrt(noise_var / 2) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    amp = np.sqrt(p_t)
    h_omega = np.zeros_like(h)
    for t, (i, j) in enumerate(pattern.support):
        r = amp * h[i, j] + noise[t]
        h_omega[i, j] = r / amp
    return ObservedChannel(h_omega, pattern, float(p_t), float(noise_var), m)


def noise_var_from_snr(snr_db: float, p_t: float = 1.0) -> float:
    return p_t * 10.0 ** (-snr_db / 10.0)
