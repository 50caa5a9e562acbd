"""Channel estimation quality: NMSE and achievable spectral efficiency."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError

NMSE_FLOOR_DB = -200.0  # reported in place of -inf for exact recovery


@dataclass(frozen=True)
class EvalRecord:
    nmse_db: float
    nmse_linear: float
    ase_bits: float
    snr_db: float
    training_len: int


def nmse(estimate, truth):
    """Single-trial normalised squared error.

    Returns ``(linear, dB)``; the dB value is ``-inf`` for an exact estimate.
    """
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise DimensionError(f"estimate {estimate.shape} vs truth {truth.shape}")
    energy = np.linalg.norm(truth) ** 2
    if energy == 0:
        raise ValueError("NMSE undefined for an all-zero true channel")
    lin = float(np.linalg.norm(estimate - truth) ** 2 / energy)
    db = 10.0 * math.log10(lin) if lin > 0 else float("-inf")
    return lin, db


def floor_db(value: float) -> float:
    return max(value, NMSE_FLOOR_DB)


def ase(truth, nmse_linear: float, noise_var: float) -> float:
    """Lower bound ``log2 det(I + H H^H / (N_T N_R (noise_var + nmse)))``.

    `nmse_linear` is the linear-scale NMSE; pass 0 for perfect CSI.
    """
    h = np.asarray(truth, dtype=np.complex128)
    if noise_var < 0 or nmse_linear < 0:
        raise ValueError("noise_var and nmse_linear must be nonnegative")
    if not np.any(h):
        return 0.0
    n_rx, n_tx = h.shape
    denom = n_tx * n_rx * (noise_var + nmse_linear)
    if denom == 0:
        raise ValueError("ASE unbounded: zero noise and zero NMSE with a nonzero channel")
    # eigenvalues of H H^H are the squared singular values of H
    sv = np.linalg.svd(h, compute_uv=False)
    return float(np.sum(np.log2(1.0 + sv**2 / denom)))


def evaluate(estimate, truth, noise_var: float, snr_db: float, training_len: int) -> EvalRecord:
    lin, db = nmse(estimate, truth)
    return EvalRecord(db, lin, ase(truth, lin, noise_var), snr_db, training_len)
