"""Reference estimators: SVT matrix completion and beamspace OMP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admm import ParameterError, SolverError, SolverTrace
from .linalg import norms, svt_shrink
from .sampling import ObservedChannel

SVT_MAX_ITERS = 100
SVT_DIVERGENCE_WINDOW = 10
# SVT needs step < 2 to converge; the 3M/N rule exceeds that above 2/3 sampling
SVT_MAX_STEP = 1.9


@dataclass(frozen=True)
class SvtConfig:
    tau: float
    step: float
    max_iters: int = SVT_MAX_ITERS

    def __post_init__(self):
        if not (self.tau > 0 and self.step > 0):
            raise ParameterError(f"tau and step must be positive, got {self.tau}, {self.step}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class OmpConfig:
    sparsity: int
    residual_tol: float = 0.0

    def __post_init__(self):
        if self.sparsity < 1:
            raise ParameterError(f"sparsity must be >= 1, got {self.sparsity}")
        if self.residual_tol < 0:
            raise ParameterError(f"residual_tol must be >= 0, got {self.residual_tol}")


def default_svt_config(observed: ObservedChannel, max_iters: int = SVT_MAX_ITERS,
                       norm: str = "spectral") -> SvtConfig:
    """``tau = r ||H_Omega||`` and ``step = r`` with ``r = 3 M / (N_R N_T)``.

    The step is capped at ``SVT_MAX_STEP``.
    """
    n_rx, n_tx = observed.shape
    r = 3.0 * observed.pattern.m / (n_rx * n_tx)
    n = norms(observed.h_omega)
    h_norm = n.spectral if norm == "spectral" else n.frobenius
    return SvtConfig(tau=r * h_norm, step=min(r, SVT_MAX_STEP), max_iters=max_iters)


def solve_svt(observed: ObservedChannel, cfg: SvtConfig, truth=None, *, return_trace=False):
    """Singular value thresholding completion.

    Iterates ``H_k = SVT(Z_k, tau)``, ``Z_{k+1} = Z_k + step * Omega o (H_Omega - H_k)``
    from ``Z_0 = 0``. Raises `SolverError` if the masked residual grows for
    ``SVT_DIVERGENCE_WINDOW`` consecutive iterations.

    The trace stores the masked residual as ``res1``, leaves ``res2`` empty
    and records ``tau ||H_k||_* + 1/2 ||H_k||_F^2`` as the objective.
    """
    mask = observed.mask
    h_omega = observed.h_omega * mask
    h_true = None if truth is None else np.asarray(getattr(truth, "h", truth))
    trace = SolverTrace()
    z = np.zeros_like(h_omega)
    h = z
    prev = np.inf
    growth = 0
    for k in range(cfg.max_iters):
        h, sv = svt_shrink(z, cfg.tau, return_singular_values=True)
        resid = mask * (h_omega - h)
        rnorm = float(np.linalg.norm(resid))
        if not np.isfinite(rnorm):
            raise SolverError(f"SVT produced non-finite iterates at iteration {k + 1}")
        growth = growth + 1 if rnorm > prev else 0
        if growth >= SVT_DIVERGENCE_WINDOW:
            raise SolverError(
                f"SVT diverging: masked residual grew for {growth} consecutive iterations "
                f"(iteration {k + 1}, residual {rnorm:.3e})"
            )
        prev = rnorm
        nm = None
        if h_true is not None:
            err = np.linalg.norm(h - h_true) ** 2 / np.linalg.norm(h_true) ** 2
            nm = 10 * np.log10(err) if err > 0 else float("-inf")
        obj = cfg.tau * float(np.sum(sv)) + 0.5 * np.linalg.norm(h) ** 2
        trace.append(rnorm, float("nan"), obj, nm)
        z = z + cfg.step * resid
    if return_trace:
        return h, trace
    return h


def omp_dictionary(observed: ObservedChannel, d_r, d_t, columns=None) -> np.ndarray:
    """Rows of ``conj(D_T) kron D_R`` at the sampled positions.

    Column ``p + q * n_rx`` is the beam pair (receive ``p``, transmit ``q``),
    matching column-major vectorisation of the beamspace matrix. `columns`
    restricts the output to the given column indices.
    """
    n_rx = observed.shape[0]
    rows = np.array([i for i, _ in observed.pattern.support], dtype=int)
    cols = np.array([j for _, j in observed.pattern.support], dtype=int)
    if columns is None:
        atoms = d_t.conj()[cols][:, :, None] * d_r[rows][:, None, :]
        return atoms.reshape(len(rows), -1)
    columns = np.asarray(columns, dtype=int)
    p, q = columns % n_rx, columns // n_rx
    return d_r[rows][:, p] * d_t.conj()[cols][:, q]


def solve_omp(observed: ObservedChannel, d_r, d_t, cfg: OmpConfig, *, return_support=False):
    """Greedy beamspace recovery from the sampled entries.

    Each iteration picks the atom most correlated with the residual, then
    refits all selected coefficients by least squares. Correlations are
    formed as ``D_R^H R D_T`` on the zero-filled residual matrix, so the full
    dictionary is never built.

    Returns the antenna-domain estimate, and with `return_support` also the
    selected atom indices and the residual norm after each iteration.
    """
    m = observed.pattern.m
    if cfg.sparsity > m:
        raise ParameterError(f"sparsity {cfg.sparsity} exceeds number of measurements {m}")
    n_rx, n_tx = observed.shape
    rows = np.array([i for i, _ in observed.pattern.support], dtype=int)
    cols = np.array([j for _, j in observed.pattern.support], dtype=int)
    y = observed.h_omega[rows, cols]
    # column norms of the masked dictionary, column-major over (p, q)
    col_norms = np.sqrt(np.abs(d_r[rows]).T ** 2 @ np.abs(d_t[cols]) ** 2).reshape(-1, order="F")
    col_norms[col_norms == 0] = 1.0
    residual = y.copy()
    selected: list[int] = []
    history = []
    coef = np.zeros(0, dtype=np.complex128)
    available = np.ones(n_rx * n_tx, dtype=bool)
    r_mat = np.zeros((n_rx, n_tx), dtype=np.complex128)
    for _ in range(cfg.sparsity):
        if np.linalg.norm(residual) <= cfg.residual_tol:
            break
        r_mat[rows, cols] = residual
        corr = np.abs(d_r.conj().T @ r_mat @ d_t).reshape(-1, order="F") / col_norms
        corr[~available] = -1.0
        j = int(np.argmax(corr))
        selected.append(j)
        available[j] = False
        atoms = omp_dictionary(observed, d_r, d_t, selected)
        coef, *_ = np.linalg.lstsq(atoms, y, rcond=None)
        residual = y - atoms @ coef
        history.append(float(np.linalg.norm(residual)))
    z = np.zeros(n_rx * n_tx, dtype=np.complex128)
    z[selected] = coef
    est = d_r @ z.reshape(n_rx, n_tx, order="F") @ d_t.conj().T
    if return_support:
        return est, selected, history
    return est
