"""ADMM channel estimator jointly exploiting low rank and beamspace sparsity.

Solves

    min  tau_h ||H||_* + tau_s ||S||_1 + 1/2 ||C||_F^2 + 1/2 ||Omega o Y - H_Omega||_F^2
    s.t. H = Y,  C = Y - D_R S D_T^H

by alternating closed-form updates of H (singular value thresholding),
Y (elementwise diagonal solve), S (complex soft thresholding in beamspace)
and C (scaled residual), followed by dual ascent on Z1 and Z2. All
variables start at zero.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .linalg import NumericalError, norms, split_l1, soft_threshold_complex, svt_shrink
from .sampling import ObservedChannel

DEFAULT_RHO = 0.005
DEFAULT_MAX_ITERS = 100
# noise variance substituted for a noiseless observation in the tau_s rule
NOISELESS_NOISE_FLOOR = 1e-12


class SolverError(RuntimeError):
    """A solver failed numerically; the message carries the iteration index."""


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class AdmmConfig:
    tau_h: float
    tau_s: float
    rho: float = DEFAULT_RHO
    max_iters: int = DEFAULT_MAX_ITERS
    residual_tol: float = 0.0

    def __post_init__(self):
        if not (self.rho > 0 and self.tau_h > 0 and self.tau_s > 0):
            raise ParameterError(
                f"rho, tau_h and tau_s must be positive "
                f"(got rho={self.rho}, tau_h={self.tau_h}, tau_s={self.tau_s})"
            )
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.residual_tol < 0:
            raise ParameterError(f"residual_tol must be >= 0, got {self.residual_tol}")


@dataclass(frozen=True)
class AdmmState:
    """ADMM iterate. ``ds`` caches ``D_R S D_T^H``; replace it (or set it to
    None) whenever ``s`` is replaced."""

    h: np.ndarray
    y: np.ndarray
    s: np.ndarray
    c: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    iteration: int = 0
    # cached D_R S D_T^H for the current s, and the singular values of h
    ds: np.ndarray | None = field(default=None, repr=False, compare=False)
    h_sv: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def zeros(cls, shape) -> "AdmmState":
        z = np.zeros(shape, dtype=np.complex128)
        return cls(z, z, z, z, z, z, 0, ds=z, h_sv=np.zeros(0))

    def synth(self, d_r, d_t) -> np.ndarray:
        """``D_R S D_T^H`` for the state's current S."""
        if self.ds is not None:
            return self.ds
        return d_r @ self.s @ d_t.conj().T


@dataclass
class SolverTrace:
    """Per-iteration residuals, objective and (optionally) NMSE against truth."""

    primal_residual_1: list = field(default_factory=list)
    primal_residual_2: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    nmse_db: list = field(default_factory=list)

    def __len__(self):
        return len(self.objective)

    def append(self, res1, res2, obj, nmse_db=None):
        self.primal_residual_1.append(float(res1))
        self.primal_residual_2.append(float(res2))
        self.objective.append(float(obj))
        self.nmse_db.append(None if nmse_db is None else float(nmse_db))

    def rows(self):
        for k in range(len(self)):
            yield (k + 1, self.primal_residual_1[k], self.primal_residual_2[k],
                   self.objective[k], self.nmse_db[k])

    def to_csv(self, path=None) -> str:
        """Write columns ``iter,res1,res2,objective,nmse_db``; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "res1", "res2", "objective", "nmse_db"])
        for it, r1, r2, obj, nm in self.rows():
            writer.writerow([it, _fmt(r1), _fmt(r2), _fmt(obj), _fmt(nm)])
        text = buf.getvalue()
        if path is not None:
            try:
                Path(path).write_text(text)
            except OSError as exc:
                raise OSError(f"cannot write trace to {path}: {exc}") from exc
        return text


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6g}"


def default_params(observed: ObservedChannel, norm: str = "spectral", rho: float = DEFAULT_RHO):
    """Parameter rule ``rho = 0.005``, ``tau_h = rho ||H_Omega||``,
    ``tau_s = 0.1 / (1 - 10 log10(noise_var))``.

    Returns ``(tau_h, tau_s, rho)``. `norm` selects ``'spectral'`` or
    ``'frobenius'`` for ``||H_Omega||``. A noiseless observation uses
    ``NOISELESS_NOISE_FLOOR`` in place of zero noise variance.
    """
    n = norms(observed.h_omega)
    if norm == "spectral":
        h_norm = n.spectral
    elif norm == "frobenius":
        h_norm = n.frobenius
    else:
        raise ParameterError(f"unknown norm {norm!r}")
    noise_var = max(observed.noise_var, NOISELESS_NOISE_FLOOR)
    denom = 1.0 - 10.0 * math.log10(noise_var)
    if denom <= 0:
        raise ParameterError(
            f"tau_s rule undefined for noise variance {observed.noise_var} (needs < 10^0.1)"
        )
    return rho * h_norm, 0.1 / denom, rho


def default_config(observed: ObservedChannel, max_iters: int = DEFAULT_MAX_ITERS,
                   norm: str = "spectral", residual_tol: float = 0.0, **overrides) -> AdmmConfig:
    rho = overrides.get("rho") or DEFAULT_RHO
    tau_h, tau_s, rho = default_params(observed, norm, rho)
    params = {"tau_h": tau_h, "tau_s": tau_s, "rho": rho}
    params.update({k: v for k, v in overrides.items() if v is not None})
    return AdmmConfig(max_iters=max_iters, residual_tol=residual_tol, **params)


def update_h(state: AdmmState, cfg: AdmmConfig) -> np.ndarray:
    """``H = SVT(Y - Z1/rho, tau_h/rho)``."""
    return svt_shrink(state.y - state.z1 / cfg.rho, cfg.tau_h / cfg.rho)


def update_y(state: AdmmState, observed: ObservedChannel, cfg: AdmmConfig, d_r, d_t,
             *, literal_dual_sign: bool = False) -> np.ndarray:
    """Minimise the augmented Lagrangian over Y given the new H.

    The masking operator is a 0/1 diagonal, so ``(A^H A + 2 rho I)^-1`` acts
    elementwise: divide by ``1 + 2 rho`` on the support and ``2 rho`` off it.

    The Z2 term enters with a minus sign, which is what minimising the
    Lagrangian gives. ``literal_dual_sign=True`` adds it instead; that
    variant does not converge and exists only for comparison.
    """
    rho = cfg.rho
    mask = observed.mask
    z2 = state.z2 if literal_dual_sign else -state.z2
    num = (state.z1 + rho * state.h + mask * observed.h_omega + z2
           + rho * state.c + rho * state.synth(d_r, d_t))
    return np.where(mask > 0, num / (1.0 + 2.0 * rho), num / (2.0 * rho))


def update_s(state: AdmmState, cfg: AdmmConfig, d_r, d_t) -> np.ndarray:
    v = d_r.conj().T @ (state.z2 / cfg.rho - state.c + state.y) @ d_t
    return soft_threshold_complex(v, cfg.tau_s / cfg.rho)


def update_c(state: AdmmState, cfg: AdmmConfig, d_r, d_t) -> np.ndarray:
    rho = cfg.rho
    return rho / (rho + 1.0) * (state.y - state.synth(d_r, d_t) + state.z2 / rho)


def update_duals(state: AdmmState, cfg: AdmmConfig, d_r, d_t):
    z1 = state.z1 + cfg.rho * (state.h - state.y)
    z2 = state.z2 + cfg.rho * (state.y - state.synth(d_r, d_t) - state.c)
    return z1, z2


def step(state: AdmmState, observed: ObservedChannel, cfg: AdmmConfig, d_r, d_t,
         *, literal_dual_sign: bool = False) -> AdmmState:
    """One full pass: H, Y, S, C, then both duals."""
    h, h_sv = svt_shrink(state.y - state.z1 / cfg.rho, cfg.tau_h / cfg.rho,
                         return_singular_values=True)
    st = replace(state, h=h, h_sv=h_sv)
    st = replace(st, y=update_y(st, observed, cfg, d_r, d_t, literal_dual_sign=literal_dual_sign))
    s = update_s(st, cfg, d_r, d_t)
    st = replace(st, s=s, ds=d_r @ s @ d_t.conj().T)
    st = replace(st, c=update_c(st, cfg, d_r, d_t))
    z1, z2 = update_duals(st, cfg, d_r, d_t)
    return replace(st, z1=z1, z2=z2, iteration=state.iteration + 1)


def residuals(state: AdmmState, d_r, d_t):
    """``(||H - Y||_F, ||Y - D_R S D_T^H - C||_F)``."""
    r1 = np.linalg.norm(state.h - state.y)
    r2 = np.linalg.norm(state.y - state.synth(d_r, d_t) - state.c)
    return float(r1), float(r2)


def objective(state: AdmmState, observed: ObservedChannel, cfg: AdmmConfig) -> float:
    if state.h_sv is not None:
        nuc = float(np.sum(state.h_sv))
    else:
        nuc = norms(state.h).nuclear
    fit = observed.mask * state.y - observed.h_omega
    return (cfg.tau_h * nuc + cfg.tau_s * split_l1(state.s)
            + 0.5 * np.linalg.norm(state.c) ** 2 + 0.5 * np.linalg.norm(fit) ** 2)


def iterate(observed: ObservedChannel, d_r, d_t, cfg: AdmmConfig, state: AdmmState | None = None,
            *, literal_dual_sign: bool = False):
    """Yield successive states for ``cfg.max_iters`` iterations (no early stop)."""
    if state is None:
        state = AdmmState.zeros(observed.shape)
    for _ in range(cfg.max_iters):
        try:
            state = step(state, observed, cfg, d_r, d_t, literal_dual_sign=literal_dual_sign)
        except NumericalError as exc:
            raise SolverError(f"ADMM failed at iteration {state.iteration + 1}: {exc}") from exc
        if not np.all(np.isfinite(state.y)):
            raise SolverError(f"ADMM produced non-finite iterates at iteration {state.iteration}")
        yield state


def solve(observed: ObservedChannel, d_r, d_t, cfg: AdmmConfig, truth=None,
          *, literal_dual_sign: bool = False, return_state: bool = False):
    """Run the ADMM estimator from the all-zero state.

    Parameters
    ----------
    observed : ObservedChannel
        Subsampled noisy channel and its mask.
    d_r, d_t : ndarray
        Unitary receive and transmit beamspace bases.
    cfg : AdmmConfig
    truth : ChannelRealization or ndarray, optional
        When given, the trace records NMSE (dB) against it at each iteration.

    Returns
    -------
    estimate : ndarray
        ``H`` after the last executed iteration.
    trace : SolverTrace
    state : AdmmState
        Only when `return_state` is set.
    """
    if observed.shape != (d_r.shape[0], d_t.shape[0]):
        raise ValueError(f"bases {d_r.shape}, {d_t.shape} do not match {observed.shape}")
    h_true = None if truth is None else np.asarray(getattr(truth, "h", truth))
    true_energy = None if h_true is None else np.linalg.norm(h_true) ** 2
    trace = SolverTrace()
    state = AdmmState.zeros(observed.shape)
    for state in iterate(observed, d_r, d_t, cfg, state, literal_dual_sign=literal_dual_sign):
        r1, r2 = residuals(state, d_r, d_t)
        nm = None
        if h_true is not None:
            err = np.linalg.norm(state.h - h_true) ** 2 / true_energy
            nm = 10 * np.log10(err) if err > 0 else float("-inf")
        trace.append(r1, r2, objective(state, observed, cfg), nm)
        if cfg.residual_tol > 0 and r1 < cfg.residual_tol and r2 < cfg.residual_tol:
            break
    if return_state:
        return state.h, trace, state
    return state.h, trace
