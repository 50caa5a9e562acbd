"""Seeded Monte Carlo sweeps over channel, sampling and estimator settings."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import admm, baselines
from .admm import ParameterError, SolverError
from .channel import ChannelConfig, ChannelRealization, dft_bases, generate_channel
from .linalg import NumericalError
from .metrics import ase, floor_db, nmse
from .sampling import ObservedChannel, generate_mask, noise_var_from_snr, simulate_training

log = logging.getLogger(__name__)

ALGORITHMS = ("admm", "svt", "omp", "perfect")
TRACE_ALGORITHMS = ("admm", "svt")
FIELDS = ("algorithm", "n_rx", "n_tx", "n_paths", "snr_db", "T", "trial",
          "nmse_db", "ase_bits", "wall_time_ms", "iterations_run")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n_rx: int = 64
    n_tx: int = 64
    n_paths_list: tuple = (2,)
    snr_db_list: tuple = (30.0,)
    training_len_list: tuple = (1000,)
    algorithms: tuple = ("admm", "svt", "omp")
    trials: int = 10
    master_seed: int = 0
    max_iters: int = 100
    angle_spread_deg: float = 50.0
    transmit_power: float = 1.0
    normalize_channel: bool = True
    # ADMM overrides; None keeps the default parameter rules
    rho: float | None = None
    tau_h: float | None = None
    tau_s: float | None = None
    tau_norm: str = "spectral"
    record_timing: bool = False
    jobs: int = 1

    def __post_init__(self):
        for name in ("n_paths_list", "snr_db_list", "training_len_list", "algorithms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n_rx < 1 or self.n_tx < 1:
            raise ConfigError(f"array sizes must be >= 1, got {self.n_rx}x{self.n_tx}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.master_seed < 0:
            raise ConfigError(f"master_seed must be >= 0, got {self.master_seed}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ConfigError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if not (self.n_paths_list and self.snr_db_list and self.training_len_list):
            raise ConfigError("n_paths_list, snr_db_list and training_len_list must be non-empty")
        total = self.n_rx * self.n_tx
        bad = [t for t in self.training_len_list if not 0 <= t <= total]
        if bad:
            raise ConfigError(f"training lengths {bad} outside [0, {total}]")
        if any(p < 1 for p in self.n_paths_list):
            raise ConfigError("path counts must be >= 1")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tau_norm not in ("spectral", "frobenius"):
            raise ConfigError(f"tau_norm must be 'spectral' or 'frobenius', got {self.tau_norm!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def grid(self):
        """Grid points ``(n_paths, snr_db, T)`` in enumeration order."""
        return list(itertools.product(self.n_paths_list, self.snr_db_list, self.training_len_list))

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        """Build from string or typed values, e.g. a parsed config file."""
        kwargs = {}
        for key, raw in values.items():
            if key not in _PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                kwargs[key] = _PARSERS[key](raw) if isinstance(raw, str) else raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
        return cls(**kwargs)


def _list_of(conv):
    def parse(text):
        return tuple(conv(x) for x in text.replace(",", " ").split())
    return parse


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "default") else float(text)


_PARSERS = {
    "n_rx": int, "n_tx": int,
    "n_paths_list": _list_of(int), "snr_db_list": _list_of(float),
    "training_len_list": _list_of(int), "algorithms": _list_of(str),
    "trials": int, "master_seed": int, "max_iters": int,
    "angle_spread_deg": float, "transmit_power": float,
    "normalize_channel": _bool, "rho": _opt_float, "tau_h": _opt_float,
    "tau_s": _opt_float, "tau_norm": str.strip, "record_timing": _bool, "jobs": int,
}


def load_config_file(path) -> dict:
    """Read a flat ``key = value`` file into typed values.

    Keys are `ExperimentConfig` field names; ``#`` starts a comment and list
    values are comma or space separated.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[experiment]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    parsed = {}
    for key, raw in parser["experiment"].items():
        if key not in _PARSERS:
            raise ConfigError(f"{path}: unknown config key {key!r}")
        try:
            parsed[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {key}: {raw!r} ({exc})") from exc
    return parsed


@dataclass
class ResultRow:
    algorithm: str
    n_rx: int
    n_tx: int
    n_paths: int
    snr_db: float
    T: int
    trial: int
    nmse_db: float
    ase_bits: float
    wall_time_ms: float | None
    iterations_run: int
    error: str | None = None

    def values(self):
        return [getattr(self, f) for f in FIELDS]


def trial_rngs(master_seed: int, grid_index: int, trial: int):
    """Independent channel, mask and noise generators for one trial."""
    seq = np.random.SeedSequence([master_seed, grid_index, trial])
    return [np.random.default_rng(s) for s in seq.spawn(3)]


def make_instance(cfg: ExperimentConfig, grid_index: int, trial: int):
    """Draw the ground-truth channel and its noisy subsampled observation."""
    n_paths, snr_db, t_len = cfg.grid()[grid_index]
    ch_rng, mask_rng, noise_rng = trial_rngs(cfg.master_seed, grid_index, trial)
    ch_cfg = ChannelConfig(cfg.n_rx, cfg.n_tx, n_paths, cfg.angle_spread_deg,
                           normalize=cfg.normalize_channel)
    truth = generate_channel(ch_cfg, ch_rng)
    pattern = generate_mask(cfg.n_rx, cfg.n_tx, t_len, mask_rng)
    noise_var = noise_var_from_snr(snr_db, cfg.transmit_power)
    observed = simulate_training(truth.h, pattern, cfg.transmit_power, noise_var, noise_rng)
    return truth, observed


def admm_config(cfg: ExperimentConfig, observed: ObservedChannel) -> admm.AdmmConfig:
    return admm.default_config(observed, max_iters=cfg.max_iters, norm=cfg.tau_norm,
                               rho=cfg.rho, tau_h=cfg.tau_h, tau_s=cfg.tau_s)


def estimate(algorithm: str, cfg: ExperimentConfig, truth: ChannelRealization,
             observed: ObservedChannel, d_r, d_t):
    """Run one estimator; returns ``(estimate, iterations_run)``."""
    if algorithm == "admm":
        est, trace = admm.solve(observed, d_r, d_t, admm_config(cfg, observed))
        return est, len(trace)
    if algorithm == "svt":
        svt_cfg = baselines.default_svt_config(observed, cfg.max_iters, cfg.tau_norm)
        return baselines.solve_svt(observed, svt_cfg), svt_cfg.max_iters
    if algorithm == "omp":
        est, support, _ = baselines.solve_omp(
            observed, d_r, d_t, baselines.OmpConfig(truth.n_paths), return_support=True)
        return est, len(support)
    if algorithm == "perfect":
        return truth.h.copy(), 0
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def run_trial(cfg: ExperimentConfig, grid_index: int, trial: int) -> list[ResultRow]:
    n_paths, snr_db, t_len = cfg.grid()[grid_index]
    truth, observed = make_instance(cfg, grid_index, trial)
    d_r, d_t = dft_bases(cfg.n_rx, cfg.n_tx)
    rows = []
    for alg in cfg.algorithms:
        start = time.perf_counter()
        try:
            est, iters = estimate(alg, cfg, truth, observed, d_r, d_t)
            lin, db = nmse(est, truth.h)
            nmse_db = floor_db(db)
            ase_bits = ase(truth.h, lin, observed.noise_var)
            error = None
        except (SolverError, ParameterError, NumericalError, ValueError) as exc:
            log.warning("%s failed at grid point %d trial %d: %s", alg, grid_index, trial, exc)
            nmse_db = ase_bits = float("nan")
            iters = 0
            error = f"{type(exc).__name__}: {exc}"
        elapsed = (time.perf_counter() - start) * 1e3 if cfg.record_timing else None
        rows.append(ResultRow(alg, cfg.n_rx, cfg.n_tx, n_paths, snr_db, t_len, trial,
                              nmse_db, ase_bits, elapsed, iters, error))
    return rows


def _run_task(args):
    return run_trial(*args)


def run_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """All rows for every (algorithm, grid point, trial), sorted in that order.

    Each trial draws from its own generator derived from
    ``(master_seed, grid_index, trial)``, so results do not depend on
    ``cfg.jobs`` or on execution order.
    """
    tasks = [(cfg, g, t) for g in range(len(cfg.grid())) for t in range(cfg.trials)]
    rows: list[ResultRow] = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for k, chunk in enumerate(pool.map(_run_task, tasks), 1):
                rows.extend(chunk)
                log.info("completed %d/%d trials", k, len(tasks))
    else:
        for k, task in enumerate(tasks, 1):
            rows.extend(_run_task(task))
            log.info("completed %d/%d trials", k, len(tasks))
    # tasks come back in (grid point, trial) order; a stable sort keeps it
    alg_index = {a: i for i, a in enumerate(cfg.algorithms)}
    rows.sort(key=lambda r: alg_index[r.algorithm])
    return rows


def run_convergence(cfg: ExperimentConfig, grid_index: int = 0, trial: int = 0) -> dict:
    """Per-iteration traces (with NMSE against truth) for one representative draw.

    Returns ``{algorithm: SolverTrace}`` for the selected ADMM/SVT solvers.
    """
    algs = [a for a in cfg.algorithms if a in TRACE_ALGORITHMS]
    if not algs:
        raise ConfigError(f"convergence needs at least one of {TRACE_ALGORITHMS}")
    truth, observed = make_instance(cfg, grid_index, trial)
    d_r, d_t = dft_bases(cfg.n_rx, cfg.n_tx)
    traces = {}
    for alg in algs:
        if alg == "admm":
            _, traces[alg] = admm.solve(observed, d_r, d_t, admm_config(cfg, observed), truth)
        else:
            svt_cfg = baselines.default_svt_config(observed, cfg.max_iters, cfg.tau_norm)
            _, traces[alg] = baselines.solve_svt(observed, svt_cfg, truth, return_trace=True)
    return traces


def summarize(rows) -> list[dict]:
    """Mean NMSE (average of per-trial dB values) and mean ASE per algorithm and grid point."""
    groups: dict = {}
    for r in rows:
        key = (r.algorithm, r.n_paths, r.snr_db, r.T)
        groups.setdefault(key, []).append(r)
    out = []
    for (alg, n_paths, snr_db, t_len), rs in groups.items():
        ok = [r for r in rs if r.error is None]
        out.append({
            "algorithm": alg, "n_paths": n_paths, "snr_db": snr_db, "T": t_len,
            "trials": len(ok), "failures": len(rs) - len(ok),
            "mean_nmse_db": float(np.mean([r.nmse_db for r in ok])) if ok else float("nan"),
            "mean_ase_bits": float(np.mean([r.ase_bits for r in ok])) if ok else float("nan"),
        })
    return out


def _round6(x):
    if isinstance(x, float):
        if math.isnan(x):
            return None
        return float(f"{x:.6g}")
    return x


def _csv_cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else f"{x:.6g}"
    return str(x)


def format_rows(rows, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in rows:
            writer.writerow([_csv_cell(v) for v in r.values()])
        return buf.getvalue()
    if fmt == "json":
        objs = []
        for r in rows:
            obj = {f: _round6(v) for f, v in zip(FIELDS, r.values())}
            if r.error is not None:
                obj["error"] = r.error
            objs.append(obj)
        return json.dumps(objs, indent=1) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}")


def emit(rows, path, fmt: str = "csv") -> None:
    """Write rows as CSV (fixed header) or a JSON array of objects."""
    text = format_rows(rows, fmt)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_rows(path, fmt: str = "csv") -> list[ResultRow]:
    """Parse rows written by `emit`."""
    text = Path(path).read_text()
    if fmt == "json":
        records = json.loads(text)
    else:
        records = list(csv.DictReader(io.StringIO(text)))
    types = {f.name: f.type for f in dataclasses.fields(ResultRow)}
    rows = []
    for rec in records:
        kw = {}
        for f in FIELDS:
            v = rec.get(f)
            if v in ("", None):
                kw[f] = None if f == "wall_time_ms" else float("nan")
            elif types[f] in ("int",):
                kw[f] = int(v)
            elif f == "algorithm":
                kw[f] = v
            else:
                kw[f] = float(v)
        rows.append(ResultRow(**kw, error=rec.get("error")))
    return rows
