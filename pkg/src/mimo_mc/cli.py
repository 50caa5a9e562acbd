"""Command-line entry point: ``mimo-mc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .channel import ChannelConfig, generate_channel
from .harness import ConfigError, ExperimentConfig
from .sampling import generate_mask, noise_var_from_snr, simulate_training

log = logging.getLogger("mimo_mc")

# Defaults per subcommand; a config file overrides these, CLI flags override both.
PRESETS = {
    "sweep-snr": {"snr_db_list": (0, 5, 10, 15, 20, 25, 30),
                  "training_len_list": (500, 1000, 2000)},
    "sweep-t": {"training_len_list": (300, 500, 1000, 1500, 2000)},
    "sweep-paths": {"n_paths_list": (1, 2, 4, 6, 8), "training_len_list": (2000,)},
    "convergence": {"algorithms": ("admm", "svt"), "training_len_list": (1000,), "trials": 1},
}


def _ints(text):
    return tuple(int(x) for x in text.replace(",", " ").split())


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _names(text):
    return tuple(x for x in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value experiment file")
    common.add_argument("--out", type=Path, help="output path (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--algorithms", type=_names, help="comma list from admm,svt,omp,perfect")
    common.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    common.add_argument("--trials", type=int)
    common.add_argument("--n-rx", type=int, dest="n_rx")
    common.add_argument("--n-tx", type=int, dest="n_tx")
    common.add_argument("--paths", type=_ints, dest="n_paths_list", help="path counts N_p")
    common.add_argument("--snr", type=_floats, dest="snr_db_list", help="transmit SNRs in dB")
    common.add_argument("--T", type=_ints, dest="training_len_list", help="training lengths")
    common.add_argument("--max-iters", type=int, dest="max_iters")
    common.add_argument("--rho", type=float)
    common.add_argument("--tau-h", type=float, dest="tau_h")
    common.add_argument("--tau-s", type=float, dest="tau_s")
    common.add_argument("--tau-norm", choices=("spectral", "frobenius"), dest="tau_norm")
    common.add_argument("--jobs", type=int)
    common.add_argument("--timing", action="store_const", const=True, dest="record_timing",
                        help="record wall-clock time per solve (output no longer reproducible)")
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        prog="mimo-mc",
        description="mmWave MIMO channel estimation by matrix completion: Monte Carlo sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-snr", parents=[common], help="NMSE/ASE versus transmit SNR")
    sub.add_parser("sweep-t", parents=[common], help="NMSE/ASE versus training length")
    sub.add_parser("sweep-paths", parents=[common], help="NMSE/ASE versus number of paths")
    conv = sub.add_parser("convergence", parents=[common],
                          help="per-iteration trace for one representative draw")
    conv.add_argument("--trial", type=int, default=0, help="trial index of the draw")
    gen = sub.add_parser("generate", parents=[common],
                         help="dump a channel realization (and observation) as JSON")
    gen.add_argument("--no-observation", action="store_true")
    return parser


_OVERRIDE_KEYS = ("algorithms", "master_seed", "trials", "n_rx", "n_tx", "n_paths_list",
                  "snr_db_list", "training_len_list", "max_iters", "rho", "tau_h", "tau_s",
                  "tau_norm", "jobs", "record_timing")


def resolve_config(args) -> ExperimentConfig:
    values: dict = dict(PRESETS.get(args.command, {}))
    if args.config is not None:
        values.update(harness.load_config_file(args.config))
    for key in _OVERRIDE_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return ExperimentConfig.from_mapping(values)


def _write(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            out.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc}") from exc


def _print_summary(rows):
    for s in harness.summarize(rows):
        log.info("%-7s Np=%-2d SNR=%5.1f dB T=%-5d  NMSE %8.2f dB  ASE %7.3f b/s/Hz  (%d ok, %d failed)",
                 s["algorithm"], s["n_paths"], s["snr_db"], s["T"], s["mean_nmse_db"],
                 s["mean_ase_bits"], s["trials"], s["failures"])


def _generate(cfg: ExperimentConfig, args) -> str:
    seed = cfg.master_seed
    ch_rng, mask_rng, noise_rng = harness.trial_rngs(seed, 0, 0)
    ch_cfg = ChannelConfig(cfg.n_rx, cfg.n_tx, cfg.n_paths_list[0], cfg.angle_spread_deg,
                           rng_seed=seed, normalize=cfg.normalize_channel)
    real = generate_channel(ch_cfg, ch_rng)
    record = {"channel": real.to_record()}
    if not args.no_observation:
        pattern = generate_mask(cfg.n_rx, cfg.n_tx, cfg.training_len_list[0], mask_rng)
        noise_var = noise_var_from_snr(cfg.snr_db_list[0], cfg.transmit_power)
        obs = simulate_training(real.h, pattern, cfg.transmit_power, noise_var, noise_rng)
        record["observation"] = obs.to_record()
    return json.dumps(record, indent=1) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        if args.command == "generate":
            _write(_generate(cfg, args), args.out)
        elif args.command == "convergence":
            traces = harness.run_convergence(cfg, 0, args.trial)
            if len(traces) == 1 or args.out is None:
                for alg, trace in traces.items():
                    if args.out is None:
                        sys.stdout.write(f"# {alg}\n")
                    _write(trace.to_csv(), args.out)
            else:
                for alg, trace in traces.items():
                    path = args.out.with_name(f"{args.out.stem}_{alg}{args.out.suffix}")
                    trace.to_csv(path)
                    log.info("wrote %s", path)
        else:
            rows = harness.run_sweep(cfg)
            _write(harness.format_rows(rows, args.format), args.out)
            _print_summary(rows)
    except ConfigError as exc:
        print(f"mimo-mc: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mimo-mc: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
