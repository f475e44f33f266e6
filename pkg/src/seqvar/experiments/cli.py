"""Command line entry point: ``seqvar <subcommand> [--config PATH] [--out PATH] ...``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .. import limit as L
from .. import posterior as P
from ..errors import ConfigError, NumericalError, UsageError
from ..estimators import limit_params
from ..model import ModelParams, generate_dataset, suff_stats
from ..priors import MeanPrior
from . import csvio, runners
from .config import Config, load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_SEED_SECTION = {"bench": "bench", "bvm": "bvm", "inconsistency": "inconsistency", "contraction": "contraction",
                 "density": "density", "sample-limit": "sample_limit"}
_REPS_SECTION = {"bench": "bench", "bvm": "bvm", "inconsistency": "inconsistency", "contraction": "contraction"}


def _apply_overrides(cfg: Config, args):
    for flag, table in (("seed", _SEED_SECTION), ("reps", _REPS_SECTION)):
        val = getattr(args, flag)
        if val is None:
            continue
        if args.command not in table:
            raise ConfigError(f"--{flag} does not apply to {args.command}")
        if val < (2 if flag == "reps" and args.command == "bench" else 0 if flag == "seed" else 1):
            raise ConfigError(f"--{flag} value {val} is out of range")
        sec = table[args.command]
        setattr(cfg, sec, dataclasses.replace(getattr(cfg, sec), **{flag: val}))
    return cfg


def _cmd_bench(cfg, args):
    res = runners.run_table1_bench(cfg, args.workers)
    csvio.write_csv(res, args.out)


def _cmd_bvm(cfg, args):
    csvio.write_rows(args.out, runners.BVM_HEADER, runners.run_bvm_experiment(cfg, args.workers))


def _cmd_inconsistency(cfg, args):
    rows = runners.run_inconsistency_experiment(cfg, args.workers)
    csvio.write_rows(args.out, runners.INCONSISTENCY_HEADER, rows)


def _cmd_contraction(cfg, args):
    csvio.write_rows(args.out, runners.CONTRACTION_HEADER, runners.run_contraction_experiment(cfg, args.workers))


def _cmd_bias(cfg, args):
    csvio.write_rows(args.out, runners.BIAS_HEADER, runners.run_gaussian_bias_sweep(cfg, args.workers))


def _stats_for(cfg, n, mu, seed):
    prm = ModelParams.constant_mean(cfg.model.alpha, n, cfg.model.sigma0_sq, mu)
    d = generate_dataset(prm, seed, 0)
    return d, suff_stats(d), prm


def _plug(cfg, st, prm, mode):
    oracle = (cfg.model.sigma0_sq, prm.mu_bar_sq) if mode == "oracle" else None
    return limit_params(st, mode, oracle)


DENSITY_KINDS = ("mixture", "gaussian", "iid", "improper", "limit", "gauss_limit")


def _cmd_density(cfg, args):
    s = cfg.density
    d, st, prm = _stats_for(cfg, s.n, s.mu, s.seed)
    pi = cfg.variance_prior()
    if s.kind == "mixture":
        pg = P.posterior_grid_mixture(st, cfg.hyperprior(), pi)
    elif s.kind == "gaussian":
        pg = P.posterior_grid_gaussian(st, s.theta_sq, pi)
    elif s.kind == "iid":
        pg = P.posterior_grid_iid(d, cfg.mean_prior(), pi)
    elif s.kind == "improper":
        pg = P.posterior_grid_iid(d, MeanPrior.uniform_improper(), pi)
    elif s.kind in ("limit", "gauss_limit"):
        pg = L.limit_grid(_plug(cfg, st, prm, s.plug_mode), gaussian_only=s.kind == "gauss_limit")
    else:
        raise ConfigError(f"[density] kind must be one of {DENSITY_KINDS}, got {s.kind!r}")
    rows = [{"sigma_sq": float(g), "log_density": float(v), "weight": float(w)}
            for g, v, w in zip(pg.grid, pg.log_density, pg.weights)]
    csvio.write_rows(args.out, ["sigma_sq", "log_density", "weight"], rows)


def _cmd_sample(cfg, args):
    s = cfg.sample_limit
    _, st, prm = _stats_for(cfg, s.n, s.mu, s.seed)
    res = L.sample_limit(_plug(cfg, st, prm, s.plug_mode), s.count, s.seed)
    comments = [f"seed={res.seed} acceptance_rate={res.acceptance_rate:.17g} proposals={res.proposals}"]
    csvio.write_rows(args.out, ["sigma_sq"], [{"sigma_sq": float(x)} for x in res.samples], comments)


COMMANDS = {
    "bench": (_cmd_bench, "estimator MSE table over (n, t)"),
    "bvm": (_cmd_bvm, "TV distance between the mixture posterior and its limits"),
    "inconsistency": (_cmd_inconsistency, "posterior mass near sigma0^2 under an i.i.d. prior"),
    "contraction": (_cmd_contraction, "mixture posterior mass outside shrinking balls"),
    "bias-sweep": (_cmd_bias, "Gaussian-prior stationary point bias on a (theta^2, mu^2) grid"),
    "density": (_cmd_density, "dump a posterior or limit density grid"),
    "sample-limit": (_cmd_sample, "rejection samples from the limit density"),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="seqvar", description="Variance estimation in the Gaussian sequence model.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="INI config file; omitted keys keep their defaults")
        p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
        p.add_argument("--seed", type=int, help="override the seed of this subcommand's section")
        p.add_argument("--reps", type=int, help="override the replication count")
        p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on this)")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = load_config(args.config) if args.config else Config()
        cfg = _apply_overrides(cfg, args)
        COMMANDS[args.command][0](cfg, args)
    except (ConfigError, UsageError) as exc:
        print(f"seqvar: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"seqvar: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
