"""Command-line pipelines over the library modules.

Usage: ``cluster-gas <command> <config> [--set key=value ...] [--workers N]``

Commands: potential-check, groundstate, partfun, ideal-solve,
ideal-sweep-saha, sim-canonical, sim-partition, compare.  Each run writes its
artifacts plus a manifest.json (config hash, seed, versions, worker count)
into the configured output directory.  Outputs are byte-identical for a
fixed (config, seed, worker-count) triple.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
failure, 64 unknown command.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__, clustering, groundstate, ideal, partfun, saha, sampler
from .config import ConfigError, RunConfig, load_config
from .serialize import config_hash, dump_json

COMMANDS = (
    "potential-check",
    "groundstate",
    "partfun",
    "ideal-solve",
    "ideal-sweep-saha",
    "sim-canonical",
    "sim-partition",
    "compare",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

_NUMERICAL_ERRORS = (
    groundstate.OptimizationFailure,
    partfun.TableConstructionError,
    ideal.AmbiguousPhaseError,
    sampler.SeedingFailure,
    ArithmeticError,
    np.linalg.LinAlgError,
)


def _write_manifest(out_dir: Path, command: str, cfg: RunConfig, workers: int, outputs: list[str]):
    manifest = {
        "command": command,
        "config_hash": config_hash(cfg.flat),
        "seed": cfg.get("seed"),
        "workers": workers,
        "outputs": sorted(outputs),
        "versions": {
            "cluster_gas": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    dump_json(manifest, out_dir / "manifest.json")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_table(cfg: RunConfig, key: str = "ideal.table_path") -> partfun.ClusterFreeEnergyTable:
    path = cfg.require(key)
    if not os.path.exists(path):
        raise ConfigError(f"{key}: no such file {path!r}")
    return partfun.ClusterFreeEnergyTable.load_csv(path)


def _cmd_potential_check(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    pot = cfg.build_potential()
    from .potential import validate_potential

    rep = validate_potential(
        pot,
        resolution=float(cfg.get("potential.check_resolution", 1e-4)),
        dim=int(cfg.get("dim", 3)),
        seed=cfg.seed,
    )
    payload = {
        "potential": pot.name,
        "hard_core": pot.hard_core,
        "support": pot.support,
        "tail_delta": rep.tail_delta,
        "max_jump": rep.max_jump,
        "stability_constant": rep.stability_constant,
        "all_pass": rep.all_pass,
        "items": {name: {"status": item.status, "detail": item.detail, "value": item.value} for name, item in rep.items.items()},
    }
    dump_json(payload, out / "potential_report.json")
    return ["potential_report.json"]


def _cmd_groundstate(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    pot = cfg.build_potential()
    k_max = int(cfg.get("groundstate.k_max", 6))
    table = groundstate.build_table(
        pot,
        k_max=k_max,
        dim=cfg.dim,
        restarts=int(cfg.get("groundstate.restarts", 20)),
        iterations=int(cfg.get("groundstate.iterations", 400)),
        seed=cfg.seed,
    )
    table.save_csv(out / "groundstate.csv")
    outputs = ["groundstate.csv"]
    for k in sorted(table.witnesses):
        name = f"gs_k{k}.xyz"
        table.save_witness_xyz(k, out / name)
        outputs.append(name)
    fit = {
        "e_bulk": table.e_bulk,
        "e_bulk_residual": table.e_bulk_residual,
        "nu_star": table.nu_star,
        "nu_star_argmin": table.nu_star_argmin,
        "boundary_flag": table.boundary_flag,
    }
    dump_json(fit, out / "groundstate.json")
    outputs.append("groundstate.json")
    return outputs


def _cmd_partfun(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    pot = cfg.build_potential()
    table = partfun.build_table(
        pot,
        beta=cfg.beta,
        radius=cfg.radius,
        k_max=int(cfg.get("partfun.k_max", 5)),
        dim=cfg.dim,
        samples=int(cfg.get("partfun.samples", 50_000)),
        seed=cfg.seed,
        workers=workers,
    )
    table.save_csv(out / "table.csv")
    return ["table.csv"]


def _cmd_ideal_solve(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    table = _load_table(cfg)
    beta = float(cfg.get("beta", table.beta))
    sol = ideal.solve(table, beta, cfg.density())
    sol.save_json(out / "solution.json")
    outputs = ["solution.json"]
    if cfg.get("ideal.resample", False):
        env = ideal.resample_envelope(table, beta, cfg.density())
        dump_json(asdict(env), out / "solution_envelope.json")
        outputs.append("solution_envelope.json")
    return outputs


def _build_saha_provider(cfg: RunConfig):
    source = cfg.get("saha.source", "synthetic_exact")
    if source == "synthetic_exact":
        gs = groundstate.GroundStateTable.load_csv(cfg.require("saha.gs_path"))
        if gs.e_bulk is None:
            raise ConfigError("ground-state table lacks e_bulk; rerun the groundstate command")
        tail = None
        if cfg.get("saha.tail_amplitude") is not None:
            tail = partfun.TailModel(
                amplitude=float(cfg.get("saha.tail_amplitude")),
                exponent=float(cfg.get("saha.tail_exponent", 1.0 - 1.0 / gs.dim)),
            )
        return saha.synthetic_exact_provider(gs, tail=tail), gs
    if source == "tables":
        gs = groundstate.GroundStateTable.load_csv(cfg.require("saha.gs_path"))
        entries = cfg.require("saha.tables")
        tables = {float(b): partfun.ClusterFreeEnergyTable.load_csv(p) for b, p in entries}

        def provider(beta: float):
            if beta not in tables:
                raise KeyError(beta)
            return tables[beta]

        return provider, gs
    raise ConfigError(f"unknown saha.source {source!r}")


def _cmd_ideal_sweep_saha(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    provider, gs = _build_saha_provider(cfg)
    betas = cfg.require("saha.betas")
    nu = float(cfg.require("nu"))
    points = saha.sweep(provider, gs, nu, betas)
    saha.save_sweep_csv(points, out / "saha_sweep.csv")
    return ["saha_sweep.csv"]


def _cmd_sim_canonical(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    pot = cfg.build_potential()
    spec = sampler.CanonicalSpec(
        potential=pot,
        n=int(cfg.require("sampler.n")),
        dim=cfg.dim,
        beta=cfg.beta,
        radius=cfg.radius,
        rho=cfg.density(),
        sweeps=int(cfg.get("sampler.sweeps", 20_000)),
        burn_in_sweeps=int(cfg.get("sampler.burn_in", 2_000)),
        thinning=cfg.get("sampler.thinning"),
        seed=cfg.seed,
    )
    dist, diag = sampler.canonical_mcmc(spec)
    dist.save_csv(out / "empirical.csv")
    dump_json(
        {
            "acceptance": diag.acceptance,
            "steps": diag.steps,
            "seed": diag.seed,
            "energy_mean": diag.energy_mean,
            "energy_var": diag.energy_var,
        },
        out / "sim_diagnostics.json",
    )
    return ["empirical.csv", "sim_diagnostics.json"]


def _cmd_sim_partition(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    n = int(cfg.require("sampler.n"))
    kind = cfg.get("sampler.model", "ideal")
    volume = float(cfg.require("sampler.volume"))
    if kind == "ideal":
        table = _load_table(cfg, "sampler.table_path")
        model = sampler.PartitionModel.ideal_from_table(table, volume, n)
    elif kind == "groundstate":
        gs = groundstate.GroundStateTable.load_csv(cfg.require("sampler.gs_path"))
        energies = [gs.energies[k] for k in range(1, n + 1)]
        model = sampler.PartitionModel(kind="groundstate", n=n, beta=cfg.beta, energies=energies, volume=volume)
    else:
        raise ConfigError(f"unknown sampler.model {kind!r}")
    result = sampler.partition_mcmc(model, steps=int(cfg.get("sampler.steps", 100_000)), seed=cfg.seed)
    result.save_csv(out / "partition_means.csv")
    dump_json(
        {"acceptance": result.acceptance, "steps": result.steps, "seed": result.seed},
        out / "partition_diagnostics.json",
    )
    return ["partition_means.csv", "partition_diagnostics.json"]


def _cmd_compare(cfg: RunConfig, out: Path, workers: int) -> list[str]:
    emp = clustering.ClusterSizeDistribution.load_csv(cfg.require("compare.empirical"))
    sol = ideal.IdealSolution.load_json(cfg.require("compare.ideal"))
    metrics = ideal.comparison_report(emp, sol)
    dump_json(asdict(metrics), out / "compare.json")
    return ["compare.json"]


_HANDLERS = {
    "potential-check": _cmd_potential_check,
    "groundstate": _cmd_groundstate,
    "partfun": _cmd_partfun,
    "ideal-solve": _cmd_ideal_solve,
    "ideal-sweep-saha": _cmd_ideal_sweep_saha,
    "sim-canonical": _cmd_sim_canonical,
    "sim-partition": _cmd_sim_partition,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cluster-gas",
        description="Ideal-mixture cluster gas pipelines",
    )
    parser.add_argument("command", nargs="?", help="|".join(COMMANDS))
    parser.add_argument("config", nargs="?", help="dotted-key config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args(argv)

    if args.command is None or args.command not in _HANDLERS:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"unknown command {args.command!r}; expected one of {', '.join(COMMANDS)}\n")
        return EXIT_USAGE
    if args.config is None:
        parser.print_usage(sys.stderr)
        sys.stderr.write("missing config path\n")
        return EXIT_USAGE

    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("CLUSTER_GAS_WORKERS", "1"))
    if workers < 1:
        sys.stderr.write("--workers must be >= 1\n")
        return EXIT_CONFIG

    try:
        cfg = load_config(args.config, overrides=args.overrides)
    except (ConfigError, OSError, ValueError) as err:
        sys.stderr.write(f"config error: {err}\n")
        return EXIT_CONFIG

    out = _out_dir(cfg)
    try:
        outputs = _HANDLERS[args.command](cfg, out, workers)
    except ConfigError as err:
        sys.stderr.write(f"config error: {err}\n")
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as err:
        sys.stderr.write(f"numerical failure: {err}\n")
        return EXIT_NUMERICAL
    except RuntimeError as err:
        sys.stderr.write(f"numerical failure: {err}\n")
        return EXIT_NUMERICAL

    _write_manifest(out, args.command, cfg, workers, outputs)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
