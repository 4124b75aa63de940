"""Command-line front end: ``wkexp expand | partition | verify``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import oracle, psint, wkrec
from .potential import PotentialError, PotentialSpec, harmonic, load_potential, quartic, ymqm
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4
MAX_ORDER = 8
BUILTINS = {"harmonic": harmonic, "ho": harmonic, "quartic": quartic, "ymqm": ymqm}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialSpec
    order: int = 2
    hbar: float = 1.0
    grid: psint.TGrid | None = None
    domain: psint.SpatialDomain = psint.SpatialDomain()
    basis_size: int | None = None
    omega: float | None = None
    out: Path | None = None
    seed: int = 0


def _resolve_potential(value: str | None) -> PotentialSpec:
    if value is None:
        raise ConfigError("--potential is required")
    if not Path(value).exists() and value in BUILTINS:
        return BUILTINS[value]()
    if not Path(value).exists() and not value.lstrip().startswith("{"):
        raise ConfigError(f"potential file {value!r} not found (built-ins: {', '.join(BUILTINS)})")
    try:
        return load_potential(value)
    except PotentialError as exc:
        raise ConfigError(f"{value}: {exc}") from None


def _parse_box(text: str | None, n: int) -> psint.SpatialDomain:
    if not text:
        return psint.SpatialDomain()
    try:
        widths = [float(w) for w in text.split(",")]
    except ValueError:
        raise ConfigError(f"--box expects comma-separated half-widths, got {text!r}") from None
    if len(widths) == 1:
        widths = widths * n
    if len(widths) != n or any(w <= 0 for w in widths):
        raise ConfigError(f"--box needs {n} positive half-widths")
    return psint.SpatialDomain.box(widths)


def build_config(args: argparse.Namespace, need_grid: bool = False) -> RunConfig:
    pot = _resolve_potential(args.potential)
    if not 0 <= args.order <= MAX_ORDER:
        raise ConfigError(f"--order must be between 0 and {MAX_ORDER}")
    if args.hbar <= 0:
        raise ConfigError("--hbar must be positive")
    grid = None
    if need_grid:
        if args.tsteps < 1:
            raise ConfigError("--tsteps must be at least 1")
        try:
            grid = psint.TGrid.make(args.tmin, args.tmax, args.tsteps, args.tscale)
        except ValueError as exc:
            raise ConfigError(f"t grid: {exc}") from None
    if args.basis_size is not None and args.basis_size < 2:
        raise ConfigError("--basis-size must be at least 2")
    if args.omega is not None and args.omega <= 0:
        raise ConfigError("--omega must be positive")
    return RunConfig(
        potential=pot, order=args.order, hbar=args.hbar, grid=grid,
        domain=_parse_box(args.box, pot.n), basis_size=args.basis_size, omega=args.omega,
        out=Path(args.out) if args.out else None, seed=args.seed,
    )


def _emit(text: str, out: Path | None, filename: str):
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / filename).write_text(text)


def cmd_expand(cfg: RunConfig) -> int:
    series = wkrec.wk_recursion(cfg.potential, cfg.order)
    summary = series.summary()
    lines = [f"potential {cfg.potential.fingerprint()} {cfg.potential.name} n={cfg.potential.n} K={cfg.order}"]
    for row in summary:
        lines.append(
            f"W{row['k']}: terms={row['terms']} deg_x={row['deg_x']} deg_p={row['deg_p']} "
            f"deg_t={row['deg_t']} p_parity={row['p_parity']}"
        )
    text = "\n".join(lines) + "\n"
    if cfg.out is None:
        sys.stdout.write(text)
        for k, w in enumerate(series.terms):
            sys.stdout.write(f"W{k} = {w}\n")
        return EXIT_OK
    cfg.out.mkdir(parents=True, exist_ok=True)
    for k, w in enumerate(series.terms):
        (cfg.out / f"W{k}.txt").write_text(w.serialize())
    (cfg.out / "summary.txt").write_text(text)
    (cfg.out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_partition(cfg: RunConfig) -> int:
    series = wkrec.wk_recursion(cfg.potential, cfg.order)
    z = psint.assemble_Z(series, cfg.hbar, cfg.grid, cfg.domain)
    exact = None
    if cfg.basis_size is not None:
        spec = oracle.solve(cfg.potential, cfg.basis_size, hbar=cfg.hbar, omega=cfg.omega)
        exact = oracle.z_exact(spec, np.asarray(cfg.grid)).Z
    _emit(z.to_csv(exact), cfg.out, "partition.csv")
    return EXIT_OK


def cmd_verify(case: str, seed: int = 0, out: Path | None = None) -> int:
    report = run_suite(case, seed)
    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", out, f"verify_{case}.json")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--potential", help="potential JSON file or built-in name (harmonic, quartic, ymqm)")
    parser.add_argument("--order", type=int, default=2, help=f"expansion order K (<= {MAX_ORDER})")
    parser.add_argument("--hbar", type=float, default=1.0)
    parser.add_argument("--tmin", type=float, default=0.1)
    parser.add_argument("--tmax", type=float, default=1.0)
    parser.add_argument("--tsteps", type=int, default=10)
    parser.add_argument("--tscale", choices=("linear", "log"), default="linear")
    parser.add_argument("--box", help="box half-widths wx,wy,... (default: full space)")
    parser.add_argument("--basis-size", type=int, help="oracle basis size per axis; enables Z_exact")
    parser.add_argument("--omega", type=float, help="oracle basis frequency (default: trace minimum)")
    parser.add_argument("--out", help="output directory (default: stdout)")
    parser.add_argument("--seed", type=int, default=0)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wkexp", description="Wigner-Kirkwood expansion of partition functions")
    parser.add_argument("--verify", choices=sorted(SUITES), help="run a verification suite and exit")
    parser.add_argument("--seed", type=int, default=0, dest="top_seed")
    parser.add_argument("--out", dest="top_out")
    sub = parser.add_subparsers(dest="command")
    _common(sub.add_parser("expand", help="compute W_0..W_K"))
    _common(sub.add_parser("partition", help="tabulate Z_k(t) and the hbar sum"))
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("case", choices=sorted(SUITES))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.verify:
            return cmd_verify(args.verify, args.top_seed, Path(args.top_out) if args.top_out else None)
        if args.command == "verify":
            return cmd_verify(args.case, args.seed, Path(args.out) if args.out else None)
        if args.command == "expand":
            return cmd_expand(build_config(args))
        if args.command == "partition":
            return cmd_partition(build_config(args, need_grid=True))
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except psint.NonIntegrable as exc:
        print(f"error: {exc}\nhint: restrict to a finite box with --box wx,wy,...", file=sys.stderr)
        return EXIT_NUMERICAL
    except (psint.ToleranceNotReached, oracle.TailBoundExceeded, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
