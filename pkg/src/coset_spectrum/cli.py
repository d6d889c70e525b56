"""Command-line entry point: ``coset-spectrum <subcommand> ...``.

Errors are written to stderr as ``ERR:<code>:<message>``.  Exit codes: 0 on
success, 1 when a check fails or the input is rejected, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import io
from .design import design_greedy, design_m2, verify_bank
from .estimator import SensorBlockSeries, estimate_spectrum
from .ruler import (
    DomainError,
    RulerBank,
    are_non_overlapping,
    format_bank,
    is_circular_golomb,
    lower_bound_z,
    parse_bank,
    parse_banks,
    union_covers,
)
from .sim import config_from_dict, run_sweep, simulate

log = logging.getLogger("coset_spectrum")


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = 1):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"ERR:usage:{message}\n")


# -- bundled bank check --------------------------------------------------------

@dataclass
class RowCheck:
    n: int
    z: int
    expected_z: int
    golomb: list[bool]
    non_overlapping: bool
    missing: frozenset[int]

    @property
    def ok(self) -> bool:
        return all(self.golomb) and self.non_overlapping and not self.missing and self.z == self.expected_z

    def failure(self) -> str | None:
        if self.missing:
            return f"N={self.n}: uncovered distances {sorted(self.missing)}"
        for z, ok in enumerate(self.golomb):
            if not ok:
                return f"N={self.n}, z={z}: not a circular Golomb ruler"
        if not self.non_overlapping:
            return f"N={self.n}: rulers overlap"
        if self.z != self.expected_z:
            return f"N={self.n}: Z={self.z} but the bound is {self.expected_z}"
        return None


def bundled_table2() -> str:
    return resources.files("coset_spectrum").joinpath("data/table2.bank").read_text(encoding="utf-8")


def bundled_table1() -> dict:
    return json.loads(resources.files("coset_spectrum").joinpath("data/table1.json").read_text(encoding="utf-8"))


def check_row(bank: RulerBank) -> RowCheck:
    _, missing = union_covers(bank)
    return RowCheck(
        n=bank.period,
        z=bank.num_groups,
        expected_z=lower_bound_z(bank.period, bank.marks_per_pattern),
        golomb=[is_circular_golomb(p) for p in bank],
        non_overlapping=are_non_overlapping(bank) if bank.num_groups > 1 else True,
        missing=missing,
    )


def table2_check(text: str | None = None) -> list[RowCheck]:
    return [check_row(bank) for bank in parse_banks(text if text is not None else bundled_table2())]


# -- subcommands --------------------------------------------------------------

def _read_bank(path) -> RulerBank:
    try:
        return parse_bank(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError("io", f"cannot read bank {path}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_design(args) -> int:
    if args.n is None or args.m is None:
        raise CliError("usage", "design needs --n and --m", 2)
    if args.strategy == "m2":
        if args.m != 2:
            raise CliError("usage", "strategy m2 requires --m 2", 2)
        report = design_m2(args.n)
    else:
        report = design_greedy(args.n, args.m)
    text = format_bank(report.bank)
    if args.out:
        path = Path(args.out)
        if path.suffix != ".bank":
            path.mkdir(parents=True, exist_ok=True)
            path = path / f"bank_N{args.n}_M{args.m}.bank"
        path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    print(report.summary())
    return 0 if report.covered else 1


def cmd_verify(args) -> int:
    if not args.bank:
        raise CliError("usage", "verify needs --bank", 2)
    report = verify_bank(_read_bank(args.bank))
    print(report.summary())
    print(f"golomb_flags: {','.join('1' if g else '0' for g in report.per_pattern_golomb)}")
    if not report.covered:
        print(f"ERR:uncovered:{','.join(str(d) for d in sorted(report.missing))}", file=sys.stderr)
        return 1
    return 0


def cmd_estimate(args) -> int:
    if not (args.bank and args.samples and args.l):
        raise CliError("usage", "estimate needs --bank, --samples and --l/--blocks", 2)
    bank = _read_bank(args.bank)
    samples = io.read_samples(Path(args.samples))
    sensors = sorted(samples)
    if sensors != list(range(len(sensors))):
        raise CliError("input", f"sensor ids must be 0..S-1, got {sensors}")
    if len(sensors) % bank.num_groups:
        raise CliError("input", f"{len(sensors)} sensors cannot be split into {bank.num_groups} equal groups")
    p = args.p or len(sensors) // bank.num_groups
    if p * bank.num_groups != len(sensors):
        raise CliError("input", f"P={p} does not match {len(sensors)} sensors and Z={bank.num_groups}")
    blocks = [
        [SensorBlockSeries.from_sequence(samples[z * p + q], bank.period, args.l, group=z, sensor=q) for q in range(p)]
        for z in range(bank.num_groups)
    ]
    spectrum, rx, groups = estimate_spectrum(bank, blocks)
    out = _out_dir(args)
    io.write_group_correlations(out / "group_correlations.csv", groups, bank)
    io.write_autocorrelation(out / "autocorrelation.csv", rx)
    io.write_spectrum(out / "spectrum.csv", spectrum)
    _, negative = spectrum.real_view()
    if negative.any():
        log.warning("%d spectrum bins have negative real part", int(negative.sum()))
    print(f"wrote {out / 'spectrum.csv'}")
    return 0


def _load_config(args):
    data = bundled_table1() if not args.config else _read_json(args.config)
    bank = _read_bank(args.bank) if args.bank else None
    if bank is None and isinstance(data.get("bank"), str):
        bank = _read_bank(Path(args.config).parent / data["bank"] if args.config else data["bank"])
    data = {k: v for k, v in data.items() if k != "bank"}
    overrides = {"N": args.n, "M": args.m, "Z": args.z, "P": args.p, "L": args.l,
                 "rng_seed": args.seed, "runs": args.runs}
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data, bank)


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError("io", f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError("config", f"{path}: {exc}") from exc


def cmd_simulate(args) -> int:
    config = _load_config(args)
    result = simulate(config)
    out = _out_dir(args)
    io.write_nmse_results(out / "nmse_results.csv", [result])
    print(f"M={result.m} P={result.p} L={result.l} runs={result.runs} nmse={result.nmse:.6g}")
    return 0


def parse_grid(specs: list[str]) -> dict[str, list[int]]:
    grid: dict[str, list[int]] = {}
    for spec in specs:
        for part in spec.split(";"):
            if not part.strip():
                continue
            key, sep, values = part.partition("=")
            key = key.strip().lower()
            if not sep or key not in ("m", "p", "l"):
                raise CliError("usage", f"bad grid spec {part!r}; use m=3,11 / p=1,4 / l=64,256", 2)
            try:
                grid[key] = [int(v) for v in values.split(",") if v.strip()]
            except ValueError as exc:
                raise CliError("usage", f"bad grid values in {part!r}", 2) from exc
    return grid


def cmd_sweep(args) -> int:
    config = _load_config(args)
    grid = parse_grid(args.grid or [])
    results = run_sweep(config, grid.get("m"), grid.get("p"), grid.get("l"))
    out = _out_dir(args)
    io.write_nmse_results(out / "nmse_results.csv", results)
    for r in results:
        print(f"M={r.m} P={r.p} L={r.l} runs={r.runs} nmse={r.nmse:.6g}")
    return 0


def cmd_table2(args) -> int:
    text = Path(args.bank).read_text(encoding="utf-8") if args.bank else None
    rows = table2_check(text)
    for row in rows:
        print(f"N={row.n} Z={row.z} bound={row.expected_z} golomb={sum(row.golomb)}/{len(row.golomb)} "
              f"non_overlapping={str(row.non_overlapping).lower()} covered={str(not row.missing).lower()} "
              f"{'PASS' if row.ok else 'FAIL'}")
    for row in rows:
        if not row.ok:
            raise CliError("table2", row.failure())
    return 0


COMMANDS = {
    "design": cmd_design,
    "verify": cmd_verify,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "table2-check": cmd_table2,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coset-spectrum", description="Multi-coset ruler design and cooperative power spectrum estimation.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *names):
        helps = {
            "n": ("--n", dict(type=int, help="cosets per block N")),
            "m": ("--m", dict(type=int, help="active cosets per sensor M")),
            "z": ("--z", dict(type=int, help="number of sensor groups Z")),
            "p": ("--p", dict(type=int, help="sensors per group P")),
            "l": ("--l", dict(type=int, help="blocks (samples per coset) L")),
            "seed": ("--seed", dict(type=int, help="RNG seed")),
            "runs": ("--runs", dict(type=int, help="Monte-Carlo runs per grid point")),
            "bank": ("--bank", dict(help="bank file (Z=.. M=.. N=.. header + one pattern per line)")),
            "config": ("--config", dict(help="JSON simulation config (default: bundled six-user scenario)")),
            "samples": ("--samples", dict(help="CSV file or directory with sensor_id,sample_index,real,imag")),
            "out": ("--out", dict(help="output directory (design: file or directory)")),
        }
        for name in names:
            flag, kw = helps[name]
            p.add_argument(flag, **kw)

    p = sub.add_parser("design", help="design a ruler bank")
    common(p, "n", "m", "out")
    p.add_argument("--strategy", choices=["m2", "greedy"], default="greedy", help="construction (default greedy)")

    p = sub.add_parser("verify", help="verify a ruler bank")
    common(p, "bank")

    p = sub.add_parser("estimate", help="estimate the power spectrum from sample CSVs")
    common(p, "bank", "samples", "p", "out")
    p.add_argument("--l", "--blocks", dest="l", type=int, help="blocks per sensor L")

    for name, help_text in (("simulate", "run one Monte-Carlo configuration"),
                            ("sweep", "NMSE sweep over M/P/L")):
        p = sub.add_parser(name, help=help_text)
        common(p, "config", "bank", "n", "m", "z", "p", "l", "seed", "runs", "out")
        if name == "sweep":
            p.add_argument("--grid", action="append", help="axis values, e.g. m=3,11,19 (repeatable or ';'-joined)")

    p = sub.add_parser("table2-check", help="validate the bundled reference ruler banks")
    common(p, "bank")
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"ERR:{exc.code}:{exc}", file=sys.stderr)
        return exc.exit_code
    except DomainError as exc:
        print(f"ERR:domain:{exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERR:io:{exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())
