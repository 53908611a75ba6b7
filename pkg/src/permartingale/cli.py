"""Command-line front end.

Subcommands
-----------
verify-martingale   exhaustive conditional-expectation check of one kind
check-inequality    exact or Monte Carlo check of one inequality id
moments             formula-versus-oracle moment table
dump-matrices       transition matrices and inverse products
sweep               batch of inequality checks from a JSON spec file

Exit codes: 0 when every requested check passed; 1 when at least one
check failed, was inconclusive, or a sweep row errored; 2 on usage,
input, or file errors.

Output is deterministic for fixed flags and seed: JSON is emitted with
sorted keys, exact scalars as "p/q" strings, and floats in shortest
round-trip form.  The environment variable PERMARTINGALE_SEED supplies
a default seed where --seed is omitted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from fractions import Fraction
from typing import Sequence

from .construction import (
    Basis,
    build_transition_system,
    matrix_as_strings,
)
from .errors import Error, InvalidInputError, coerce_enum
from .inequalities import (
    InequalityId,
    InequalityReport,
    VerifyMode,
    verify,
)
from .martingales import MartingaleKind, check_martingale, make_spec
from .moments import moment_report
from .population import (
    load_population,
    make_population,
    random_centered_population,
)
from .rationals import format_rational, parse_rational, parse_scalar

_CSV_REPORT_FIELDS = ("id", "n", "mode", "lhs", "rhs", "holds", "seed", "samples")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permartingale",
        description=(
            "Martingales from sampling without replacement: exact and "
            "Monte Carlo verification of permutation maximal inequalities."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format",
        choices=("json", "csv", "text"),
        default="json",
        help="output format (default json)",
    )
    common.add_argument("--output", metavar="PATH", help="write output to a file")
    common.add_argument(
        "--cutoff",
        type=int,
        default=None,
        metavar="N",
        help="exact-enumeration size cutoff (default 10, hard maximum 12)",
    )

    vm = sub.add_parser(
        "verify-martingale",
        parents=[common],
        help="exhaustively check the martingale property of one kind",
    )
    vm.add_argument(
        "--kind", required=True, choices=tuple(k.value for k in MartingaleKind)
    )
    vm.add_argument("--population", required=True, metavar="FILE")
    vm.add_argument(
        "--multipliers",
        metavar="FILE",
        help="one multiplier per line (kind 'weighted' only)",
    )
    vm.set_defaults(handler=_cmd_verify_martingale)

    ci = sub.add_parser(
        "check-inequality",
        parents=[common],
        help="check one permutation inequality exactly or by Monte Carlo",
    )
    ci.add_argument(
        "--id", required=True, choices=tuple(i.value for i in InequalityId)
    )
    ci.add_argument("--population", metavar="FILE")
    ci.add_argument("--bridge-m", type=int, dest="bridge_m", metavar="M")
    ci.add_argument("--weights", metavar="FILE")
    ci.add_argument("--mode", required=True, choices=("exact", "mc"))
    ci.add_argument("--samples", type=int, metavar="N")
    ci.add_argument("--seed", type=int, metavar="S")
    ci.set_defaults(handler=_cmd_check_inequality)

    mo = sub.add_parser(
        "moments",
        parents=[common],
        help="print the moment formula-versus-oracle table",
    )
    mo.add_argument("--population", required=True, metavar="FILE")
    mo.add_argument(
        "--partial-sum-size",
        type=int,
        dest="partial_sum_size",
        metavar="M",
        help="prefix length for the partial-sum second moment (default n//2)",
    )
    mo.set_defaults(handler=_cmd_moments)

    dm = sub.add_parser(
        "dump-matrices",
        parents=[common],
        help="dump transition matrices and inverse products",
    )
    dm.add_argument("--basis", required=True, choices=tuple(b.value for b in Basis))
    dm.add_argument("--population", metavar="FILE")
    dm.add_argument("--n", type=int, metavar="N")
    dm.add_argument("--total", metavar="P/Q")
    dm.add_argument("--square-sum", dest="square_sum", metavar="P/Q")
    dm.add_argument("--multipliers", metavar="FILE")
    dm.set_defaults(handler=_cmd_dump_matrices)

    sw = sub.add_parser(
        "sweep",
        parents=[common],
        help="run a batch of inequality checks from a JSON spec file",
    )
    sw.add_argument("specfile", metavar="SPECFILE")
    sw.add_argument(
        "--seed",
        type=int,
        metavar="S",
        help="master seed for random rows and Monte Carlo defaults",
    )
    sw.set_defaults(handler=_cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return args.handler(args)
    except Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _csv_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def _report_csv_row(rd: dict) -> list:
    return [_csv_cell(rd[field]) for field in _CSV_REPORT_FIELDS]


def _default_seed(explicit: int | None) -> int | None:
    if explicit is not None:
        return explicit
    env = os.environ.get("PERMARTINGALE_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise InvalidInputError(
            f"PERMARTINGALE_SEED must be an integer, got {env!r}"
        ) from None


def _read_scalars(path: str, lenient: bool = False) -> tuple[Fraction, ...]:
    """One scalar per line; '#' comments and blank lines ignored."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read scalar file {path}: {exc}") from None
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_scalar(line, lenient=lenient))
        except InvalidInputError as exc:
            raise InvalidInputError(f"{path}, line {lineno}: {exc}") from None
    return tuple(out)


def _cmd_verify_martingale(args) -> int:
    if args.format == "csv":
        raise InvalidInputError("verify-martingale does not support csv output")
    pop = load_population(args.population)
    multipliers = (
        _read_scalars(args.multipliers) if args.multipliers is not None else None
    )
    spec = make_spec(args.kind, pop, multipliers)
    check = check_martingale(spec, cutoff=args.cutoff)
    payload = {
        "command": "verify-martingale",
        "kind": spec.kind.value,
        "n": pop.n,
        "population": [format_rational(v) for v in pop.values],
        "multipliers": (
            None
            if spec.multipliers is None
            else [format_rational(w) for w in spec.multipliers]
        ),
    }
    payload.update(check.to_dict())
    if args.format == "json":
        _emit(_json_text(payload), args.output)
    else:
        lines = [
            f"kind: {spec.kind.value}",
            f"n: {pop.n}",
            f"holds: {'yes' if check.holds else 'no'}",
            f"states checked: {check.states_checked}",
        ]
        if check.worst_history is not None:
            w = check.worst_history.to_dict()
            lines.append(
                f"violation at k={w['k']} after prefix "
                f"({', '.join(w['prefix'])}): value {w['value']}, "
                f"conditional mean {w['conditional_mean']}"
            )
        _emit("\n".join(lines) + "\n", args.output)
    return 0 if check.holds else 1


def _report_text_lines(rd: dict) -> list[str]:
    lines = [
        f"id: {rd['id']}",
        f"mode: {rd['mode']}",
        f"n: {rd['n']}",
        f"lhs: {rd['lhs']}",
        f"rhs: {rd['rhs']}",
        f"status: {rd['status']}",
    ]
    if rd["mode"] == "mc":
        lines.insert(5, f"stderr: {rd['stderr']}")
        lines.insert(6, f"samples: {rd['samples']}")
        lines.insert(7, f"seed: {rd['seed']}")
    return lines


def _cmd_check_inequality(args) -> int:
    mode = VerifyMode(args.mode)
    lenient = mode is VerifyMode.MONTE_CARLO
    pop = (
        load_population(args.population, lenient=lenient)
        if args.population is not None
        else None
    )
    weights = (
        _read_scalars(args.weights, lenient=lenient)
        if args.weights is not None
        else None
    )
    seed = _default_seed(args.seed) if mode is VerifyMode.MONTE_CARLO else args.seed
    report = verify(
        args.id,
        population=pop,
        weights=weights,
        bridge_m=args.bridge_m,
        mode=mode,
        samples=args.samples,
        seed=seed,
        cutoff=args.cutoff,
    )
    rd = report.to_dict()
    if args.format == "json":
        payload = {"command": "check-inequality"}
        payload.update(rd)
        _emit(_json_text(payload), args.output)
    elif args.format == "csv":
        _emit(_csv_text(_CSV_REPORT_FIELDS, [_report_csv_row(rd)]), args.output)
    else:
        _emit("\n".join(_report_text_lines(rd)) + "\n", args.output)
    return 0 if report.holds else 1


def _cmd_moments(args) -> int:
    pop = load_population(args.population)
    rows = moment_report(
        pop, partial_sum_size=args.partial_sum_size, cutoff=args.cutoff
    )
    all_equal = all(r.equal for r in rows)
    if args.format == "json":
        payload = {
            "command": "moments",
            "n": pop.n,
            "population": [format_rational(v) for v in pop.values],
            "rows": [r.to_dict() for r in rows],
            "all_equal": all_equal,
        }
        _emit(_json_text(payload), args.output)
    elif args.format == "csv":
        _emit(
            _csv_text(
                ("name", "formula", "oracle", "equal"),
                [
                    [
                        r.name,
                        format_rational(r.formula),
                        format_rational(r.oracle),
                        _csv_cell(r.equal),
                    ]
                    for r in rows
                ],
            ),
            args.output,
        )
    else:
        width = max(len(r.name) for r in rows)
        lines = [
            f"{r.name:<{width}}  formula {format_rational(r.formula)}"
            f"  oracle {format_rational(r.oracle)}"
            f"  {'ok' if r.equal else 'MISMATCH'}"
            for r in rows
        ]
        lines.append(f"all equal: {'yes' if all_equal else 'no'}")
        _emit("\n".join(lines) + "\n", args.output)
    return 0 if all_equal else 1


def _cmd_dump_matrices(args) -> int:
    if args.format == "csv":
        raise InvalidInputError("dump-matrices does not support csv output")
    basis = Basis(args.basis)
    multipliers = (
        _read_scalars(args.multipliers) if args.multipliers is not None else None
    )
    if args.population is not None:
        if args.n is not None or args.total is not None or args.square_sum is not None:
            raise InvalidInputError(
                "pass either --population or explicit --n/--total/--square-sum"
            )
        pop = load_population(args.population)
        system = build_transition_system(
            basis, population=pop, multipliers=multipliers
        )
        total: Fraction | None = pop.total
        square_sum: Fraction | None = pop.square_sum
    elif basis is Basis.QUADRATIC:
        if args.n is None or args.total is None or args.square_sum is None:
            raise InvalidInputError(
                "the quadratic basis needs --population or all of "
                "--n, --total, --square-sum"
            )
        total = parse_rational(args.total)
        square_sum = parse_rational(args.square_sum)
        system = build_transition_system(
            basis, n=args.n, total=total, square_sum=square_sum
        )
    else:
        if args.n is None:
            raise InvalidInputError(
                "the weighted basis needs --population or --n with --multipliers"
            )
        if args.total is not None or args.square_sum is not None:
            raise InvalidInputError(
                "the weighted matrices do not involve --total/--square-sum"
            )
        total = None
        square_sum = None
        system = build_transition_system(
            basis,
            n=args.n,
            total=0,
            square_sum=0,
            multipliers=multipliers,
        )
    transitions = [
        matrix_as_strings(system.step_matrix(k))
        for k in range(0, system.max_step_state + 1)
    ]
    products = [
        matrix_as_strings(system.inverse_product(k))
        for k in range(1, system.max_product_index + 1)
    ]
    payload = {
        "command": "dump-matrices",
        "basis": basis.value,
        "n": system.n,
        "total": None if total is None else format_rational(total),
        "square_sum": None if square_sum is None else format_rational(square_sum),
        "multipliers": (
            None
            if system.multipliers is None
            else [format_rational(w) for w in system.multipliers]
        ),
        # transitions[k] maps the state after k draws to the expected
        # state after k+1 draws; inverse_products[k-1] is the product of
        # the first k inverted step matrices
        "transitions_first_state": 0,
        "transitions": transitions,
        "inverse_products_first_index": 1,
        "inverse_products": products,
    }
    if args.format == "json":
        _emit(_json_text(payload), args.output)
    else:
        lines = [f"basis: {basis.value}", f"n: {system.n}"]
        for k, mat in enumerate(transitions):
            lines.append(f"step matrix after {k} draws:")
            lines.extend("  [" + "  ".join(row) + "]" for row in mat)
        for k, mat in enumerate(products, start=1):
            lines.append(f"inverse product through step {k}:")
            lines.extend("  [" + "  ".join(row) + "]" for row in mat)
        _emit("\n".join(lines) + "\n", args.output)
    return 0


_SWEEP_ROW_KEYS = frozenset(
    {
        "id",
        "mode",
        "population",
        "population_file",
        "random",
        "bridge_m",
        "weights",
        "weights_file",
        "samples",
        "seed",
        "cutoff",
    }
)
_SWEEP_RANDOM_KEYS = frozenset({"n", "seed", "max_numerator", "max_denominator"})


def _sweep_population(row: dict, index: int, master_seed: int):
    sources = [
        k for k in ("population", "population_file", "random", "bridge_m") if k in row
    ]
    if len(sources) > 1:
        raise InvalidInputError(
            f"row {index}: more than one population source: {sources}"
        )
    if "population" in row:
        values = row["population"]
        if not isinstance(values, list):
            raise InvalidInputError(f"row {index}: 'population' must be a list")
        return make_population(values)
    if "population_file" in row:
        return load_population(row["population_file"])
    if "random" in row:
        spec = row["random"]
        if not isinstance(spec, dict):
            raise InvalidInputError(f"row {index}: 'random' must be an object")
        unknown = set(spec) - _SWEEP_RANDOM_KEYS
        if unknown:
            raise InvalidInputError(
                f"row {index}: unknown random keys {sorted(unknown)}"
            )
        if "n" not in spec:
            raise InvalidInputError(f"row {index}: 'random' needs 'n'")
        seed = spec.get("seed")
        rng = random.Random(
            seed if seed is not None else f"{master_seed}:{index}"
        )
        return random_centered_population(
            spec["n"],
            rng,
            max_numerator=spec.get("max_numerator", 9),
            max_denominator=spec.get("max_denominator", 4),
        )
    return None  # bridge_m rows build their population inside verify


def _run_sweep_row(
    row, index: int, master_seed: int, cutoff: int | None
) -> InequalityReport:
    if not isinstance(row, dict):
        raise InvalidInputError(f"row {index}: must be a JSON object")
    unknown = set(row) - _SWEEP_ROW_KEYS
    if unknown:
        raise InvalidInputError(f"row {index}: unknown keys {sorted(unknown)}")
    if "id" not in row:
        raise InvalidInputError(f"row {index}: missing 'id'")
    mode = coerce_enum(VerifyMode, row.get("mode", "exact"), "verification mode")
    pop = _sweep_population(row, index, master_seed)
    weights = None
    if "weights" in row and "weights_file" in row:
        raise InvalidInputError(f"row {index}: both 'weights' and 'weights_file'")
    if "weights" in row:
        if not isinstance(row["weights"], list):
            raise InvalidInputError(f"row {index}: 'weights' must be a list")
        weights = row["weights"]
    elif "weights_file" in row:
        weights = _read_scalars(row["weights_file"])
    samples = row.get("samples")
    seed = row.get("seed")
    if mode is VerifyMode.MONTE_CARLO and seed is None:
        # deterministic per-row derivation from the master seed
        seed = master_seed * 1_000_003 + index
    return verify(
        row["id"],
        population=pop,
        weights=weights,
        bridge_m=row.get("bridge_m"),
        mode=mode,
        samples=samples,
        seed=seed,
        cutoff=row.get("cutoff", cutoff),
    )


def _cmd_sweep(args) -> int:
    try:
        with open(args.specfile, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read spec file {args.specfile}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"spec file is not valid JSON: {exc}") from None
    if isinstance(data, dict):
        rows = data.get("rows")
        if rows is None or set(data) != {"rows"}:
            raise InvalidInputError(
                "spec file must be a JSON list of rows or {\"rows\": [...]}"
            )
    elif isinstance(data, list):
        rows = data
    else:
        raise InvalidInputError(
            "spec file must be a JSON list of rows or {\"rows\": [...]}"
        )
    master_seed = _default_seed(args.seed)
    if master_seed is None:
        master_seed = 0
    entries = []
    passed = failed = errored = 0
    for i, row in enumerate(rows):
        try:
            report = _run_sweep_row(row, i, master_seed, args.cutoff)
        except Error as exc:
            entries.append({"row": i, "error": str(exc)})
            errored += 1
            continue
        entries.append({"row": i, "report": report.to_dict()})
        if report.holds:
            passed += 1
        else:
            failed += 1
    payload = {
        "command": "sweep",
        "total": len(rows),
        "passed": passed,
        "failed": failed,
        "errors": errored,
        "rows": entries,
    }
    if args.format == "json":
        _emit(_json_text(payload), args.output)
    elif args.format == "csv":
        csv_rows = [
            _report_csv_row(e["report"]) for e in entries if "report" in e
        ]
        _emit(_csv_text(_CSV_REPORT_FIELDS, csv_rows), args.output)
        for e in entries:
            if "error" in e:
                print(f"row {e['row']}: error: {e['error']}", file=sys.stderr)
    else:
        lines = []
        for e in entries:
            if "error" in e:
                lines.append(f"row {e['row']}: error: {e['error']}")
            else:
                rd = e["report"]
                lines.append(
                    f"row {e['row']}: id={rd['id']} mode={rd['mode']} "
                    f"n={rd['n']} lhs={rd['lhs']} rhs={rd['rhs']} "
                    f"status={rd['status']}"
                )
        lines.append(
            f"total {len(rows)}, passed {passed}, failed {failed}, "
            f"errors {errored}"
        )
        _emit("\n".join(lines) + "\n", args.output)
    return 0 if failed == 0 and errored == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
