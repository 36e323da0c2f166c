"""Command-line entry point: ``bscoulomb <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__, analytic
from .convergence import DEFAULT_EPS, klaus_experiment, sweep
from .errors import BSError, InvalidInputError, NumericalFailure
from .kernels import (
    HALFLINE,
    LINE,
    PotentialFamily,
    ProblemSpec,
    KernelSpec,
    EnergyParam,
    canonical_domain,
)
from .operator import assemble, dump_matrix, eig_sym, hs_norm_sq_numeric
from .quadrature import GridConfig, build_grid
from .spectrum import LevelRequest, count_bound_states, grid_config_for, solve_level

COMMANDS = ("verify", "hs-norm", "eigs", "levels", "count", "sweep", "klaus")
FORMATS = ("json", "csv")
OUT_ENV = "BS_COULOMB_OUT"


@dataclass(frozen=True)
class RunConfig:
    command: str
    domain: str = "halfline"
    family: str = "exact"
    eps: float | None = None
    eps_list: tuple[float, ...] = DEFAULT_EPS
    coupling: float = 1.0
    abs_e: float = 1.0
    n: int = 400
    k: int = 1
    panels: int = 8
    factor: float = 40.0
    tol: float = 1e-12
    method: str = "lapack"
    variant: str = "bs"
    sector: str | None = None
    workers: int = 1
    output: str = "json"
    out_dir: str | None = None
    dump: str | None = None

    def grid(self) -> GridConfig:
        return GridConfig(n_nodes=self.n, truncation_radius_factor=self.factor, panels=self.panels)

    def family_obj(self) -> PotentialFamily:
        return PotentialFamily(self.family, self.eps)

    def problem(self) -> ProblemSpec:
        return ProblemSpec(self.domain, self.family_obj(), self.coupling)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out_dir")
        d.pop("dump")
        d["eps_list"] = list(self.eps_list)
        return d


# --- parsing ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInputError(f"{self.prog}: {message}\n{self.format_usage().strip()}")


def _positive(kind):
    def convert(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not (math.isfinite(value) and value > 0):
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    convert.__name__ = kind.__name__
    return convert


def _eps_list(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}")


# flag name -> (RunConfig field, converter, help)
OPTIONS = {
    "domain": ("domain", str, "halfline, line, free or neumann"),
    "family": ("family", str, "exact, softcore, rounded or cutoff"),
    "eps": ("eps", _positive(float), "smearing length"),
    "eps-list": ("eps_list", _eps_list, "comma-separated decreasing eps values for sweep and klaus"),
    "lambda": ("coupling", _positive(float), "coupling constant"),
    "abs-e": ("abs_e", _positive(float), "|E| of the negative energy E"),
    "n": ("n", _positive(int), "Nystrom nodes per half-line"),
    "k": ("k", _positive(int), "number of eigenvalues (eigs) or level index (levels)"),
    "panels": ("panels", _positive(int), "graded quadrature panels"),
    "factor": ("factor", _positive(float), "truncation radius in units of 1/sqrt|E|"),
    "tol": ("tol", _positive(float), "eigensolver off-diagonal tolerance"),
    "method": ("method", str, "eigensolver: lapack or jacobi"),
    "variant": ("variant", str, "kernel: bs or appendix_b"),
    "sector": ("sector", str, "parity sector for free-line levels: odd or even"),
    "workers": ("workers", _positive(int), "threads for sweep and klaus"),
    "format": ("output", str, "json or csv"),
    "out": ("out_dir", str, f"output directory (default ${OUT_ENV})"),
    "dump": ("dump", str, "write the eigs matrix to this file"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bscoulomb", description="Birman-Schwinger analysis of the 1D Coulomb problem.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat 'key = value' file; flags override it")
    for flag, (dest, conv, text) in OPTIONS.items():
        parser.add_argument(f"--{flag}", dest=dest, type=conv, default=None, help=text)
    parser.add_argument("--version", action="version", version=f"bscoulomb {__version__}")
    return parser


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config file {path}: {exc}")
    values = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep or key not in OPTIONS:
            raise InvalidInputError(f"{path}:{number}: unknown or malformed entry {line!r}")
        dest, conv, _ = OPTIONS[key]
        try:
            values[dest] = conv(value.strip())
        except argparse.ArgumentTypeError as exc:
            raise InvalidInputError(f"{path}:{number}: {key}: {exc}")
    return values


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = read_config_file(ns.config) if ns.config else {}
    values.update({dest: getattr(ns, dest) for dest, _, _ in OPTIONS.values() if getattr(ns, dest) is not None})
    if ns.command in ("sweep", "klaus") and "family" not in values:
        values["family"] = "softcore"
    if values.get("out_dir") is None and os.environ.get(OUT_ENV):
        values["out_dir"] = os.environ[OUT_ENV]
    config = RunConfig(command=ns.command, **values)
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    canonical_domain(config.domain)
    if config.output not in FORMATS:
        raise InvalidInputError(f"--format must be one of {FORMATS}")
    if config.method not in ("lapack", "jacobi"):
        raise InvalidInputError("--method must be lapack or jacobi")
    if config.sector not in (None, "odd", "even"):
        raise InvalidInputError("--sector must be odd or even")
    if config.command not in ("sweep", "klaus"):
        config.family_obj()
        KernelSpec(config.domain, config.family_obj(), config.coupling, EnergyParam(config.abs_e),
                   config.variant)
    config.grid()


# --- serialization ------------------------------------------------------------


def _number(value) -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _to_json(value, indent=0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(pad + _to_json(v, indent + 1) for v in value) + "\n" + "  " * indent + "]"
    if isinstance(value, str):
        return json.dumps(value)
    if value is None or isinstance(value, (bool, int, float)) or hasattr(value, "__float__"):
        return _number(value if isinstance(value, (bool, int)) or value is None else float(value))
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _as_dict(record) -> dict:
    if dataclasses.is_dataclass(record):
        return {f.name: getattr(record, f.name) for f in dataclasses.fields(record)}
    return dict(record)


def serialize(records, fmt: str = "json", meta: dict | None = None, fields=None) -> str:
    """Render records as ``{meta, data}`` JSON or as CSV with a header row."""
    rows = [_as_dict(r) for r in records]
    if fmt == "json":
        return _to_json({"meta": meta or {}, "data": rows}) + "\n"
    if fmt != "csv":
        raise InvalidInputError(f"unknown format {fmt!r}")
    names = list(fields) if fields else (list(rows[0]) if rows else [])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in rows:
        writer.writerow(["" if row.get(n) is None else
                         (row[n] if isinstance(row[n], (str, bool, int)) else _number(row[n])) for n in names])
    return buf.getvalue()


# --- commands -----------------------------------------------------------------


def cmd_hs_norm(config: RunConfig):
    spec = KernelSpec(config.domain, config.family_obj(), config.coupling, EnergyParam(config.abs_e),
                      config.variant)
    numeric = hs_norm_sq_numeric(spec, grid_config_for(config.problem(), config.grid()))
    closed = published = None
    if not spec.family.smeared:
        if spec.variant == "appendix_b":
            plus, full = analytic.appendix_hs_norms(spec.energy)
            closed = (plus if spec.domain == HALFLINE else full) ** 2
        elif spec.domain == HALFLINE:
            closed = analytic.hs_norm_sq_halfline(spec.coupling, spec.energy)
        elif spec.domain == LINE:
            norms = analytic.hs_norm_sq_line(spec.coupling, spec.energy)
            closed, published = norms.decoupled_value, norms.published_value
    record = {
        "domain": spec.domain,
        "family": spec.family.kind,
        "variant": spec.variant,
        "closed_form": closed,
        "numeric": numeric,
        "rel_err": None if closed is None else abs(numeric - closed) / closed,
    }
    if published is not None:
        record["published_value"] = published
    return [record], None


def cmd_eigs(config: RunConfig):
    spec = KernelSpec(config.domain, config.family_obj(), config.coupling, EnergyParam(config.abs_e),
                      config.variant)
    grid = build_grid(grid_config_for(config.problem(), config.grid()), spec.energy)
    op = assemble(spec, grid)
    if config.dump:
        with open(config.dump, "w") as fh:
            dump_matrix(op, fh)
    res = eig_sym(op, tol=config.tol, vectors=op.full_line, method=config.method)
    exact = spec.domain in (HALFLINE, LINE) and not spec.family.smeared and spec.variant == "bs"
    rows = []
    for i, mu in enumerate(res.eigenvalues[: config.k]):
        level = i // 2 + 1 if spec.domain == LINE else i + 1
        rows.append({
            "index": i + 1,
            "eigenvalue": float(mu),
            "oracle": analytic.exact_bs_eigenvalue(spec.coupling, spec.energy, level) if exact else None,
            "parity": res.parity[i] if res.parity else (op.sector or ""),
        })
    return rows, None


def cmd_levels(config: RunConfig):
    request = LevelRequest(config.problem(), config.k, config.grid(), sector=config.sector)
    res = solve_level(request)
    exact = None
    if not config.family_obj().smeared and request.problem.domain in (HALFLINE, LINE):
        exact = analytic.exact_coulomb_level(config.coupling, config.k)
    row = _as_dict(res)
    row["exact"] = exact
    return [row], None


def cmd_count(config: RunConfig):
    res = count_bound_states(config.problem(), EnergyParam(config.abs_e), config.grid())
    return [{"lambda": config.coupling, "abs_e": config.abs_e, "count": res.count, "bound": res.bound}], None


SWEEP_FIELDS = ("eps", "hs_distance", "hs_norm_sq_smeared", "young_bound")
KLAUS_FIELDS = ("eps", "level_odd", "level_even")


def cmd_sweep(config: RunConfig):
    records = sweep(config.family, config.eps_list, config.coupling, EnergyParam(config.abs_e),
                    config.grid(), domain=config.domain, workers=config.workers)
    return [{k: getattr(r, k) for k in SWEEP_FIELDS} for r in records], SWEEP_FIELDS


def cmd_klaus(config: RunConfig):
    records = klaus_experiment(config.family, config.coupling, config.eps_list, config.grid(),
                               workers=config.workers)
    return [{k: getattr(r, k) for k in KLAUS_FIELDS} for r in records], KLAUS_FIELDS


def cmd_verify(config: RunConfig):
    from .verify import format_table, run_all

    records = run_all()
    print(format_table(records), file=sys.stderr)
    failed = [r.id for r in records if not r.ok]
    return [_as_dict(r) for r in records], None, failed


DISPATCH = {
    "hs-norm": cmd_hs_norm,
    "eigs": cmd_eigs,
    "levels": cmd_levels,
    "count": cmd_count,
    "sweep": cmd_sweep,
    "klaus": cmd_klaus,
    "verify": cmd_verify,
}


def write_outputs(config: RunConfig, text: str) -> None:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    for name in (f"{config.command}-{stamp}.{config.output}", f"{config.command}-latest.{config.output}"):
        (out / name).write_text(text)


def run(config: RunConfig) -> int:
    result = DISPATCH[config.command](config)
    rows, fields = result[0], result[1]
    failed = result[2] if len(result) > 2 else []
    meta = {"command": config.command, "version": __version__, "config": config.echo()}
    text = serialize(rows, config.output, meta, fields)
    sys.stdout.write(text)
    if config.out_dir:
        write_outputs(config, text)
    return 2 if failed else 0


def main(argv=None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
        return run(config)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalFailure, BSError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
