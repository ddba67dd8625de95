"""Command-line interface: ``krom <command> [options]``.

Commands write one CSV or JSON artifact. CSV artifacts are accompanied by a
``<out>.manifest.json`` run manifest; JSON artifacts embed the manifest. All
JSON carries ``"schema": "krom/1"``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import check_symmetric
from .analysis import (
    GRID_M,
    GRID_N,
    GRID_SIGMA2,
    bench_timing,
    bootstrap_rmse_study,
    empirical_failure_rate,
    rolling_kollo,
)
from .exceptions import KromError, NonFinite, ParseError, RaggedRows
from .moments import rotate_skewness
from .orthobasis import empirical_scaled_L, rotation_matrix
from .simulation import SolveConfig, TargetMoments, krom_simulate, moment_errors, moments_match
from .valuegen import SOURCE_KINDS, family_for_skewness, make_value_source

SCHEMA = "krom/1"
EXIT_ERROR = 2
EXIT_VERIFY = 3

logger = logging.getLogger("krom")


# --------------------------------------------------------------------------- #
# Config and output helpers
# --------------------------------------------------------------------------- #


@dataclass
class RunConfig:
    """Resolved parameters of one run; round-trips through JSON."""

    command: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"command": self.command, "params": dict(sorted(self.params.items()))}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if "config" in data:
            data = data["config"]
        return cls(command=data["command"], params=dict(data.get("params", {})))

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload: dict) -> str:
    body = {"schema": SCHEMA, **payload}
    return json.dumps(body, indent=2, sort_keys=True, default=_jsonable, allow_nan=True) + "\n"


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_text(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_csv(header, rows, out) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    write_text(buf.getvalue(), out)


def manifest(config: RunConfig) -> dict:
    return {"tool": "krom", "version": __version__, "config": config.to_dict(),
            "seed": config.params.get("seed")}


def write_manifest(config: RunConfig, out, extra=None) -> None:
    if out is None or str(out) == "-":
        return
    write_text(dumps({**manifest(config), **(extra or {})}), f"{out}.manifest.json")


# --------------------------------------------------------------------------- #
# CSV input
# --------------------------------------------------------------------------- #


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_matrix_csv(path, time_col: int | None = None) -> tuple[list[str], np.ndarray]:
    """Parse a numeric CSV with a header row.

    A timestamp column is dropped when ``time_col`` names it, or when the
    first cell of the first data row is not numeric. Line and column numbers
    in errors are 1-based.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", line=1)
    header = [h.strip() for h in rows[0]]
    data = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not data:
        raise ParseError("no data rows", line=2)
    if time_col is None and not _is_number(data[0][0].strip()):
        time_col = 0
    width = len(header)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != width:
            raise RaggedRows(f"expected {width} fields, found {len(row)}", line=lineno)
        parsed = []
        for col, cell in enumerate(row):
            if col == time_col:
                continue
            try:
                x = float(cell.strip())
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", line=lineno, column=col + 1) from None
            if not math.isfinite(x):
                raise NonFinite(f"non-finite value {cell!r}", line=lineno, column=col + 1)
            parsed.append(x)
        values.append(parsed)
    names = [h for i, h in enumerate(header) if i != time_col]
    return names, np.array(values, dtype=float)


def load_targets(path) -> TargetMoments:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    V = check_symmetric(np.asarray(data["V"], dtype=float), tol=1e-12)
    return TargetMoments(mu=np.asarray(data["mu"], float), V=V, tau=np.asarray(data["tau"], float))


def _resolve_seed(seed):
    if seed is not None:
        return int(seed)
    env = os.environ.get("KROM_SEED")
    if env not in (None, ""):
        return int(env)
    return int(np.random.SeedSequence().entropy % (2**63))


def _build_source(spec: str, sigma2: float, target: TargetMoments, time_col):
    kind, _, arg = spec.partition(":")
    p = rotate_skewness(target.tau, rotation_matrix(target.n))
    data = None
    if kind == "bootstrap":
        if not arg:
            raise ParseError("bootstrap source needs a CSV path: bootstrap:<csv>")
        _, X = read_matrix_csv(arg, time_col)
        data = empirical_scaled_L(X)
    return make_value_source(kind, sigma2, p=p, data=data)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _source_arg(text: str) -> str:
    kind = text.partition(":")[0]
    if kind not in SOURCE_KINDS:
        raise argparse.ArgumentTypeError(f"source must be one of {'|'.join(SOURCE_KINDS)}")
    return text


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #


def cmd_ingest(args, config: RunConfig) -> int:
    names, X = read_matrix_csv(args.csv, args.time_col)
    target = TargetMoments.from_sample(X)
    p = rotate_skewness(target.tau, rotation_matrix(target.n))
    write_text(dumps({
        **manifest(config), "names": names, "n": target.n, "m": int(X.shape[0]),
        "mu": target.mu, "V": target.V, "tau": target.tau, "p": p,
    }), args.out)
    return 0


def cmd_simulate(args, config: RunConfig) -> int:
    if args.targets:
        target = load_targets(args.targets)
    elif args.data:
        _, X = read_matrix_csv(args.data, args.time_col)
        target = TargetMoments.from_sample(X)
    else:
        raise ParseError("simulate needs --targets <json> or --data <csv>")
    source = _build_source(args.source, args.sigma2, target, args.time_col)
    sim = krom_simulate(target, SolveConfig(
        m=args.rows, n_blocks=args.blocks, value_source=source,
        max_attempts=args.max_attempts, seed=args.seed, threads=args.threads,
    ))
    errors = moment_errors(sim.X, target)
    ok = moments_match(errors)
    header = [f"x{i + 1}" for i in range(target.n)]
    write_csv(header, sim.X.tolist(), args.out)
    prov = {k: v for k, v in sim.provenance.items() if k != "wall_time"}
    verification = {**errors, "passed": ok}
    if args.out not in (None, "-"):
        write_text(dumps({**manifest(config), "provenance": prov, "verification": verification}),
                   f"{args.out}.manifest.json")
    else:
        sys.stderr.write(dumps({"verification": verification}))
    return 0 if ok else EXIT_VERIFY


def cmd_failure_rate(args, config: RunConfig) -> int:
    cells = [(n, s2, m) for n in args.n for s2 in args.sigma2_grid for m in args.m]
    seqs = np.random.SeedSequence(args.seed).spawn(len(cells))
    rows = []
    for (n, s2, m), ss in zip(cells, seqs):
        cell = empirical_failure_rate(n, m, s2, None, args.trials, seed=ss, threads=args.threads,
                                      verify_fraction=args.verify_fraction)
        rows.append([n, m, float(s2), cell.alpha1, cell.alpha, cell.trials])
    write_csv(["n", "m", "sigma2", "alpha1", "alpha", "trials"], rows, args.out)
    write_manifest(config, args.out)
    return 0


def cmd_rolling(args, config: RunConfig) -> int:
    _, X = read_matrix_csv(args.csv, args.time_col)
    res = rolling_kollo(X, args.window)
    n = X.shape[1]
    header = ["end"] + [f"tau{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
    rows = [[int(e), *map(float, t), *map(float, p)] for e, t, p in zip(res.end, res.tau, res.p)]
    write_csv(header, rows, args.out)
    write_manifest(config, args.out)
    return 0


def cmd_rmse(args, config: RunConfig) -> int:
    _, X = read_matrix_csv(args.csv, args.time_col)
    seqs = np.random.SeedSequence(args.seed).spawn(len(args.m))
    reports = [bootstrap_rmse_study(X, m, args.reps, seed=ss, threads=args.threads).as_dict()
               for m, ss in zip(args.m, seqs)]
    write_text(dumps({**manifest(config), "star_thresholds": "one-sided normal 1.282/1.645/2.326",
                      "results": reports}), args.out)
    return 0


def cmd_bench(args, config: RunConfig) -> int:
    rng = np.random.default_rng(args.seed)
    targets = list(rng.uniform(-1.0, 1.0, size=(args.count, args.n)))
    result = bench_timing(args.n, args.m, targets, seed=args.seed, sigma2=args.sigma2,
                          max_attempts=args.max_attempts)
    write_text(dumps({**manifest(config), **result}), args.out)
    return 0


def cmd_attainable(args, config: RunConfig) -> int:
    family = family_for_skewness(args.family, args.p1)
    mean, var, skew = family.moments()
    params = {k: float(v) for k, v in asdict(family).items()}
    write_text(dumps({**manifest(config), "family": args.family, "p1": args.p1, "params": params,
                      "moments": {"mean": mean, "variance": var, "skewness": skew}}), args.out)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "simulate": cmd_simulate,
    "failure-rate": cmd_failure_rate,
    "rolling": cmd_rolling,
    "rmse": cmd_rmse,
    "bench": cmd_bench,
    "attainable": cmd_attainable,
}


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #


def _common(p: argparse.ArgumentParser, *, seed=True, threads=False) -> None:
    p.add_argument("--out", "-o", default=None, help="output path (default: stdout)")
    p.add_argument("--config", default=None, help="JSON run config or manifest supplying defaults")
    p.add_argument("--time-col", type=int, default=None, help="0-based timestamp column to drop")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $KROM_SEED)")
    if threads:
        p.add_argument("--threads", type=int, default=1, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="krom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"krom {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="compute target moments from a return CSV")
    p.add_argument("csv")
    _common(p, seed=False)

    p = sub.add_parser("simulate", help="simulate an exact-moment sample")
    p.add_argument("--targets", help="moments JSON from 'krom ingest'")
    p.add_argument("--data", help="CSV whose moments are targeted")
    p.add_argument("-m", "--rows", type=int, required=True, help="rows to simulate")
    p.add_argument("-N", "--blocks", type=int, default=1, help="concatenated sub-samples")
    p.add_argument("--source", type=_source_arg, default="normal",
                   help="zero|bootstrap:<csv>|normal|sn|nig|beta|t")
    p.add_argument("--sigma2", type=float, default=0.5)
    p.add_argument("--max-attempts", type=int, default=200)
    _common(p, threads=True)

    p = sub.add_parser("failure-rate", help="empirical failure-rate grid with tau = 0")
    p.add_argument("--n", type=_int_list, default=list(GRID_N))
    p.add_argument("--m", type=_int_list, default=list(GRID_M))
    p.add_argument("--sigma2", dest="sigma2_grid", type=_float_list, default=list(GRID_SIGMA2))
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--verify-fraction", type=float, default=0.0)
    _common(p, threads=True)

    p = sub.add_parser("rolling", help="rolling-window Kollo skewness")
    p.add_argument("csv")
    p.add_argument("--window", type=int, required=True)
    _common(p, seed=False)

    p = sub.add_parser("rmse", help="bootstrap RMSE of mean, covariance and Kollo skewness")
    p.add_argument("csv")
    p.add_argument("--m", type=_int_list, default=[100, 500, 1000])
    p.add_argument("--reps", type=int, default=10_000)
    _common(p, threads=True)

    p = sub.add_parser("bench", help="timing against the trial-and-error baseline")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--m", type=int, default=25)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--sigma2", type=float, default=0.7)
    p.add_argument("--max-attempts", type=int, default=200)
    _common(p)

    p = sub.add_parser("attainable", help="standardized family parameters for a skewness")
    p.add_argument("family", choices=["normal", "sn", "nig", "beta"])
    p.add_argument("p1", type=float)
    _common(p, seed=False)
    return parser


_NON_CONFIG = {"command", "config", "out", "verbose", "threads"}


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in COMMANDS), None)
    if known.config and command:
        loaded = RunConfig.load(known.config)
        if loaded.command != command:
            parser.error(f"config is for '{loaded.command}', not '{command}'")
        # the file supplies defaults; explicit command-line options still win
        sub = parser._subparsers._group_actions[0].choices[command]
        for action in sub._actions:
            if action.dest in loaded.params:
                action.required = False
                if not action.option_strings:
                    action.nargs = "?"
        sub.set_defaults(**loaded.params)
    args = parser.parse_args(argv)
    if hasattr(args, "seed"):
        args.seed = _resolve_seed(args.seed)
    params = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    return args, RunConfig(args.command, params)


def main(argv=None) -> int:
    args, config = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", UserWarning)
    try:
        return COMMANDS[args.command](args, config)
    except (KromError, OSError, KeyError, ValueError) as exc:
        error = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        for attr in ("line", "column", "attempts", "block"):
            if getattr(exc, attr, None) is not None:
                error[attr] = getattr(exc, attr)
        sys.stderr.write(dumps(error))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
