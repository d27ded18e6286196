"""Command-line interface.

Subcommands:

* ``test``      run a separability test on a matrix-stack file, emit JSON
* ``simulate``  generate scenario data as a matrix-stack file
* ``power``     run a size/power study from a JSON config, emit CSV
* ``eigen``     export the leading marginal eigenstructure as CSV

Exit codes: 0 success, 1 I/O or parse or usage error, 2 statistical
degeneracy.  All randomness honors ``--seed``; long-running commands accept
``--threads`` (fallback: the SEPCOV_THREADS environment variable) without
changing any output.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import dataio
from .covariance import marginal_covariances
from .errors import DegeneracyError, InvalidArgument, ParseError, SepcovError
from .linalg import sym_eigen
from .runner import bonferroni, run_test
from .simulation import ScenarioConfig, ScenarioSampler, TestSpec, power_curve
from .simulation import row_key_from_config, row_key_from_row
from .teststats import ProjectionSet

_STAT_FLAGS = {"g": "g", "g-tilde": "g_tilde", "g-tilde-a": "g_tilde_a", "hs": "hs"}
_METHOD_FLAGS = {
    "asymptotic": "asymptotic",
    "param-boot": "param_boot",
    "emp-boot": "emp_boot",
}

POWER_CSV_COLUMNS = (
    "scenario", "gamma", "N", "statistic", "method", "I", "B", "reps",
    "power", "se", "seed",
)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for
    # statistical degeneracy here, so usage errors map to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SEPCOV_THREADS", "1")))
    except ValueError:
        return 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="sepcov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run a separability test")
    p_test.add_argument("input", help="matrix-stack data file")
    p_test.add_argument("--stat", choices=sorted(_STAT_FLAGS), default="g-tilde")
    p_test.add_argument("--method", choices=sorted(_METHOD_FLAGS), default="emp-boot")
    p_test.add_argument(
        "--proj",
        action="append",
        default=None,
        help='projection set, "pxq" or "(r,s);(r,s)"; repeat for a '
        "Bonferroni-combined report",
    )
    p_test.add_argument("--B", type=int, default=1000)
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--threads", type=int, default=None)
    p_test.add_argument("--json", dest="json_out", default=None, help="output path")

    p_sim = sub.add_parser("simulate", help="generate scenario data")
    p_sim.add_argument("--scenario", choices=["gaussian", "t6"], default="gaussian")
    p_sim.add_argument("--gamma", type=float, default=0.0)
    p_sim.add_argument("--N", type=int, required=True)
    p_sim.add_argument("--d1", type=int, default=32)
    p_sim.add_argument("--d2", type=int, default=7)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)

    p_pow = sub.add_parser("power", help="run a size/power study")
    p_pow.add_argument("--config", required=True, help="JSON study config")
    p_pow.add_argument("--out", required=True, help="CSV output path")
    p_pow.add_argument("--resume", action="store_true")
    p_pow.add_argument("--threads", type=int, default=None)

    p_eig = sub.add_parser("eigen", help="export marginal eigenstructure")
    p_eig.add_argument("input", help="matrix-stack data file")
    p_eig.add_argument("--k", type=int, default=None)
    p_eig.add_argument("--out", required=True)

    return parser


def _emit_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _cmd_test(args) -> int:
    t0 = time.perf_counter()
    x = dataio.read_matrix_stack(args.input)
    statistic = _STAT_FLAGS[args.stat]
    method = _METHOD_FLAGS[args.method]
    threads = args.threads if args.threads is not None else _default_threads()
    projs = args.proj if args.proj else ["1x1"]
    reports = [
        run_test(
            x,
            statistic=statistic,
            method=method,
            proj=p,
            B=args.B,
            seed=args.seed,
            threads=threads,
        )
        for p in projs
    ]
    runtime_ms = round((time.perf_counter() - t0) * 1e3, 3)

    def as_payload(rep):
        return {
            "statistic": rep.statistic,
            "value": rep.value,
            "p_value": rep.p_value,
            "p_plus": rep.p_plus,
            "method": rep.method,
            "proj": rep.proj,
            "df": rep.df,
            "B": rep.B,
            "seed": rep.seed,
            "warnings": rep.warnings,
        }

    if len(reports) == 1:
        payload = as_payload(reports[0])
        payload["runtime_ms"] = runtime_ms
    else:
        payload = {
            "reports": [as_payload(r) for r in reports],
            "m": len(reports),
            "bonferroni_p": bonferroni(r.p_value for r in reports),
            "runtime_ms": runtime_ms,
        }
    _emit_json(payload, args.json_out)
    return 0


def _cmd_simulate(args) -> int:
    sampler = ScenarioSampler(args.d1, args.d2, args.gamma, args.scenario)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed))
    x = sampler.sample(args.N, rng)
    dataio.write_matrix_stack(args.out, x)
    return 0


def _config_checksum(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _expand_cells(cfg: dict) -> list[ScenarioConfig]:
    tests = [
        TestSpec(
            statistic=_STAT_FLAGS[t["statistic"]],
            method=_METHOD_FLAGS[t["method"]],
            proj=ProjectionSet.parse(t.get("proj", "1x1")).canonical(),
            B=int(t.get("B", 200)),
        )
        for t in cfg["tests"]
    ]
    cells = []
    for gamma in cfg["gammas"]:
        for n in cfg["Ns"]:
            for test in tests:
                cells.append(
                    ScenarioConfig(
                        gamma=float(gamma),
                        N=int(n),
                        test=test,
                        family=cfg.get("family", "gaussian"),
                        d1=int(cfg.get("d1", 32)),
                        d2=int(cfg.get("d2", 7)),
                        replications=int(cfg.get("replications", 500)),
                        alpha=float(cfg.get("alpha", 0.05)),
                        seed=int(cfg.get("seed", 0)),
                    )
                )
    return cells


def _format_row(row: dict) -> dict:
    out = dict(row)
    out["gamma"] = repr(float(row["gamma"]))
    out["power"] = repr(float(row["power"]))
    out["se"] = repr(float(row["se"]))
    return out


def _cmd_power(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad config JSON: {exc}") from exc
    for key in ("gammas", "Ns", "tests"):
        if key not in cfg:
            raise ParseError(f"config missing required key {key!r}")
    checksum = _config_checksum(cfg)
    cells = _expand_cells(cfg)
    threads = args.threads if args.threads is not None else _default_threads()

    skip = set()
    mode = "w"
    if args.resume and os.path.exists(args.out):
        with open(args.out) as fh:
            first = fh.readline().strip()
            if first != f"# config={checksum}":
                raise ParseError(
                    "resume refused: existing output was produced by a "
                    "different config"
                )
            for row in csv.DictReader(fh):
                skip.add(row_key_from_row(row))
        mode = "a"

    with open(args.out, mode, newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=POWER_CSV_COLUMNS)
        if mode == "w":
            fh.write(f"# config={checksum}\n")
            writer.writeheader()

        def on_row(row):
            writer.writerow(_format_row(row))
            fh.flush()

        power_curve(cells, threads=threads, skip=skip, on_row=on_row)
    return 0


def _cmd_eigen(args) -> int:
    x = dataio.read_matrix_stack(args.input)
    mp = marginal_covariances(x)
    d1, d2 = mp.c1.shape[0], mp.c2.shape[0]
    k = args.k if args.k is not None else min(d1, d2)
    if k < 1 or k > min(d1, d2):
        raise InvalidArgument(f"k must be in [1, {min(d1, d2)}], got {k}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["marginal", "rank", "eigenvalue", "cumulative_share", "vector"])
        for marginal, mat in ((1, mp.c1), (2, mp.c2)):
            es = sym_eigen(mat)
            total = float(es.values.sum())
            cum = 0.0
            for rank in range(1, k + 1):
                value = float(es.values[rank - 1])
                cum += value
                writer.writerow(
                    [
                        marginal,
                        rank,
                        repr(value),
                        repr(cum / total),
                        " ".join(repr(float(v)) for v in es.vectors[:, rank - 1]),
                    ]
                )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "power":
            return _cmd_power(args)
        if args.command == "eigen":
            return _cmd_eigen(args)
        raise InvalidArgument(f"unknown command {args.command!r}")
    except DegeneracyError as exc:
        print(f"sepcov: degenerate sample: {exc}", file=sys.stderr)
        return 2
    except (ParseError, InvalidArgument) as exc:
        print(f"sepcov: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"sepcov: i/o error: {exc}", file=sys.stderr)
        return 1
    except SepcovError as exc:
        print(f"sepcov: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
