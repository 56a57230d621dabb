"""Command-line front end.

Every subcommand writes CSV or JSON to ``--out`` (stdout by default).  A
``--config`` file holds ``key = value`` lines named like the long flags;
flags given on the command line override it.  Failures print a single
JSON error record on stderr and exit with a code from :data:`EXIT_CODES`.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cfc, info, protocol, wavepacket
from .devices import (build_chained_nmzi, build_cmzi, build_free_rotator, build_nmzi,
                      nmzi_cosine_family)
from .errors import (CfcError, ConfigurationError, DomainError, StabilityError)

SCHEMA_VERSION = 1
EXIT_CODES = {"ok": 0, "usage": 2, "output": 3, "stability": 4, "computation": 5}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _grid(text: str) -> list[float]:
    """``start:stop:count`` (inclusive linspace) or a comma list."""
    if ":" in text:
        try:
            a, b, n = text.split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(n))]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:count") from None
    return _floats(text)


def _common(p: argparse.ArgumentParser, fmt: str):
    p.add_argument("--out", help="output file; '-' or omitted means stdout")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from JSON output")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfcinfo", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value file mirroring the long flags")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fisher", help="Fisher information and violation strength")
    p.add_argument("--device", choices=("free", "nmzi", "cmzi", "chained"), default="free")
    p.add_argument("--position", default="4", help="NMZI rotator position 1-5")
    p.add_argument("--t1", type=_floats, default=[0.5])
    p.add_argument("--t4", type=float, default=None, help="NMZI last splitter (default: r1)")
    p.add_argument("--theta-w", type=_floats, default=[0.0])
    p.add_argument("--n", type=_ints, default=[10])
    p.add_argument("--m", type=_ints, default=[10])
    _common(p, "csv")

    p = sub.add_parser("shannon", help="mutual information by quadrature and closed forms")
    p.add_argument("--device", choices=("free", "nmzi"), default="free")
    p.add_argument("--position", default="4")
    p.add_argument("--t1", type=_floats, default=[0.5])
    p.add_argument("--grid", type=_grid, default=None, help="t1 grid start:stop:count (overrides --t1)")
    p.add_argument("--nodes", type=int, default=256)
    p.add_argument("--prior", choices=("theta", "cosine"), default="theta",
                   help="uniform in the rotator angle or in its diagonal entry")
    _common(p, "csv")

    p = sub.add_parser("sweep-chained", help="chained nested device: detection and violation grid")
    p.add_argument("--n", type=_ints, default=[2, 5, 10, 20, 50])
    p.add_argument("--m", type=_ints, default=[1, 10, 100, 300, 1200])
    p.add_argument("--theta-w", type=float, default=1e-6)
    p.add_argument("--tag-mode", choices=("inner_mzi", "segment"), default="inner_mzi")
    _common(p, "csv")

    p = sub.add_parser("sweep-cmzi", help="chained device: P_A and F_A grid")
    p.add_argument("--n", type=_ints, default=[5, 10, 20, 50, 100])
    p.add_argument("--theta-w", type=_floats, default=list(cfc.DEFAULT_CMZI_THETAS))
    _common(p, "csv")

    p = sub.add_parser("protocol", help="single-device communication statistics")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--t1", type=_floats, default=[0.02])
    p.add_argument("--theta-w", type=float, default=1e-3)
    _common(p, "json")

    p = sub.add_parser("wavepacket", help="spinor wavepacket through the folded interferometer")
    p.add_argument("--coupling", type=float, default=0.0, help="peak spin coupling (0: off)")
    p.add_argument("--n-points", type=int, default=2 ** 14)
    p.add_argument("--frames-dir", default=None, help="write one CSV per snapshot here")
    _common(p, "json")
    return parser


def _read_config(path: str) -> list[str]:
    """Turn a key = value file into argv tokens; ``command`` names the subcommand."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    command, tokens = None, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "command":
            command = value
        elif value.lower() in ("true", "yes", "on"):
            tokens.append(f"--{key}")
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens += [f"--{key}", value]
    return ([command] if command else []) + tokens


def _assemble_argv(argv: list[str]) -> list[str]:
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return rest
    from_file = _read_config(known.config)
    commands = {"fisher", "shannon", "sweep-chained", "sweep-cmzi", "protocol", "wavepacket"}
    cli_cmd = [a for a in rest if a in commands][:1]
    file_cmd = from_file[:1] if from_file and from_file[0] in commands else []
    file_flags = from_file[len(file_cmd):]
    cmd = cli_cmd or file_cmd
    cli_flags = [a for a in rest if a not in cmd] if cli_cmd else rest
    return cmd + file_flags + cli_flags       # later flags win


# --- output --------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _render(rows: list[dict], columns, args, params: dict) -> str:
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
        return buf.getvalue()
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "parameters": params, "rows": rows}
    if not args.no_timestamp:
        doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


class OutputError(Exception):
    pass


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {out}: {exc}") from None


def _check_theta(values):
    for t in values:
        if not abs(t) < 1.0:
            raise DomainError(f"theta-w must satisfy |theta| < 1, got {t}")


def _check_t1(values):
    for t in values:
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t1 must lie in [0, 1], got {t}")


# --- subcommands ---------------------------------------------------------------

def cmd_fisher(args) -> str:
    _check_theta(args.theta_w)
    _check_t1(args.t1)
    rows = []
    for th in args.theta_w:
        f_free = cfc.free_fisher(th)
        if args.device == "free":
            r = info.fisher(build_free_rotator(), th)
            rows.append({"device": "free", "theta_w": th, "F": r.value, "D": r.value / f_free, "method": r.method})
        elif args.device == "nmzi":
            for t1 in args.t1:
                r1 = math.sqrt(1.0 - t1 * t1)
                t4 = r1 if args.t4 is None else args.t4
                c = build_nmzi(r1, t1, math.sqrt(1.0 - t4 * t4), t4, args.position)
                r = info.fisher(c, th)
                rows.append({"device": "nmzi", "position": args.position, "t1": t1, "theta_w": th,
                             "F": r.value, "D": r.value / f_free, "method": r.method})
        elif args.device == "cmzi":
            for N in args.n:
                c = build_cmzi(N, tag_bob=True)
                rep = cfc.violation_type2(c, th)
                f = info.fisher(c, th).value
                rows.append({"device": "cmzi", "N": N, "theta_w": th, "F": f, "D": f / f_free,
                             "F_A": rep.fisher_component, "P_A": rep.value, "method": "derivative_propagation"})
        else:
            for N in args.n:
                for M in args.m:
                    c = build_chained_nmzi(N, M, tag_inner=True)
                    f = info.fisher(c, th).value
                    fa = info.fisher(c, th, outcome_subset=cfc.CHAINED_ALICE).value
                    rows.append({"device": "chained", "N": N, "M": M, "theta_w": th, "F": f, "D": f / f_free,
                                 "F_A": fa, "D_A": fa / f_free, "method": "derivative_propagation"})
    cols = ["device", "position", "t1", "N", "M", "theta_w", "F", "D", "F_A", "D_A", "P_A", "method"]
    cols = [c for c in cols if any(c in r for r in rows)]
    return _render(rows, cols, args, {"device": args.device})


def cmd_shannon(args) -> str:
    if args.nodes < 2:
        raise DomainError("--nodes must be >= 2")
    if args.device == "free":
        r = info.shannon_mi(build_free_rotator(), nodes=args.nodes)
        rows = [{"device": "free", "H": r.value, "H_closed": info.FREE_ROTATOR_MI,
                 "warning": r.detail.get("warning", "")}]
        return _render(rows, ["device", "H", "H_closed", "warning"], args, {"nodes": args.nodes})
    t_values = args.grid if args.grid is not None else args.t1
    _check_t1(t_values)
    rows = []
    for t1 in t_values:
        r1 = math.sqrt(1.0 - t1 * t1)
        if args.prior == "cosine":
            res = info.shannon_mi(nmzi_cosine_family(r1, t1, t1, r1, args.position), nodes=args.nodes)
        else:
            res = info.shannon_mi(build_nmzi(r1, t1, t1, r1, args.position), nodes=args.nodes)
        row = {"t1": t1, "H_quadrature": res.value}
        if str(args.position) in ("4", "5"):
            row.update(H_exact=info.shannon_closed_nmzi_inner(t1), H_taylor=info.shannon_taylor(t1),
                       H_pade=info.shannon_pade(t1))
        rows.append(row)
    cols = ["t1", "H_exact", "H_taylor", "H_pade", "H_quadrature"]
    cols = [c for c in cols if any(c in r for r in rows)]
    return _render(rows, cols, args, {"position": args.position, "prior": args.prior, "nodes": args.nodes})


def cmd_sweep_chained(args) -> str:
    if min(args.n) < 1 or min(args.m) < 1:
        raise DomainError("N and M must be >= 1")
    _check_theta([args.theta_w])
    grid = cfc.sweep_chained_nmzi(args.n, args.m, args.theta_w, workers=args.threads, tag_mode=args.tag_mode)
    rows = [{k: r[k] for k in cfc.CHAINED_COLUMNS} for r in grid.rows()]
    return _render(rows, cfc.CHAINED_COLUMNS, args,
                   {"N": args.n, "M": args.m, "theta_w": args.theta_w, "tag_mode": args.tag_mode,
                    "warnings": grid.runtime["warnings"]})


def cmd_sweep_cmzi(args) -> str:
    if min(args.n) < 1:
        raise DomainError("N must be >= 1")
    _check_theta(args.theta_w)
    grid = cfc.sweep_cmzi(args.n, args.theta_w, workers=args.threads)
    rows = [{k: r[k] for k in cfc.CMZI_COLUMNS} for r in grid.rows()]
    return _render(rows, cfc.CMZI_COLUMNS, args, {"N": args.n, "theta_w": args.theta_w})


def cmd_protocol(args) -> str:
    if not 0.0 < args.epsilon < 1.0:
        raise DomainError("--epsilon must lie in (0, 1)")
    rows = [protocol.report(args.epsilon, t1, args.theta_w) for t1 in args.t1]
    for r in rows:
        r.pop("schema_version", None)
    cols = ["epsilon", "t1", "theta_w", "P0", "P1", "q_prime", "n_gamma", "success", "D", "D_small_t"]
    return _render(rows, cols, args, {"epsilon": args.epsilon, "theta_w": args.theta_w})


def cmd_wavepacket(args) -> str:
    cfg = replace(wavepacket.WavepacketConfig(), n_points=args.n_points, coupling=args.coupling)
    keep = args.frames_dir is not None
    snaps = wavepacket.run_nmzi_scenario(args.coupling != 0.0, cfg, keep_fields=keep)
    if keep:
        layout = wavepacket.build_layout(cfg if args.coupling else replace(cfg, coupling=0.0))
        out_dir = Path(args.frames_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            for i, s in enumerate(snaps):
                with open(out_dir / f"frame_{i}_{s.stage}.csv", "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["x", "up2", "down2", "V"])
                    for row in s.frame_rows(layout):
                        w.writerow([_fmt(v) for v in row])
        except OSError as exc:
            raise OutputError(f"cannot write frames to {out_dir}: {exc}") from None
    rows = []
    for s in snaps:
        row = {"stage": s.stage, "time": s.time, "norm": s.norm}
        for name, spins in s.regions.items():
            row[f"{name}_up"] = spins["up"]
            row[f"{name}_down"] = spins["down"]
        rows.append(row)
    cols = ["stage", "time", "norm"] + [f"{r}_{s}" for r in wavepacket.REGIONS for s in ("up", "down")]
    targets = wavepacket.matrix_model_targets(cfg)
    return _render(rows, cols, args, {"coupling": args.coupling, "n_points": args.n_points,
                                      "matrix_model": {k: float(v) for k, v in targets.items()}})


COMMANDS = {"fisher": cmd_fisher, "shannon": cmd_shannon, "sweep-chained": cmd_sweep_chained,
            "sweep-cmzi": cmd_sweep_cmzi, "protocol": cmd_protocol, "wavepacket": cmd_wavepacket}


def _fail(kind: str, message: str, code: int) -> int:
    record = {"schema_version": SCHEMA_VERSION, "error": kind, "message": message, "exit_code": code}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_assemble_argv(argv))
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        text = COMMANDS[args.command](args)
        _emit(text, args.out)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_CODES["usage"])
    except OutputError as exc:
        return _fail("output", str(exc), EXIT_CODES["output"])
    except StabilityError as exc:
        return _fail(exc.kind, str(exc), EXIT_CODES["stability"])
    except (ConfigurationError, DomainError) as exc:
        return _fail(exc.kind, str(exc), EXIT_CODES["usage"])
    except CfcError as exc:
        return _fail(exc.kind, str(exc), EXIT_CODES["computation"])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
