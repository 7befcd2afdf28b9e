"""Command-line front end.

Subcommands write plot-ready CSV files plus a ``manifest.txt`` of
``key=value`` lines.  A manifest (or any file in that format) can be fed
back with ``--config``; explicit flags override its entries.
"""

from __future__ import annotations

import argparse
import csv
import math
import re
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, protocol
from .dynamics import Channel, DegeneracyWarning, DegenerateGroundStateError
from .hamiltonian import ChainConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_NO_TRANSFER = 4
EXIT_ORACLE_FAIL = 5

ORACLE_TOL = 1e-8

_NUMERIC_TOKEN = re.compile(r"^-[0-9.eE+\-:,]+$")
_GRID = re.compile(r"^\s*([^:]+):([^:]+):([^:]+)\s*$")
_FLAGS = {"--strict", "--help", "-h", "--version"}
_BOOL_KEYS = {"strict"}
_MANIFEST_ONLY = {"command", "version", "wall_time", "outputs", "backend"}


class UsageError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{v:.12g}"


def _round(v: float) -> float:
    return float(f"{v:.12g}")


def parse_values(spec: str) -> np.ndarray:
    """``start:stop:count`` (inclusive, evenly spaced) or ``a,b,c``."""
    m = _GRID.match(spec)
    try:
        if m:
            start, stop, count = float(m[1]), float(m[2]), int(m[3])
            if count < 1:
                raise UsageError(f"grid count must be >= 1 in {spec!r}")
            return np.array([_round(v) for v in np.linspace(start, stop, count)])
        vals = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"malformed grid or list {spec!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"malformed grid or list {spec!r}")
    return np.array(vals)


def parse_grid(spec: str) -> np.ndarray:
    if not _GRID.match(spec or ""):
        raise UsageError(f"grid spec must look like start:stop:count, got {spec!r}")
    return parse_values(spec)


def normalize_argv(argv: list[str]) -> list[str]:
    """Let numeric tokens that start with '-' (e.g. ``-2:2:41`` or
    ``-0.6,0.6``) through argparse: attach them to the preceding option or,
    failing that, treat them as the grid spec."""
    out: list[str] = []
    for tok in argv:
        if _NUMERIC_TOKEN.match(tok) and not re.fullmatch(r"-\d*\.?\d+(e[+-]?\d+)?", tok):
            prev = out[-1] if out else ""
            if prev.startswith("--") and "=" not in prev and prev not in _FLAGS:
                out[-1] = f"{prev}={tok}"
            else:
                out.append(f"--grid={tok}")
        else:
            out.append(tok)
    return out


def read_config(path: str) -> dict[str, str]:
    entries = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        entries[key] = value
    return entries


def config_argv(entries: dict[str, str]) -> list[str]:
    out = []
    for key, value in entries.items():
        if key in _MANIFEST_ONLY or value == "":
            continue
        flag = "--" + key.replace("_", "-")
        if key in _BOOL_KEYS:
            if value.lower() in ("1", "true", "yes", "on"):
                out.append(flag)
        else:
            out.append(f"{flag}={value}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spinwire", description="Entanglement transfer through XXZ+DM spin chains."
    )
    p.add_argument("--version", action="version", version=f"spinwire {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, chain=True):
        sp.add_argument("--config", help="key=value file; explicit flags override it")
        sp.add_argument("--out", default=".", help="output directory")
        if chain:
            sp.add_argument("--nch", type=int, default=6, help="chain length N_ch (default 6, i.e. N=8)")
            sp.add_argument("--j", type=float, default=1.0, help="exchange coupling J")
            sp.add_argument(
                "--eps", type=float, default=0.0, help="longitudinal tie-break field on the chain"
            )
            sp.add_argument(
                "--strict",
                action="store_true",
                help="fail on a degenerate ground state instead of tie-breaking",
            )
            sp.add_argument("--tmax", type=float, help="time window (default 6 N / J~)")
            sp.add_argument("--dt", type=float, help="time step (default 0.02 / J~)")

    ev = sub.add_parser("evolve", help="single transfer run")
    common(ev)
    ev.add_argument("--delta", type=float, default=0.0)
    ev.add_argument("--d", type=float, default=0.0)
    ev.add_argument("--beta", type=float, help="inverse temperature (omit for the ground state)")

    sw = sub.add_parser("sweep", help="E_max and t_opt over one parameter")
    common(sw)
    sw.add_argument("--axis", required=True, choices=["delta", "d", "beta", "phi"])
    sw.add_argument("grid_pos", nargs="?", metavar="GRID", help="start:stop:count")
    sw.add_argument("--grid", help=argparse.SUPPRESS)
    sw.add_argument("--delta", default="0", help="value list or grid for delta")
    sw.add_argument("--d", default="0", help="value list or grid for D")
    sw.add_argument("--beta", type=float, help="inverse temperature for --channel thermal")
    sw.add_argument("--jtilde", type=float, default=1.0, help="fixed J~ for the phi axis")
    sw.add_argument("--channel", choices=["ground", "thermal"], default="ground")

    oc = sub.add_parser("oracle-check", help="compare closed forms with the numerics (two-spin chain)")
    common(oc, chain=False)
    oc.add_argument("--grid", type=int, default=5, help="cells per axis on [-1,1] x [0,2]")
    oc.add_argument("--ntimes", type=int, default=200)
    oc.add_argument("--delta", help="restrict delta values (list or grid)")
    oc.add_argument("--d", help="restrict D values (list or grid)")
    oc.add_argument("--j", type=float, default=1.0)

    ve = sub.add_parser("velocity", help="spin-wave velocity and simulated t_opt over D")
    common(ve)
    ve.add_argument("--delta", default="0.6", help="value list for delta")
    ve.add_argument("--d", default="0:4:9", help="value list or grid for D")
    return p


# helpers -------------------------------------------------------------------------


def _time_grid(args, cfg: ChainConfig):
    if args.tmax is None and args.dt is None:
        return None
    base = protocol.TimeGrid.default(cfg)
    return protocol.TimeGrid(
        args.tmax if args.tmax is not None else base.t_max, args.dt if args.dt is not None else base.dt
    )


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_manifest(out: Path, args, params: dict, outputs, t0: float):
    lines = [f"command={args.command}", f"version={__version__}"]
    lines += [f"{k}={v}" for k, v in params.items()]
    lines.append("outputs=" + ",".join(outputs))
    lines.append(f"wall_time={time.perf_counter() - t0:.3f}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")


def _chain_params(args) -> dict:
    keys = ("nch", "j", "eps", "tmax", "dt")
    d = {k: fmt(getattr(args, k)) if getattr(args, k) is not None else "" for k in keys}
    d["strict"] = "true" if args.strict else "false"
    return d


def _cfg(args, delta: float, d: float) -> ChainConfig:
    try:
        return ChainConfig(args.nch, args.j, delta, d, args.eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# subcommands -----------------------------------------------------------------------


def cmd_evolve(args, out: Path, t0: float) -> int:
    cfg = _cfg(args, args.delta, args.d)
    channel = Channel.ground() if args.beta is None else Channel.thermal(args.beta)
    rec = protocol.run_transfer(cfg, channel, _time_grid(args, cfg), tie_break=not args.strict)
    _write_csv(
        out / "transfer.csv", ["t", "concurrence", "fidelity"], zip(rec.times, rec.concurrence, rec.fidelity)
    )
    _write_csv(out / "summary.csv", ["t_opt", "e_max"], [(rec.t_opt, rec.e_max)])
    params = _chain_params(args)
    params.update(delta=fmt(args.delta), d=fmt(args.d), beta="" if args.beta is None else fmt(args.beta))
    _write_manifest(out, args, params, ["transfer.csv", "summary.csv"], t0)
    if not rec.transferred:
        print(
            f"no-transfer: concurrence of (0', end) never peaks above {protocol.PEAK_THRESHOLD:g} "
            f"within t_max={fmt(rec.times[-1])}; increase --tmax",
            file=sys.stderr,
        )
        return EXIT_NO_TRANSFER
    print(f"t_opt={fmt(rec.t_opt)} e_max={fmt(rec.e_max)} fidelity={fmt(rec.fidelity_at_topt)}")
    return EXIT_OK


def cmd_sweep(args, out: Path, t0: float) -> int:
    spec = args.grid or args.grid_pos
    grid = parse_grid(spec)
    try:
        protocol.check_grid(grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    deltas = parse_values(args.delta)
    ds = parse_values(args.d)
    channel = Channel.ground()
    if args.channel == "thermal" and args.axis != "beta":
        if args.beta is None:
            raise UsageError("--channel thermal needs --beta")
        channel = Channel.thermal(args.beta)
    template = _cfg(args, float(deltas[0]), 0.0)
    tg = _time_grid(args, template)
    tie = not args.strict
    if args.axis == "delta":
        res = protocol.sweep_delta(template, grid, ds, channel, tg, tie)
    elif args.axis == "d":
        if np.any(grid < 0):
            raise UsageError("D must be >= 0")
        res = protocol.sweep_d(template, grid, deltas, channel, tg, tie)
    elif args.axis == "beta":
        if np.any(grid < 0):
            raise UsageError("beta must be >= 0")
        if len(deltas) != 1:
            raise UsageError("beta sweeps take a single --delta")
        res = protocol.sweep_thermal(template, grid, ds, tg, tie)
    else:
        res = protocol.sweep_phi_fixed_jtilde(args.jtilde, deltas, grid, args.nch, channel, tg, tie)
    name = f"sweep_{args.axis}.csv"
    header = ["axis_value", "d", "e_max", "t_opt", "fidelity_at_topt", "delta", "error"]
    rows = [(p.axis_value, p.d, p.e_max, p.t_opt, p.fidelity_at_topt, p.delta, p.error) for p in res.points]
    _write_csv(out / name, header, rows)
    params = _chain_params(args)
    params.update(
        axis=args.axis,
        grid=spec,
        delta=args.delta,
        d=args.d,
        channel=args.channel,
        beta="" if args.beta is None else fmt(args.beta),
        jtilde=fmt(args.jtilde),
    )
    _write_manifest(out, args, params, [name], t0)
    print(f"{len(rows)} rows -> {out / name}")
    return EXIT_OK


def cmd_oracle_check(args, out: Path, t0: float) -> int:
    if args.grid < 1 or args.ntimes < 2:
        raise UsageError("--grid must be >= 1 and --ntimes >= 2")
    deltas = (
        parse_values(args.delta)
        if args.delta
        else np.array([_round(v) for v in np.linspace(-1, 1, args.grid)])
    )
    ds = parse_values(args.d) if args.d else np.array([_round(v) for v in np.linspace(0, 2, args.grid)])
    if np.any(ds < 0):
        raise UsageError("D must be >= 0")
    cells = [(float(dl), float(d)) for dl in deltas for d in ds]
    errs = protocol.parallel_map(
        lambda c: protocol.oracle_discrepancy(c[0], c[1], args.ntimes, args.j), cells
    )
    worst = 0.0
    for (dl, d), e in zip(cells, errs):
        flag = "ok" if e <= ORACLE_TOL else "FAIL"
        print(f"delta={fmt(dl)} d={fmt(d)} max_abs_diff={e:.3e} {flag}")
        worst = max(worst, e)
    _write_csv(
        out / "oracle_check.csv",
        ["delta", "d", "max_abs_diff"],
        [(dl, d, e) for (dl, d), e in zip(cells, errs)],
    )
    params = {
        "grid": str(args.grid),
        "ntimes": str(args.ntimes),
        "delta": args.delta or "",
        "d": args.d or "",
        "j": fmt(args.j),
    }
    _write_manifest(out, args, params, ["oracle_check.csv"], t0)
    if worst > ORACLE_TOL:
        print(f"FAIL max_abs_diff={worst:.3e} > {ORACLE_TOL:g}")
        return EXIT_ORACLE_FAIL
    print(f"PASS max_abs_diff={worst:.3e}")
    return EXIT_OK


def cmd_velocity(args, out: Path, t0: float) -> int:
    deltas = parse_values(args.delta)
    ds = parse_values(args.d)
    if np.any(ds < 0):
        raise UsageError("D must be >= 0")
    template = _cfg(args, float(deltas[0]), 0.0)
    res = protocol.sweep_d(template, ds, deltas, None, _time_grid(args, template), not args.strict)
    rows = []
    for p in res.points:
        jt = math.copysign(math.hypot(args.j, p.d), args.j)
        try:
            v_inv = 1.0 / protocol.spin_wave_velocity(p.delta, jt)
            err = p.error
        except ValueError as exc:
            v_inv = math.nan
            err = "; ".join(filter(None, [str(exc), p.error]))
        rows.append((p.d, v_inv, p.t_opt, p.delta, err))
    _write_csv(out / "velocity.csv", ["d", "v_inverse", "t_opt", "delta", "error"], rows)
    params = _chain_params(args)
    params.update(delta=args.delta, d=args.d)
    _write_manifest(out, args, params, ["velocity.csv"], t0)
    print(f"{len(rows)} rows -> {out / 'velocity.csv'}")
    return EXIT_OK


def _show_warning(message, category, *args, **kwargs):
    print(f"spinwire: warning: {message}", file=sys.stderr)


_COMMANDS = {
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
    "velocity": cmd_velocity,
}


def main(argv=None) -> int:
    argv = normalize_argv(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    t0 = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        if args.config:
            extra = config_argv(read_config(args.config))
            args = parser.parse_args(argv[:1] + normalize_argv(extra) + argv[1:])
    except UsageError as exc:
        parser.error(str(exc))
    except OSError as exc:
        parser.error(f"cannot read config: {exc}")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("always", DegeneracyWarning)
            warnings.showwarning = _show_warning
            return _COMMANDS[args.command](args, out, t0)
    except UsageError as exc:
        print(f"spinwire: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateGroundStateError as exc:
        print(f"spinwire: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
