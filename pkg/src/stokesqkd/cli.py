"""Command-line front end.

Subcommands::

    analyze   dI surface over (r, eta)                  -> CSV/JSON
    simulate  Monte Carlo check of the channel formulas -> JSON report
    keygen    full key-distribution session             -> KeyResult JSON + transcript JSONL
    attack    cloning-attack sweep over n_B             -> CSV/JSON

Every option may also come from a flat JSON config file (``--config`` or the
``STOKESQKD_CONFIG`` environment variable) whose keys are the flag names
without dashes, e.g. ``{"vm": 4, "est-fraction": 0.2}``.  Precedence is
flag > config file > built-in default.

Exit statuses: 0 success, 2 invalid input, 3 insecure channel (session
aborted), 4 reconciliation failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import infotheory
from .channel import ChannelParams
from .errors import InsecureChannel, ReconciliationFailure, StokesQKDError
from .protocol import SessionConfig, run_session
from .validation import attack_sweep, default_attack_sweep, validate_channel

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INSECURE = 3
EXIT_RECONCILIATION = 4
EXIT_IO = 5

CONFIG_ENV = "STOKESQKD_CONFIG"

DEFAULTS = {
    "vm": 10.0,
    "eta": 1.0,
    "r": 0.0,
    "rounds": 100_000,
    "slices": 4,
    "beta": 0.9,
    "est_fraction": 0.1,
    "margin": 64,
    "seed": 0,
}

CSV_DIGITS = 12

SURFACE_HEADER = ["r", "eta", "n_B", "delta_i_bits"]
ATTACK_HEADER = [
    "n_B",
    "eta",
    "n_E",
    "i_ab_bits",
    "i_ae_bits",
    "delta_i_bits",
    "i_ab_empirical_bits",
    "i_ae_empirical_bits",
    "eve_advantage",
]


class CLIError(Exception):
    def __init__(self, message, status=EXIT_INVALID):
        super().__init__(message)
        self.status = status


def fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), f".{CSV_DIGITS}g")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise CLIError(f"cannot read config {path}: {exc.strerror}", EXIT_IO)
    except json.JSONDecodeError as exc:
        raise CLIError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(data, dict) or any(isinstance(v, (dict, list)) for v in data.values()):
        raise CLIError(f"config {path} must be a flat JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args, config: dict, key: str, default=None):
    """flag > config file > table default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return DEFAULTS.get(key, default)


def _common(p, *keys):
    if "vm" in keys:
        p.add_argument("--vm", type=float, help="modulation variance v_m (shot-noise units)")
    if "eta" in keys:
        p.add_argument("--eta", type=float, help="line transmission in (0, 1]")
    if "r" in keys:
        p.add_argument("--r", type=float, help="source thermal noise ratio r >= 0")
    if "rounds" in keys:
        p.add_argument("--rounds", type=int, help="number of rounds")
    if "slices" in keys:
        p.add_argument("--slices", type=int, help="slice count m")
    if "beta" in keys:
        p.add_argument("--beta", type=float, help="reconciliation efficiency")
    if "est_fraction" in keys:
        p.add_argument("--est-fraction", dest="est_fraction", type=float, help="fraction disclosed for estimation")
    if "margin" in keys:
        p.add_argument("--margin", type=int, help="security margin in bits")
    if "seed" in keys:
        p.add_argument("--seed", type=int, help="64-bit RNG seed")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--config", help=f"flat JSON config file (default: ${CONFIG_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stokesqkd", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form dI surface over (r, eta)")
    _common(p, "vm", "eta", "r")
    p.add_argument("--r-values", type=_float_list, help="comma-separated r axis (overrides --r)")
    p.add_argument("--eta-values", type=_float_list, help="comma-separated eta axis (overrides --eta)")
    p.add_argument("--format", choices=["csv", "json"])

    p = sub.add_parser("simulate", help="Monte Carlo validation of the channel formulas")
    _common(p, "vm", "eta", "r", "rounds", "seed")
    p.add_argument("--format", choices=["json"])

    p = sub.add_parser("keygen", help="run a full key-distribution session")
    _common(p, "vm", "eta", "r", "rounds", "slices", "beta", "est_fraction", "margin", "seed")
    p.add_argument("--transcript", help="transcript path (default: <out>.transcript.jsonl)")
    p.add_argument("--format", choices=["json"])

    p = sub.add_parser("attack", help="cloning-attack sweep over n_B")
    _common(p, "vm", "r", "rounds", "seed")
    p.add_argument("--nb-values", type=_float_list, help="comma-separated n_B sweep")
    p.add_argument("--format", choices=["csv", "json"])
    return parser


def write_output(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc.strerror}", EXIT_IO)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def surface_csv(grid: infotheory.SurfaceGrid) -> str:
    return _csv(SURFACE_HEADER, ([fmt(v) for v in cell] for cell in grid.cells()))


def surface_json(grid: infotheory.SurfaceGrid) -> str:
    return _json(
        {
            "v_m": grid.v_m,
            "r_values": [float(x) for x in grid.r_values],
            "eta_values": [float(x) for x in grid.eta_values],
            "columns": SURFACE_HEADER,
            "cells": [dict(zip(SURFACE_HEADER, cell)) for cell in grid.cells()],
        }
    )


def cmd_analyze(args, config) -> int:
    v_m = float(resolve(args, config, "vm"))
    r_axis = args.r_values or config.get("r_values")
    eta_axis = args.eta_values or config.get("eta_values")
    if isinstance(r_axis, str):
        r_axis = _float_list(r_axis)
    if isinstance(eta_axis, str):
        eta_axis = _float_list(eta_axis)
    # a scalar --r/--eta pins its axis only when set explicitly
    if r_axis is None and (args.r is not None or "r" in config):
        r_axis = [float(resolve(args, config, "r"))]
    if eta_axis is None and (args.eta is not None or "eta" in config):
        eta_axis = [float(resolve(args, config, "eta"))]
    grid = infotheory.generate_surface(r_axis, eta_axis, v_m)
    fmt_ = resolve(args, config, "format", "csv")
    write_output(args.out, surface_csv(grid) if fmt_ == "csv" else surface_json(grid))
    return EXIT_OK


def _params(args, config) -> ChannelParams:
    return ChannelParams.from_eta(
        float(resolve(args, config, "vm")),
        float(resolve(args, config, "eta")),
        float(resolve(args, config, "r")),
    )


def cmd_simulate(args, config) -> int:
    params = _params(args, config)
    report = validate_channel(params, int(resolve(args, config, "rounds")), int(resolve(args, config, "seed")))
    write_output(args.out, _json(report))
    return EXIT_OK


def cmd_keygen(args, config) -> int:
    seed = args.seed if args.seed is not None else config.get("seed")
    if seed is None:
        raise CLIError("keygen requires --seed (or 'seed' in the config file)")
    session = SessionConfig(
        params=_params(args, config),
        n_rounds=int(resolve(args, config, "rounds")),
        seed=int(seed),
        est_fraction=float(resolve(args, config, "est_fraction")),
        slices=int(resolve(args, config, "slices")),
        recon_efficiency=float(resolve(args, config, "beta")),
        security_margin_bits=int(resolve(args, config, "margin")),
    )
    status = EXIT_OK
    try:
        result, transcript = run_session(session)
    except InsecureChannel as exc:
        result, transcript, status = exc.result, exc.transcript, EXIT_INSECURE
        print(f"stokesqkd: insecure channel, session aborted: {exc}", file=sys.stderr)
    except ReconciliationFailure as exc:
        result, transcript, status = exc.result, exc.transcript, EXIT_RECONCILIATION
        print(f"stokesqkd: reconciliation failed: {exc}", file=sys.stderr)
    write_output(args.out, result.to_json())
    transcript_path = resolve(args, config, "transcript")
    if transcript_path is None and args.out is not None:
        transcript_path = f"{args.out}.transcript.jsonl"
    if transcript_path is not None:
        write_output(transcript_path, transcript.to_jsonl())
    if status == EXIT_OK and not (result.verified and result.final_length > 0):
        print("stokesqkd: session finished without a nonempty verified key", file=sys.stderr)
    return status


def cmd_attack(args, config) -> int:
    values = args.nb_values or config.get("nb_values") or default_attack_sweep()
    if isinstance(values, str):
        values = _float_list(values)
    rows = attack_sweep(
        values,
        float(resolve(args, config, "vm")),
        float(resolve(args, config, "r")),
        int(resolve(args, config, "rounds")),
        int(resolve(args, config, "seed")),
    )
    if resolve(args, config, "format", "csv") == "csv":
        text = _csv(ATTACK_HEADER, ([fmt(row[k]) for k in ATTACK_HEADER] for row in rows))
    else:
        text = _json({"rows": rows})
    write_output(args.out, text)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "keygen": cmd_keygen,
    "attack": cmd_attack,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config or os.environ.get(CONFIG_ENV))
        return COMMANDS[args.command](args, config)
    except CLIError as exc:
        print(f"stokesqkd: {exc}", file=sys.stderr)
        return exc.status
    except (StokesQKDError, ValueError) as exc:
        print(f"stokesqkd: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
