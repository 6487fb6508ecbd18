"""Command-line interface: file ingestion, orchestration, JSON reports.

Three subcommands::

    kemeny-lab analyze  --chain FILE [--out FILE]
    kemeny-lab simulate --chain FILE --game I|II --state K --episodes N \\
                        --seed S [--out FILE]
    kemeny-lab torus    --L1 A --L2 B [--eps E --episodes N --seed S] \\
                        [--out FILE]

stdout (or --out) carries machine-readable JSON only; human-readable
messages go to stderr.  Exit codes: 0 success, 2 validation failure,
3 truncated Monte Carlo episodes.  Reports are versioned ("schema": 1),
carry seeds and episode counts on every MC record and residual diagnostics
on every exact value, and serialize all numbers with 17 significant digits
so identical runs are byte-identical.

Chain files are either JSON ``{"name": ..., "states": [...], "P": [[...]]}``
or CSV edge lists with header ``from,to,prob`` (missing pairs are zero;
states are inferred from the labels and ordered lexicographically).

Environment: ``KEMENY_LAB_THREADS`` caps Monte Carlo parallelism,
``KEMENY_LAB_NO_NUMBA=1`` selects the pure-Python reference kernels.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import chain_mc, torus_mc
from .chain import Chain, validate_chain
from .errors import KemenyLabError
from .invariants import ChainInvariants, analyze_chain
from .torus import (FlatTorus, expected_hitting_formula, mass_trace_identity,
                    robins_mass, regularized_trace, torus_green)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TRUNCATED = 3


# ---------------------------------------------------------------------------
# JSON with fixed float formatting (17 significant digits, byte-stable)
# ---------------------------------------------------------------------------

def _write_json(obj, fp, indent=0):
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            fp.write("{}")
            return
        fp.write("{\n")
        for k, (key, value) in enumerate(obj.items()):
            fp.write(pad + "  " + json.dumps(str(key)) + ": ")
            _write_json(value, fp, indent + 2)
            fp.write(",\n" if k < len(obj) - 1 else "\n")
        fp.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            fp.write("[]")
            return
        fp.write("[")
        for k, value in enumerate(obj):
            _write_json(value, fp, indent)
            if k < len(obj) - 1:
                fp.write(", ")
        fp.write("]")
    elif isinstance(obj, bool) or obj is None:
        fp.write(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        fp.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            fp.write(json.dumps(None))
        else:
            fp.write(format(x, ".17g"))
    elif isinstance(obj, str):
        fp.write(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _write_json(obj.tolist(), fp, indent)
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def render_report(report: dict) -> str:
    buf = io.StringIO()
    _write_json(report, buf)
    buf.write("\n")
    return buf.getvalue()


def _emit(report: dict, out_path):
    text = render_report(report)
    if out_path:
        with open(out_path, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# chain file ingestion
# ---------------------------------------------------------------------------

def load_chain_file(path: str) -> Chain:
    """Parse a JSON matrix document or a CSV edge list into a valid Chain."""
    with open(path) as fp:
        text = fp.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        if "P" not in doc:
            raise ValueError(f"{path}: JSON chain file needs a 'P' matrix")
        labels = doc.get("states")
        return validate_chain(doc["P"], labels)
    return _chain_from_csv(text, path)


def _chain_from_csv(text: str, path: str) -> Chain:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0][:3]] != ["from", "to", "prob"]:
        raise ValueError(f"{path}: expected CSV header 'from,to,prob'")
    edges = []
    states = set()
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 3:
            raise ValueError(f"{path}:{r}: need 'from,to,prob'")
        src, dst, prob = row[0].strip(), row[1].strip(), float(row[2])
        edges.append((src, dst, prob))
        states.update((src, dst))
    labels = sorted(states)
    index = {s: k for k, s in enumerate(labels)}
    P = np.zeros((len(labels), len(labels)))
    for src, dst, prob in edges:
        P[index[src], index[dst]] = prob
    return validate_chain(P, labels)


def _resolve_state(chain: Chain, token: str) -> int:
    if chain.labels and token in chain.labels:
        return chain.labels.index(token)
    try:
        state = int(token)
    except ValueError:
        raise ValueError(f"unknown state {token!r}") from None
    if not 0 <= state < chain.n:
        raise ValueError(f"state {state} out of range [0, {chain.n})")
    return state


# ---------------------------------------------------------------------------
# report blocks
# ---------------------------------------------------------------------------

def _chain_blocks(chain: Chain, inv: ChainInvariants) -> dict:
    if inv.eigenvalues is not None:
        eigenvalues = {"re": inv.eigenvalues.real, "im": inv.eigenvalues.imag}
    else:
        eigenvalues = None
    return {
        "chain": {
            "n": chain.n,
            "labels": list(chain.labels) if chain.labels else None,
        },
        "stationary": inv.w,
        "kemeny": {
            "by_start": inv.kemeny_by_start,
            "trace": inv.kemeny,
            "spectral": inv.kemeny_spectral,
            "density": inv.density,
        },
        "hitting_times": inv.M,
        "fundamental_matrix": inv.Z,
        "greens_matrix": inv.G,
        "eigenvalues": eigenvalues,
        "diagnostics": inv.diagnostics,
    }


def _mc_record(kind, estimate, target, extra=None):
    z = None
    if estimate.stderr and estimate.stderr > 0:
        z = (estimate.mean - target) / estimate.stderr
    rec = {
        "kind": kind,
        "mean": estimate.mean,
        "stderr": estimate.stderr,
        "episodes": estimate.episodes,
        "seed": estimate.seed,
        "horizon_hits": estimate.horizon_hits,
        "target": target,
        "z": z,
    }
    if extra:
        rec.update(extra)
    return rec


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    chain = load_chain_file(args.chain)
    inv = analyze_chain(chain)
    report = {"schema": SCHEMA_VERSION}
    report.update(_chain_blocks(chain, inv))
    _emit(report, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    chain = load_chain_file(args.chain)
    if args.episodes < 1000:
        raise ValueError(f"--episodes must be >= 1000, got {args.episodes}")
    state = _resolve_state(chain, args.state)
    inv = analyze_chain(chain)
    if args.game == "I":
        mode = chain_mc.GameI(start=state)
        target = inv.kemeny
        target_kind = "kemeny_constant"
    else:
        mode = chain_mc.GameII(target=state)
        target = float(inv.density[state])
        target_kind = "density"
    estimate = chain_mc.play_game(chain, mode, args.episodes, args.seed)
    report = {"schema": SCHEMA_VERSION}
    report.update(_chain_blocks(chain, inv))
    report["mc"] = [_mc_record(
        f"game_{args.game}", estimate, target,
        {"state": state, "target_kind": target_kind})]
    _emit(report, args.out)
    if estimate.horizon_hits > 0:
        print(f"warning: {estimate.horizon_hits} truncated episodes",
              file=sys.stderr)
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_torus(args) -> int:
    if args.L1 <= 0 or args.L2 <= 0:
        raise ValueError(f"side lengths must be positive, got "
                         f"{args.L1}, {args.L2}")
    torus = FlatTorus(args.L1, args.L2)
    identity = mass_trace_identity(torus)
    trace = regularized_trace(torus)
    torus_block = {
        "L1": torus.L1,
        "L2": torus.L2,
        "volume": torus.volume,
        "m": robins_mass(torus),
        "reg_trace": trace.value,
        "reg_trace_scale": trace.scale_factor,
        "identity_residual": identity.residual,
        "identity_lhs": identity.lhs,
        "identity_rhs": identity.rhs,
    }
    report = {"schema": SCHEMA_VERSION, "torus": torus_block}

    exit_code = EXIT_OK
    if args.eps is not None:
        rows = []
        x = (0.0, 0.0)
        y = (torus.L1 / 2.0, torus.L2 / 2.0)
        for eps in args.eps:
            cfg = torus_mc.BmConfig(step=(eps / 10.0) ** 2, epsilon=eps,
                                    episodes=args.episodes, seed=args.seed)
            estimate = torus_mc.estimate_bm_hitting(torus, x, y, cfg)
            formula = expected_hitting_formula(torus, x, y, eps)
            rows.append({
                "eps": eps,
                "mc_mean": estimate.mean,
                "mc_stderr": estimate.stderr,
                "formula": formula,
                "episodes": estimate.episodes,
                "seed": estimate.seed,
                "horizon_hits": estimate.horizon_hits,
            })
            if estimate.horizon_hits > 0:
                exit_code = EXIT_TRUNCATED
        torus_block["green_xy"] = torus_green(torus, x, y)
        torus_block["mc_table"] = rows
        if args.out:
            _write_csv_table(_csv_sibling(args.out), rows)
    _emit(report, args.out)
    if exit_code == EXIT_TRUNCATED:
        print("warning: truncated episodes present", file=sys.stderr)
    return exit_code


def _csv_sibling(out_path: str) -> str:
    return (out_path[:-5] if out_path.endswith(".json") else out_path) + ".csv"


def _write_csv_table(path: str, rows):
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["eps", "mc_mean", "mc_stderr", "formula"])
        for row in rows:
            writer.writerow([format(row[k], ".17g")
                             for k in ("eps", "mc_mean", "mc_stderr",
                                       "formula")])


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kemeny-lab",
        description="Hide-and-seek spectral invariants: exact pipelines "
                    "with Monte Carlo cross-checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="exact chain pipeline")
    p.add_argument("--chain", required=True, help="JSON or CSV chain file")
    p.add_argument("--out", help="write the JSON report here (default stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo game vs exact target")
    p.add_argument("--chain", required=True, help="JSON or CSV chain file")
    p.add_argument("--game", required=True, choices=["I", "II"])
    p.add_argument("--state", required=True,
                   help="seeker start (game I) or hider target (game II); "
                        "index or label")
    p.add_argument("--episodes", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("torus", help="flat-torus invariants and BM games")
    p.add_argument("--L1", type=float, required=True)
    p.add_argument("--L2", type=float, required=True)
    p.add_argument("--eps", type=float, action="append",
                   help="detection radius; repeatable, each adds an MC run "
                        "from (0,0) to the far corner at h = (eps/10)^2")
    p.add_argument("--episodes", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here (default "
                                 "stdout); MC rows also land in a .csv "
                                 "sibling")
    p.set_defaults(func=cmd_torus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KemenyLabError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint():  # console script shim
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
