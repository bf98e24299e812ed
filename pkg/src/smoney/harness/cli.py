"""Command line entry point.

Exit codes: 0 success, 1 an expectation or verification failed, 2 bad input,
3 an attack succeeded at least once.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from ..adversary import KINDS, CheatStrategy, run_double_spend
from ..bb84 import ChannelModel
from ..coordination import CoordinationParams
from ..errors import SMoneyError
from .engine import Transcript, run_scenario, verify_transcript
from .scenario import builtin_scenario_path, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ATTACK = 0, 1, 2, 3


def _default_seed() -> int | None:
    value = os.environ.get("SMONEY_SEED")
    return int(value) if value else None


def _print_run(result, out=None) -> int:
    for rec in result.transcript.records[1:]:
        reason = f"  ({rec['reason']})" if rec["reason"] else ""
        print(f"{rec['seq']:3d} {rec['action']:<15} {rec['actor'] or '':<8} {rec['token'] or '-':<4} "
              f"@ {rec['point']:<8} {rec['verdict']}{reason}")
    for name, v in result.verdicts.items():
        print(f"token {name} ({v['token_id']}): accepted at {v['accepted_at'] or 'nowhere'}")
    if out:
        result.transcript.write(out)
        print(f"transcript written to {out}")
    for m in result.mismatches:
        print(f"MISMATCH seq {m['seq']}: {m['action']} @ {m['point']} expected {m['expected']}, got {m['verdict']}",
              file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_FAIL


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    return _print_run(run_scenario(scenario, args.seed), args.out)


def cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    report = verify_transcript(Transcript.read(args.transcript), scenario)
    if report:
        print("transcript verified")
        return EXIT_OK
    print(f"divergence at record {report.index}\n  replay: {report.expected}\n  file:   {report.actual}")
    return EXIT_FAIL


def cmd_estimate(args) -> int:
    params = CoordinationParams(args.n, args.M, args.gamma)
    channel = ChannelModel(args.p_loss, args.p_err)
    strategy = CheatStrategy.default(args.strategy, args.M, args.theta)
    seed = args.seed if args.seed is not None else 0
    start = time.perf_counter()
    report = run_double_spend(strategy, params, channel, args.trials, np.random.default_rng(seed))
    d = report.to_dict()
    d["seed"] = seed
    d["seconds"] = round(time.perf_counter() - start, 3)
    print(json.dumps(d, indent=2))
    return EXIT_OK if report.successes == 0 else EXIT_ATTACK


def _demo(name: str, args) -> int:
    start = time.perf_counter()
    status = _print_run(run_scenario(load_scenario(builtin_scenario_path(name)), args.seed), args.out)
    print(f"{name}: {'ok' if status == EXIT_OK else 'FAILED'} in {time.perf_counter() - start:.3f}s")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoney", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a scenario file")
    r.add_argument("scenario")
    r.add_argument("--seed", type=int, default=_default_seed())
    r.add_argument("--out", help="write the transcript (JSON lines) here")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify-transcript", help="replay a scenario and compare with a transcript")
    v.add_argument("transcript")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("estimate-security", help="Monte Carlo double-spend estimate")
    e.add_argument("--strategy", choices=KINDS, default="single_basis")
    e.add_argument("--n", type=int, default=128)
    e.add_argument("--M", type=int, default=1)
    e.add_argument("--gamma", type=float, default=0.1)
    e.add_argument("--theta", type=float, default=np.pi / 8)
    e.add_argument("--p-loss", type=float, default=0.0)
    e.add_argument("--p-err", type=float, default=0.0)
    e.add_argument("--trials", type=int, default=1000)
    e.add_argument("--seed", type=int, default=_default_seed())
    e.set_defaults(func=cmd_estimate)

    for name in ("fig1", "fig2"):
        d = sub.add_parser(f"demo-{name}", help=f"run the bundled {name} scenario")
        d.add_argument("--seed", type=int, default=_default_seed())
        d.add_argument("--out")
        d.set_defaults(func=lambda a, name=name: _demo(name, a))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SMoneyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
