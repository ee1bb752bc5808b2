"""Command-line front end.

Every command writes its artifacts (CSV rows and/or JSON) into ``--out-dir``
(default ``$OBLIMED_OUT_DIR`` or the working directory) and prints either the
JSON summary or the CSV rows to stdout, depending on ``--format``. Each file
embeds the invocation config and the library version and nothing else that
varies, so repeated runs are byte-identical.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bidding import (
    BidSet,
    ThresholdUncovered,
    Universe,
    doubling_bids,
    dual_certificate,
    expected_ratio,
    optimal_det_ratio,
    ratio_table,
    randomized_bids,
    verify_dual_condition,
    worst_threshold,
)
from .core import InstanceError
from .formats import _parse_rational, instance_to_dict, read_instance
from .generate import generate_random_metric
from .hardness import (
    ADV_VERIFY_GUARD,
    build_adversarial,
    build_kl,
    kl_algorithm,
    verify_property_ii,
)
from .oblivious import ChainInvariantError, build_cost_competitive, build_size_competitive, verify_chain
from .solvers import ENUMERATION_GUARD, solve_sequence

OUT_DIR_ENV = "OBLIMED_OUT_DIR"
SOLVERS = {"exact": "exact", "local": "local_search", "greedy": "greedy_size"}
EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


class VerificationFailed(Exception):
    pass


def _num(x):
    """JSON/CSV rendering: exact values as ``"p/q"`` strings (``"3"`` for integers)."""
    if isinstance(x, Fraction):
        return str(x)
    return x


class Output:
    def __init__(self, args, config: dict):
        self.dir = Path(args.out_dir)
        self.fmt = args.format
        self.header = {"config": config, "version": __version__}
        self._stdout = None

    def _path(self, name):
        self.dir.mkdir(parents=True, exist_ok=True)
        return self.dir / name

    def csv(self, name: str, columns, rows):
        buf = io.StringIO()
        buf.write(f"# config: {json.dumps(self.header['config'], sort_keys=True)}\n")
        buf.write(f"# version: {__version__}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(v) for v in r])
        text = buf.getvalue()
        self._path(name).write_text(text)
        if self.fmt == "csv" and self._stdout is None:
            self._stdout = text

    def json(self, name: str, payload: dict, primary: bool = True):
        doc = {**self.header, **payload}
        text = json.dumps(doc, indent=1, default=_num) + "\n"
        self._path(name).write_text(text)
        if primary and self.fmt == "json":
            self._stdout = text
        return text

    def flush(self, fallback: str = ""):
        sys.stdout.write(self._stdout if self._stdout is not None else fallback)


def _config(args) -> dict:
    skip = {"func", "out_dir", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------------------
# bid
# ---------------------------------------------------------------------------


def _read_universe(path) -> Universe:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, list) or not data:
        raise InstanceError("universe file must hold a non-empty JSON list")
    vals = []
    for i, v in enumerate(data):
        if isinstance(v, float):
            vals.append(v)
        else:
            q = _parse_rational(v, f"universe[{i}]")
            vals.append(q.numerator if q.denominator == 1 else q)
    return Universe.finite(vals)


def _bid_universe(args) -> Universe:
    if getattr(args, "universe", None):
        return _read_universe(args.universe)
    if args.n is None or args.n < 1:
        raise InstanceError("need --n >= 1 or --universe")
    return Universe.integers(args.n)


def _bid_rows(bids: BidSet, universe: Universe):
    return [(T, p, r) for T, p, r in ratio_table(bids, universe)]


def cmd_bid(args) -> int:
    out = Output(args, _config(args))
    if args.strategy == "det":
        U = _bid_universe(args)
        bids = doubling_bids(U)
        T, _, r = worst_threshold(bids, U)
        out.csv("bid_det.csv", ("T", "payment", "ratio"), _bid_rows(bids, U))
        out.json("bid_det.json", {"bids": list(bids), "max_ratio": r, "argmax_T": T, "bound": None})
        ok = r <= 4
    elif args.strategy == "rand":
        U = _bid_universe(args)
        est = expected_ratio("rand", U, args.trials, seed=args.seed)
        rows = [(_num(T), float(m) * float(T), float(m)) for T, m in zip(U.values, est.mean)]
        out.csv("bid_rand.csv", ("T", "payment", "ratio"), rows)
        out.json(
            "bid_rand.json",
            {
                "trials": args.trials,
                "max_ratio": est.max_mean,
                "argmax_T": est.argmax_T,
                "max_stderr": float(est.stderr.max()),
                "bound": None,
            },
        )
        ok = True
    elif args.strategy == "optimal":
        if args.n is None or args.n < 1:
            raise InstanceError("need --n >= 1")
        ratio, bids = optimal_det_ratio(args.n)
        U = Universe.integers(args.n)
        T, _, r = worst_threshold(bids, U)
        out.csv("bid_optimal.csv", ("T", "payment", "ratio"), _bid_rows(bids, U))
        out.json(
            "bid_optimal.json",
            {
                "ratio": float(ratio),
                "ratio_exact": ratio,
                "bids": list(bids),
                "max_ratio": r,
                "argmax_T": T,
                "bound": None,
            },
        )
        ok = r == ratio
    else:
        cert = dual_certificate(args.U)
        ok = verify_dual_condition(cert)
        out.json(
            "bid_dual.json",
            {"U": args.U, "n": cert.n, "alpha": cert.alpha, "feasible": ok, "bound": cert.bound},
        )
    out.flush()
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# solve / oblivious
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    off = solve_sequence(inst, SOLVERS[args.solver], args.epsilon)
    out = Output(args, _config(args))
    rows = [
        (k, " ".join(str(f) for f in inst.sort_ids(off.facility_set(k))), off.cost(k))
        for k in range(1, off.n + 1)
    ]
    out.csv("solve.csv", ("k", "facilities", "cost"), rows)
    out.json("solve.json", off.to_dict(inst))
    out.flush()
    return EXIT_OK


def cmd_oblivious(args) -> int:
    inst = read_instance(args.instance)
    off = solve_sequence(inst, SOLVERS[args.solver], args.epsilon)
    if inst.n_facilities <= ENUMERATION_GUARD:
        oracle, oracle_tag = (off if args.solver == "exact" else solve_sequence(inst, "exact")), "exact"
    else:
        oracle, oracle_tag = off, off.tag
    if args.mode == "cost":
        chain = build_cost_competitive(inst, off, args.bidder, seed=args.seed)
    else:
        U = Universe.integers(off.n)
        bids = doubling_bids(U) if args.bidder == "det" else randomized_bids(U, args.seed)
        chain = build_size_competitive(inst, off, bids)
    rep = verify_chain(inst, chain, oracle)

    out = Output(args, _config(args))
    if args.mode == "cost":
        cols = ("k", "size", "cost", "opt", "cost_ratio")
        rows = [r[:5] for r in rep.rows]
        ok = rep.nesting_ok and rep.sizes_within_budget()
    else:
        cols = ("k", "size", "cost", "opt", "size_ratio")
        rows = [r[:4] + (r[5],) for r in rep.rows]
        # the cost guarantee presumes exact offline solutions
        ok = rep.nesting_ok and (args.solver != "exact" or rep.costs_within_opt())
    out.csv(f"chain_{args.mode}.csv", cols, rows)
    out.json(
        f"chain_{args.mode}.json",
        {
            "mode": args.mode,
            "solver": off.tag,
            "oracle": oracle_tag,
            "bids": list(chain.bids) if chain.bids is not None else [],
            "chain": chain.to_lists(inst),
            "nested": rep.nesting_ok,
            "max_cost_ratio": rep.max_cost_ratio,
            "max_size_ratio": rep.max_size_ratio,
        },
    )
    out.flush()
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# hardness / gen
# ---------------------------------------------------------------------------


def cmd_hardness(args) -> int:
    out = Output(args, _config(args))
    ok = True
    if args.gadget == "adv":
        adv = build_adversarial(args.m)
        summary = {
            "m": args.m,
            "cluster_costs": [adv.cluster_cost(level) for level in range(1, args.m + 1)],
            "delta": list(adv.delta),
            "clusters": [list(c) for c in adv.clusters],
        }
        if args.verify:
            if args.m > ADV_VERIFY_GUARD:
                raise InstanceError(f"--verify supports m <= {ADV_VERIFY_GUARD}")
            ok = verify_property_ii(adv)
            summary["property_ii"] = ok
        out.json(f"adv_m{args.m}.instance.json", instance_to_dict(adv.instance), primary=False)
        out.json(f"adv_m{args.m}.json", summary)
    else:
        kl = build_kl(args.l)
        summary = {"l": args.l, **kl.identities(), "target_ratio": 2 - Fraction(1, args.l)}
        if args.run_algorithm:
            if args.k is None:
                raise InstanceError("--run-algorithm needs --k")
            small, large, ratio = kl_algorithm(kl.instance, args.k, args.l)
            summary["algorithm"] = {
                "k": args.k,
                "F_k": kl.instance.sort_ids(small),
                "F_l": kl.instance.sort_ids(large),
                "ratio": ratio,
            }
            ok = ratio <= summary["target_ratio"]
        out.json(f"kl_l{args.l}.instance.json", instance_to_dict(kl.instance), primary=False)
        out.json(f"kl_l{args.l}.json", summary)
    out.flush()
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_gen(args) -> int:
    inst = generate_random_metric(args.customers, args.facilities, args.seed, args.numeric_mode)
    out = Output(args, _config(args))
    name = args.name or f"random_c{args.customers}_f{args.facilities}_s{args.seed}.json"
    text = out.json(name, instance_to_dict(inst))
    out.flush(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # shared flags may appear before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="oblimed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"oblimed {__version__}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=os.environ.get(OUT_DIR_ENV, "."))
    p.add_argument("--format", choices=("csv", "json"), default="json")
    sub = p.add_subparsers(dest="command", required=True)

    bid = sub.add_parser("bid", help="online bidding strategies")
    bsub = bid.add_subparsers(dest="strategy", required=True)
    for name in ("det", "rand"):
        b = bsub.add_parser(name, parents=[common])
        g = b.add_mutually_exclusive_group(required=True)
        g.add_argument("--n", type=int)
        g.add_argument("--universe", help="JSON list of universe values")
        if name == "rand":
            b.add_argument("--trials", type=int, default=10**4)
    b = bsub.add_parser("optimal", parents=[common])
    b.add_argument("--n", type=int, required=True)
    b = bsub.add_parser("dual", parents=[common])
    b.add_argument("--U", type=int, required=True)
    bid.set_defaults(func=cmd_bid)

    def instance_flags(q):
        q.add_argument("--instance", required=True)
        q.add_argument("--solver", choices=tuple(SOLVERS), default="exact")
        q.add_argument("--epsilon", type=float, default=0.1)

    s = sub.add_parser("solve", parents=[common], help="offline k-median for every k")
    instance_flags(s)
    s.set_defaults(func=cmd_solve)

    ob = sub.add_parser("oblivious", help="nested chains")
    osub = ob.add_subparsers(dest="action", required=True)
    b = osub.add_parser("build", parents=[common])
    instance_flags(b)
    b.add_argument("--mode", choices=("cost", "size"), default="cost")
    b.add_argument("--bidder", choices=("det", "rand"), default="det")
    ob.set_defaults(func=cmd_oblivious)

    h = sub.add_parser("hardness", help="lower-bound gadgets")
    hsub = h.add_subparsers(dest="gadget", required=True)
    b = hsub.add_parser("adv", parents=[common])
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--verify", action="store_true")
    b = hsub.add_parser("kl", parents=[common])
    b.add_argument("--l", type=int, required=True)
    b.add_argument("--run-algorithm", action="store_true")
    b.add_argument("--k", type=int)
    h.set_defaults(func=cmd_hardness)

    g = sub.add_parser("gen", parents=[common], help="random metric instance")
    g.add_argument("--customers", type=int, required=True)
    g.add_argument("--facilities", type=int, required=True)
    g.add_argument("--numeric-mode", choices=("rational", "f64"), default="rational")
    g.add_argument("--name", help="output file name inside --out-dir")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ChainInvariantError, VerificationFailed) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (InstanceError, ThresholdUncovered, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
