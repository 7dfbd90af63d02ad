"""Command-line front end: ``subchase --mode MODE [options] INSTANCE``.

Exit status is 0 on success, 2 for invalid input and 3 when an internal
invariant breaks.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
import zlib

import numpy as np

from . import bench
from .aos import TRIALS_CONST, maximize_static, maximize_with_curvature
from .chasing import TALG_MULT, chase_fast, chase_slow
from .constraints import PartitionConstraint
from .dynamics import anchor_bound, best_subset, decremental_chase, incremental_chase, sliding_window_chase
from .exceptions import CapacityError, InfeasibleError, InstanceError, InvariantError
from .instance import ground_from_dict, instance_from_dict
from .rounding import (
    partition_init,
    partition_step,
    pivotal_sample,
    recourse_of,
    round_stream_replicas,
)
from .setfunc import function_from_dict

log = logging.getLogger("subchase")

MODES = ("chase-slow", "chase-fast", "static", "curvature", "window", "incremental", "round-only", "bench")
RANDOMIZED = set(MODES) - {"chase-slow"}


class UsageError(Exception):
    pass


def stream_rng(seed, name):
    """Independent generator for a named sub-stream of the master seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode()),))
    return np.random.default_rng(ss)


def _num(v):
    v = float(v)
    return None if math.isnan(v) or math.isinf(v) else v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def load_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _set_str(labels, S):
    return " ".join(labels[i] for i in sorted(S))


def _check_targets(inst):
    try:
        inst.validate()
    except CapacityError:
        log.info("instance too large to validate targets by brute force; skipped")


def run_chase(args, data, out):
    inst = instance_from_dict(data)
    _check_targets(inst)
    labels = inst.ground.labels
    if args.mode == "chase-slow":
        traj = chase_slow(inst, args.eps, talg_mult=args.talg_mult)
    else:
        traj = chase_fast(inst, args.eps, args.delta, stream_rng(args.seed, "chase"),
                          talg_mult=args.talg_mult, witness_const=args.witness_const)
    traj.write_csv(os.path.join(out, "trajectory.csv"))
    write_rows(os.path.join(out, "step_log.csv"), ["time", "kind", "movement", "ledger"], traj.step_log)
    write_rows(os.path.join(out, "points.csv"), ["t"] + labels,
               [[t] + [float(v) for v in row] for t, row in enumerate(traj.points)])
    mask = traj.targets > 0
    ratio = float(np.mean(traj.certificates[mask] / traj.targets[mask])) if mask.any() else float("nan")
    summary = {"mode": args.mode, "eps": args.eps, "steps": inst.T, "total_recourse": traj.ledger,
               "mean_value_ratio": ratio, "separations": int(traj.sep_count.sum())}
    try:
        opt_r = bench.offline_min_recourse(inst)
        summary["offline_recourse"] = opt_r
        summary["competitive_ratio"] = traj.ledger / opt_r if opt_r > 0 else float("nan")
    except CapacityError:
        summary["offline_recourse"] = None
        summary["competitive_ratio"] = None
    if args.seed is not None:
        rng = stream_rng(args.seed, "round")
        state = partition_init(inst.constraint, rng)
        rows, prev = [], frozenset()
        for t, s in enumerate(inst.steps, 1):
            S = partition_step(state, traj.points[t], rng)
            rows.append([t, _set_str(labels, S), len(S ^ prev), float(s.f.value(S))])
            prev = S
        write_rows(os.path.join(out, "rounded.csv"), ["t", "set", "recourse", "value"], rows)
        reps = round_stream_replicas(traj.points[1:], inst.constraint, args.trials, stream_rng(args.seed, "replicas"))
        summary["rounded_recourse_mean"] = float(recourse_of(reps).sum(axis=1).mean())
        summary["rounding_replicas"] = args.trials
    return summary


def _static_problem(data):
    ground = ground_from_dict(data)
    labels = ground.labels
    if "function" in data:
        f = function_from_dict(data["function"], labels)
    else:
        f = function_from_dict(data["steps"][0]["function"], labels)
    if "constraint" in data:
        C = PartitionConstraint.from_dict(data["constraint"], labels)
    else:
        C = PartitionConstraint.cardinality(ground.n, int(data.get("k", 1)))
    return labels, f, C


def run_static(args, data, out):
    labels, f, C = _static_problem(data)
    rng = stream_rng(args.seed, args.mode)
    summary = {"mode": args.mode, "eps": args.eps}
    if args.mode == "static":
        x, lb = maximize_static(f, C, args.eps, args.delta, rng, witness_const=args.witness_const)
        S = pivotal_sample(x, C, rng)
        summary["value_lb"] = lb
    else:
        res = maximize_with_curvature(f, C, args.eps, args.delta, rng, return_details=True,
                                      witness_const=args.witness_const)
        x, S = res.x, res.S
        summary.update(curvature=res.c, gamma=res.gamma, lam=res.lam, certificate=res.certificate)
    summary["set"] = [labels[i] for i in sorted(S)]
    summary["value"] = f.value(S)
    try:
        opt, _ = bench.brute_opt(f, C)
        summary["brute_opt"] = opt
        summary["value_ratio"] = summary["value"] / opt if opt > 0 else float("nan")
    except CapacityError:
        summary["brute_opt"] = None
    write_rows(os.path.join(out, "solution.csv"), ["element", "x", "selected"],
               [[labels[i], float(x[i]), int(i in S)] for i in range(len(labels))])
    return summary


def run_dynamic(args, data, out):
    ground = ground_from_dict(data)
    labels = ground.labels
    f = function_from_dict(data["function"], labels)
    k = int(args.k if args.k is not None else data.get("k", 1))
    stream = [ground.index(lab) for lab in data["stream"]]
    rng = stream_rng(args.seed, args.mode)
    summary = {"mode": args.mode, "eps": args.eps, "k": k}
    if args.mode == "window":
        L = int(args.window if args.window is not None else data["window"])
        res = sliding_window_chase(stream, L, f, k, args.eps, rng=rng)
        trace = res.trace
        summary.update(window=L, max_anchors=max(res.anchors), anchor_bound=anchor_bound(k, args.eps))
    else:
        if data.get("direction", "insert") == "delete":
            res = decremental_chase(stream, stream, f, k, args.eps, rng=rng)
            alive = set(stream)
            opts = [best_subset(f, alive, k)[0]]
            for e in stream:
                alive.discard(e)
                opts.append(best_subset(f, alive, k)[0])
        else:
            res = incremental_chase(stream, f, k, args.eps, rng=rng)
            opts = [best_subset(f, stream[: t + 1], k)[0] for t in range(len(stream))]
        trace = [(t + 1, v, o, r, 0) for t, (v, o, r) in enumerate(zip(res.values, opts, res.recourse))]
        summary["recomputes"] = res.recomputes
    write_rows(os.path.join(out, "trace.csv"), ["t", "value", "opt", "recourse", "anchors"], trace)
    ratios = [v / o for _, v, o, _, _ in trace if o > 0]
    summary.update(total_recourse=int(sum(r for *_, r, _ in trace)),
                   min_value_ratio=min(ratios) if ratios else float("nan"),
                   amortized_recourse=sum(r for *_, r, _ in trace) / max(len(trace), 1))
    return summary


def run_round(args, data, out):
    ground = ground_from_dict(data)
    labels = ground.labels
    if "constraint" in data:
        C = PartitionConstraint.from_dict(data["constraint"], labels)
    else:
        C = PartitionConstraint.cardinality(ground.n, int(data.get("k", 1)))
    rows_in = data["fractional"]
    xs = np.array([[float(r[lab]) for lab in labels] if isinstance(r, dict) else r for r in rows_in], dtype=float)
    if xs.ndim != 2 or xs.shape[1] != ground.n:
        raise InstanceError("fractional rows must list one value per ground element")
    f = function_from_dict(data["function"], labels) if "function" in data else None
    rng = stream_rng(args.seed, "round")
    state = partition_init(C, rng, data.get("scheme", "interval"))
    rows, prev = [], frozenset()
    for t, x in enumerate(xs, 1):
        S = partition_step(state, x, rng)
        rows.append([t, _set_str(labels, S), len(S ^ prev), float(f.value(S)) if f else float("nan")])
        prev = S
    write_rows(os.path.join(out, "rounded.csv"), ["t", "set", "recourse", "value"], rows)
    frac = float(np.abs(np.diff(np.vstack([np.zeros(ground.n), xs]), axis=0)).sum())
    reps = round_stream_replicas(xs, C, args.trials, stream_rng(args.seed, "replicas"), data.get("scheme", "interval"))
    return {"mode": args.mode, "steps": len(xs), "fractional_recourse": frac,
            "rounded_recourse": sum(r[2] for r in rows),
            "rounded_recourse_mean": float(recourse_of(reps).sum(axis=1).mean()),
            "rounding_replicas": args.trials}


def run_bench(args, data, out):
    spec = dict(data.get("bench", {})) if data else {}
    kind = args.kind or spec.get("kind", "deletion-order")
    if kind != "deletion-order":
        raise UsageError("bench currently supports kind=deletion-order")
    ns = args.ns or spec.get("ns", [8, 16, 32, 64])
    runs = int(spec.get("runs", 5))
    rows, means = [], []
    for n in ns:
        led, rec, opt_r = [], [], None
        for r in range(runs):
            inst = bench.deletion_order(int(n), stream_rng(args.seed, f"order-{n}-{r}"))
            traj = chase_fast(inst, args.eps, args.delta, stream_rng(args.seed, f"chase-{n}-{r}"),
                              certify=False, talg_mult=args.talg_mult, witness_const=args.witness_const)
            reps = round_stream_replicas(traj.points[1:], inst.constraint, args.trials,
                                         stream_rng(args.seed, f"round-{n}-{r}"))
            led.append(traj.ledger)
            rec.append(float(recourse_of(reps).sum(axis=1).mean()))
            opt_r = bench.offline_min_recourse(inst)
        rows.append([int(n), float(np.mean(led)), float(np.mean(rec)), float(opt_r)])
        means.append(np.mean(rec))
    write_rows(os.path.join(out, "bench.csv"), ["n", "fractional_ledger", "rounded_recourse", "offline_recourse"], rows)
    a, b, r2 = bench.fit_log(ns, means)
    return {"mode": "bench", "kind": kind, "ns": list(ns), "runs": runs, "fit_intercept": a,
            "fit_slope": b, "fit_r2": r2, "offline_recourse": [r[3] for r in rows]}


def build_parser():
    p = argparse.ArgumentParser(prog="subchase", description="Submodular objective chasing with recourse.")
    p.add_argument("instance", nargs="?", help="instance JSON file")
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=1000, help="rounding replicas / statistical trials")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--talg-mult", type=float, default=TALG_MULT)
    p.add_argument("--witness-const", type=float, default=TRIALS_CONST)
    p.add_argument("--kind", default=None, help="bench scenario kind")
    p.add_argument("--ns", type=int, nargs="+", default=None, help="bench ground-set sizes")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    return p


def _validate_args(args):
    for name in ("eps", "delta"):
        v = getattr(args, name)
        if not 0 < v < 1:
            raise UsageError(f"--{name} must lie in (0, 1), got {v}")
    if args.mode in RANDOMIZED and args.seed is None:
        raise UsageError(f"--seed is required for mode {args.mode}")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.mode != "bench" and not args.instance:
        raise UsageError("an instance file is required")


def main(argv=None):
    level = os.environ.get("CHASE_LOG_LEVEL", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        _validate_args(args)
        data = load_json(args.instance) if args.instance else None
        os.makedirs(args.out, exist_ok=True)
        if args.mode in ("chase-slow", "chase-fast"):
            summary = run_chase(args, data, args.out)
        elif args.mode in ("static", "curvature"):
            summary = run_static(args, data, args.out)
        elif args.mode in ("window", "incremental"):
            summary = run_dynamic(args, data, args.out)
        elif args.mode == "round-only":
            summary = run_round(args, data, args.out)
        else:
            summary = run_bench(args, data, args.out)
        summary["seed"] = args.seed
        write_json(os.path.join(args.out, "summary.json"), summary)
    except InvariantError as exc:
        print(f"error: invariant violated: {exc}", file=sys.stderr)
        return 3
    except (UsageError, InstanceError, CapacityError, InfeasibleError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
