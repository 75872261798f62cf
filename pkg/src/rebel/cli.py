"""Command-line entry point.

Exit codes: 0 success, 1 check failure (oracle-check divergence), 2 invalid
input or flags, 3 numeric-range abort during training.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .baselines import run_reduction_trial
from .boost import NumericOverflowError, TrainConfig, predict_all, train
from .costs import CostMatrix, load_cost_matrix, save_cost_matrix
from .evaluation import report_text, select_rounds
from .io import load_dataset, load_features, load_model, save_dataset, save_model, write_trace
from .loss import empirical_risk
from .synth import (gen_cost_matrix, gen_dataset, parse_spec_file, random_mixture_spec,
                    run_comparison, win_fraction, write_comparison_csv)

ORACLE_TOL = 1e-9


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("REBEL_WORKERS", "1")))
    except ValueError:
        return 1


def _load_costs(path: str | None, k: int) -> CostMatrix:
    if path is None:
        return CostMatrix.uniform(k)
    costs = load_cost_matrix(path)
    if costs.k != k:
        raise ValueError(f"cost matrix has {costs.k} classes, dataset has {k}")
    return costs


def cmd_train(args) -> int:
    data = load_dataset(args.data, args.labels)
    costs = _load_costs(args.costs, data.k)
    epsilon = None if args.epsilon == "auto" else float(args.epsilon)
    cfg = TrainConfig(rounds=args.rounds, tree_depth=args.depth, n_tau=args.ntau,
                      epsilon=epsilon, fit_a0=not args.no_a0, seed=args.seed,
                      early_stop_on_certificate=not args.no_early_stop)
    model, trace = train(data, costs, cfg)
    save_model(model, args.out)
    if args.trace:
        write_trace(trace, args.trace)
    final = trace.rounds[-1] if trace.rounds else None
    print(f"trained {len(model.rounds)} rounds (stop: {trace.stopped})")
    print(f"loss floor {trace.floor!r} certificate {trace.certificate!r}")
    if final is not None:
        print(f"final loss {final.loss!r} train error {final.train_error!r} "
              f"train risk {final.train_risk!r}")
    if args.val:
        val = load_dataset(args.val, args.val_labels or args.labels)
        best = select_rounds(model, val, costs)
        print(f"best validation round count: {best}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if args.labels:
        features = load_dataset(args.data, args.labels).features
    else:
        features = load_features(args.data)
    scores = model.scores(features)
    preds = np.argmax(scores, axis=1) + 1
    lines = ["pred," + ",".join(f"score_{i}" for i in range(1, model.k + 1))]
    for p, row in zip(preds, scores):
        lines.append(f"{p}," + ",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = load_dataset(args.data, args.labels)
    costs = _load_costs(args.costs, data.k)
    text = report_text(model, data, costs)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_synth(args) -> int:
    if args.spec:
        spec = parse_spec_file(args.spec)
    else:
        spec = random_mixture_spec(k=args.k, clusters_per_class=args.clusters,
                                   train_total=args.train_total, test_total=args.test_total,
                                   seed=args.seed)
    train_data, test_data = gen_dataset(spec)
    save_dataset(train_data, args.out_train)
    save_dataset(test_data, args.out_test)
    print(f"wrote {train_data.labels.shape[0]} train / {test_data.labels.shape[0]} test "
          f"samples, k={spec.k}")
    if args.out_costs:
        costs = gen_cost_matrix(spec.k, args.cost_seed, labels=train_data.labels)
        save_cost_matrix(costs, args.out_costs)
        print(f"wrote normalized cost matrix to {args.out_costs}")
    return 0


def cmd_compare(args) -> int:
    modes = {"on": [True], "off": [False], "both": [True, False]}[args.a0_mode]
    for fit_a0 in modes:
        rows = run_comparison(n_datasets=args.datasets, n_matrices=args.matrices,
                        rounds=args.rounds, depth=args.depth, seed=args.seed,
                        fit_a0=fit_a0, workers=args.workers)
        path = args.out
        if not fit_a0 and args.a0_mode == "both":
            base, ext = os.path.splitext(args.out)
            path = base + ".noa0" + (ext or ".csv")
        write_comparison_csv(rows, path)
        tag = "a0 on" if fit_a0 else "a0 off"
        print(f"[{tag}] {len(rows)} trials, rebel win fraction {win_fraction(rows):.3f} -> {path}")
    return 0


def cmd_oracle_check(args) -> int:
    seeds = np.random.default_rng(args.seed).integers(1, 2 ** 31, size=args.trials)
    jobs = [(int(s), args.n, args.d, args.rounds, args.ntau, args.debug_epsilon_scale)
            for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_oracle_job, jobs))
    else:
        results = [_oracle_job(j) for j in jobs]

    failures = 0
    for r in results:
        ok = (r["stump_mismatches"] == 0 and r["coeff_gap"] <= ORACLE_TOL
              and r["symmetry_gap"] <= ORACLE_TOL)
        status = "ok" if ok else "FAIL"
        print(f"seed {r['seed']}: {status} rounds={r['rounds_compared']} "
              f"stump_mismatches={r['stump_mismatches']} coeff_gap={r['coeff_gap']:.3e} "
              f"symmetry_gap={r['symmetry_gap']:.3e}")
        failures += 0 if ok else 1
    if failures:
        print(f"oracle check FAILED on {failures}/{len(results)} trials "
              f"(tolerance {ORACLE_TOL:g})", file=sys.stderr)
        return 1
    print(f"oracle check passed on {len(results)} trials")
    return 0


def _oracle_job(job):
    seed, n, d, rounds, n_tau, eps_scale = job
    return run_reduction_trial(seed, n=n, d=d, rounds=rounds, n_tau=n_tau,
                               epsilon_scale=eps_scale)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rebel",
        description="Cost-sensitive multi-class boosting with binary weak learners.")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--workers", type=int, default=_default_workers(),
                        help="worker processes where applicable (default REBEL_WORKERS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", parents=[shared], help="train a model")
    t.add_argument("--data", required=True, help="training CSV")
    t.add_argument("--labels", required=True,
                   help="label spec: col:IDX (0-based, negatives from the end) or file:PATH")
    t.add_argument("--costs", help="cost matrix CSV (default: 0-1 costs)")
    t.add_argument("--rounds", type=int, required=True)
    t.add_argument("--depth", type=int, default=1, help="weak-learner tree depth")
    t.add_argument("--ntau", type=int, default=200, help="thresholds per feature")
    t.add_argument("--epsilon", default="auto", help="smoothing, or 'auto' for 1/(2NK)")
    t.add_argument("--no-a0", action="store_true", help="skip the constant-offset fit")
    t.add_argument("--no-early-stop", action="store_true",
                   help="ignore the zero-risk certificate while training")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="model output path")
    t.add_argument("--trace", help="per-round trace CSV path")
    t.add_argument("--val", help="validation CSV for round selection")
    t.add_argument("--val-labels", help="label spec for --val (default: same as --labels)")
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[shared], help="score a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--labels", help="label spec if the CSV carries a label column to drop")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("eval", parents=[shared], help="evaluate a model on labeled data")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--costs", help="cost matrix CSV (default: 0-1 costs)")
    e.add_argument("--out", help="report path (default stdout)")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", parents=[shared], help="generate a synthetic problem")
    s.add_argument("--spec", help="key=value mixture spec file")
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--clusters", type=int, default=2)
    s.add_argument("--train-total", type=int, default=1000)
    s.add_argument("--test-total", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cost-seed", type=int, default=0)
    s.add_argument("--out-train", required=True)
    s.add_argument("--out-test", required=True)
    s.add_argument("--out-costs", help="also write a normalized random cost matrix")
    s.set_defaults(func=cmd_synth)

    f = sub.add_parser("compare", parents=[shared],
                       help="random-cost comparison harness (trained vs two-step)")
    f.add_argument("--datasets", type=int, default=10)
    f.add_argument("--matrices", type=int, default=20)
    f.add_argument("--rounds", type=int, default=100)
    f.add_argument("--depth", type=int, default=1)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--a0-mode", choices=["on", "off", "both"], default="both",
                   help="constant-offset fit variants to run")
    f.add_argument("--out", required=True, help="trial CSV path")
    f.set_defaults(func=cmd_compare)

    o = sub.add_parser("oracle-check", parents=[shared],
                       help="verify the binary reduction against discrete AdaBoost")
    o.add_argument("--trials", type=int, default=20)
    o.add_argument("--rounds", type=int, default=50)
    o.add_argument("--n", type=int, default=200)
    o.add_argument("--d", type=int, default=5)
    o.add_argument("--ntau", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--debug-epsilon-scale", type=float, default=1.0,
                   help="mis-scale the AdaBoost smoothing (diagnostic; 1.0 = matched)")
    o.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
