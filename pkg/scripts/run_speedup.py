#!/usr/bin/env python3
"""Compare serving-pipeline methods on the built-in workloads.

Prints one makespan/speedup table over all built-in workloads, then the
full interval timeline of the vector-migration method on the four-task
reference workload.

Usage:
    python3 scripts/run_speedup.py [--workload NAME] [--train-per-class X]
                                   [--embed-per-class X] [--migrate-per-class X]
                                   [--checkpoint-save X] [--restore X]
"""

import argparse

from unlearndb import BUILTIN_WORKLOADS, CostModel, Method, builtin_workload, simulate


def build_model(args: argparse.Namespace) -> CostModel:
    overrides = {
        name: getattr(args, name)
        for name in ("train_per_class", "embed_per_class", "migrate_per_class",
                     "checkpoint_save", "restore")
        if getattr(args, name) is not None
    }
    return CostModel(**overrides)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workload", choices=sorted(BUILTIN_WORKLOADS),
                        help="limit the table to one workload")
    parser.add_argument("--train-per-class", type=float)
    parser.add_argument("--embed-per-class", type=float)
    parser.add_argument("--migrate-per-class", type=float)
    parser.add_argument("--checkpoint-save", type=float)
    parser.add_argument("--restore", type=float)
    args = parser.parse_args()

    model = build_model(args)
    names = [args.workload] if args.workload else sorted(BUILTIN_WORKLOADS)

    header = (f"{'workload':<12} {'method':<16} {'makespan_s':>12} "
              f"{'speedup_vs_retrain':>20}")
    print(header)
    print("-" * len(header))
    for name in names:
        history, tasks = builtin_workload(name)
        spans = {m: simulate(tasks, model, m, history).makespan for m in Method}
        base = spans[Method.RETRAIN]
        for method in Method:
            ratio = base / spans[method] if spans[method] else float("inf")
            print(f"{name:<12} {method.value:<16} {spans[method]:>12.1f} "
                  f"{ratio:>20.2f}")

    if not args.workload or args.workload == "cifar10-t4":
        history, tasks = builtin_workload("cifar10-t4")
        timeline = simulate(tasks, model, Method.VECTOR_MIGRATE, history)
        print()
        print("vector-migrate timeline, four-task reference workload:")
        print(timeline.to_csv_text(), end="")


if __name__ == "__main__":
    main()
