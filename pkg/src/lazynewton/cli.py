"""Command line entry point for the benchmark sweep.

Example:

    lazynewton-bench --problem logsumexp --n 50 --d 20 --mu 0.05 --seed 42 \
        --method gradreg --m 1 --m 5 --m d --eps 1e-9 --out results

Exit code 0 when every run finished, 2 when any run errored (the summary is
still written).  LAZY_NEWTON_THREADS caps the number of concurrent runs.
"""

from __future__ import annotations

import argparse
import sys

from .bench import METHODS, PROBLEMS, ExperimentSpec, format_summary, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lazynewton-bench",
                                description="Sweep Hessian-update frequencies for "
                                            "lazy Newton-type methods.")
    p.add_argument("--problem", choices=PROBLEMS, default="logsumexp")
    p.add_argument("--n", type=int, default=50, help="number of data rows")
    p.add_argument("--d", type=int, default=20, help="problem dimension")
    p.add_argument("--mu", type=float, default=0.05, help="smoothing parameter")
    p.add_argument("--delta", type=float, default=None,
                   help="norm-matrix perturbation (default: 1e-6 tr(A^T A)/d)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--method", action="append", choices=METHODS, dest="methods",
                   help="repeatable; default gradreg")
    p.add_argument("--m", action="append", dest="m_values", metavar="M",
                   help='repeatable; integer or the literal "d"')
    p.add_argument("--eps", type=float, default=1e-9, help="target dual gradient norm")
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--M", type=float, default=None, help="fixed regularization constant")
    p.add_argument("--M0", type=float, default=None, help="adaptive initial guess")
    p.add_argument("--phi", default="double-well", choices=["square", "double-well"],
                   help="link function for the separable problem")
    p.add_argument("--out", default="results", help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExperimentSpec(
        problem=args.problem, n=args.n, d=args.d, mu=args.mu, delta=args.delta,
        seed=args.seed,
        methods=args.methods or ["gradreg"],
        m_values=args.m_values or [1, "d"],
        eps=args.eps, max_iters=args.max_iters, M=args.M, M0=args.M0,
        out=args.out, phi=args.phi,
    )
    result = run_experiment(spec)
    print(format_summary(result))
    for rr in result.runs:
        if rr.status != "ok":
            print(f"run {rr.method} m={rr.m} failed: {rr.error}", file=sys.stderr)
    print(f"summary written to {result.summary_path}")
    return 0 if result.ok else 2


if __name__ == "__main__":
    sys.exit(main())
