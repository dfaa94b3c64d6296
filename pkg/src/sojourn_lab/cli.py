"""``sojourn-lab`` command line entry point.

Exit codes: 0 verdict pass, 1 verdict fail, 2 usage or config error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import EXPERIMENTS, GROUPS, ConfigError, ExperimentConfig, default_workers, run_experiment, write_outputs

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("sojourn_lab")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _matrix(text: str):
    """Rows separated by ';', entries by ',' e.g. ``1,2;3,4``."""
    try:
        return [[float(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad matrix {text!r}: {exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sojourn-lab", description="Simulate random fields and test uniform sojourn laws.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=None, help="R; defaults depend on the experiment")
    p.add_argument("--summits", type=int, default=20, help="number of kernel summits n")
    p.add_argument("--dim", type=int, default=3, help="ambient dimension d of the sphere")
    p.add_argument("--kernel-exp", type=float, default=0.1, help="kernel exponent beta")
    p.add_argument("--eval-points", type=int, default=100, help="Monte Carlo evaluation points k")
    p.add_argument("--antithetic", type=_bool, default=True)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--grid-size", type=int, default=1000, help="bridge grid size m")
    p.add_argument("--bump", type=float, default=3.0)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--group", choices=GROUPS, default="so", help="group for validate-nu")
    p.add_argument("--base", type=_matrix, default=None, help="oracle base matrix, e.g. '1,2;3,4'")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig(
            experiment=args.experiment, seed=args.seed, replications=args.replications, dim=args.dim,
            summits=args.summits, kernel_exp=args.kernel_exp, eval_points=args.eval_points,
            antithetic=args.antithetic, bins=args.bins, rows=args.rows, cols=args.cols,
            grid_size=args.grid_size, bump=args.bump, alpha=args.alpha, group=args.group, base=args.base,
        )
    except ConfigError as exc:
        print(f"sojourn-lab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    workers = args.workers if args.workers is not None else default_workers()
    if workers < 1:
        print("sojourn-lab: config error: workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE

    log.info("running %s with R=%d on %d worker(s)", cfg.experiment, cfg.replications, workers)
    try:
        result = run_experiment(cfg, workers)
    except ValueError as exc:
        print(f"sojourn-lab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        paths = write_outputs(result, args.out)
    except OSError as exc:
        print(f"sojourn-lab: I/O error writing {exc.filename or args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO

    verdict = "pass" if result.passed else "fail"
    if result.report is not None:
        r = result.report
        print(f"{cfg.experiment}: R={r.sample_size} KS D={r.ks_D:.5f} p={r.ks_p:.4g} "
              f"chi2={r.chi2_stat:.3f} df={r.chi2_df} p={r.chi2_p:.4g} verdict={verdict}")
    else:
        print(f"{cfg.experiment}: {len(result.extra['checks'])} checks, flagged={result.extra['flagged']} "
              f"verdict={verdict}")
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_PASS if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
