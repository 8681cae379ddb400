"""Command-line interface: ``thorinfit {fit,simulate,sample,gof,diagnose}``.

Exit codes: 0 success, 2 usage (including unreadable input files and cost
guards), 3 data errors, 4 numeric failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datasets, gof
from .cubature import ConditioningError
from .cumulants import EmptyDataError
from .datasets import DataFormatError
from .laguerre import DomainError
from .projloss import DegenerateProjectionError, NumericError
from .sgd import DegenerateColumnError, FitConfig, fit
from .thorin import MeasureFormatError, ThorinMeasure, sample

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

logger = logging.getLogger("thorinfit")


class UsageError(Exception):
    pass


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _load_data(args) -> np.ndarray:
    data = datasets.load_csv(_existing(args.input), has_header=args.header)
    logger.info("read %d rows, %d columns from %s", *data.shape, args.input)
    return data


def _load_measure(path: str) -> ThorinMeasure:
    return ThorinMeasure.load(_existing(path))


def _measure_path(out: Path) -> Path:
    return out.with_name(out.stem + ".measure.json")


def cmd_fit(args) -> int:
    data = _load_data(args)
    config = FitConfig(
        n_atoms=args.n,
        m=args.m,
        max_iters=args.iters,
        lr=args.lr,
        beta1=args.beta1,
        beta2=args.beta2,
        adam_eps=args.adam_eps,
        seed=args.seed,
        lam=args.lam,
        tol=args.tol,
        eps_weight=args.threshold,
        eps_scale=args.threshold,
        batch_size=args.batch,
        decay_offset=args.decay,
    )
    report = fit(data, config)
    out = Path(args.out)
    report.save(out, include_wall_time=not args.no_wall_time)
    measure_out = Path(args.measure_out) if args.measure_out else _measure_path(out)
    report.measure.save(measure_out)
    final = report.loss_trace[-1] if report.loss_trace else float("nan")
    print(
        f"{report.measure.n} atoms kept of {config.n_atoms}; smoothed loss {final:.6g}; "
        f"{report.iterations} iterations ({report.termination}); {report.wall_time:.2f}s"
    )
    print(f"wrote {out} and {measure_out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.kind == "functional":
        X = datasets.simulate_functional(args.n, args.seed)
    else:
        if args.d is None:
            raise UsageError("--kind multiplicative needs --d")
        X, alpha = datasets.simulate_multiplicative(args.n, args.d, args.seed)
        logger.info("exponents: %s", np.array2string(alpha, precision=4))
    datasets.save_csv(args.out, X)
    print(f"wrote {X.shape[0]} x {X.shape[1]} to {args.out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    measure = _load_measure(args.measure)
    X = sample(measure, args.n, np.random.default_rng(args.seed))
    datasets.save_csv(args.out, X)
    print(f"wrote {X.shape[0]} x {X.shape[1]} to {args.out}")
    return EXIT_OK


def _truth_sampler(args):
    if args.truth is not None:
        pool = datasets.load_csv(_existing(args.truth), has_header=args.header)

        def draw(n, rng):
            return pool[rng.integers(0, len(pool), size=n)]

        return draw
    if args.kind == "functional":
        return datasets.functional_sampler
    if args.kind == "multiplicative":
        if args.d is None:
            raise UsageError("--kind multiplicative needs --d")
        return datasets.multiplicative_sampler(datasets.multiplicative_exponents(args.d, args.sim_seed))
    raise UsageError("give a truth source: --truth CSV or --kind functional|multiplicative")


def cmd_gof(args) -> int:
    truth = _truth_sampler(args)
    measure = _load_measure(args.measure)
    shift = args.shift

    def model(n, rng):
        return sample(measure, n, rng) + shift

    report = gof.run_gof(truth, model, N=args.N, M=args.M, repeats=args.repeats, seed=args.seed,
                         bins=args.bins, force=args.force, threads=args.threads)
    report.save(args.out)
    doc = report.to_dict()
    print(f"KS: {doc['ks_reject_rate']:.3f} of p-values < 0.05, histogram {doc['ks_hist']}")
    print(f"CvM: {doc['cvm_reject_rate']:.3f} of p-values < 0.05, histogram {doc['cvm_hist']}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    data = _load_data(args)
    measure = _load_measure(args.measure)
    if measure.d != data.shape[1]:
        raise gof.ShapeError(f"measure has dimension {measure.d}, data has {data.shape[1]} columns")
    rng = np.random.default_rng(args.seed)
    dirs = rng.random((args.directions, measure.d))
    model = sample(measure, args.samples or len(data), rng)
    levels = np.arange(1, args.levels + 1) / (args.levels + 1)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    qd, qm = gof.projected_quantiles(data, model, dirs, levels)
    _write_qq(out / "qq_directions.csv", "direction", levels, qd, qm)
    datasets.save_csv(out / "directions.csv", dirs, header=[f"c{j + 1}" for j in range(measure.d)])
    md, mm = gof.projected_quantiles(data, model, np.eye(measure.d), levels)
    _write_qq(out / "qq_marginals.csv", "marginal", levels, md, mm)
    summary = {
        "directions": args.directions,
        "levels": args.levels,
        "seed": args.seed,
        "median_relative_error_directions": gof.median_relative_quantile_error(qd, qm),
        "median_relative_error_marginals": gof.median_relative_quantile_error(md, mm),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(
        f"median relative quantile error: {summary['median_relative_error_directions']:.4f} over {args.directions} directions, "
        f"{summary['median_relative_error_marginals']:.4f} over marginals"
    )
    print(f"wrote {out}/qq_directions.csv, qq_marginals.csv, directions.csv, summary.json")
    return EXIT_OK


def _write_qq(path: Path, label: str, levels, qd, qm) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{label},level,data,model\n")
        for i in range(qd.shape[0]):
            for lv, a, b in zip(levels, qd[i], qm[i]):
                fh.write(f"{i},{float(lv)!r},{float(a)!r},{float(b)!r}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thorinfit", description="Fit and check multivariate generalized Gamma convolutions.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an atomic Thorin measure to a CSV dataset")
    p.add_argument("--input", required=True, help="CSV of nonnegative observations, one row each")
    p.add_argument("--header", action="store_true", help="skip the first line of the input")
    p.add_argument("--n", type=int, default=100, help="number of starting atoms")
    p.add_argument("--m", type=int, default=20, help="precision: Thorin moments 0..m per direction")
    p.add_argument("--iters", type=int, default=10_000, help="maximum number of iterations T")
    p.add_argument("--lr", type=float, default=1e-2, help="Adam learning rate")
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--adam-eps", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="lasso penalty on the total weight")
    p.add_argument("--tol", type=float, default=1e-16, help="stop when the smoothed gradient norm falls below this")
    p.add_argument("--threshold", type=float, default=0.0, help="drop weights and zero scale entries below this")
    p.add_argument("--batch", type=int, default=1, help="directions averaged per step")
    p.add_argument("--decay", type=float, default=None, metavar="T0", help="scale the step by sqrt(T0 / (T0 + t))")
    p.add_argument("--out", required=True, help="fit report (JSON)")
    p.add_argument("--measure-out", help="measure file (default: <out stem>.measure.json)")
    p.add_argument("--no-wall-time", action="store_true", help="omit the wall time so reruns are byte-identical")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("--kind", required=True, choices=["functional", "multiplicative"])
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--d", type=int, default=None, help="columns (multiplicative only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", help="draw from the Gamma convolution of a measure file")
    p.add_argument("--measure", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gof", help="resampled KS and CvM p-values of a measure against a truth source")
    p.add_argument("--measure", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--truth", help="CSV used as a resampling pool")
    src.add_argument("--kind", choices=["functional", "multiplicative"], help="simulator used as the truth")
    p.add_argument("--header", action="store_true", help="skip the first line of --truth")
    p.add_argument("--d", type=int, default=None, help="dimension of the multiplicative simulator")
    p.add_argument("--sim-seed", type=int, default=0, help="seed fixing the multiplicative exponents")
    p.add_argument("--N", type=int, default=500, help="size of each compared sample")
    p.add_argument("--M", type=int, default=200, help="benchmark repetitions")
    p.add_argument("--repeats", type=int, default=100, help="resampled p-values")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--shift", type=float, default=0.0, help="add a constant to model samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="bypass the N^2 and dimension guards")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("diagnose", help="QQ data for random projections and marginals")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--measure", required=True)
    p.add_argument("--directions", type=int, default=50)
    p.add_argument("--levels", type=int, default=99, help="quantile levels i / (L + 1), i = 1..L")
    p.add_argument("--samples", type=int, default=None, help="model sample size (default: data size)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, gof.CostGuardError) as exc:
        parser.print_usage(sys.stderr)
        print(f"thorinfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, MeasureFormatError, EmptyDataError, DegenerateColumnError, gof.ShapeError, DomainError, ValueError) as exc:
        print(f"thorinfit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, DegenerateProjectionError, ConditioningError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"thorinfit: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
