"""Command-line front end and Monte Carlo experiment harness.

Commands
--------
moments    print the deterministic-equivalent constants of a kernel
test       test one data file against a hypothesized kernel
histogram  Z-score fluctuations of repeated samples from one model
pairs      two-model experiment: sample from one kernel, test the other

Exit codes: 0 success/accept, 1 reject, 2 parse error, 3 dimension error,
4 non-reversible AR kernel.

Determinism: realization i always consumes the RNG stream with index i of
the master seed, so output CSVs are byte-identical for a fixed (config,
seed) regardless of the thread count.  Model draws use a reserved stream.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np
import scipy.stats

from . import __version__
from .arma2d import (
    ARMAKernelPair,
    DataShape,
    KernelFormatError,
    MAKernel,
    arma_to_ma,
    is_reversible,
    load_kernel_file,
    sample_ma_data,
)
from .gof import (
    ModelConstants,
    decision,
    empirical_trace_moments,
    hypothesis_to_ma,
    kernel_distance,
    model_constants,
    run_test,
    zscores_from_constants,
)
from .wishart import RngStream

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_PARSE = 2
EXIT_DIMENSION = 3
EXIT_NON_REVERSIBLE = 4

#: Stream index reserved for model/kernel draws; realizations use 0, 1, ...
MODEL_STREAM = 2**62

MIN_LEADING_MA = 0.1
MAX_AR_SIZE = 3
MAX_MA_SIZE = 6
PAIR_COPY_PROB = 0.4
PAIR_PERTURB_PROB = 0.4
PERTURB_LOG10_RANGE = (-2.5, 0.5)


class NonReversibleError(ValueError):
    """An AR kernel fails the reversibility check."""


class DimensionError(ValueError):
    """Input sizes are inconsistent with the requested shape."""


@dataclass(frozen=True)
class HistogramConfig:
    height: int = 16
    width: int = 16
    batch: int = 16
    runs: int = 10_000
    seed: int = 0
    critical: float = 1.96
    threads: int = 1
    kernel_file: str | None = None
    random_ma: tuple[int, int] | None = None
    random_arma: tuple[int, int, int, int] | None = None
    max_order: int = 24
    grid: int = 32
    tol: float = 1e-3


@dataclass(frozen=True)
class PairsConfig:
    height: int = 16
    width: int = 16
    batch: int = 16
    pairs: int = 300
    seed: int = 0
    critical: float = 1.96
    threads: int = 1
    max_order: int = 24
    grid: int = 32
    tol: float = 1e-3


@dataclass(frozen=True)
class HistogramRecord:
    run: int
    stream: int
    z1: float
    z2: float
    decision: str
    wall: float


@dataclass(frozen=True)
class PairRecord:
    run: int
    stream: int
    distance: float
    abs_z2: float
    label: str
    decision: str
    wall: float


def _fmt(x: float) -> str:
    return repr(float(x))


def _map_ordered(worker: Callable[[int], object], count: int, threads: int) -> list:
    if threads <= 1 or count <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(count)))


def _draw_reversible_ar(gen: np.random.Generator, p1: int, p2: int, grid: int, tol: float):
    """AR kernel with a[1,1] = 1, redrawn until reversible; returns redraw count."""
    redraws = 0
    while True:
        a = gen.uniform(-1.0, 1.0, size=(p1, p2))
        a[0, 0] = 1.0
        if is_reversible(a, grid, tol):
            return a, redraws
        redraws += 1


def _draw_ma_entries(gen: np.random.Generator, q1: int, q2: int, unit_leading: bool) -> np.ndarray:
    b = gen.uniform(-1.0, 1.0, size=(q1, q2))
    if unit_leading:
        b[0, 0] = 1.0
    else:
        while abs(b[0, 0]) < MIN_LEADING_MA:
            b[0, 0] = gen.uniform(-1.0, 1.0)
    return b


def _draw_pair_model(gen: np.random.Generator, cfg: PairsConfig):
    """One random model under the pair-experiment constraints.

    AR sizes are uniform on 1..3 and MA sizes on 1..6; a size-(1,1) AR kernel
    is the trivial one, making the model plain MA.
    """
    p1 = int(gen.integers(1, MAX_AR_SIZE + 1))
    p2 = int(gen.integers(1, MAX_AR_SIZE + 1))
    q1 = int(gen.integers(1, MAX_MA_SIZE + 1))
    q2 = int(gen.integers(1, MAX_MA_SIZE + 1))
    redraws = 0
    if p1 == 1 and p2 == 1:
        a = np.ones((1, 1))
    else:
        a, redraws = _draw_reversible_ar(gen, p1, p2, cfg.grid, cfg.tol)
    b = _draw_ma_entries(gen, q1, q2, unit_leading=False)
    if p1 == 1 and p2 == 1:
        return MAKernel(b), redraws
    return ARMAKernelPair(a, b), redraws


def _perturb_model(gen: np.random.Generator, model, cfg: PairsConfig):
    """Entrywise Gaussian perturbation with a log-uniform scale.

    The scale is halved every 8 failed reversibility attempts; after 64
    attempts the original model is returned unchanged.
    """
    scale = 10.0 ** gen.uniform(*PERTURB_LOG10_RANGE)
    redraws = 0
    for attempt in range(64):
        if isinstance(model, MAKernel):
            a = None
        else:
            a = model.a + gen.normal(0.0, scale, size=model.a.shape)
            a[0, 0] = 1.0
        b = model.b + gen.normal(0.0, scale, size=model.b.shape)
        while abs(b[0, 0]) < MIN_LEADING_MA:
            b[0, 0] = model.b[0, 0] + gen.normal(0.0, scale)
        if a is None:
            return MAKernel(b), redraws
        if is_reversible(a, cfg.grid, cfg.tol):
            return ARMAKernelPair(a, b), redraws
        redraws += 1
        if (attempt + 1) % 8 == 0:
            scale /= 2.0
    return model, redraws


def _model_expansion(model, max_order: int) -> np.ndarray:
    """MA expansion used for distances: b itself for MA, order-limited g for ARMA."""
    if isinstance(model, MAKernel):
        return model.b
    return arma_to_ma(model, max_order, max_order)


def _model_kernel(model, max_order: int) -> MAKernel:
    if isinstance(model, MAKernel):
        return model
    return MAKernel(arma_to_ma(model, max_order, max_order))


def _describe_model(model) -> str:
    if isinstance(model, MAKernel):
        return f"ma({model.q1},{model.q2})"
    return f"arma({model.p1},{model.p2},{model.q1},{model.q2})"


def resolve_histogram_kernel(cfg: HistogramConfig) -> tuple[MAKernel, str, int]:
    """The test kernel of a histogram run plus its description and AR redraws.

    Random kernels are drawn once per run from the reserved model stream:
    entries uniform on [-1, 1] with the leading entry fixed to 1, the AR part
    redrawn until reversible.
    """
    sources = [cfg.kernel_file is not None, cfg.random_ma is not None, cfg.random_arma is not None]
    if sum(sources) != 1:
        raise ValueError("exactly one kernel source must be configured")
    redraws = 0
    if cfg.kernel_file is not None:
        model = load_kernel_file(cfg.kernel_file)
        if isinstance(model, ARMAKernelPair) and not is_reversible(model.a, cfg.grid, cfg.tol):
            raise NonReversibleError(f"{cfg.kernel_file}: AR kernel is not reversible")
        desc = f"file:{cfg.kernel_file}"
    else:
        gen = RngStream(cfg.seed, MODEL_STREAM).generator()
        if cfg.random_ma is not None:
            q1, q2 = cfg.random_ma
            model = MAKernel(_draw_ma_entries(gen, q1, q2, unit_leading=True))
            desc = f"random-ma({q1},{q2})"
        else:
            p1, p2, q1, q2 = cfg.random_arma
            a, redraws = _draw_reversible_ar(gen, p1, p2, cfg.grid, cfg.tol)
            b = _draw_ma_entries(gen, q1, q2, unit_leading=True)
            model = ARMAKernelPair(a, b)
            desc = f"random-arma({p1},{p2},{q1},{q2})"
    return hypothesis_to_ma(model, cfg.max_order), desc, redraws


def run_histogram(cfg: HistogramConfig):
    """All realizations of the fluctuation experiment plus summary stats.

    Returns (records, summary, kernel, description).
    """
    kernel, desc, redraws = resolve_histogram_kernel(cfg)
    constants = model_constants(kernel, cfg.height, cfg.width, cfg.batch)
    shape = DataShape(cfg.height, cfg.width, cfg.batch)

    def worker(i: int) -> HistogramRecord:
        t0 = time.perf_counter()
        data = sample_ma_data(kernel, shape, RngStream(cfg.seed, i))
        z1, z2 = zscores_from_constants(data, constants)
        return HistogramRecord(
            run=i,
            stream=i,
            z1=z1,
            z2=z2,
            decision=decision(z2, cfg.critical),
            wall=time.perf_counter() - t0,
        )

    records = _map_ordered(worker, cfg.runs, cfg.threads)
    z2s = np.array([r.z2 for r in records])
    summary = {
        "runs": cfg.runs,
        "mean": float(np.mean(z2s)) if cfg.runs else float("nan"),
        "variance": float(np.var(z2s, ddof=1)) if cfg.runs > 1 else float("nan"),
        "ks": float(scipy.stats.kstest(z2s, "norm").statistic) if cfg.runs else float("nan"),
        "ar_redraws": redraws,
    }
    return records, summary, kernel, desc


def run_pairs(cfg: PairsConfig):
    """All realizations of the two-model experiment plus summary ratios.

    Per pair (one RNG stream each): draw a model; with probability 0.4 the
    second model is an exact copy, with probability 0.4 an entrywise
    perturbation at a log-uniform scale, otherwise an independent draw.
    Data is sampled from the first model and tested against the second; the
    pair is labeled true when the L1 distance of the MA expansions is below
    0.1, and the test outcome is positive (accept) when |z2| <= critical.
    """

    def worker(i: int) -> tuple[PairRecord, int]:
        t0 = time.perf_counter()
        gen = RngStream(cfg.seed, i).generator()
        model_1, redraws = _draw_pair_model(gen, cfg)
        u = gen.uniform()
        if u < PAIR_COPY_PROB:
            model_2 = model_1
        elif u < PAIR_COPY_PROB + PAIR_PERTURB_PROB:
            model_2, extra = _perturb_model(gen, model_1, cfg)
            redraws += extra
        else:
            model_2, extra = _draw_pair_model(gen, cfg)
            redraws += extra
        dist = kernel_distance(
            _model_expansion(model_1, cfg.max_order),
            _model_expansion(model_2, cfg.max_order),
        )
        shape = DataShape(cfg.height, cfg.width, cfg.batch)
        data = sample_ma_data(_model_kernel(model_1, cfg.max_order), shape, gen)
        constants = model_constants(
            _model_kernel(model_2, cfg.max_order), cfg.height, cfg.width, cfg.batch
        )
        _, z2 = zscores_from_constants(data, constants)
        record = PairRecord(
            run=i,
            stream=i,
            distance=dist,
            abs_z2=abs(z2),
            label="true" if dist < 0.1 else "false",
            decision=decision(z2, cfg.critical),
            wall=time.perf_counter() - t0,
        )
        return record, redraws

    results = _map_ordered(worker, cfg.pairs, cfg.threads)
    records = [r for r, _ in results]
    redraws = sum(k for _, k in results)
    n_true = sum(1 for r in records if r.label == "true")
    n_false = len(records) - n_true
    tn = sum(1 for r in records if r.label == "true" and r.decision == "reject")
    fp = sum(1 for r in records if r.label == "false" and r.decision == "accept")
    summary = {
        "pairs": len(records),
        "true": n_true,
        "false": n_false,
        "true_negative_over_true": tn / n_true if n_true else float("nan"),
        "false_positive_over_false": fp / n_false if n_false else float("nan"),
        "ar_redraws": redraws,
    }
    return records, summary


def _write_metadata(fh: TextIO, command: str, items: Sequence[tuple[str, object]]) -> None:
    fh.write(f"# fdez {command} v{__version__}\n")
    fh.write("# " + " ".join(f"{k}={v}" for k, v in items) + "\n")


def _write_kernel_metadata(fh: TextIO, kernel: MAKernel) -> None:
    fh.write(f"# kernel {kernel.q1} {kernel.q2}\n")
    for row in kernel.b:
        fh.write("# kernel_row " + " ".join(_fmt(x) for x in row) + "\n")


def write_histogram_csv(
    fh: TextIO, cfg: HistogramConfig, kernel: MAKernel, desc: str, records, summary
) -> None:
    _write_metadata(
        fh,
        "histogram",
        [
            ("height", cfg.height),
            ("width", cfg.width),
            ("batch", cfg.batch),
            ("runs", cfg.runs),
            ("seed", cfg.seed),
            ("critical", _fmt(cfg.critical)),
            ("kernel", desc),
            ("max_order", cfg.max_order),
            ("grid", cfg.grid),
            ("tol", _fmt(cfg.tol)),
        ],
    )
    _write_kernel_metadata(fh, kernel)
    fh.write("run,stream,z1,z2,decision\n")
    for r in records:
        fh.write(f"{r.run},{r.stream},{_fmt(r.z1)},{_fmt(r.z2)},{r.decision}\n")
    fh.write(
        "# summary runs={runs} mean={m} variance={v} ks={k} ar_redraws={a}\n".format(
            runs=summary["runs"],
            m=_fmt(summary["mean"]),
            v=_fmt(summary["variance"]),
            k=_fmt(summary["ks"]),
            a=summary["ar_redraws"],
        )
    )


def write_pairs_csv(fh: TextIO, cfg: PairsConfig, records, summary) -> None:
    _write_metadata(
        fh,
        "pairs",
        [
            ("height", cfg.height),
            ("width", cfg.width),
            ("batch", cfg.batch),
            ("pairs", cfg.pairs),
            ("seed", cfg.seed),
            ("critical", _fmt(cfg.critical)),
            ("max_order", cfg.max_order),
            ("grid", cfg.grid),
            ("tol", _fmt(cfg.tol)),
            ("min_leading_ma", _fmt(MIN_LEADING_MA)),
            ("copy_prob", _fmt(PAIR_COPY_PROB)),
            ("perturb_prob", _fmt(PAIR_PERTURB_PROB)),
        ],
    )
    # epsilon-offset columns keep log-log scatter plots finite at d = 0
    eps = 1e-8
    fh.write("run,stream,distance,abs_z2,distance_eps,abs_z2_eps,label,decision\n")
    for r in records:
        fh.write(
            f"{r.run},{r.stream},{_fmt(r.distance)},{_fmt(r.abs_z2)},"
            f"{_fmt(r.distance + eps)},{_fmt(r.abs_z2 + eps)},{r.label},{r.decision}\n"
        )
    fh.write(
        "# summary pairs={p} true={t} false={f} true_negative_over_true={tn} "
        "false_positive_over_false={fp} ar_redraws={a}\n".format(
            p=summary["pairs"],
            t=summary["true"],
            f=summary["false"],
            tn=_fmt(summary["true_negative_over_true"]),
            fp=_fmt(summary["false_positive_over_false"]),
            a=summary["ar_redraws"],
        )
    )


def _load_model(args) -> "MAKernel | ARMAKernelPair":
    if getattr(args, "ar", None) or getattr(args, "ma", None):
        if not (args.ar and args.ma):
            raise KernelFormatError("--ar and --ma must be given together")
        ar = load_kernel_file(args.ar)
        ma = load_kernel_file(args.ma)
        if not isinstance(ar, MAKernel) or not isinstance(ma, MAKernel):
            raise KernelFormatError("--ar/--ma files must each hold a single kernel block")
        return ARMAKernelPair(ar.b, ma.b)
    if getattr(args, "kernel", None):
        return load_kernel_file(args.kernel)
    raise KernelFormatError("no kernel given; use --kernel or --ar/--ma")


def _check_reversible(model, args) -> None:
    if isinstance(model, ARMAKernelPair) and not is_reversible(model.a, args.grid, args.tol):
        raise NonReversibleError("AR kernel is not reversible")


def cmd_moments(args) -> int:
    model = _load_model(args)
    _check_reversible(model, args)
    kernel = hypothesis_to_ma(model, args.max_order)
    constants = model_constants(kernel, args.height, args.width, args.batch)
    lines = [
        ("lambda", constants.lam),
        ("m_1", constants.moments[0]),
        ("m_2", constants.moments[1]),
        ("m_3", constants.moments[2]),
        ("m_4", constants.moments[3]),
        ("mu_box_1", constants.mu_box_1),
        ("mu_box_2", constants.mu_box_2),
        ("var_box_1", constants.var_box_1),
        ("var_box_2", constants.var_box_2),
        ("R", constants.ratio),
        ("bound", constants.bound),
    ]
    for key, value in lines:
        print(f"{key} = {_fmt(value)}")
    return EXIT_ACCEPT


def cmd_test(args) -> int:
    model = _load_model(args)
    _check_reversible(model, args)
    try:
        data = np.loadtxt(args.data, delimiter=",", ndmin=2)
    except OSError:
        raise
    except Exception as exc:
        raise KernelFormatError(f"{args.data}: cannot parse data CSV: {exc}") from exc
    if data.shape != (args.height * args.width, args.batch):
        raise DimensionError(
            f"data shape {data.shape} does not match "
            f"({args.height * args.width}, {args.batch})"
        )
    report = run_test(
        data,
        model,
        args.height,
        args.width,
        args.batch,
        critical=args.critical,
        max_order=args.max_order,
    )
    sys.stdout.write(report.to_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(",".join(report.csv_header()) + "\n")
            fh.write(",".join(report.csv_row()) + "\n")
    return EXIT_ACCEPT if report.decision == "accept" else EXIT_REJECT


def cmd_histogram(args) -> int:
    cfg = HistogramConfig(
        height=args.height,
        width=args.width,
        batch=args.batch,
        runs=args.runs,
        seed=args.seed,
        critical=args.critical,
        threads=args.threads,
        kernel_file=args.kernel,
        random_ma=tuple(args.random_ma) if args.random_ma else None,
        random_arma=tuple(args.random_arma) if args.random_arma else None,
        max_order=args.max_order,
        grid=args.grid,
        tol=args.tol,
    )
    records, summary, kernel, desc = run_histogram(cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_histogram_csv(fh, cfg, kernel, desc, records, summary)
    print(
        f"histogram runs={summary['runs']} mean={_fmt(summary['mean'])} "
        f"variance={_fmt(summary['variance'])} ks={_fmt(summary['ks'])}"
    )
    return EXIT_ACCEPT


def cmd_pairs(args) -> int:
    cfg = PairsConfig(
        height=args.height,
        width=args.width,
        batch=args.batch,
        pairs=args.pairs,
        seed=args.seed,
        critical=args.critical,
        threads=args.threads,
        max_order=args.max_order,
        grid=args.grid,
        tol=args.tol,
    )
    records, summary = run_pairs(cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_pairs_csv(fh, cfg, records, summary)
    print(
        f"pairs n={summary['pairs']} true={summary['true']} false={summary['false']} "
        f"true_negative_over_true={_fmt(summary['true_negative_over_true'])} "
        f"false_positive_over_false={_fmt(summary['false_positive_over_false'])}"
    )
    return EXIT_ACCEPT


def _add_shape_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--height", type=int, default=16, help="lattice height H")
    p.add_argument("--width", type=int, default=16, help="lattice width W")
    p.add_argument("--batch", type=int, default=16, help="batch size N")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", help="kernel file (one block = MA, two blocks = ARMA)")
    p.add_argument("--ar", help="AR kernel file (with --ma)")
    p.add_argument("--ma", help="MA kernel file (with --ar)")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--critical", type=float, default=1.96, help="two-sided critical value")
    p.add_argument("--max-order", dest="max_order", type=int, default=24,
                   help="truncation order of ARMA-to-MA expansions")
    p.add_argument("--grid", type=int, default=32, help="reversibility sampling grid")
    p.add_argument("--tol", type=float, default=1e-3, help="reversibility tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdez",
        description="Deterministic-equivalent Z-tests for 2D MA/ARMA models",
    )
    parser.add_argument("--version", action="version", version=f"fdez {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="print model constants of a kernel")
    _add_model_args(p)
    _add_shape_args(p)
    _add_common_args(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("test", help="test a data CSV against a kernel")
    p.add_argument("--data", required=True, help="HW x N data CSV, row r = (h-1)W + w")
    _add_model_args(p)
    _add_shape_args(p)
    _add_common_args(p)
    p.add_argument("--out", help="also write the report as a one-row CSV")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("histogram", help="Z-score fluctuations of one model")
    _add_model_args(p)
    p.add_argument("--random-ma", dest="random_ma", nargs=2, type=int,
                   metavar=("Q1", "Q2"), help="draw one random MA kernel")
    p.add_argument("--random-arma", dest="random_arma", nargs=4, type=int,
                   metavar=("P1", "P2", "Q1", "Q2"), help="draw one random ARMA kernel")
    _add_shape_args(p)
    _add_common_args(p)
    p.add_argument("--runs", type=int, default=10_000, help="number of realizations")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("pairs", help="two-model accept/reject experiment")
    _add_shape_args(p)
    _add_common_args(p)
    p.add_argument("--pairs", type=int, default=300, help="number of model pairs")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_pairs)

    return parser


def main(argv: "Sequence[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonReversibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NON_REVERSIBLE
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (KernelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        # shape-style violations from the library (d < n and friends)
        message = str(exc)
        print(f"error: {message}", file=sys.stderr)
        if "smaller than the batch" in message or "does not match" in message:
            return EXIT_DIMENSION
        return EXIT_PARSE


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
