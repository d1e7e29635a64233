"""Command line interface.

    calibkit evaluate --input preds.csv --lens max --bins equal:10
    calibkit test     --input preds.csv --replicates 1000 --alpha 0.05
    calibkit diagram  --input preds.csv --bands --svg out.svg
    calibkit simulate --beta0 1 --beta1 1 --n 10000 --seed 7 --output sim.csv
    calibkit compare  a.csv b.csv
    calibkit matrix   --input preds.csv

Exit status: 0 success, 1 input error, 2 internal error; ``test`` exits 3
when the p-value is at most ``--alpha``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import diagram as dg
from . import gmm
from .binning import SimplexGrid, parse_bins
from .errors import CalibrationError, InvalidSpec
from .estimator import expected_miscalibration, restrict_to_bins
from .io import parse_dataset_file, write_csv
from .lens import apply_lens, parse_lens
from .resample import (
    EtaStatistic,
    ResamplePlan,
    compare,
    consistency_bands,
    pvalue_test,
    variant_matrix,
)
from .rng import DEFAULT_SEED, SEED_ENV_VAR, stream
from .types import DistanceKind

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_REJECT = 0, 1, 2, 3


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidSpec(f"{SEED_ENV_VAR}={env!r} is not an integer") from None
    return DEFAULT_SEED


def _parse_restrict(text):
    if text is None:
        return None
    head, sep, rest = text.partition(":")
    if head != "bins" or not sep or not rest:
        raise InvalidSpec(f"--restrict expects bins:i,j,k, got {text!r}")
    try:
        return sorted({int(v) for v in rest.split(",")})
    except ValueError:
        raise InvalidSpec(f"--restrict expects integer bin indices, got {text!r}") from None


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if getattr(args, "json", None):
        Path(args.json).write_text(text)
    sys.stdout.write(text)


def _load(path, args):
    return parse_dataset_file(path, args.format)


def _statistic(args, m: int) -> EtaStatistic:
    return EtaStatistic(
        lens=parse_lens(args.lens, m),
        bins=parse_bins(args.bins),
        distance=DistanceKind.parse(args.distance),
        frozen_partition=args.frozen_bins,
    )


def _plan(args, statistic) -> ResamplePlan:
    return ResamplePlan(replicates=args.replicates, seed=_seed(args), statistic=statistic,
                        workers=args.workers)


def _names(data):
    return None if data.class_names is None else list(data.class_names)


def cmd_evaluate(args) -> int:
    data = _load(args.input, args)
    lens = parse_lens(args.lens, data.m)
    induced = apply_lens(lens, data)
    partition = parse_bins(args.bins).build(induced.predictions)
    restrict = _parse_restrict(args.restrict)
    if restrict is not None:
        induced = restrict_to_bins(induced, partition, restrict)
    report = expected_miscalibration(induced, partition, DistanceKind.parse(args.distance), lens)
    out = report.to_dict()
    out["input"] = str(args.input)
    out["class_names"] = _names(data)
    out["restrict"] = restrict
    _emit(out, args)
    return EXIT_OK


def cmd_test(args) -> int:
    data = _load(args.input, args)
    result = pvalue_test(data, _plan(args, _statistic(args, data.m)))
    out = result.to_dict()
    out["input"] = str(args.input)
    out["class_names"] = _names(data)
    _emit(out, args)
    if args.alpha is not None and result.p_value <= args.alpha:
        return EXIT_REJECT
    return EXIT_OK


def cmd_diagram(args) -> int:
    data = _load(args.input, args)
    lens = parse_lens(args.lens, data.m)
    induced = apply_lens(lens, data)
    bins = parse_bins(args.bins)
    partition = bins.build(induced.predictions)
    seed = _seed(args)
    if induced.m == 2:
        bands = None
        if args.bands:
            bands = consistency_bands(induced, partition, (0.05, 0.95), args.replicates,
                                      seed, args.workers)
        analytic = None
        if args.analytic:
            try:
                b0, b1 = (float(v) for v in args.analytic.split(","))
            except ValueError:
                raise InvalidSpec(f"--analytic expects BETA0,BETA1, got {args.analytic!r}") \
                    from None
            analytic = gmm.analytic_deviation_curve(gmm.GmmModel(b0, b1))
        diagram = dg.build_diagram_1d(induced, partition, bands, analytic)
    elif induced.m == 3:
        if not isinstance(partition, SimplexGrid):
            raise InvalidSpec("three-class diagrams need --bins grid:K")
        if args.bands:
            raise InvalidSpec("--bands is only available for binary diagrams")
        labels = _group_labels(lens, data)
        diagram = dg.build_diagram_simplex(induced, partition, labels)
    else:
        raise InvalidSpec(
            f"induced problem has {induced.m} classes; diagrams need 2 or 3 "
            "(choose a lens such as max or groups:...)")
    out = diagram.to_dict()
    out["input"] = str(args.input)
    out["lens"] = lens.spec()
    out["scheme"] = partition.to_dict()
    if args.svg:
        Path(args.svg).write_text(dg.render_svg(diagram))
    _emit(out, args)
    return EXIT_OK


def _group_labels(lens, data):
    names = data.class_names
    if lens.kind == "groups":
        groups = lens.groups
    elif lens.kind == "canonical":
        groups = tuple((c,) for c in range(data.m))
    else:
        return ("other", "top 1", "top 2")
    return tuple(
        "{" + ",".join(names[c] if names else str(c) for c in g) + "}" if len(g) > 1
        else (names[g[0]] if names else str(g[0]))
        for g in groups
    )


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise InvalidSpec("--n must be at least 1")
    model = gmm.GmmModel(args.beta0, args.beta1)
    seed = _seed(args)
    data = gmm.simulate(model, args.n, stream(seed))
    write_csv(data, args.output if args.output else sys.stdout)
    return EXIT_OK


def cmd_compare(args) -> int:
    a = _load(args.first, args)
    b = _load(args.second, args)
    if a.m != b.m:
        raise InvalidSpec(f"models predict {a.m} and {b.m} classes")
    result = compare(a, b, _plan(args, _statistic(args, a.m)))
    out = result.to_dict(inputs=(args.first, args.second))
    _emit(out, args)
    return EXIT_OK


def cmd_matrix(args) -> int:
    data = _load(args.input, args)
    lenses = [parse_lens(s, data.m) for s in args.lenses.split(",")]
    distances = [DistanceKind.parse(s) for s in args.distances.split(",")]
    binnings = [parse_bins(s) for s in args.binnings.split(",")]
    rows = variant_matrix(data, lenses, distances, binnings, args.replicates, _seed(args),
                          args.workers)
    _emit({"input": str(args.input), "B": args.replicates, "seed": _seed(args), "rows": rows},
          args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calibkit",
                                     description="Evaluate calibration of probabilistic classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, estimator=True, resampling=True):
        p.add_argument("--format", choices=("csv", "jsonl"), default=None,
                       help="input format (default: from file extension)")
        if estimator:
            p.add_argument("--lens", default="max",
                           help="canonical | max | topk:K | groups:0,1|2 (default: max)")
            p.add_argument("--bins", default="equal:10",
                           help="equal:N | grid:K | data:THRESHOLD (default: equal:10)")
            p.add_argument("--distance", default="tv", help="tv | se (default: tv)")
        if resampling:
            p.add_argument("--replicates", "-B", type=int, default=1000)
            p.add_argument("--workers", type=int, default=1,
                           help="threads for resampling; 0 uses every CPU")
            p.add_argument("--frozen-bins", action="store_true",
                           help="keep data-dependent bins fixed across resamples")
        p.add_argument("--seed", type=int, default=None,
                       help=f"random seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})")
        p.add_argument("--json", metavar="PATH", help="also write the JSON report here")

    p = sub.add_parser("evaluate", help="binned expected and worst-case miscalibration")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--restrict", metavar="bins:LIST",
                   help="only use predictions falling in these bins")
    common(p, resampling=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("test", help="p-value of the hypothesis of perfect calibration")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--alpha", type=float, default=None,
                   help="exit with status 3 when p-value <= alpha")
    common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("diagram", help="reliability diagram as JSON and SVG")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--bands", action="store_true", help="add consistency bands")
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("--analytic", metavar="BETA0,BETA1",
                   help="overlay the true deviation of a Gaussian-mixture logistic model")
    common(p)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("simulate", help="sample a Gaussian-mixture logistic model")
    p.add_argument("--beta0", type=float, required=True)
    p.add_argument("--beta1", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--output", "-o", metavar="PATH", help="CSV path (default: stdout)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare two models by p-values, not raw estimates")
    p.add_argument("first")
    p.add_argument("second")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("matrix", help="estimates over lenses x distances x binnings")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--lenses", default="canonical,max")
    p.add_argument("--distances", default="tv,se")
    p.add_argument("--binnings", default="equal:10,data:1000")
    common(p, estimator=False)
    p.set_defaults(func=cmd_matrix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CalibrationError, OSError) as err:
        print(f"calibkit {args.command}: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as err:  # noqa: BLE001
        print(f"calibkit {args.command}: internal error: {type(err).__name__}: {err}",
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
