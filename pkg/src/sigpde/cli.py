"""Command-line front end for signature-kernel workflows.

Subcommands wrap the library one-to-one: ``kernel`` evaluates one pair,
``gram`` exports kernel matrices, ``mmd`` compares path samples, ``krr``
fits and applies kernel ridge regression, ``reduce`` sparsifies a weighted
ensemble, ``convergence`` tabulates refinement errors, ``simulate-fbm``
samples fractional Brownian motion, and ``serve`` starts the HTTP service.

Commands emit CSV or JSON on stdout (or ``--out``); CSV gets the effective
config as a ``#`` comment line, JSON embeds it as a ``config`` member.
Exit codes: 0 success, 2 input error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import RunConfig
from .data import TimeSeries, load_csv, sample_fbm, time_augment, write_csv
from .errors import InputError, NumericalError, SigPdeError
from .gram import GramMatrix, gram, krr_fit, krr_predict, mmd_squared, write_gram_csv
from .reduction import WeightedEnsemble, reduce_ensemble
from .solver import convergence_study, signature_pde_kernel

__all__ = ["main", "build_parser"]


def _onoff(value: str) -> bool:
    if value == "on":
        return True
    if value == "off":
        return False
    raise argparse.ArgumentTypeError(f"expected 'on' or 'off', got {value!r}")


def _add_common(parser: argparse.ArgumentParser, *, sampling: bool = False) -> None:
    group = parser.add_argument_group("computation options")
    group.add_argument("--config", metavar="PATH",
                       help="JSON config file; flags override its values")
    group.add_argument("--static-kernel", choices=("linear", "rbf"), dest="static_kernel",
                       help="static kernel for the lifted increment grid")
    group.add_argument("--sigma", type=float, help="rbf bandwidth")
    group.add_argument("--lambda", type=int, dest="lam", metavar="N",
                       help="dyadic refinement level")
    group.add_argument("--scheme", choices=("explicit", "implicit"),
                       help="finite-difference scheme")
    group.add_argument("--rescale", type=_onoff, metavar="{on,off}",
                       help="rescale inputs to max |entry| 1 (default on)")
    group.add_argument("--threads", type=int, metavar="N",
                       help="Gram workers; 0 = one per CPU (env SIGPDE_THREADS)")
    group.add_argument("--seed", type=int, metavar="N", help="PRNG seed")
    group.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    if not sampling:
        group.add_argument("--time-augment", type=_onoff, dest="time_augment",
                           metavar="{on,off}", default=False,
                           help="prepend normalized time as a channel (default off)")


def _effective_config(args) -> RunConfig:
    cfg = RunConfig()
    env = os.environ.get("SIGPDE_THREADS")
    if env is not None:
        try:
            cfg = cfg.override(threads=int(env))
        except ValueError:
            raise InputError(f"SIGPDE_THREADS must be an integer, got {env!r}") from None
    if getattr(args, "config", None):
        cfg = RunConfig.load(args.config, base=cfg)
    return cfg.override(
        static_kernel=getattr(args, "static_kernel", None),
        sigma=getattr(args, "sigma", None),
        lam=getattr(args, "lam", None),
        scheme=getattr(args, "scheme", None),
        rescale=getattr(args, "rescale", None),
        threads=getattr(args, "threads", None),
        seed=getattr(args, "seed", None),
    )


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_series(path: str, layout: str, used_stdin: list) -> list[TimeSeries]:
    if path == "-":
        if used_stdin:
            raise InputError("only one input may come from stdin")
        used_stdin.append(True)
        return load_csv(sys.stdin, layout)
    return load_csv(path, layout)


def _one_series(path: str, used_stdin: list) -> TimeSeries:
    collection = _load_series(path, "wide", used_stdin)
    if len(collection) != 1:
        raise InputError(f"{path}: expected exactly one series, got {len(collection)}")
    return collection[0]


def _maybe_augment(series, args):
    if getattr(args, "time_augment", False):
        if isinstance(series, TimeSeries):
            return time_augment(series)
        return [time_augment(s) for s in series]
    return series


def _provenance(cfg: RunConfig, args, **extra) -> dict:
    record = cfg.as_dict()
    if getattr(args, "time_augment", False):
        record["time_augment"] = True
    record.update(extra)
    return record


def _cmd_kernel(args) -> int:
    cfg = _effective_config(args)
    used: list = []
    x = _maybe_augment(_one_series(args.x, used), args)
    y = _maybe_augment(_one_series(args.y, used), args)
    value = signature_pde_kernel(x, y, kernel=cfg.to_static_kernel(), lam=cfg.lam,
                                 scheme=cfg.scheme, rescale=cfg.rescale)
    _emit(repr(value) + "\n", args.out)
    return 0


def _cmd_gram(args) -> int:
    cfg = _effective_config(args)
    used: list = []
    xs = _maybe_augment(_load_series(args.xs, "long", used), args)
    ys = None
    if args.ys is not None:
        ys = _maybe_augment(_load_series(args.ys, "long", used), args)
    matrix = gram(xs, ys, kernel=cfg.to_static_kernel(), lam=cfg.lam,
                  scheme=cfg.scheme, rescale=cfg.rescale, threads=cfg.threads)
    matrix = GramMatrix(matrix.values, _provenance(cfg, args))
    _emit(write_gram_csv(matrix), args.out)
    return 0


def _cmd_mmd(args) -> int:
    cfg = _effective_config(args)
    used: list = []
    xs = _maybe_augment(_load_series(args.xs, "long", used), args)
    ys = _maybe_augment(_load_series(args.ys, "long", used), args)
    value = mmd_squared(xs, ys, variant=args.variant, kernel=cfg.to_static_kernel(),
                        lam=cfg.lam, scheme=cfg.scheme, rescale=cfg.rescale,
                        threads=cfg.threads)
    payload = {"mmd_squared": value, "variant": args.variant,
               "config": _provenance(cfg, args)}
    _emit(json.dumps(payload) + "\n", args.out)
    return 0


def _load_targets(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    values = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            values.append(float(stripped))
        except ValueError:
            raise InputError(f"{path} line {lineno}: {stripped!r} is not a number") from None
    if not values:
        raise InputError(f"{path}: no targets found")
    return np.array(values)


def _cmd_krr_fit(args) -> int:
    cfg = _effective_config(args)
    used: list = []
    train = _maybe_augment(_load_series(args.train, "long", used), args)
    targets = _load_targets(args.targets)
    if len(targets) != len(train):
        raise InputError(f"{len(train)} training series but {len(targets)} targets")
    matrix = gram(train, kernel=cfg.to_static_kernel(), lam=cfg.lam, scheme=cfg.scheme,
                  rescale=cfg.rescale, threads=cfg.threads)
    weights = krr_fit(matrix, targets, ridge=args.ridge)
    payload = {"weights": weights.tolist(), "ridge": args.ridge,
               "train_count": len(train), "config": _provenance(cfg, args)}
    _emit(json.dumps(payload) + "\n", args.out)
    return 0


def _cmd_krr_predict(args) -> int:
    cfg = _effective_config(args)
    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            model = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {args.model}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {args.model}: {exc}") from None
    if not isinstance(model, dict) or "weights" not in model:
        raise InputError(f"{args.model}: not a krr fit output (missing 'weights')")
    weights = np.asarray(model["weights"], dtype=np.float64)
    used: list = []
    test = _maybe_augment(_load_series(args.test, "long", used), args)
    train = _maybe_augment(_load_series(args.train, "long", used), args)
    if len(train) != weights.shape[0]:
        raise InputError(
            f"model has {weights.shape[0]} weights but {args.train} holds "
            f"{len(train)} series"
        )
    matrix = gram(test, train, kernel=cfg.to_static_kernel(), lam=cfg.lam,
                  scheme=cfg.scheme, rescale=cfg.rescale, threads=cfg.threads)
    preds = krr_predict(matrix, weights)
    lines = ["# " + json.dumps(_provenance(cfg, args), sort_keys=True),
             "index,prediction"]
    lines += [f"{i},{p:.17g}" for i, p in enumerate(preds)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_reduce(args) -> int:
    cfg = _effective_config(args)
    if (args.support is None) == (args.penalty is None):
        raise InputError("give exactly one of --support and --penalty")
    used: list = []
    paths = _maybe_augment(_load_series(args.ensemble, "long", used), args)
    ensemble = WeightedEnsemble.uniform(paths)
    result = reduce_ensemble(
        ensemble, penalty=args.penalty, support_size=args.support,
        kernel=cfg.to_static_kernel(), lam=cfg.lam, scheme=cfg.scheme,
        rescale=cfg.rescale, threads=cfg.threads, step=args.step,
        max_iter=args.max_iter, tol=args.tol,
    )
    payload = {
        "beta": result.beta.tolist(),
        "support_indices": result.support.tolist(),
        "loss_history": result.loss_history.tolist(),
        "penalty_used": result.penalty,
        "iterations": result.iterations,
        "converged": result.converged,
        "fixed_point_residual": result.fixed_point_residual,
        "config": _provenance(cfg, args),
    }
    _emit(json.dumps(payload) + "\n", args.out)
    return 0


def _cmd_convergence(args) -> int:
    cfg = _effective_config(args)
    used: list = []
    x = _maybe_augment(_one_series(args.x, used), args)
    y = _maybe_augment(_one_series(args.y, used), args)
    table = convergence_study(x, y, kernel=cfg.to_static_kernel(),
                              lambda_max=args.lambda_max, scheme=cfg.scheme,
                              reference=args.reference, rescale=cfg.rescale)
    lines = ["# " + json.dumps(_provenance(cfg, args, reference=args.reference),
                               sort_keys=True),
             "lambda,sup_error"]
    lines += [f"{lam},{err:.17g}" for lam, err in table]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_simulate_fbm(args) -> int:
    cfg = _effective_config(args)
    paths = sample_fbm(args.hurst, args.length, count=args.count, seed=cfg.seed)
    comment = json.dumps(
        _provenance(cfg, args, command="simulate-fbm", hurst=args.hurst,
                    length=args.length, count=args.count),
        sort_keys=True,
    )
    _emit(write_csv(paths, layout="long", header_comment=comment), args.out)
    return 0


def _cmd_serve(args) -> int:
    try:
        import uvicorn

        from .service import create_app
    except ImportError as exc:
        raise InputError(
            f"the service needs fastapi and uvicorn installed ({exc})"
        ) from None
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Build the argparse tree for the ``sigpde`` command."""
    parser = argparse.ArgumentParser(
        prog="sigpde",
        description="Signature kernels of time series via a hyperbolic PDE solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("kernel", help="signature kernel of two series (wide CSV files)")
    p.add_argument("x", help="wide-layout CSV ('-' for stdin)")
    p.add_argument("y", help="wide-layout CSV ('-' for stdin)")
    _add_common(p)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("gram", help="Gram matrix of one or two collections (long CSV)")
    p.add_argument("xs", help="long-layout CSV ('-' for stdin)")
    p.add_argument("ys", nargs="?", default=None,
                   help="optional second collection; omitted = self-Gram")
    _add_common(p)
    p.set_defaults(func=_cmd_gram)

    p = sub.add_parser("mmd", help="squared MMD between two collections (long CSV)")
    p.add_argument("xs", help="long-layout CSV ('-' for stdin)")
    p.add_argument("ys", help="long-layout CSV ('-' for stdin)")
    p.add_argument("--variant", choices=("unbiased", "biased"), default="unbiased",
                   help="estimator variant (default unbiased)")
    _add_common(p)
    p.set_defaults(func=_cmd_mmd)

    p = sub.add_parser("krr", help="kernel ridge regression")
    krr_sub = p.add_subparsers(dest="krr_command", required=True, metavar="ACTION")
    pf = krr_sub.add_parser("fit", help="fit weights on a training collection")
    pf.add_argument("train", help="long-layout CSV of training series")
    pf.add_argument("--targets", required=True, metavar="PATH",
                    help="text file with one target per line")
    pf.add_argument("--ridge", type=float, default=1e-6,
                    help="regularization strength (default 1e-6)")
    _add_common(pf)
    pf.set_defaults(func=_cmd_krr_fit)
    pp = krr_sub.add_parser("predict", help="predict with a fitted model")
    pp.add_argument("test", help="long-layout CSV of series to predict on")
    pp.add_argument("--train", required=True, metavar="PATH",
                    help="the training collection the model was fitted on")
    pp.add_argument("--model", required=True, metavar="PATH",
                    help="JSON model from `krr fit`")
    _add_common(pp)
    pp.set_defaults(func=_cmd_krr_predict)

    p = sub.add_parser("reduce", help="sparse reweighting of an ensemble (long CSV)")
    p.add_argument("ensemble", nargs="?", default="-",
                   help="long-layout CSV (default '-' = stdin)")
    p.add_argument("--support", type=int, metavar="N",
                   help="bisect the penalty until the support has N paths")
    p.add_argument("--penalty", type=float, metavar="F", help="fixed l1 penalty")
    p.add_argument("--step", type=float, metavar="F",
                   help="initial step size (default 0.9 / (2 max eigenvalue))")
    p.add_argument("--max-iter", type=int, default=10000, dest="max_iter", metavar="N")
    p.add_argument("--tol", type=float, default=1e-10, metavar="F",
                   help="stop when the iterate moves at most this much")
    _add_common(p)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("convergence",
                       help="per-level sup errors against a fine reference")
    p.add_argument("x", help="wide-layout CSV ('-' for stdin)")
    p.add_argument("y", help="wide-layout CSV ('-' for stdin)")
    p.add_argument("--lambda-max", type=int, default=3, dest="lambda_max", metavar="N")
    p.add_argument("--reference", choices=("fine", "analytic"), default="fine",
                   help="error reference (analytic is single-segment only)")
    _add_common(p)
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("simulate-fbm", help="sample fractional Brownian motion paths")
    p.add_argument("--hurst", type=float, required=True, help="Hurst exponent in (0,1)")
    p.add_argument("--length", type=int, default=50, help="samples per path (default 50)")
    p.add_argument("--count", type=int, default=30, help="number of paths (default 30)")
    _add_common(p, sampling=True)
    p.set_defaults(func=_cmd_simulate_fbm)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except SigPdeError as exc:  # future subclasses
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
