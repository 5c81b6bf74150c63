"""Command-line front end.

Subcommands: gen, verify, cover, sense, recover, bounds, tvnorm,
experiment.  Exit codes: 0 success, 1 usage/config error, 2 when a
verification or suite check fails.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import SensingMatrix, load_counts, load_vector, sample_poisson, save_counts, save_vector
from .errors import BudgetError, DimensionError, DomainError, ParameterError, PreconditionError, UncoverableError
from .expander import ExpanderParams, cover_set, generate_graph, load_graph, save_graph, verify_expansion
from .experiment import ExperimentConfig, run_experiment
from .recon import L1Penalty, ReconConfig, solve_map
from .tv import load_image, tv_norm

USAGE_ERROR = 1
CHECK_FAILED = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="expcs", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random left-regular graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=None, help="target sparsity recorded for validation")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="check the expansion property")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("cover", help="greedy cover of the right nodes")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sense", help="Poisson counts of a sensed signal")
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("recover", help="penalized MAP reconstruction")
    p.add_argument("--graph", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--penalty", default="l1:1.0")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bounds", help="run the inequality suite")
    p.add_argument("--suite", action="store_true", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--mc-trials", type=int, default=2000)
    p.add_argument("--out", default=None)

    p = sub.add_parser("tvnorm", help="total-variation seminorm of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--isotropic", action="store_true")

    p = sub.add_parser("experiment", help="sparsity/intensity sweep from a JSON config")
    p.add_argument("--config", required=True)

    return parser


def _cmd_gen(args) -> int:
    k = args.k if args.k is not None else max(1, min(args.n // 2, 2))
    params = ExpanderParams(n=args.n, m=args.m, d=args.d, epsilon=args.epsilon, k=k)
    g = generate_graph(params, seed=args.seed)
    save_graph(g, args.out)
    print(f"wrote {args.out}: n={g.n} m={g.m} d={g.d}")
    return 0


def _cmd_verify(args) -> int:
    g = load_graph(args.graph)
    cert = verify_expansion(
        g, args.k, args.epsilon, mode=args.mode, budget=args.budget, seed=args.seed
    )
    text = cert.to_json()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="ascii")
    return 0 if cert.passed else CHECK_FAILED


def _cmd_cover(args) -> int:
    g = load_graph(args.graph)
    cov = cover_set(g)
    payload = json.dumps({"indices": [int(i) for i in cov.indices], "size": cov.size, "m": g.m})
    print(payload)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="ascii")
    return 0


def _cmd_sense(args) -> int:
    g = load_graph(args.graph)
    x = load_vector(args.signal)
    if x.shape != (g.n,):
        raise DimensionError(f"signal has length {x.size}, graph has n={g.n}")
    if np.any(x < 0):
        raise DomainError("signal must be nonnegative")
    phi = SensingMatrix(g)
    y = sample_poisson(phi.apply(x), seed=args.seed)
    save_counts(y, args.out)
    print(f"wrote {args.out}: m={y.size} counts, total={int(y.sum())}")
    return 0


def _parse_penalty(spec: str) -> L1Penalty:
    kind, _, arg = spec.partition(":")
    if kind != "l1" or not arg:
        raise ParameterError(f"recover supports penalties of the form l1:<weight>, got {spec!r}")
    return L1Penalty(float(arg))


def _cmd_recover(args) -> int:
    g = load_graph(args.graph)
    y = load_counts(args.y)
    if y.shape != (g.m,):
        raise DimensionError(f"measurement has length {y.size}, graph has m={g.m}")
    phi = SensingMatrix(g)
    cover = cover_set(g)
    lam = None if args.lam == "auto" else float(args.lam)
    if lam is not None and lam <= 0:
        raise ParameterError("--lambda must be positive or 'auto'")
    cfg = ReconConfig(
        penalty=_parse_penalty(args.penalty),
        lam=lam,
        k=args.k,
        tol=args.tol,
        max_iters=args.max_iters,
    )
    result = solve_map(phi, y, cfg, cover)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_vector(result.x_hat, out_dir / "x_hat.txt")
    save_vector(result.f_hat, out_dir / "f_hat.txt")
    save_vector(np.asarray(result.objective_trace), out_dir / "objective_trace.txt")
    payload = {
        "x_hat_file": "x_hat.txt",
        "f_hat_file": "f_hat.txt",
        "iters": result.iters,
        "converged": result.converged,
        "objective_trace_file": "objective_trace.txt",
    }
    with open(out_dir / "result.json", "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out_dir}: iters={result.iters} converged={result.converged}")
    return 0


def _cmd_bounds(args) -> int:
    from .bounds import run_suite

    reports, det_violations = run_suite(
        seed=args.seed, det_trials=args.trials, mc_trials=args.mc_trials
    )
    lines = [r.to_json() for r in reports]
    for line in lines:
        print(line)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")
    return CHECK_FAILED if det_violations else 0


def _cmd_tvnorm(args) -> int:
    img = load_image(args.image)
    print(format(tv_norm(img, isotropic=args.isotropic), ".17g"))
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    result = run_experiment(cfg)
    print(f"wrote {result.files['trials']}")
    print(f"wrote {result.files['summary']}")
    print(f"wrote {result.files['run']}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "verify": _cmd_verify,
    "cover": _cmd_cover,
    "sense": _cmd_sense,
    "recover": _cmd_recover,
    "bounds": _cmd_bounds,
    "tvnorm": _cmd_tvnorm,
    "experiment": _cmd_experiment,
}

_USAGE_ERRORS = (
    ParameterError,
    DimensionError,
    DomainError,
    PreconditionError,
    BudgetError,
    UncoverableError,
    FileNotFoundError,
    json.JSONDecodeError,
)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


def console_entry() -> None:
    sys.exit(main())
