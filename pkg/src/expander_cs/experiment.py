"""Sparsity-times-intensity sweep harness.

For each (sparsity k, per-spike intensity I, trial) the harness draws a
random support, senses it through Phi with the decoder's cover shift
applied inside the model, draws Poisson counts, reconstructs with the
continuous solver, and records the normalized l1 error
||a - x_hat||_1 / ||a||_1.  Results go to two CSVs with fixed schemas:

    trials.csv :  k,I,trial,normalized_l1_error,iters,wall_time_ms
    summary.csv:  k,I,mean_error,stderr,trials

plus run.json with the resolved penalty weights and the pre-shift
(f_hat) errors.  Everything except the wall-time column is
deterministic under (seed, k, I, trial) stream derivation, so re-runs
with the same config are byte-identical up to timing.
"""

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import SensingMatrix, sample_poisson
from .errors import ParameterError
from .expander import ExpanderParams, cover_set, generate_graph
from .recon import L1Penalty, ReconConfig, default_lambda, solve_map
from .rng import stream

TRIALS_HEADER = "k,I,trial,normalized_l1_error,iters,wall_time_ms"
SUMMARY_HEADER = "k,I,mean_error,stderr,trials"

# multipliers for the pilot search over the l1 weight; the base scale
# tracks the Poisson noise level of the counts (1/sqrt(mean)), since the
# weight acts as a multiplicative shrinkage ~ 1/(1+2*tau) on recovered
# spikes and must vanish as the intensity grows
PILOT_MULTIPLIERS = (0.1, 1.0, 10.0)


@dataclass
class ExperimentConfig:
    """Sweep description; field names mirror the JSON config format."""

    n: int
    m: int
    d: int
    k_list: list
    intensity_list: list
    trials: int
    out_dir: str
    lam: float | None = None
    penalty: str = "l1:auto"
    tol: float = 1e-8
    max_iters: int = 2000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.m < self.d or self.m >= self.n or self.d < 1:
            raise ParameterError(f"infeasible sizes n={self.n}, m={self.m}, d={self.d}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if not self.k_list or not self.intensity_list:
            raise ParameterError("k_list and intensity_list must be nonempty")
        for k in self.k_list:
            if not 1 <= k <= self.n / 2:
                raise ParameterError(f"k={k} outside [1, n/2]")
        for intensity in self.intensity_list:
            if intensity <= 0 or intensity != int(intensity):
                raise ParameterError(f"intensities must be positive integers, got {intensity}")
        if self.lam is not None and self.lam <= 0:
            raise ParameterError("lambda override must be positive")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        kind, _, arg = self.penalty.partition(":")
        if kind != "l1" or not arg:
            raise ParameterError(f"penalty spec must be 'l1:auto' or 'l1:<weight>', got {self.penalty!r}")
        if arg != "auto" and float(arg) <= 0:
            raise ParameterError("penalty weight must be positive")

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if "lambda" in raw:
            raw["lam"] = raw.pop("lambda")
        return ExperimentConfig(**raw)


@dataclass
class TrialRecord:
    k: int
    intensity: int
    trial: int
    normalized_l1_error: float
    fhat_error: float
    iters: int
    wall_time_ms: float


@dataclass
class ExperimentResult:
    records: list
    summary: list
    tau_by_cell: dict
    out_dir: Path
    files: dict = field(default_factory=dict)


def _draw_instance(rng, phi, cover, n, k, intensity, lam):
    support = rng.choice(n, size=k, replace=False)
    alpha = np.zeros(n)
    alpha[support] = float(intensity)
    means = phi.apply(alpha + lam * cover.indicator)
    y = sample_poisson(means, rng=rng)
    return alpha, y


def _reconstruct(phi, cover, y, k, lam, tau, tol, max_iters):
    cfg = ReconConfig(penalty=L1Penalty(tau), lam=lam, k=k, tol=tol, max_iters=max_iters)
    return solve_map(phi, y, cfg, cover)


def _normalized_error(alpha, estimate):
    return float(np.abs(alpha - estimate).sum() / np.abs(alpha).sum())


def _pilot_tau(cfg, phi, cover, k, intensity, lam):
    """Pick the l1 weight by error on one held-out pilot instance."""
    rng = stream(cfg.seed, "pilot", k, int(intensity))
    alpha, y = _draw_instance(rng, phi, cover, cfg.n, k, intensity, lam)
    base = 1.0 / math.sqrt(float(y.mean()) + 1.0)
    best = None
    for mult in PILOT_MULTIPLIERS:
        tau = mult * base
        result = _reconstruct(phi, cover, y, k, lam, tau, cfg.tol, cfg.max_iters)
        err = _normalized_error(alpha, result.x_hat)
        if best is None or err < best[0]:
            best = (err, tau)
    return best[1]


def _trial_core(cfg, phi, cover, k, intensity, trial, lam, tau) -> TrialRecord:
    rng = stream(cfg.seed, "trial", k, int(intensity), trial)
    alpha, y = _draw_instance(rng, phi, cover, cfg.n, k, intensity, lam)
    t0 = time.perf_counter()
    result = _reconstruct(phi, cover, y, k, lam, tau, cfg.tol, cfg.max_iters)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return TrialRecord(
        k=k,
        intensity=int(intensity),
        trial=trial,
        normalized_l1_error=_normalized_error(alpha, result.x_hat),
        fhat_error=_normalized_error(alpha, result.f_hat),
        iters=result.iters,
        wall_time_ms=wall_ms,
    )


def _run_cell_trial(args):
    """Pool entry point: rebuilds the operator from the serialized graph."""
    cfg, graph_text, cover_indices, k, intensity, trial, lam, tau = args
    from .expander import CoverSet, loads_graph

    g = loads_graph(graph_text)
    phi = SensingMatrix(g)
    indices = np.asarray(cover_indices, dtype=np.int64)
    indicator = np.zeros(cfg.n)
    indicator[indices] = 1.0
    cover = CoverSet(indices, indicator)
    return _trial_core(cfg, phi, cover, k, intensity, trial, lam, tau)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the sweep and write trials.csv, summary.csv, and run.json."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    params = ExpanderParams(
        n=cfg.n, m=cfg.m, d=cfg.d, epsilon=0.25, k=min(max(cfg.k_list), cfg.n // 2)
    )
    g = generate_graph(params, seed=cfg.seed)
    phi = SensingMatrix(g)
    cover = cover_set(g)

    kind, _, arg = cfg.penalty.partition(":")
    fixed_tau = None if arg == "auto" else float(arg)

    tau_by_cell = {}
    tasks = []
    from .expander import dumps_graph

    graph_text = dumps_graph(g)
    cover_indices = [int(i) for i in cover.indices]
    for k in cfg.k_list:
        lam = cfg.lam if cfg.lam is not None else default_lambda(cfg.n, k)
        for intensity in cfg.intensity_list:
            tau = fixed_tau
            if tau is None:
                tau = _pilot_tau(cfg, phi, cover, k, intensity, lam)
            tau_by_cell[f"{k},{int(intensity)}"] = tau
            for trial in range(cfg.trials):
                tasks.append(
                    (cfg, graph_text, cover_indices, k, int(intensity), trial, lam, tau)
                )

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_cell_trial, tasks))
    else:
        records = [
            _trial_core(cfg, phi, cover, k, intensity, trial, lam, tau)
            for (cfg, _, _, k, intensity, trial, lam, tau) in tasks
        ]
    records.sort(key=lambda r: (r.k, r.intensity, r.trial))

    summary = []
    for k in cfg.k_list:
        for intensity in cfg.intensity_list:
            errs = np.array(
                [
                    r.normalized_l1_error
                    for r in records
                    if r.k == k and r.intensity == int(intensity)
                ]
            )
            stderr = float(errs.std(ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else 0.0
            summary.append((k, int(intensity), float(errs.mean()), stderr, int(errs.size)))

    files = _write_outputs(cfg, out_dir, records, summary, tau_by_cell)
    return ExperimentResult(records, summary, tau_by_cell, out_dir, files)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_outputs(cfg, out_dir, records, summary, tau_by_cell):
    trials_path = out_dir / "trials.csv"
    with open(trials_path, "w", encoding="ascii") as fh:
        fh.write(TRIALS_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.k},{r.intensity},{r.trial},{_fmt(r.normalized_l1_error)},"
                f"{r.iters},{r.wall_time_ms:.3f}\n"
            )

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", encoding="ascii") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for k, intensity, mean, stderr, count in summary:
            fh.write(f"{k},{intensity},{_fmt(mean)},{_fmt(stderr)},{count}\n")

    run_path = out_dir / "run.json"
    payload = {
        "config": {
            "n": cfg.n,
            "m": cfg.m,
            "d": cfg.d,
            "k_list": list(cfg.k_list),
            "intensity_list": [int(i) for i in cfg.intensity_list],
            "trials": cfg.trials,
            "lambda": cfg.lam,
            "penalty": cfg.penalty,
            "tol": cfg.tol,
            "max_iters": cfg.max_iters,
            "seed": cfg.seed,
        },
        "tau_by_cell": tau_by_cell,
        "fhat_errors": [
            {"k": r.k, "I": r.intensity, "trial": r.trial, "error": r.fhat_error}
            for r in records
        ],
    }
    with open(run_path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {"trials": trials_path, "summary": summary_path, "run": run_path}
