"""Executable checks of the recovery guarantees.

Each checker evaluates one proved inequality on concrete instances and
returns a :class:`BoundReport` with the two sides and their slack.
Deterministic inequalities (the RIP-1 sandwich, the collision-weight
bound, the l1 approximation bound, the measurement-gap and KL bounds)
are theorems: any violation on a certified graph is an implementation
bug.  Expectation bounds can only be checked statistically, so the
Monte-Carlo checkers compare the sample mean against the bound plus
three standard errors.

All randomized batteries run on graphs whose expansion was certified by
exhaustive enumeration; sampled certificates are never used to back a
violation verdict.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import SensingMatrix, hellinger_affinity_term, poisson_kl
from .errors import DimensionError, ParameterError, PreconditionError, RegimeError
from .expander import (
    ExpanderGraph,
    collision_analysis,
    cover_set,
    find_certified_graph,
    rip1_check,
)
from .recon import CandidateSet, Penalty, UniformPenalty, kraft_sum
from .rng import stream

PASS_TOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """One verified inequality: lhs <= rhs with slack = rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    context: dict

    @staticmethod
    def make(name: str, lhs: float, rhs: float, context: dict, tol: float = PASS_TOL):
        slack = rhs - lhs
        return BoundReport(name, float(lhs), float(rhs), float(slack), slack >= -tol, context)

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "lhs": self.lhs,
                "rhs": self.rhs,
                "slack": self.slack,
                "pass": self.passed,
                "context": self.context,
            }
        )


@dataclass(frozen=True)
class SupportSplit:
    """Indices of the k largest-magnitude coordinates and the rest."""

    S: np.ndarray
    S_bar: np.ndarray
    tail_norm: float


def support_split(x: np.ndarray, k: int) -> SupportSplit:
    """Split [0, n) into the k largest-|x| coordinates (ties broken by
    lowest index) and their complement."""
    x = np.asarray(x, dtype=np.float64)
    if k < 0:
        raise ParameterError("k must be nonnegative")
    k_eff = min(k, x.size)
    order = np.lexsort((np.arange(x.size), -np.abs(x)))
    s = np.sort(order[:k_eff])
    s_bar = np.sort(order[k_eff:])
    tail = float(np.abs(x[s_bar]).sum())
    return SupportSplit(s, s_bar, tail)


def sparse_approximation_bound(
    g: ExpanderGraph,
    u: np.ndarray,
    v: np.ndarray,
    k: int,
    epsilon: float,
    delta: float,
) -> BoundReport:
    """l1 closeness from measurement closeness, for eps < 1/6:

        ||u - v||_1  <=  (1-2e)/(1-6e) * (2*||u_tail||_1 + delta)
                         + 2/(d*(1-6e)) * ||A u - A v||_1

    whenever ||u||_1 >= ||v||_1 - delta.  The graph must be certified at
    sparsity 2k (the difference u - v is what the expansion controls;
    a graph certified only at k admits counterexamples).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != (g.n,) or v.shape != (g.n,):
        raise DimensionError("u, v must have length n")
    if not 0.0 < epsilon < 1.0 / 6.0:
        raise ParameterError(f"the bound needs epsilon in (0, 1/6), got {epsilon}")
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    norm_u = float(np.abs(u).sum())
    norm_v = float(np.abs(v).sum())
    if norm_u < norm_v - delta - 1e-12:
        raise PreconditionError(
            f"need ||u||_1 >= ||v||_1 - delta ({norm_u} < {norm_v} - {delta})"
        )
    split = support_split(u, k)
    lhs = float(np.abs(u - v).sum())
    meas_gap = float(np.abs(g.adjacency_times(u) - g.adjacency_times(v)).sum())
    front = (1.0 - 2.0 * epsilon) / (1.0 - 6.0 * epsilon)
    rhs = front * (2.0 * split.tail_norm + delta) + 2.0 * meas_gap / (g.d * (1.0 - 6.0 * epsilon))
    ctx = {"k": k, "epsilon": epsilon, "d": g.d, "delta": delta, "tail": split.tail_norm}
    return BoundReport.make("sparse-approximation", lhs, rhs, ctx)


def measurement_gap_bound(
    phi: SensingMatrix,
    alpha_star: np.ndarray,
    x_hat: np.ndarray,
    lam: float,
) -> BoundReport:
    """Squared measurement-domain l1 gap against the Hellinger term:

        ||Phi(a - x)||_1^2  <=  2*(2 + m*lam/d) * sum (sqrt..-sqrt..)^2

    for ||a||_1 <= 1 and x in shifted-candidate form.
    """
    alpha_star = np.asarray(alpha_star, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if alpha_star.shape != (phi.n,) or x_hat.shape != (phi.n,):
        raise DimensionError("signals must have length n")
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    norm_a = float(np.abs(alpha_star).sum())
    if norm_a > 1.0 + 1e-9:
        raise PreconditionError(f"need ||alpha||_1 <= 1, got {norm_a}")
    beta_star = phi.apply(alpha_star)
    beta_hat = phi.apply(x_hat)
    gap = float(np.abs(beta_star - beta_hat).sum())
    lhs = gap * gap
    rhs = 2.0 * (2.0 + phi.m * lam / phi.d) * hellinger_affinity_term(beta_star, beta_hat)
    ctx = {"m": phi.m, "d": phi.d, "lambda": lam}
    return BoundReport.make("measurement-gap-vs-hellinger", lhs, rhs, ctx)


def kl_distance_bound(
    phi: SensingMatrix,
    alpha_star: np.ndarray,
    x: np.ndarray,
    lam: float,
) -> BoundReport:
    """KL between the measurement distributions against signal distance:

        KL(Poisson(Phi a) || Poisson(Phi x))  <=  (d/lam) * ||a - x||_1^2

    which needs Phi x >= lam/d entrywise (the shifted-candidate floor).
    """
    alpha_star = np.asarray(alpha_star, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if alpha_star.shape != (phi.n,) or x.shape != (phi.n,):
        raise DimensionError("signals must have length n")
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    beta_x = phi.apply(x)
    if np.min(beta_x) < lam / phi.d - 1e-12:
        raise PreconditionError(
            "x is not in shifted-candidate form: min(Phi x) "
            f"= {np.min(beta_x):g} < lambda/d = {lam / phi.d:g}"
        )
    lhs = poisson_kl(phi.apply(alpha_star), beta_x)
    dist = float(np.abs(alpha_star - x).sum())
    rhs = (phi.d / lam) * dist * dist
    ctx = {"d": phi.d, "lambda": lam, "distance": dist}
    return BoundReport.make("kl-vs-signal-distance", lhs, rhs, ctx)


def _mc_prepare(phi, alpha_star, candidates: CandidateSet, penalty: Penalty):
    gamma = candidates.gamma_members()
    if len(gamma) > 64:
        raise ParameterError(f"enumerated family too large ({len(gamma)} > 64)")
    ks = kraft_sum(penalty, gamma)
    if ks > 1.0 + 1e-12:
        raise PreconditionError(f"penalty violates the Kraft inequality: sum = {ks}")
    alpha_star = np.asarray(alpha_star, dtype=np.float64)
    beta_star = phi.apply(alpha_star)
    betas = np.stack([phi.apply(x) for x in gamma])
    pens = np.array([penalty.value(x) for x in gamma])
    if np.any(betas <= 0):
        raise PreconditionError("every candidate must have strictly positive means")
    # objective for counts y: const_i - log(beta_i) . y
    const = betas.sum(axis=1) + 2.0 * pens
    log_betas = np.log(betas)
    return alpha_star, beta_star, gamma, betas, pens, const, log_betas


def _mc_run(beta_star, const, log_betas, trials, seed, tag, statistic):
    values = np.empty(trials)
    for t in range(trials):
        rng = stream(seed, tag, t)
        y = rng.poisson(beta_star)
        objs = const - log_betas @ y
        idx = int(np.argmin(objs))
        values[t] = statistic(idx)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, se


def map_oracle_risk_mc(
    phi: SensingMatrix,
    alpha_star: np.ndarray,
    candidates: CandidateSet,
    penalty: Penalty,
    trials: int,
    seed: int,
) -> BoundReport:
    """Monte-Carlo check of the decoder's oracle risk bound:

        E[ hellinger(Phi a, Phi x_hat(Y)) ]
            <=  min over candidates of [ KL(Phi a || Phi x) + 2 pen(x) ]

    with the expectation estimated over ``trials`` Poisson draws and a
    three-standard-error allowance on the pass verdict.
    """
    alpha_star, beta_star, gamma, betas, pens, const, log_betas = _mc_prepare(
        phi, alpha_star, candidates, penalty
    )
    hell = [hellinger_affinity_term(beta_star, b) for b in betas]
    lhs, se = _mc_run(beta_star, const, log_betas, trials, seed, "oracle-mc", lambda i: hell[i])
    rhs = min(poisson_kl(beta_star, b) + 2.0 * p for b, p in zip(betas, pens))
    ctx = {"trials": trials, "se": se, "family": len(gamma), "kind": "monte-carlo"}
    return BoundReport.make("map-oracle-risk", lhs, rhs, ctx, tol=3.0 * se + PASS_TOL)


def measurement_risk_mc(
    phi: SensingMatrix,
    alpha_star: np.ndarray,
    candidates: CandidateSet,
    penalty: Penalty,
    trials: int,
    seed: int,
) -> BoundReport:
    """Expected measurement-domain error of the decoder:

        E[ ||Phi(a - x_hat)||_1 ]
            <=  sqrt(6) * min [ sqrt(d/lam)*||a - x||_1 + sqrt(2 pen(x)) ]

    valid in the m*lam/d < 1 regime (the constant absorption step
    breaks outside it, hence :class:`RegimeError`).
    """
    lam = candidates.lam
    if phi.m * lam / phi.d >= 1.0:
        raise RegimeError(f"need m*lambda/d < 1, got {phi.m * lam / phi.d}")
    alpha_star, beta_star, gamma, betas, pens, const, log_betas = _mc_prepare(
        phi, alpha_star, candidates, penalty
    )
    meas_err = [float(np.abs(beta_star - b).sum()) for b in betas]
    lhs, se = _mc_run(
        beta_star, const, log_betas, trials, seed, "measurement-mc", lambda i: meas_err[i]
    )
    rhs = math.sqrt(6.0) * min(
        math.sqrt(phi.d / lam) * float(np.abs(alpha_star - x).sum()) + math.sqrt(2.0 * p)
        for x, p in zip(gamma, pens)
    )
    ctx = {
        "trials": trials,
        "se": se,
        "family": len(gamma),
        "lambda": lam,
        "kind": "monte-carlo",
    }
    return BoundReport.make("measurement-risk", lhs, rhs, ctx, tol=3.0 * se + PASS_TOL)


def recovery_risk_mc(
    phi: SensingMatrix,
    alpha_star: np.ndarray,
    candidates: CandidateSet,
    penalty: Penalty,
    k: int,
    trials: int,
    seed: int,
) -> BoundReport:
    """Expected signal-domain error of the decoded pre-shift estimate:

        E[ ||a - f_hat||_1 ]  <=  3*lam*m + 4*||a_tail||_1
            + 3*sqrt(6) * min over pre-shift candidates of
              [ sqrt(d/lam) * (||a - f||_1 + lam*m) + sqrt(2 pen(f)) ]

    The stated constants are reproduced literally (they come from the
    eps = 1/16 roundings in the derivation); the penalty is evaluated
    on the pre-shift candidates here, so pair this with penalties that
    are invariant under the cover shift (e.g. uniform code lengths).
    """
    lam = candidates.lam
    alpha_star, beta_star, gamma, betas, pens, const, log_betas = _mc_prepare(
        phi, alpha_star, candidates, penalty
    )
    thetas = [np.asarray(f, dtype=np.float64) for f in candidates.thetas]
    sig_err = [float(np.abs(alpha_star - f).sum()) for f in thetas]
    lhs, se = _mc_run(
        beta_star, const, log_betas, trials, seed, "recovery-mc", lambda i: sig_err[i]
    )
    tail = support_split(alpha_star, k).tail_norm
    lam_m = lam * phi.m
    best = min(
        math.sqrt(phi.d / lam) * (float(np.abs(alpha_star - f).sum()) + lam_m)
        + math.sqrt(2.0 * penalty.value(f))
        for f in thetas
    )
    rhs = 3.0 * lam_m + 4.0 * tail + 3.0 * math.sqrt(6.0) * best
    ctx = {
        "trials": trials,
        "se": se,
        "family": len(gamma),
        "lambda": lam,
        "k": k,
        "tail": tail,
        "kind": "monte-carlo",
    }
    return BoundReport.make("recovery-risk", lhs, rhs, ctx, tol=3.0 * se + PASS_TOL)


def error_order(
    alpha_star: np.ndarray,
    thetas,
    penalty: Penalty,
    k: int,
    n: int,
    c: float = 1.0,
) -> float:
    """The order-level error expression used in experiment reports:

        ||a_tail||_1 + min over candidates of
            [ sqrt(c*k) * ln(n/k) * ||a - f||_1 + sqrt(2 pen(f)) ]

    with the measurement budget written as m = c*k*ln(n/k) and degree
    d = c*ln(n/k).  Informational only; there is no pass/fail.
    """
    alpha_star = np.asarray(alpha_star, dtype=np.float64)
    if not 1 <= k < n:
        raise ParameterError("need 1 <= k < n")
    if c <= 0:
        raise ParameterError("c must be positive")
    tail = support_split(alpha_star, k).tail_norm
    factor = math.sqrt(c * k) * math.log(n / k)
    best = min(
        factor * float(np.abs(alpha_star - np.asarray(f, dtype=np.float64)).sum())
        + math.sqrt(2.0 * penalty.value(f))
        for f in thetas
    )
    return tail + best


# --- fixtures: small graphs whose expansion is known exactly ---

_GF4_MUL = (
    (0, 0, 0, 0),
    (0, 1, 2, 3),
    (0, 2, 3, 1),
    (0, 3, 1, 2),
)


def affine_plane_graph() -> ExpanderGraph:
    """The 20 lines of the order-4 affine plane over its 16 points.

    Left nodes are lines (d = 4 points each), right nodes are points.
    Two distinct lines share at most one point, so every pair of
    columns has at least 7 distinct neighbors: the graph is exactly a
    (2, eps)-expander for every eps > 1/8.  The first four columns are
    a parallel class (disjoint, covering all points), so the greedy
    cover has exactly m/d = 4 members.
    """
    columns = []
    for a in range(4):  # slope
        for b in range(4):  # intercept
            columns.append(sorted(4 * x + (_GF4_MUL[a][x] ^ b) for x in range(4)))
    for cx in range(4):  # vertical lines
        columns.append([4 * cx + yy for yy in range(4)])
    return ExpanderGraph(16, np.array(columns, dtype=np.int64))


def disjoint_columns_graph(n_cols: int, d: int) -> ExpanderGraph:
    """n disjoint columns of d rows each (m = n*d): expansion is exact
    equality |N(S)| = d|S|, certifiable at any eps > 0 up to k = n."""
    cols = np.arange(n_cols * d, dtype=np.int64).reshape(n_cols, d)
    return ExpanderGraph(n_cols * d, cols)


def _random_sparse(rng, n, k, scale=1.0, signed=False):
    x = np.zeros(n)
    support = rng.choice(n, size=k, replace=False)
    vals = rng.uniform(0.2, 1.0, size=k) * scale
    if signed:
        vals *= rng.choice([-1.0, 1.0], size=k)
    x[support] = vals
    return x


def _random_simplex(rng, n):
    f = rng.uniform(0.0, 1.0, size=n)
    return f / f.sum()


def rip1_battery(g: ExpanderGraph, k: int, epsilon: float, trials: int, seed: int):
    """Run rip1_check on random k-sparse vectors; returns the
    worst-slack lower/upper reports and the violation count."""
    rng = stream(seed, "rip1-battery")
    worst_lower = None
    worst_upper = None
    violations = 0
    for _ in range(trials):
        x = _random_sparse(rng, g.n, rng.integers(1, k + 1), signed=True)
        rep = rip1_check(g, x, k, epsilon)
        if not rep.passed:
            violations += 1
        lower = rep.mid - rep.lhs
        upper = rep.rhs - rep.mid
        if worst_lower is None or lower < worst_lower[0]:
            worst_lower = (lower, rep)
        if worst_upper is None or upper < worst_upper[0]:
            worst_upper = (upper, rep)
    ctx = {
        "trials": trials,
        "violations": violations,
        "k": k,
        "epsilon": epsilon,
        "graph": repr(g),
        "kind": "deterministic",
    }
    lower_rep = BoundReport.make("rip1-lower", worst_lower[1].lhs, worst_lower[1].mid, dict(ctx))
    upper_rep = BoundReport.make("rip1-upper", worst_upper[1].mid, worst_upper[1].rhs, dict(ctx))
    return [lower_rep, upper_rep], violations


def collision_battery(g: ExpanderGraph, k: int, epsilon: float, trials: int, seed: int):
    """Collision weight against eps*d*||x||_1 on random k-sparse x."""
    rng = stream(seed, "collision-battery")
    worst = None
    violations = 0
    for _ in range(trials):
        x = _random_sparse(rng, g.n, rng.integers(1, k + 1), signed=True)
        analysis = collision_analysis(g, x)
        lhs = analysis.collision_weight
        rhs = epsilon * g.d * float(np.abs(x).sum())
        if lhs > rhs + PASS_TOL:
            violations += 1
        if worst is None or rhs - lhs < worst[1] - worst[0]:
            worst = (lhs, rhs)
    ctx = {
        "trials": trials,
        "violations": violations,
        "k": k,
        "epsilon": epsilon,
        "graph": repr(g),
        "kind": "deterministic",
    }
    return BoundReport.make("collision-weight", worst[0], worst[1], ctx), violations


def approximation_battery(g: ExpanderGraph, k: int, epsilon: float, trials: int, seed: int):
    """sparse_approximation_bound on random (u, v, delta) triples that
    satisfy the norm precondition; u is exactly k-sparse half the time."""
    rng = stream(seed, "approx-battery")
    worst = None
    violations = 0
    for _ in range(trials):
        if rng.uniform() < 0.5:
            u = _random_sparse(rng, g.n, k, signed=True)
        else:
            u = rng.normal(size=g.n) * np.exp(-rng.uniform(0, 4, size=g.n))
        v = u + rng.normal(scale=rng.uniform(0.01, 1.0), size=g.n) * (rng.uniform(size=g.n) < 0.5)
        slack_needed = max(0.0, float(np.abs(v).sum() - np.abs(u).sum()))
        delta = slack_needed + float(rng.uniform(0.0, 0.5))
        rep = sparse_approximation_bound(g, u, v, k, epsilon, delta)
        if not rep.passed:
            violations += 1
        if worst is None or rep.slack < worst.slack:
            worst = rep
    ctx = dict(worst.context)
    ctx.update({"trials": trials, "violations": violations, "graph": repr(g), "kind": "deterministic"})
    return BoundReport.make(worst.name, worst.lhs, worst.rhs, ctx), violations


def gap_and_kl_battery(g: ExpanderGraph, lam: float, trials: int, seed: int):
    """measurement_gap_bound and kl_distance_bound on random
    (alpha, shifted-candidate) pairs."""
    rng = stream(seed, "gap-kl-battery")
    phi = SensingMatrix(g)
    cover = cover_set(g)
    worst_gap = None
    worst_kl = None
    violations = 0
    for _ in range(trials):
        alpha = _random_simplex(rng, g.n) * rng.uniform(0.2, 1.0)
        f = _random_simplex(rng, g.n)
        x = f + lam * cover.indicator
        rep_gap = measurement_gap_bound(phi, alpha, x, lam)
        rep_kl = kl_distance_bound(phi, alpha, x, lam)
        violations += (not rep_gap.passed) + (not rep_kl.passed)
        if worst_gap is None or rep_gap.slack < worst_gap.slack:
            worst_gap = rep_gap
        if worst_kl is None or rep_kl.slack < worst_kl.slack:
            worst_kl = rep_kl
    for rep in (worst_gap, worst_kl):
        rep.context.update(
            {"trials": trials, "violations": violations, "graph": repr(g), "kind": "deterministic"}
        )
    return [worst_gap, worst_kl], violations


def mc_instance(seed: int = 0, family_size: int = 8):
    """A small certified-graph instance for the Monte-Carlo checkers:
    n=12, m=8, d=4, a 2-sparse unit-norm truth that is also one of the
    candidates, and a Kraft-tight uniform penalty."""
    g, eps, _ = find_certified_graph(n=12, m=8, d=4, k=2, eps_cap=0.5, base_seed=1000)
    phi = SensingMatrix(g)
    cover = cover_set(g)
    lam = 0.002
    rng = stream(seed, "mc-instance")
    alpha = _random_sparse(rng, g.n, 2)
    alpha /= alpha.sum()
    thetas = [alpha.copy()]
    for _ in range(family_size - 1):
        f = _random_sparse(rng, g.n, int(rng.integers(1, 4)))
        thetas.append(f / f.sum())
    candidates = CandidateSet(thetas=thetas, lam=lam, cover=cover)
    penalty = UniformPenalty(math.log(family_size))
    return phi, alpha, candidates, penalty, eps


def run_suite(seed: int = 0, det_trials: int = 1000, mc_trials: int = 2000):
    """The full battery; returns (reports, deterministic_violations)."""
    reports = []
    det_violations = 0

    ag = affine_plane_graph()
    swept = [
        find_certified_graph(16, 12, 4, 2, base_seed=0)[0:2] + ((16, 12, 4, 2),),
        find_certified_graph(24, 16, 4, 3, base_seed=0)[0:2] + ((24, 16, 4, 3),),
        find_certified_graph(12, 8, 3, 2, base_seed=0)[0:2] + ((12, 8, 3, 2),),
    ]

    batteries = [(ag, 2, 0.125 + 1e-6)]
    batteries += [(g, dims[3], eps) for g, eps, dims in swept]
    for g, k, eps in batteries:
        reps, nv = rip1_battery(g, k, eps, det_trials, seed)
        reports.extend(reps)
        det_violations += nv
        rep, nv = collision_battery(g, k, eps, det_trials, seed)
        reports.append(rep)
        det_violations += nv

    # l1 approximation bound: graphs certified at twice the tested sparsity
    rep, nv = approximation_battery(ag, 1, 0.16566, 500, seed)
    reports.append(rep)
    det_violations += nv
    rep, nv = approximation_battery(ag, 1, 0.13, 500, seed)
    reports.append(rep)
    det_violations += nv
    rep, nv = approximation_battery(disjoint_columns_graph(4, 4), 2, 0.15, 500, seed)
    reports.append(rep)
    det_violations += nv

    for g, _, dims in [(ag, None, (20, 16, 4, 2))] + swept[:1]:
        reps, nv = gap_and_kl_battery(g, 1e-3, det_trials, seed)
        reports.extend(reps)
        det_violations += nv

    from .recon import kraft_sum_support_code

    kraft = kraft_sum_support_code(10, 3)
    reports.append(
        BoundReport.make("kraft-support-code", kraft, 1.0, {"n": 10, "bits": 3, "kind": "kraft"})
    )
    det_violations += int(kraft > 1.0 + PASS_TOL)

    phi, alpha, candidates, penalty, eps = mc_instance(seed)
    for s in range(3):
        rep = map_oracle_risk_mc(phi, alpha, candidates, penalty, mc_trials, seed + s)
        reports.append(rep)
        rep = measurement_risk_mc(phi, alpha, candidates, penalty, mc_trials, seed + s)
        reports.append(rep)
        rep = recovery_risk_mc(phi, alpha, candidates, penalty, 2, mc_trials, seed + s)
        reports.append(rep)

    return reports, det_violations
