"""Penalized MAP decoding from Poisson counts.

The decoder minimizes

    sum_j (Phi x)_j - y_j * ln((Phi x)_j) + 2 * pen(x)

over candidates x = f + lambda * 1_cover with f >= 0.  The cover shift
keeps Phi x >= lambda/d entrywise so the objective stays finite for any
counts.  Two modes are provided:

* continuous: proximal gradient descent on f with an l1 penalty,
  Barzilai-Borwein initial steps and a halving backtracking line search
  (monotone in the objective);
* enumerated: exact argmin by exhaustive evaluation over an explicit
  finite candidate family, which is what the inequality checkers use.

Penalties are code-length priors: any penalty fed to the enumerated
decoder should satisfy the Kraft inequality sum exp(-pen) <= 1 over the
candidate family, which :func:`kraft_sum` verifies by direct summation.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import SensingMatrix, neg_log_likelihood
from .errors import DimensionError, DomainError, ParameterError
from .expander import CoverSet


class Penalty:
    """Base class; subclasses define value(x) >= 0."""

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError


class L1Penalty(Penalty):
    """pen(x) = weight * ||x||_1, the penalty used by the continuous solver."""

    def __init__(self, weight: float):
        if not weight > 0:
            raise ParameterError(f"l1 weight must be positive, got {weight}")
        self.weight = float(weight)

    def value(self, x) -> float:
        return self.weight * float(np.abs(np.asarray(x, dtype=np.float64)).sum())

    def __repr__(self):
        return f"L1Penalty({self.weight})"


class UniformPenalty(Penalty):
    """Constant penalty; Kraft-tight for a family of size exp(constant)."""

    def __init__(self, constant: float):
        if constant < 0:
            raise ParameterError("penalty must be nonnegative")
        self.constant = float(constant)

    def value(self, x) -> float:
        return self.constant

    def __repr__(self):
        return f"UniformPenalty({self.constant})"


class SupportCodePenalty(Penalty):
    """Code length for 'support set plus B-bit amplitudes':

        pen(x) = (||x||_0 + 1) * ln(2n) + ||x||_0 * B * ln 2.

    Satisfies the Kraft inequality over the family of all vectors with
    support in [0, n) and nonzero amplitudes drawn from 2^B - 1 quantized
    levels; see :func:`kraft_sum_support_code` for the exact sum.
    """

    def __init__(self, n: int, bits: int):
        if n < 1 or bits < 1:
            raise ParameterError("need n >= 1 and bits >= 1")
        self.n = int(n)
        self.bits = int(bits)

    def value(self, x) -> float:
        s = int(np.count_nonzero(np.asarray(x)))
        return (s + 1) * math.log(2 * self.n) + s * self.bits * math.log(2)

    def value_for_support_size(self, s: int) -> float:
        return (s + 1) * math.log(2 * self.n) + s * self.bits * math.log(2)


def kraft_sum(penalty: Penalty, candidates) -> float:
    """sum over the candidate list of exp(-pen(x))."""
    return float(sum(math.exp(-penalty.value(x)) for x in candidates))


def kraft_sum_support_code(n: int, bits: int) -> float:
    """Exact Kraft sum of the support-code family over all 2^n supports.

    Every vector with support size s carries the same penalty, and there
    are C(n, s) * (2^bits - 1)^s of them, so the sum over the full
    (countably infinite-feeling but finite) family reduces to a sum over
    support sizes.
    """
    pen = SupportCodePenalty(n, bits)
    levels = (1 << bits) - 1
    total = 0.0
    for s in range(n + 1):
        total += math.comb(n, s) * (levels**s) * math.exp(-pen.value_for_support_size(s))
    return total


@dataclass
class CandidateSet:
    """A finite candidate family and its cover shift.

    ``thetas`` are the pre-shift candidates (nonnegative, unit l1 norm);
    the decoder searches over the shifted members f + lam * indicator.
    """

    thetas: list
    lam: float
    cover: CoverSet
    mode: str = "enumerated"

    def __post_init__(self):
        if self.mode not in ("enumerated", "continuous"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if not self.lam > 0:
            raise ParameterError("lambda must be positive")
        if self.mode == "enumerated":
            if not self.thetas:
                raise ParameterError("enumerated candidate set is empty")
            for idx, f in enumerate(self.thetas):
                f = np.asarray(f, dtype=np.float64)
                if np.any(f < 0):
                    raise ParameterError(f"candidate {idx} has negative entries")
                if abs(f.sum() - 1.0) > 1e-9:
                    raise ParameterError(f"candidate {idx} has l1 norm {f.sum()}, expected 1")

    def gamma_members(self) -> list:
        """The shifted candidates x = f + lam * indicator."""
        shift = self.lam * self.cover.indicator
        return [np.asarray(f, dtype=np.float64) + shift for f in self.thetas]


def default_lambda(n: int, k: int | None = None) -> float:
    """Small positive shift well inside the lambda << 1/(k ln n) regime."""
    if n < 2:
        raise ParameterError("need n >= 2")
    if k is None:
        return 0.01 / math.log(n)
    return 0.01 / (max(k, 1) * math.log(n))


@dataclass
class ReconConfig:
    """Solver configuration.

    ``lam`` defaults to 0.01/(k ln n) when k is known, else 0.01/ln n.
    ``seed`` is retained for config-file compatibility; both solver
    modes are deterministic.
    """

    penalty: Penalty
    lam: float | None = None
    k: int | None = None
    max_iters: int = 2000
    tol: float = 1e-8
    nonneg: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.nonneg:
            raise ParameterError("the decoder is defined on nonnegative signals only")
        if self.lam is not None and not self.lam > 0:
            raise ParameterError("lambda must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")

    def resolve_lambda(self, n: int) -> float:
        lam = self.lam if self.lam is not None else default_lambda(n, self.k)
        if self.k is not None and lam * self.k * math.log(n) >= 0.1:
            warnings.warn(
                f"lambda={lam:g} is large for k={self.k}, n={n}: "
                "lambda*k*ln(n) >= 0.1 leaves the small-shift regime",
                stacklevel=3,
            )
        return lam


@dataclass
class ReconResult:
    """Decoder output: the shifted estimate, its pre-shift version,
    and the per-iteration objective trace (non-increasing)."""

    x_hat: np.ndarray
    f_hat: np.ndarray
    objective_trace: list
    iters: int
    converged: bool
    lam: float = 0.0
    info: dict = field(default_factory=dict)


def shift_to_gamma(f: np.ndarray, lam: float, cover: CoverSet) -> np.ndarray:
    """x = f + lam * cover indicator; keeps Phi x >= lam/d entrywise."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    f = np.asarray(f, dtype=np.float64)
    if f.shape != cover.indicator.shape:
        raise DimensionError("signal length does not match the cover's graph")
    if np.any(f < 0):
        raise DomainError("pre-shift candidates must be nonnegative")
    return f + lam * cover.indicator


def map_objective(phi: SensingMatrix, y: np.ndarray, x: np.ndarray, penalty: Penalty) -> float:
    """The full decoding objective at x; +inf propagates from the
    likelihood when a positive count meets a zero mean."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (phi.n,):
        raise DimensionError(f"signal length {x.shape} does not match n={phi.n}")
    if np.any(x < 0):
        raise DomainError("the objective is defined on nonnegative signals")
    nll = neg_log_likelihood(phi.apply(x), y)
    if math.isinf(nll):
        return nll
    return nll + 2.0 * penalty.value(x)


def argmin_enumerated(phi: SensingMatrix, y: np.ndarray, gamma: list, penalty: Penalty) -> int:
    """Index of the objective minimizer over an explicit candidate
    list (first index wins ties)."""
    best_idx = 0
    best_obj = math.inf
    for idx, x in enumerate(gamma):
        obj = map_objective(phi, y, x, penalty)
        if obj < best_obj:
            best_obj = obj
            best_idx = idx
    return best_idx


def _solve_enumerated(phi, y, cfg, candidates: CandidateSet) -> ReconResult:
    gamma = candidates.gamma_members()
    idx = argmin_enumerated(phi, y, gamma, cfg.penalty)
    x_hat = gamma[idx]
    f_hat = np.maximum(x_hat - candidates.lam * candidates.cover.indicator, 0.0)
    obj = map_objective(phi, y, x_hat, cfg.penalty)
    return ReconResult(
        x_hat=x_hat,
        f_hat=f_hat,
        objective_trace=[obj],
        iters=len(gamma),
        converged=True,
        lam=candidates.lam,
        info={"mode": "enumerated", "argmin_index": idx},
    )


def solve_map(
    phi: SensingMatrix,
    y: np.ndarray,
    cfg: ReconConfig,
    cover: CoverSet,
    candidates: CandidateSet | None = None,
) -> ReconResult:
    """Minimize the penalized Poisson objective.

    With ``candidates`` given, evaluates every shifted candidate and
    returns the exact argmin.  Otherwise runs proximal gradient descent
    on f >= 0 for the smooth part

        g(f) = sum_j mu_j - y_j ln(mu_j),   mu = Phi(f + lam * 1_cover),

    with prox step f <- max(f - t*grad - 2*tau*t, 0), a Barzilai-Borwein
    initial step size, and step halving until the usual quadratic upper
    bound holds (which makes the recorded objective non-increasing).
    The best iterate is returned; ``converged`` is False only when the
    iteration cap was hit before the relative objective change fell
    below ``tol``.
    """
    y = np.asarray(y)
    if y.shape != (phi.m,):
        raise DimensionError(f"measurement length {y.shape} does not match m={phi.m}")
    if np.any(y < 0):
        raise DomainError("counts must be nonnegative")

    if candidates is not None:
        return _solve_enumerated(phi, y, cfg, candidates)

    if not isinstance(cfg.penalty, L1Penalty):
        raise ParameterError("the continuous solver requires an l1 penalty")
    tau = cfg.penalty.weight
    lam = cfg.resolve_lambda(phi.n)
    if cover.indicator.shape != (phi.n,):
        raise DimensionError("cover does not match the sensing matrix")

    y = y.astype(np.float64)
    pos = y > 0
    y_pos = y[pos]
    mu_shift = phi.apply(lam * cover.indicator)
    band_floor = phi.m * lam / phi.d - 1e-9

    def smooth(mu):
        return float(mu.sum() - np.dot(y_pos, np.log(mu[pos])))

    def gradient(mu):
        w = np.ones(phi.m)
        w[pos] -= y_pos / mu[pos]
        return phi.adjoint(w)

    f = np.maximum(phi.adjoint(y) / phi.d, 0.0)
    mu = phi.apply(f) + mu_shift
    g_cur = smooth(mu)
    if not math.isfinite(g_cur):
        raise ParameterError("objective not finite at initialization; cover shift broken")
    obj = g_cur + 2.0 * tau * f.sum()
    trace = [obj]
    grad = gradient(mu)

    best_f = f
    best_obj = obj
    t = 1.0
    s_prev = None
    dg_prev = None
    converged = False
    iters = 0

    for iters in range(1, cfg.max_iters + 1):
        if s_prev is not None:
            denom = float(np.dot(s_prev, dg_prev))
            if denom > 0:
                t = float(np.dot(s_prev, s_prev)) / denom
            t = min(max(t, 1e-15), 1e15)

        accepted = False
        for _ in range(200):
            f_new = np.maximum(f - t * grad - 2.0 * tau * t, 0.0)
            step = f_new - f
            if not step.any():
                # prox fixed point: f is stationary
                converged = True
                break
            mu_new = phi.apply(f_new) + mu_shift
            g_new = smooth(mu_new)
            quad = g_cur + float(np.dot(grad, step)) + float(np.dot(step, step)) / (2.0 * t)
            if g_new <= quad + 1e-12 * abs(g_cur):
                obj_new = g_new + 2.0 * tau * f_new.sum()
                if obj_new <= obj + 1e-12 * max(1.0, abs(obj)):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            converged = True  # no descent step exists at this scale
            break

        grad_new = gradient(mu_new)
        s_prev = step
        dg_prev = grad_new - grad
        f, mu, grad, g_cur = f_new, mu_new, grad_new, g_new
        rel_change = abs(obj - obj_new) / max(abs(obj), 1.0)
        obj = min(obj_new, obj)
        trace.append(obj)
        if obj < best_obj:
            best_obj = obj
            best_f = f
        if mu.sum() < band_floor:
            raise ParameterError("measurement mass fell below the cover-shift floor; this is a bug")
        if rel_change < cfg.tol:
            converged = True
            break

    f_hat = np.maximum(best_f, 0.0)
    x_hat = f_hat + lam * cover.indicator
    return ReconResult(
        x_hat=x_hat,
        f_hat=f_hat,
        objective_trace=trace,
        iters=iters,
        converged=converged,
        lam=lam,
        info={"mode": "continuous", "tau": tau},
    )
