"""The normalized sensing operator and the Poisson observation model.

Phi = A/d maps a nonnegative intensity vector x to measurement means
Phi @ x, and observed counts are independent Poisson draws per
coordinate (a mean of zero yields a count of zero with probability 1).
The log-likelihood, KL divergence, and Hellinger-affinity quantities
here are the building blocks of both the decoder objective and the
inequality checkers.

Infinity is a first-class result value for the likelihood and KL
functions: a candidate that puts zero mean on a positive count gets
objective +inf rather than raising, so search loops can reject it.
"""

import numpy as np
from scipy import sparse

from .errors import DimensionError, DomainError
from .expander import ExpanderGraph
from .rng import stream


class SensingMatrix:
    """Phi = A/d for a left-d-regular graph, with sparse matvecs.

    apply(x) sums x over each right node's neighbors and divides by d,
    so for x >= 0 the l1 norm is preserved exactly: every left node
    contributes its value to exactly d rows.
    """

    __slots__ = ("graph", "scale", "_a", "_at")

    def __init__(self, graph: ExpanderGraph):
        self.graph = graph
        self.scale = 1.0 / graph.d
        rows = graph.columns.ravel()
        cols = np.repeat(np.arange(graph.n, dtype=np.int64), graph.d)
        data = np.ones(rows.size)
        a = sparse.coo_matrix((data, (rows, cols)), shape=(graph.m, graph.n))
        self._a = a.tocsr()
        self._at = a.T.tocsr()

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def d(self) -> int:
        return self.graph.d

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Measurement means Phi @ x."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionError(f"signal length {x.shape} does not match n={self.n}")
        return (self._a @ x) * self.scale

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        """Phi^T @ w, the backprojection of a measurement-domain vector."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.m,):
            raise DimensionError(f"vector length {w.shape} does not match m={self.m}")
        return (self._at @ w) * self.scale


def sample_poisson(means: np.ndarray, seed: int | None = None, rng=None) -> np.ndarray:
    """Draw independent Poisson counts with the given means.

    Exactly one of ``seed`` and ``rng`` must be provided.  Only the
    distribution is contractual; draws are reproducible for a fixed
    seed within this implementation.
    """
    means = np.asarray(means, dtype=np.float64)
    if not np.all(np.isfinite(means)):
        raise DomainError("Poisson means must be finite")
    if np.any(means < 0):
        raise DomainError("Poisson means must be nonnegative")
    if (seed is None) == (rng is None):
        raise ValueError("provide exactly one of seed or rng")
    if rng is None:
        rng = stream(seed, "poisson")
    return rng.poisson(means).astype(np.int64)


def _check_counts(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.floor(y)):
            raise DomainError("counts must be integers")
        y = y.astype(np.int64)
    if np.any(y < 0):
        raise DomainError("counts must be nonnegative")
    return y


def neg_log_likelihood(means: np.ndarray, y: np.ndarray) -> float:
    """sum_j means_j - y_j * ln(means_j), the Poisson data misfit.

    Uses the convention 0*ln(0) = 0 where y_j = 0, matching the
    degenerate zero-mean channel.  Returns +inf if any coordinate has
    a positive count but zero mean.
    """
    means = np.asarray(means, dtype=np.float64)
    y = _check_counts(y)
    if means.shape != y.shape:
        raise DimensionError(f"shapes {means.shape} and {y.shape} differ")
    if np.any(means < 0) or not np.all(np.isfinite(means)):
        raise DomainError("means must be finite and nonnegative")
    pos = y > 0
    if np.any(means[pos] <= 0.0):
        return float("inf")
    return float(means.sum() - np.dot(y[pos].astype(np.float64), np.log(means[pos])))


def poisson_kl(g: np.ndarray, h: np.ndarray) -> float:
    """KL divergence between product Poisson distributions with mean
    vectors g and h:  sum_j g_j*ln(g_j/h_j) + h_j - g_j.

    0*ln(0/h) = 0; returns +inf when g_j > 0 meets h_j = 0.
    """
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if g.shape != h.shape:
        raise DimensionError(f"shapes {g.shape} and {h.shape} differ")
    if np.any(g < 0) or np.any(h < 0):
        raise DomainError("Poisson means must be nonnegative")
    pos = g > 0
    if np.any(h[pos] == 0.0):
        return float("inf")
    ratio_term = float(np.dot(g[pos], np.log(g[pos] / h[pos])))
    return ratio_term + float(h.sum() - g.sum())


def hellinger_affinity_term(g: np.ndarray, h: np.ndarray) -> float:
    """sum_j (sqrt(g_j) - sqrt(h_j))^2.

    This equals -2*ln of the Bhattacharyya affinity between the two
    product Poisson distributions (each summand must be squared for
    that identity to hold; the un-squared sum can go negative and is
    not the affinity).
    """
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if g.shape != h.shape:
        raise DimensionError(f"shapes {g.shape} and {h.shape} differ")
    if np.any(g < 0) or np.any(h < 0):
        raise DomainError("Poisson means must be nonnegative")
    diff = np.sqrt(g) - np.sqrt(h)
    return float(np.dot(diff, diff))


# --- plain-text vector formats: one ASCII decimal value per line ---


def save_vector(x: np.ndarray, path) -> None:
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w", encoding="ascii") as fh:
        for v in x:
            fh.write(format(float(v), ".17g"))
            fh.write("\n")


def load_vector(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            try:
                values.append(float(tok))
            except ValueError as exc:
                raise DomainError(f"line {lineno}: {tok!r} is not a number") from exc
    return np.array(values)


def save_counts(y: np.ndarray, path) -> None:
    y = _check_counts(y)
    with open(path, "w", encoding="ascii") as fh:
        for v in y:
            fh.write(f"{int(v)}\n")


def load_counts(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            try:
                v = int(tok)
            except ValueError as exc:
                raise DomainError(f"line {lineno}: {tok!r} is not an integer count") from exc
            if v < 0:
                raise DomainError(f"line {lineno}: negative count {v}")
            values.append(v)
    return np.array(values, dtype=np.int64)
