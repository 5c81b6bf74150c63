"""Left-regular bipartite expander graphs used as sensing structures.

A graph has n variable (left) nodes, m check (right) nodes with m < n,
and every left node connected to exactly d distinct right nodes.  A
(k, eps)-expander additionally satisfies |N(S)| > (1-eps)*d*|S| for all
left subsets S with |S| <= k; that property is what makes the 0/1
adjacency matrix A nearly norm-preserving on sparse vectors:

    (1 - 2*eps) * d * ||x||_1  <=  ||A x||_1  <=  d * ||x||_1.

Graphs are sampled (uniform d-subset per column) and then *verified*,
either exhaustively (a proof) or by subset sampling (a search for
counterexamples).  The module also computes greedy cover sets and the
collision-edge statistics behind the lower RIP-1 bound.
"""

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetError,
    DimensionError,
    ParameterError,
    PreconditionError,
    UncoverableError,
)
from .rng import stream

RIP1_TOL = 1e-9


@dataclass(frozen=True)
class ExpanderParams:
    """Target parameters for graph generation and verification.

    n, m are the left/right node counts, d the left degree, epsilon the
    expansion slack in (0, 1/2), and k the sparsity level the graph is
    meant to expand on.
    """

    n: int
    m: int
    d: int
    epsilon: float
    k: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ParameterError("n and m must be positive")
        if not 1 <= self.d <= self.m:
            raise ParameterError(f"need 1 <= d <= m, got d={self.d}, m={self.m}")
        if self.m >= self.n:
            raise ParameterError(f"graph must be unbalanced (m < n), got m={self.m}, n={self.n}")
        if not 1 <= self.k <= self.n / 2:
            raise ParameterError(f"need 1 <= k <= n/2, got k={self.k}, n={self.n}")
        if not 0.0 < self.epsilon < 0.5:
            raise ParameterError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")


class ExpanderGraph:
    """A left-d-regular bipartite graph in canonical (sorted-column) form.

    ``columns[i]`` holds the d distinct right-node indices adjacent to
    left node i, sorted ascending.  Instances are immutable and safe to
    share across threads.
    """

    __slots__ = ("n", "m", "d", "columns")

    def __init__(self, m: int, columns):
        cols = np.asarray(columns, dtype=np.int64)
        if cols.ndim != 2 or cols.shape[0] < 1 or cols.shape[1] < 1:
            raise ParameterError("columns must be a nonempty (n, d) array")
        if m < 1:
            raise ParameterError("m must be positive")
        if cols.min() < 0 or cols.max() >= m:
            raise ParameterError("neighbor index out of range [0, m)")
        cols = np.sort(cols, axis=1)
        if np.any(cols[:, 1:] == cols[:, :-1]):
            raise ParameterError("columns must not contain duplicate neighbors")
        self.n = int(cols.shape[0])
        self.m = int(m)
        self.d = int(cols.shape[1])
        self.columns = cols
        self.columns.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, ExpanderGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and self.d == other.d
            and np.array_equal(self.columns, other.columns)
        )

    def __repr__(self):
        return f"ExpanderGraph(n={self.n}, m={self.m}, d={self.d})"

    def neighbor_masks(self) -> list[int]:
        """Per-column neighborhoods as bitmasks over the right nodes."""
        return [int(sum(1 << int(j) for j in col)) for col in self.columns]

    def adjacency_times(self, x: np.ndarray) -> np.ndarray:
        """Unscaled product A @ x of the 0/1 adjacency matrix."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionError(f"signal length {x.shape} does not match n={self.n}")
        out = np.zeros(self.m)
        np.add.at(out, self.columns.ravel(), np.repeat(x, self.d))
        return out


@dataclass(frozen=True)
class CoverSet:
    """A left-node set whose neighborhood touches every right node.

    ``indicator`` is the 0/1 vector over left nodes; A @ indicator >= 1
    entrywise, which is what keeps shifted recovery candidates strictly
    positive in the measurement domain.
    """

    indices: np.ndarray
    indicator: np.ndarray

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class CollisionAnalysis:
    """Collision-edge statistics of a graph relative to a signal x.

    Left nodes are ranked by non-increasing |x_i| (ties by original
    index).  An edge collides when its right endpoint was already hit
    by an earlier-ranked node.  ``prefix_counts[r]`` is the number of
    collision edges among ranks 0..r, and ``collision_weight`` is the
    total |x_i| carried by colliding edges.
    """

    permutation: np.ndarray
    collision_edges: tuple
    prefix_counts: np.ndarray
    collision_weight: float


@dataclass(frozen=True)
class ExpansionCertificate:
    """Outcome of an expansion check.

    mode "exact" with verdict "pass" is a proof; mode "sampled" with
    verdict "pass" only means no counterexample was found among the
    sampled subsets.  A "fail" verdict always carries a witness subset.
    """

    mode: str
    k: int
    epsilon: float
    verdict: str
    witness: dict | None
    subsets_checked: int

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def is_proof(self) -> bool:
        return self.mode == "exact" and self.verdict == "pass"

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "k": self.k,
                "epsilon": self.epsilon,
                "verdict": self.verdict,
                "witness": self.witness,
                "subsets_checked": self.subsets_checked,
            }
        )


@dataclass(frozen=True)
class Rip1Report:
    """The two-sided l1 norm sandwich for one graph/signal pair.

    lhs = (1-2*eps)*d*||x||_1, mid = ||A x||_1, rhs = d*||x||_1.  The
    lower bound only applies to k-sparse signals; when x is denser the
    report keeps the upper bound and marks the lower one inapplicable.
    """

    lhs: float
    mid: float
    rhs: float
    passed: bool
    lower_applicable: bool
    context: dict


def generate_graph(params: ExpanderParams, seed: int) -> ExpanderGraph:
    """Sample a left-d-regular graph uniformly at random.

    Each column's d neighbors are drawn uniformly without replacement
    from [0, m), independently per column.  Deterministic for a fixed
    (params, seed).  Whether the result actually expands must be
    established separately with :func:`verify_expansion`.
    """
    rng = stream(seed, "graph-gen")
    cols = np.empty((params.n, params.d), dtype=np.int64)
    for i in range(params.n):
        cols[i] = rng.choice(params.m, size=params.d, replace=False)
    return ExpanderGraph(params.m, cols)


def _subset_count(n: int, k: int) -> int:
    return sum(math.comb(n, s) for s in range(1, k + 1))


def verify_expansion(
    g: ExpanderGraph,
    k: int,
    epsilon: float,
    mode: str = "exact",
    budget: int = 100_000,
    seed: int = 0,
) -> ExpansionCertificate:
    """Check |N(S)| > (1-epsilon)*d*|S| for left subsets up to size k.

    Exact mode enumerates every subset (sizes ascending, lexicographic
    within a size) and refuses outright if the enumeration would exceed
    ``budget``; it never silently downgrades to sampling.  Sampled mode
    draws ``budget`` uniform subsets per size and can only ever find
    counterexamples, never prove expansion.
    """
    if not 1 <= k <= g.n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}")
    if not 0.0 < epsilon < 0.5:
        raise ParameterError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if mode not in ("exact", "sampled"):
        raise ParameterError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    if budget < 1:
        raise ParameterError("budget must be positive")

    masks = g.neighbor_masks()
    checked = 0

    def certificate(verdict, witness):
        return ExpansionCertificate(mode, k, float(epsilon), verdict, witness, checked)

    if mode == "exact":
        total = _subset_count(g.n, k)
        if total > budget:
            raise BudgetError(
                f"exact verification needs {total} subsets but budget is {budget}; "
                "raise the budget or use sampled mode explicitly"
            )
        for s in range(1, k + 1):
            threshold = (1.0 - epsilon) * g.d * s
            for subset in itertools.combinations(range(g.n), s):
                union = 0
                for i in subset:
                    union |= masks[i]
                checked += 1
                if union.bit_count() <= threshold:
                    witness = {
                        "subset": list(subset),
                        "neighborhood_size": union.bit_count(),
                    }
                    return certificate("fail", witness)
        return certificate("pass", None)

    rng = stream(seed, "verify-sampled")
    for s in range(1, k + 1):
        threshold = (1.0 - epsilon) * g.d * s
        for _ in range(budget):
            subset = np.sort(rng.choice(g.n, size=s, replace=False))
            union = 0
            for i in subset:
                union |= masks[int(i)]
            checked += 1
            if union.bit_count() <= threshold:
                witness = {
                    "subset": [int(i) for i in subset],
                    "neighborhood_size": union.bit_count(),
                }
                return certificate("fail", witness)
    return certificate("pass", None)


@dataclass(frozen=True)
class ExpansionProfile:
    """Exact expansion slack of a graph up to sparsity k.

    ``eps_min`` is max over subsets of 1 - |N(S)|/(d*|S|); the graph is
    a certifiable (k, eps)-expander exactly for eps > eps_min.
    """

    eps_min: float
    worst_subset: tuple
    worst_neighborhood: int


def expansion_profile(g: ExpanderGraph, k: int, budget: int = 100_000) -> ExpansionProfile:
    """Measure the achieved expansion by exhaustive enumeration.

    This is how the package reports what (k, eps) a sampled graph
    actually attained; no optimality of the construction is claimed.
    """
    if not 1 <= k <= g.n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}")
    total = _subset_count(g.n, k)
    if total > budget:
        raise BudgetError(f"profile needs {total} subsets but budget is {budget}")
    masks = g.neighbor_masks()
    eps_min = -math.inf
    worst = ()
    worst_nbhd = 0
    for s in range(1, k + 1):
        for subset in itertools.combinations(range(g.n), s):
            union = 0
            for i in subset:
                union |= masks[i]
            slack = 1.0 - union.bit_count() / (g.d * s)
            if slack > eps_min:
                eps_min = slack
                worst = subset
                worst_nbhd = union.bit_count()
    return ExpansionProfile(eps_min, worst, worst_nbhd)


def cover_set(g: ExpanderGraph) -> CoverSet:
    """Greedy cover: repeatedly take the left node covering the most
    still-uncovered right nodes, ties broken by lowest index.

    Every pick covers at least one new right node, so the cover has at
    most m members.  Raises :class:`UncoverableError` naming the first
    isolated right node if one exists.
    """
    degree = np.zeros(g.m, dtype=np.int64)
    np.add.at(degree, g.columns.ravel(), 1)
    isolated = np.flatnonzero(degree == 0)
    if isolated.size:
        raise UncoverableError(f"right node {int(isolated[0])} has no neighbors")

    covered = np.zeros(g.m, dtype=bool)
    chosen = []
    while not covered.all():
        gains = (~covered)[g.columns].sum(axis=1)
        pick = int(np.argmax(gains))  # argmax takes the lowest index on ties
        chosen.append(pick)
        covered[g.columns[pick]] = True

    indices = np.array(sorted(chosen), dtype=np.int64)
    indicator = np.zeros(g.n)
    indicator[indices] = 1.0
    indices.setflags(write=False)
    indicator.setflags(write=False)
    return CoverSet(indices, indicator)


def collision_analysis(g: ExpanderGraph, x: np.ndarray) -> CollisionAnalysis:
    """Rank left nodes by |x_i| and classify each edge as first-touch
    or collision on its right endpoint.

    For a (k, eps)-expander and k-sparse x the collision weight is at
    most eps*d*||x||_1, which is the combinatorial heart of the lower
    RIP-1 bound.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.n,):
        raise DimensionError(f"signal length {x.shape} does not match n={g.n}")

    # lexsort: last key is primary, so order is by |x| descending, then index ascending
    order = np.lexsort((np.arange(g.n), -np.abs(x)))
    seen = np.zeros(g.m, dtype=bool)
    prefix = np.zeros(g.n, dtype=np.int64)
    edges = []
    weight = 0.0
    count = 0
    for rank, i in enumerate(order):
        for j in g.columns[i]:
            if seen[j]:
                count += 1
                edges.append((int(i), int(j)))
                weight += abs(float(x[i]))
            else:
                seen[j] = True
        prefix[rank] = count
    prefix.setflags(write=False)
    return CollisionAnalysis(order, tuple(edges), prefix, weight)


def rip1_check(g: ExpanderGraph, x: np.ndarray, k: int, epsilon: float) -> Rip1Report:
    """Evaluate (1-2*eps)*d*||x||_1 <= ||A x||_1 <= d*||x||_1.

    The caller is responsible for having certified the (k, epsilon)
    expansion; this routine only evaluates the sandwich.  If x is not
    k-sparse the lower bound does not apply and is excluded from the
    pass verdict.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.n,):
        raise DimensionError(f"signal length {x.shape} does not match n={g.n}")
    if not 0.0 < epsilon < 0.5:
        raise ParameterError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    l1 = float(np.abs(x).sum())
    mid = float(np.abs(g.adjacency_times(x)).sum())
    rhs = g.d * l1
    lhs = (1.0 - 2.0 * epsilon) * g.d * l1
    sparse = int(np.count_nonzero(x)) <= k
    upper_ok = mid <= rhs + RIP1_TOL
    lower_ok = lhs <= mid + RIP1_TOL
    passed = upper_ok and (lower_ok if sparse else True)
    return Rip1Report(
        lhs=lhs,
        mid=mid,
        rhs=rhs,
        passed=passed,
        lower_applicable=sparse,
        context={"k": k, "epsilon": epsilon, "d": g.d, "nnz": int(np.count_nonzero(x))},
    )


def dumps_graph(g: ExpanderGraph) -> str:
    """Serialize to the .exg text format: 'n m d' then one sorted
    neighbor list per column."""
    lines = [f"{g.n} {g.m} {g.d}"]
    lines.extend(" ".join(str(int(j)) for j in col) for col in g.columns)
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> ExpanderGraph:
    """Parse the .exg text format; validates regularity and ranges."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParameterError("empty graph file")
    header = lines[0].split()
    if len(header) != 3:
        raise ParameterError("header must be 'n m d'")
    try:
        n, m, d = (int(tok) for tok in header)
    except ValueError as exc:
        raise ParameterError(f"bad header {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise ParameterError(f"expected {n} column lines, found {len(lines) - 1}")
    cols = np.empty((n, d), dtype=np.int64)
    for i, line in enumerate(lines[1:]):
        toks = line.split()
        if len(toks) != d:
            raise ParameterError(f"column {i} has {len(toks)} entries, expected {d}")
        try:
            cols[i] = [int(tok) for tok in toks]
        except ValueError as exc:
            raise ParameterError(f"column {i} has a non-integer entry") from exc
    return ExpanderGraph(m, cols)


def save_graph(g: ExpanderGraph, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_graph(g))


def load_graph(path) -> ExpanderGraph:
    with open(path, "r", encoding="ascii") as fh:
        return loads_graph(fh.read())


def find_certified_graph(
    n: int,
    m: int,
    d: int,
    k: int,
    eps_cap: float = 0.5,
    base_seed: int = 0,
    max_tries: int = 5000,
    budget: int = 200_000,
):
    """Generate-and-verify retry loop.

    Samples graphs until one has an exact expansion profile with
    eps_min strictly below ``eps_cap``; returns (graph, eps, seed) where
    eps is a certified slack just above the measured eps_min.
    """
    params = ExpanderParams(n=n, m=m, d=d, epsilon=min(eps_cap, 0.49), k=k)
    for t in range(max_tries):
        g = generate_graph(params, seed=base_seed + t)
        profile = expansion_profile(g, k, budget=budget)
        eps = profile.eps_min + 1e-6
        if eps < eps_cap:
            cert = verify_expansion(g, k, eps, mode="exact", budget=budget)
            if not cert.is_proof:
                raise PreconditionError("profile and verifier disagree; this is a bug")
            return g, eps, base_seed + t
    raise PreconditionError(
        f"no (k={k}, eps<{eps_cap}) graph found for n={n}, m={m}, d={d} "
        f"within {max_tries} seeds"
    )
