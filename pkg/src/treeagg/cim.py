"""Ising label model over parser votes, with correlation handling.

The joint model over the true edge label Y and parser labels L is
log-linear with a bias term for Y, per-parser singleton terms, per-parser
interaction terms with Y, and pairwise terms between correlated parsers.
Aggregation proceeds in four steps:

1. estimate a parser correlation graph by sparse logistic regressions,
2. collapse each connected component of correlated parsers into one
   pseudo-parser (within-component majority vote),
3. estimate mean parameters of the collapsed model by the triplet
   method of moments,
4. fit the canonical parameters that matter for inference (the Y bias and
   the Y-parser interactions) by minimizing a convex moment-matching
   objective, then score each edge as the posterior probability that it
   is correct given the votes.

``joint_prob_oracle`` evaluates the full joint by enumeration (small
ensembles only) and exists as an independent check on the closed-form
posterior.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .edges import EdgeLabelMatrix, majority_vote, trees_from_scores
from .trees import DepTree, ParseEnsemble


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _soft_threshold(x: np.ndarray, radius: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - radius, 0.0)


def fit_l1_logistic(
    features: np.ndarray,
    target: np.ndarray,
    penalty: float,
    tol: float = 1e-6,
    max_iterations: int = 2000,
) -> tuple[float, np.ndarray, int, bool]:
    """L1-penalized logistic regression by proximal gradient (FISTA).

    Minimizes mean log-loss plus ``penalty * ||w||_1`` with an unpenalized
    intercept; ``target`` is in {-1, +1}. Convergence is the KKT residual
    of the nonsmooth optimality conditions dropping below ``tol``.
    """
    n, p = features.shape
    X = np.column_stack([np.ones(n), features.astype(np.float64)])
    t = (np.asarray(target, dtype=np.float64) + 1.0) / 2.0
    step = 4.0 * n / np.linalg.norm(X, 2) ** 2

    def grad(w: np.ndarray) -> np.ndarray:
        return X.T @ (_sigmoid(X @ w) - t) / n

    def kkt(w: np.ndarray, g: np.ndarray) -> float:
        r = abs(g[0])
        gv, wv = g[1:], w[1:]
        on = wv != 0
        r = max(r, float(np.max(np.abs(gv[on] + penalty * np.sign(wv[on])), initial=0)))
        r = max(r, float(np.max(np.abs(gv[~on]) - penalty, initial=0)))
        return r

    w = np.zeros(p + 1)
    z = w.copy()
    momentum = 1.0
    for it in range(1, max_iterations + 1):
        w_next = z - step * grad(z)
        w_next[1:] = _soft_threshold(w_next[1:], step * penalty)
        m_next = (1.0 + math.sqrt(1.0 + 4.0 * momentum**2)) / 2.0
        z = w_next + ((momentum - 1.0) / m_next) * (w_next - w)
        w, momentum = w_next, m_next
        g = grad(w)
        if kkt(w, g) <= tol:
            return float(w[0]), w[1:], it, True
    return float(w[0]), w[1:], max_iterations, False


def default_l1_penalty(m: int, n: int) -> float:
    return 0.1 * math.sqrt(math.log(m) / n)


@dataclass(frozen=True)
class CorrelationGraph:
    """Undirected correlation edges between parser columns.

    An edge (j, k) requires the regression coefficient of k when
    predicting j AND of j when predicting k to both exceed the threshold
    in magnitude; ``strengths`` records the smaller of the two. Constant
    columns are excluded from every regression and listed.
    """

    parser_ids: tuple[str, ...]
    edges: frozenset[tuple[int, int]]
    strengths: Mapping[tuple[int, int], float]
    excluded: tuple[int, ...] = ()


def estimate_correlation_graph(
    matrix: EdgeLabelMatrix,
    mv: np.ndarray | None = None,
    l1_penalty: float | None = None,
    coef_threshold: float = 1.0,
    tol: float = 1e-6,
    max_iterations: int = 2000,
) -> CorrelationGraph:
    """Neighborhood selection over parser columns.

    Each active column is regressed on the other active columns plus the
    majority-vote column (a stand-in for the unseen true label, so that
    agreement through sheer accuracy does not read as correlation).

    The threshold separates coefficient scales, not significance. Tree
    ensembles carry structural coupling the majority-vote feature cannot
    absorb (a candidate edge proposed by one parser needs no other
    proposer, so error votes anti-correlate), which on realistic corpora
    produces cross-parser coefficients up to roughly 0.5. Duplicated or
    near-duplicated parsers sit an order of magnitude higher.
    """
    n, m = matrix.labels.shape
    if m < 2:
        raise ValueError("need at least two parsers")
    labels = matrix.labels.astype(np.float64)
    if mv is None:
        mv = majority_vote(matrix)
    if l1_penalty is None:
        l1_penalty = default_l1_penalty(m, n)
    excluded = tuple(
        j for j in range(m) if np.all(labels[:, j] == labels[0, j])
    )
    active = [j for j in range(m) if j not in excluded]
    coef: dict[tuple[int, int], float] = {}
    for j in active:
        feats = [k for k in active if k != j]
        X = np.column_stack([labels[:, feats], mv.astype(np.float64)])
        _, w, _, _ = fit_l1_logistic(X, labels[:, j], l1_penalty, tol, max_iterations)
        for pos, k in enumerate(feats):
            coef[(j, k)] = abs(float(w[pos]))
    edges = set()
    strengths: dict[tuple[int, int], float] = {}
    for j, k in itertools.combinations(active, 2):
        if coef[(j, k)] > coef_threshold and coef[(k, j)] > coef_threshold:
            edges.add((j, k))
            strengths[(j, k)] = min(coef[(j, k)], coef[(k, j)])
    return CorrelationGraph(matrix.parser_ids, frozenset(edges), strengths, excluded)


@dataclass(frozen=True)
class CollapseMap:
    """How original parser columns map onto collapsed pseudo-columns."""

    components: tuple[tuple[int, ...], ...]
    representatives: tuple[int, ...]

    @property
    def column_of(self) -> dict[int, int]:
        return {j: c for c, comp in enumerate(self.components) for j in comp}


def collapse_correlated(
    matrix: EdgeLabelMatrix, graph: CorrelationGraph
) -> tuple[EdgeLabelMatrix, CollapseMap]:
    """Merge each connected component into one pseudo-parser column.

    The pseudo-column is the within-component majority vote; ties go to
    the member that agrees most often with the global majority vote (then
    to the lowest column index). Components are ordered by their smallest
    member, so a graph with no edges returns the matrix unchanged.
    """
    m = matrix.m
    parent = list(range(m))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j, k in graph.edges:
        parent[find(j)] = find(k)
    groups: dict[int, list[int]] = {}
    for j in range(m):
        groups.setdefault(find(j), []).append(j)
    components = tuple(
        tuple(sorted(g)) for g in sorted(groups.values(), key=min)
    )

    mv = majority_vote(matrix)
    agreement = (matrix.labels == mv[:, None]).mean(axis=0)
    representatives = tuple(
        max(comp, key=lambda j: (agreement[j], -j)) for comp in components
    )
    if all(len(c) == 1 for c in components):
        return matrix, CollapseMap(components, representatives)

    cols = []
    ids = []
    for comp, rep in zip(components, representatives):
        if len(comp) == 1:
            cols.append(matrix.labels[:, comp[0]])
            ids.append(matrix.parser_ids[comp[0]])
            continue
        s = matrix.labels[:, comp].astype(np.int64).sum(axis=1)
        pseudo = np.where(s > 0, 1, np.where(s < 0, -1, matrix.labels[:, rep]))
        cols.append(pseudo.astype(np.int8))
        ids.append("+".join(matrix.parser_ids[j] for j in comp))
    reduced = matrix.with_labels(np.column_stack(cols).astype(np.int8), tuple(ids))
    return reduced, CollapseMap(components, representatives)


@dataclass(frozen=True)
class IsingParams:
    """Mean parameters, canonical parameters, and fit diagnostics.

    ``mu00`` is the mean of the majority-vote proxy for Y, ``mu_plus`` the
    per-parser label means, ``mu0_plus`` the estimated E[L_j * Y], and
    ``mu_plus_plus`` pairwise products for correlated pairs. Only
    ``theta00`` and ``theta0_plus`` matter for inference; per-parser
    singleton terms have no estimation procedure here and exist only as
    oracle inputs.
    """

    mu00: float
    mu_plus: tuple[float, ...]
    mu0_plus: tuple[float, ...]
    mu_plus_plus: Mapping[tuple[int, int], float] = field(default_factory=dict)
    triplet_fallback: bool = False
    theta00: float | None = None
    theta0_plus: tuple[float, ...] | None = None
    grad_norm: float | None = None
    iterations: int | None = None
    converged: bool | None = None
    plugin: bool = False


def accuracy_moment_from_pair_means(
    j: int,
    pair_means: np.ndarray,
    triplet_min: float = 0.01,
) -> list[float]:
    """All triplet estimates for column j from pairwise second moments.

    Under conditional independence given the truth, the off-diagonal
    moments factor rank-one, so for any pair (k, l) not involving j:
    sqrt(|m_jk * m_jl / m_kl|) recovers column j's factor. Pass centered
    covariances in general; raw products coincide with them only under
    class balance. Pairs whose denominator is smaller than
    ``triplet_min`` are skipped.
    """
    m = pair_means.shape[0]
    vals = []
    for k, l in itertools.combinations((i for i in range(m) if i != j), 2):
        denom = pair_means[k, l]
        if abs(denom) < triplet_min:
            continue
        vals.append(math.sqrt(abs(pair_means[j, k] * pair_means[j, l] / denom)))
    return vals


def estimate_mean_params(
    matrix: EdgeLabelMatrix,
    mv: np.ndarray | None = None,
    pairs: Iterable[tuple[int, int]] = (),
    triplet_min: float = 0.01,
    clamp: tuple[float, float] = (0.001, 0.999),
) -> IsingParams:
    """Triplet method-of-moments estimates of the mean parameters.

    Writing E[L_j | Y] = alpha_j + beta_j * Y, conditional independence
    makes the covariance matrix factor as Cov(L_j, L_k) =
    beta_j * beta_k * Var(Y) for j != k, whatever the class balance, so
    the triplet median over centered covariances estimates
    beta_j * sd(Y). The moment of interest follows as

        E[L_j Y] = E[L_j] * mu00 + beta_j * (1 - mu00^2)

    with mu00 taken from the majority vote. On balanced data this reduces
    to the triplet median itself. The square root is taken positive
    (parsers are assumed better than chance); results are clamped into
    ``clamp`` by magnitude. With fewer than three parsers, a degenerate
    majority vote, or no usable triplet for a column, that column falls
    back to the empirical mean of L_j times the majority vote (keeping
    its sign) and the result is flagged.
    """
    labels = matrix.labels.astype(np.float64)
    n, m = labels.shape
    if mv is None:
        mv = majority_vote(matrix)
    mv_f = mv.astype(np.float64)
    pair_means = labels.T @ labels / n
    mu_plus = labels.mean(axis=0)
    mu00 = float(mv_f.mean())
    covariances = pair_means - np.outer(mu_plus, mu_plus)
    var_y = 1.0 - mu00**2

    lo, hi = clamp
    mu0 = np.empty(m)
    fallback = False
    for j in range(m):
        vals = (
            accuracy_moment_from_pair_means(j, covariances, triplet_min)
            if m >= 3 and var_y > 0.0
            else []
        )
        if vals:
            beta_sd = float(np.median(vals))
            mu0[j] = mu_plus[j] * mu00 + beta_sd * math.sqrt(var_y)
        else:
            fallback = True
            mu0[j] = float((labels[:, j] * mv_f).mean())
    signs = np.where(mu0 < 0, -1.0, 1.0)
    mu0 = signs * np.clip(np.abs(mu0), lo, hi)

    mu_pp = {
        (j, k): float(pair_means[j, k]) for j, k in pairs
    }
    return IsingParams(
        mu00=mu00,
        mu_plus=tuple(float(v) for v in mu_plus),
        mu0_plus=tuple(float(v) for v in mu0),
        mu_plus_plus=mu_pp,
        triplet_fallback=fallback,
    )


def _canonical_value_grad(
    theta: np.ndarray, labels: np.ndarray, mu: np.ndarray
) -> tuple[float, np.ndarray]:
    z = theta[0] + labels @ theta[1:]
    az = np.abs(z)
    # Overly long line-search trials may overflow the mean to +inf; that
    # is the right answer (the trial is rejected), not an error.
    with np.errstate(over="ignore"):
        value = float(-(theta @ mu) + np.mean(az + np.log1p(np.exp(-2.0 * az))))
    tz = np.tanh(z)
    grad = np.empty_like(theta)
    grad[0] = -mu[0] + tz.mean()
    grad[1:] = -mu[1:] + labels.T @ tz / labels.shape[0]
    return value, grad


def fit_canonical_params(
    means: IsingParams,
    matrix: EdgeLabelMatrix,
    tol: float = 1e-6,
    max_iterations: int = 5000,
) -> IsingParams:
    """Fit the Y bias and Y-parser interactions by moment matching.

    Minimizes the convex objective whose stationary point makes the model
    moments tanh(theta00 + theta0_plus . L) reproduce ``mu00`` and
    ``mu0_plus``; gradient descent from zero with an expanding backtracking
    line search, stopping when the gradient norm reaches ``tol``.
    """
    labels = matrix.labels.astype(np.float64)
    mu = np.concatenate([[means.mu00], means.mu0_plus])
    theta = np.zeros(matrix.m + 1)
    value, grad = _canonical_value_grad(theta, labels, mu)
    step = 1.0
    iterations = 0
    stalled = False
    for iterations in range(1, max_iterations + 1):
        gnorm2 = float(grad @ grad)
        if math.sqrt(gnorm2) <= tol:
            iterations -= 1
            break
        step *= 2.0
        while True:
            cand = theta - step * grad
            cand_value, cand_grad = _canonical_value_grad(cand, labels, mu)
            if cand_value <= value - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-30:
                stalled = True
                break
        if stalled:
            break
        theta, value, grad = cand, cand_value, cand_grad
    grad_norm = float(np.linalg.norm(grad))
    return replace(
        means,
        theta00=float(theta[0]),
        theta0_plus=tuple(float(v) for v in theta[1:]),
        grad_norm=grad_norm,
        iterations=iterations,
        converged=grad_norm <= tol,
    )


def plugin_canonical_params(means: IsingParams, eps: float = 1e-3) -> IsingParams:
    """Closed-form canonical parameters from the estimated mean parameters.

    The moment-matching objective has a finite minimizer only when the
    target moments are achievable by a soft labeling; moments at or
    beyond a hard labeling's (the usual case on real vote matrices) send
    the descent to infinity and the saturated iterate degenerates into a
    hard vote with meaningless weights. This algebraic route stays
    finite: invert the mean parameters into per-parser vote channels
    P(L_j | Y), clamped into [eps, 1-eps], and read the conditional
    log-odds of the implied conditional-independence model off them.
    """
    mu00 = min(max(means.mu00, -1.0 + 2 * eps), 1.0 - 2 * eps)
    var_y = 1.0 - mu00**2
    prior = 0.5 * (math.log1p(mu00) - math.log1p(-mu00))
    theta00 = prior
    theta0 = []
    for col_mean, mu0j in zip(means.mu_plus, means.mu0_plus):
        beta = (mu0j - col_mean * mu00) / var_y
        alpha = col_mean - beta * mu00
        half = []
        for y in (1.0, -1.0):
            p_plus = min(max((1.0 + alpha + beta * y) / 2.0, eps), 1.0 - eps)
            half.append((math.log(p_plus), math.log(1.0 - p_plus)))
        (lp_pos, lm_pos), (lp_neg, lm_neg) = half
        theta0.append(((lp_pos - lp_neg) - (lm_pos - lm_neg)) / 4.0)
        theta00 += ((lp_pos - lp_neg) + (lm_pos - lm_neg)) / 4.0
    return replace(
        means,
        theta00=float(theta00),
        theta0_plus=tuple(theta0),
        plugin=True,
    )


def infer_scores(params: IsingParams, matrix: EdgeLabelMatrix) -> np.ndarray:
    """Posterior probability that each edge's true label is +1.

    Pairwise and singleton parser terms cancel when conditioning on the
    votes, leaving sigmoid(2 * theta00 + 2 * theta0_plus . L).
    """
    if params.theta00 is None or params.theta0_plus is None:
        raise ValueError("canonical parameters not fitted")
    theta0 = np.asarray(params.theta0_plus)
    x = 2.0 * params.theta00 + 2.0 * matrix.labels.astype(np.float64) @ theta0
    return _sigmoid(x)


def joint_prob_oracle(
    theta00: float,
    theta0_plus: Sequence[float],
    theta_plus: Sequence[float],
    theta_plus_plus: Mapping[tuple[int, int], float],
    y: int,
    labels: Sequence[int],
) -> float:
    """Exact joint probability P(Y = y, L = labels) by full enumeration.

    Capped at 12 parsers (2^13 states). Used to verify the closed-form
    posterior; not part of the aggregation path.
    """
    m = len(theta0_plus)
    if m > 12:
        raise ValueError("oracle capped at 12 parsers")
    if len(theta_plus) != m or len(labels) != m:
        raise ValueError("parameter lengths disagree")
    if y not in (-1, 1) or any(v not in (-1, 1) for v in labels):
        raise ValueError("states must be -1 or +1")

    t0 = np.asarray(theta0_plus, dtype=np.float64)
    tp = np.asarray(theta_plus, dtype=np.float64)

    def energy(yv: float, lv: np.ndarray) -> float:
        e = theta00 * yv + float(tp @ lv) + float(t0 @ lv) * yv
        for (j, k), w in theta_plus_plus.items():
            e += w * lv[j] * lv[k]
        return e

    states = np.array(list(itertools.product((-1.0, 1.0), repeat=m + 1)))
    log_z = float(
        np.logaddexp.reduce([energy(s[0], s[1:]) for s in states])
    )
    return math.exp(energy(float(y), np.asarray(labels, dtype=np.float64)) - log_z)


@dataclass(frozen=True)
class CimOptions:
    l1_penalty: float | None = None
    coef_threshold: float = 1.0
    collapse: bool = True
    triplet_min: float = 0.01
    clamp: tuple[float, float] = (0.001, 0.999)
    fit_tol: float = 1e-6
    fit_max_iterations: int = 5000
    reg_tol: float = 1e-6
    reg_max_iterations: int = 2000
    enforce_single_root: bool = True


@dataclass(frozen=True, eq=False)
class CimResult:
    graph: CorrelationGraph
    collapse_map: CollapseMap
    reduced: EdgeLabelMatrix
    params: IsingParams
    scores: np.ndarray

    def diagnostics(self) -> dict:
        comp_ids = [
            [self.graph.parser_ids[j] for j in comp]
            for comp in self.collapse_map.components
        ]
        return {
            "components": comp_ids,
            "excluded": [self.graph.parser_ids[j] for j in self.graph.excluded],
            "correlation_edges": sorted(
                [self.graph.parser_ids[j], self.graph.parser_ids[k]]
                for j, k in self.graph.edges
            ),
            "mu00": self.params.mu00,
            "mu0_plus": dict(zip(self.reduced.parser_ids, self.params.mu0_plus)),
            "theta00": self.params.theta00,
            "theta0_plus": dict(
                zip(self.reduced.parser_ids, self.params.theta0_plus or ())
            ),
            "triplet_fallback": self.params.triplet_fallback,
            "fit": {
                "grad_norm": self.params.grad_norm,
                "iterations": self.params.iterations,
                "converged": self.params.converged,
                "plugin": self.params.plugin,
            },
        }


def cim_run(matrix: EdgeLabelMatrix, opts: CimOptions = CimOptions()) -> CimResult:
    """Full aggregation pass: correlation graph, collapse, estimate, score.

    The majority vote used for mean-parameter estimation is recomputed on
    the collapsed matrix so duplicated parsers cannot double-vote.
    """
    if opts.collapse:
        graph = estimate_correlation_graph(
            matrix,
            l1_penalty=opts.l1_penalty,
            coef_threshold=opts.coef_threshold,
            tol=opts.reg_tol,
            max_iterations=opts.reg_max_iterations,
        )
        reduced, cmap = collapse_correlated(matrix, graph)
    else:
        graph = CorrelationGraph(matrix.parser_ids, frozenset(), {}, ())
        reduced, cmap = collapse_correlated(matrix, graph)
    means = estimate_mean_params(
        reduced, triplet_min=opts.triplet_min, clamp=opts.clamp
    )
    params = fit_canonical_params(
        means, reduced, tol=opts.fit_tol, max_iterations=opts.fit_max_iterations
    )
    if not params.converged:
        # Divergent fit: the estimated moments are not soft-achievable,
        # so the saturated iterate is a degenerate hard vote. Fall back
        # to the closed-form parameters the same moments imply.
        params = plugin_canonical_params(params)
    scores = infer_scores(params, reduced)
    return CimResult(graph, cmap, reduced, params, scores)


def cim_trees(
    scores: np.ndarray,
    matrix: EdgeLabelMatrix,
    ensemble: ParseEnsemble,
    enforce_single_root: bool = True,
) -> dict[str, DepTree]:
    """Decode consensus trees from posterior edge scores."""
    return trees_from_scores(matrix, scores, ensemble, enforce_single_root)
