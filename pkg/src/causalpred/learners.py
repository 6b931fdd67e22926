"""Fit causal models from observed test outcomes.

PC as empirical risk minimization over conditional-independence tests,
polytree construction from bivariate additive-noise tests, and greedy
path-model estimation.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import Query, QueryKind, enumerate_queries, sample_queries
from .errors import InvalidSize, KTooLarge, ZeroCorrelation
from .models import Cpdag, Polytree, _Pdag, d_separated
from .stattests import TestOutcome, anm_test, fisher_z_from_corr

VAR_EPS = 1e-12


@dataclass(frozen=True)
class LabeledQuery:
    """A query together with the test outcome observed for it."""

    query: Query
    outcome: TestOutcome


# --- PC -----------------------------------------------------------------------


def pc_from_ci(n, ci_test, max_cond):
    """Core PC skeleton + orientation phase driven by a CI callback.

    ``ci_test(a, b, cond)`` must return a TestOutcome whose binary value is
    1 for independence.  Edges are scanned in lexicographic order; the
    separating set recorded at deletion time drives v-structure
    orientation.  Returns the CPDAG and every executed test, deduplicated
    by canonical query.
    """
    if max_cond < 0:
        raise InvalidSize("max_cond must be nonnegative")
    adjacency = {v: set(range(n)) - {v} for v in range(n)}
    sepset = {}
    log = {}

    def run_test(a, b, cond):
        q = Query.ci(a, b, cond)
        if q not in log:
            log[q] = LabeledQuery(q, ci_test(a, b, tuple(cond)))
        return log[q].outcome.value.value

    for level in range(max_cond + 1):
        removed = True
        while removed:
            removed = False
            for a, b in combinations(range(n), 2):
                if b not in adjacency[a]:
                    continue
                candidates = sorted(adjacency[a] - {b})
                if len(candidates) < level:
                    continue
                for cond in combinations(candidates, level):
                    if run_test(a, b, cond) == 1:
                        adjacency[a].discard(b)
                        adjacency[b].discard(a)
                        sepset[frozenset((a, b))] = set(cond)
                        removed = True
                        break
    pdag = _Pdag(
        n,
        undirected=[
            frozenset((a, b)) for a, b in combinations(range(n), 2) if b in adjacency[a]
        ],
    )
    # v-structures from the recorded separating sets
    for a, b in combinations(range(n), 2):
        if b in adjacency[a]:
            continue
        key = frozenset((a, b))
        if key not in sepset:
            continue
        for c in sorted(adjacency[a] & adjacency[b]):
            if c not in sepset[key]:
                pdag.orient(a, c)
                pdag.orient(b, c)
    pdag.apply_meek_rules()
    return pdag.to_cpdag(), list(log.values())


def pc_fit(d, alpha, max_cond):
    """PC with Fisher-Z tests on the dataset's correlation matrix."""
    corr = np.corrcoef(d.samples, rowvar=False)
    index = {v: i for i, v in enumerate(d.columns)}

    def ci_test(a, b, cond):
        return fisher_z_from_corr(
            corr, d.l, (index[a], index[b]), [index[c] for c in cond], alpha
        )

    return pc_from_ci(len(d.columns), ci_test, max_cond)


def pc_oracle(g, max_cond):
    """PC driven by exact d-separation in a known graph (no data)."""

    def ci_test(a, b, cond):
        value = d_separated(g, Query.ci(a, b, cond))
        from .core import binary

        return TestOutcome(binary(value), None, None)

    return pc_from_ci(g.n, ci_test, max_cond)


# --- confidence-level selection -----------------------------------------------


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def select_alpha(candidates, scms, l, seed=0):
    """Pick the test confidence level with the best mean F1 of predicted
    dependence against d-separation ground truth, over marginal and
    one-variable-conditioned queries; ties go to the smaller alpha."""
    if not candidates:
        raise InvalidSize("need at least one candidate alpha")
    from .synthgen import sample  # local import to avoid a cycle

    scores = {a: [] for a in candidates}
    for idx, scm in enumerate(scms):
        data = sample(scm, l, seed + idx).dataset
        g = scm.dag()
        corr = np.corrcoef(data.samples, rowvar=False)
        queries = enumerate_queries(g.n, QueryKind.COND_INDEP, 0) + enumerate_queries(
            g.n, QueryKind.COND_INDEP, 1
        )
        truth = {q: d_separated(g, q) for q in queries}
        for alpha in candidates:
            tp = fp = fn = 0
            for q in queries:
                out = fisher_z_from_corr(corr, l, q.members, q.cond, alpha)
                predicted_dep = out.value.value == 0
                true_dep = truth[q] == 0
                if predicted_dep and true_dep:
                    tp += 1
                elif predicted_dep:
                    fp += 1
                elif true_dep:
                    fn += 1
            scores[alpha].append(_f1(tp, fp, fn))
    means = {a: float(np.mean(s)) if s else 0.0 for a, s in scores.items()}
    best = max(means.values())
    return min(a for a in candidates if means[a] == best)


# --- polytrees from ANM tests -------------------------------------------------


def _find_cycle(n, edge_list):
    """Any cycle in the undirected multigraph given as a list of directed
    edges; returns the edge indices on the cycle, or None."""
    incident = {v: [] for v in range(n)}
    for idx, (a, b) in enumerate(edge_list):
        incident[a].append((b, idx))
        incident[b].append((a, idx))
    via = {}
    parent_edge = {}

    def dfs(v):
        for w, idx in incident[v]:
            if idx == parent_edge.get(v):
                continue
            if w in via:
                # back edge: walk from v up the tree to w
                cycle = [idx]
                node = v
                while node != w:
                    cycle.append(parent_edge[node])
                    node = via[node]
                return cycle
            via[w] = v
            parent_edge[w] = idx
            found = dfs(w)
            if found is not None:
                return found
        return None

    for start in range(n):
        if start in via:
            continue
        via[start] = None
        parent_edge[start] = None
        found = dfs(start)
        if found is not None:
            return found
    return None


def polytree_from_anm(d, k, alpha, seed, tester=None):
    """Three-step polytree construction from bivariate additive-noise tests.

    1. test k ordered pairs drawn uniformly without replacement,
    2. add an edge per accepted test,
    3. while the skeleton has an undirected cycle, drop the cycle edge
       with the lowest residual-independence p-value.

    ``tester`` may replace the default ANM test (it receives the query and
    must return a TestOutcome); used for cached or synthetic outcomes.
    """
    n = len(d.columns)
    universe = [
        Query.ordered_pair(a, b) for a in d.columns for b in d.columns if a != b
    ]
    if not 1 <= k <= len(universe):
        raise KTooLarge(f"k={k} outside 1..{len(universe)}")
    if tester is None:
        tester = lambda q: anm_test(d, q, alpha)
    chosen = sample_queries(universe, k, seed)
    labels = [LabeledQuery(q, tester(q)) for q in chosen]

    kept = [lq for lq in labels if lq.outcome.value.value == 1]
    pos = {v: i for i, v in enumerate(d.columns)}
    edge_list = [
        (pos[lq.query.members[0]], pos[lq.query.members[1]]) for lq in kept
    ]
    p_values = [lq.outcome.p_value if lq.outcome.p_value is not None else 0.0 for lq in kept]
    while True:
        cycle = _find_cycle(n, edge_list)
        if cycle is None:
            break
        worst = min(cycle, key=lambda idx: (p_values[idx], edge_list[idx]))
        del edge_list[worst]
        del p_values[worst]
    # map column positions back to global variable ids
    node_of = dict(enumerate(d.columns))
    tree = Polytree(max(d.columns) + 1, [(node_of[a], node_of[b]) for a, b in edge_list])
    return tree, labels


# --- path models --------------------------------------------------------------


def fit_path_model(d):
    """Greedy chain construction from pairwise correlations.

    Starts from the strongest pair and repeatedly extends whichever chain
    end has the largest absolute correlation with an unused variable.
    """
    from .models import PathModel

    n = len(d.columns)
    if n < 2:
        raise InvalidSize("need at least two variables")
    corr = np.corrcoef(d.samples, rowvar=False)
    abs_corr = np.abs(corr)
    np.fill_diagonal(abs_corr, -1.0)
    if np.max(abs_corr) <= VAR_EPS:
        raise ZeroCorrelation("all pairwise correlations vanish")
    a, b = np.unravel_index(int(np.argmax(abs_corr)), abs_corr.shape)
    chain = [int(a), int(b)]
    unused = set(range(n)) - set(chain)
    while unused:
        head, tail = chain[0], chain[-1]
        best = None
        for v in sorted(unused):
            for end, at_front in ((head, True), (tail, False)):
                score = abs_corr[v, end]
                if best is None or score > best[0]:
                    best = (score, v, at_front)
        score, v, at_front = best
        if score <= VAR_EPS:
            raise ZeroCorrelation("chain extension correlation vanishes")
        if at_front:
            chain.insert(0, v)
        else:
            chain.append(v)
        unused.discard(v)
    adjacent = [float(corr[chain[i], chain[i + 1]]) for i in range(n - 1)]
    order = [d.columns[i] for i in chain]
    return PathModel(order, adjacent)
