import numpy as np
import pytest

from causalpred.core import Dataset, Query, binary
from causalpred.errors import InvalidSize, KTooLarge, ZeroCorrelation
from causalpred.learners import (
    LabeledQuery,
    _find_cycle,
    fit_path_model,
    pc_fit,
    pc_from_ci,
    pc_oracle,
    polytree_from_anm,
    select_alpha,
)
from causalpred.models import Dag, PathModel, path_corr
from causalpred.stattests import TestOutcome
from causalpred.synthgen import gen_linear_scm, sample

CHAIN = Dag(3, [(0, 1), (1, 2)])
COLLIDER = Dag(3, [(0, 2), (1, 2)])


# --- PC -----------------------------------------------------------------------


def test_pc_oracle_chain():
    cpdag, labels = pc_oracle(CHAIN, max_cond=1)
    assert cpdag.directed == frozenset()
    assert cpdag.undirected == frozenset({frozenset((0, 1)), frozenset((1, 2))})
    # executed tests are deduplicated canonical queries
    assert len({lq.query for lq in labels}) == len(labels)


def test_pc_oracle_collider():
    cpdag, _ = pc_oracle(COLLIDER, max_cond=1)
    assert cpdag.directed == frozenset({(0, 2), (1, 2)})
    assert cpdag.undirected == frozenset()


def test_pc_oracle_labels_match_d_separation():
    from causalpred.models import d_separated

    g = Dag(4, [(0, 1), (1, 3), (2, 3)])
    _, labels = pc_oracle(g, max_cond=2)
    for lq in labels:
        assert lq.outcome.value.value == d_separated(g, lq.query)


def test_pc_fit_all_independent():
    rng = np.random.default_rng(0)
    d = Dataset(rng.standard_normal((5000, 4)), (0, 1, 2, 3))
    cpdag, labels = pc_fit(d, alpha=0.001, max_cond=1)
    assert cpdag.directed == frozenset()
    assert cpdag.undirected == frozenset()
    assert labels  # marginal tests were executed


def test_pc_fit_recovers_collider():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(20000)
    y = rng.standard_normal(20000)
    z = 0.7 * x + 0.7 * y + rng.standard_normal(20000)
    d = Dataset(np.column_stack([x, y, z]), (0, 1, 2))
    cpdag, _ = pc_fit(d, alpha=0.001, max_cond=1)
    assert cpdag.directed == frozenset({(0, 2), (1, 2)})


def test_pc_fit_deterministic():
    scm = gen_linear_scm(8, 1.5, seed=3)
    d = sample(scm, 3000, seed=4).dataset
    a, la = pc_fit(d, 0.01, 1)
    b, lb = pc_fit(d, 0.01, 1)
    assert a == b
    assert [(q.query, q.outcome.p_value) for q in la] == [
        (q.query, q.outcome.p_value) for q in lb
    ]


def test_pc_negative_max_cond():
    with pytest.raises(InvalidSize):
        pc_from_ci(3, lambda a, b, c: None, -1)


# --- alpha selection ----------------------------------------------------------


def test_select_alpha_single_candidate():
    assert select_alpha([0.01], [gen_linear_scm(5, 1.5, 0)], l=500) == 0.01


def test_select_alpha_prefers_calibrated_level():
    scms = [gen_linear_scm(8, 1.5, s) for s in range(3)]
    assert select_alpha([0.5, 0.001], scms, l=5000) == 0.001


def test_select_alpha_empty():
    with pytest.raises(InvalidSize):
        select_alpha([], [], l=100)


# --- cycle finding ------------------------------------------------------------


def test_find_cycle_none_on_forest():
    assert _find_cycle(4, [(0, 1), (1, 2), (2, 3)]) is None
    assert _find_cycle(4, []) is None


def test_find_cycle_triangle():
    edges = [(0, 1), (1, 2), (2, 0)]
    cycle = _find_cycle(3, edges)
    assert sorted(cycle) == [0, 1, 2]


def test_find_cycle_parallel_edges():
    # (0, 1) and (1, 0) form an undirected 2-cycle in the multigraph
    cycle = _find_cycle(2, [(0, 1), (1, 0)])
    assert sorted(cycle) == [0, 1]


def test_find_cycle_disconnected_component():
    cycle = _find_cycle(6, [(0, 1), (3, 4), (4, 5), (5, 3)])
    assert cycle is not None
    assert len(cycle) == 3


# --- polytree from additive-noise outcomes ------------------------------------


def _synthetic_tester(edge_pvalues):
    def tester(q):
        key = q.members
        if key in edge_pvalues:
            return TestOutcome(binary(1), edge_pvalues[key], 0.05)
        return TestOutcome(binary(0), 0.001, 0.05)

    return tester


def test_polytree_from_synthetic_outcomes():
    d = Dataset(np.zeros((30, 3)), (0, 1, 2))
    tester = _synthetic_tester({(0, 1): 0.9, (1, 2): 0.8})
    tree, labels = polytree_from_anm(d, k=6, alpha=0.05, seed=0, tester=tester)
    assert tree.edges == frozenset({(0, 1), (1, 2)})
    assert len(labels) == 6


def test_polytree_cycle_removal_drops_lowest_p():
    d = Dataset(np.zeros((30, 3)), (0, 1, 2))
    tester = _synthetic_tester({(0, 1): 0.9, (1, 2): 0.8, (0, 2): 0.1})
    tree, _ = polytree_from_anm(d, k=6, alpha=0.05, seed=0, tester=tester)
    assert tree.edges == frozenset({(0, 1), (1, 2)})


def test_polytree_k_bounds():
    d = Dataset(np.zeros((30, 3)), (0, 1, 2))
    with pytest.raises(KTooLarge):
        polytree_from_anm(d, k=7, alpha=0.05, seed=0, tester=_synthetic_tester({}))
    with pytest.raises(KTooLarge):
        polytree_from_anm(d, k=0, alpha=0.05, seed=0, tester=_synthetic_tester({}))


def test_polytree_k_subset_is_without_replacement():
    d = Dataset(np.zeros((30, 4)), (0, 1, 2, 3))
    _, labels = polytree_from_anm(d, k=5, alpha=0.05, seed=7, tester=_synthetic_tester({}))
    assert len({lq.query for lq in labels}) == 5


def test_polytree_respects_global_column_ids():
    # columns are global ids 5, 6, 7, not positions
    d = Dataset(np.zeros((30, 3)), (5, 6, 7))
    tester = _synthetic_tester({(5, 6): 0.9, (6, 7): 0.8})
    tree, _ = polytree_from_anm(d, k=6, alpha=0.05, seed=0, tester=tester)
    assert tree.edges == frozenset({(5, 6), (6, 7)})


def test_labeled_query_fields():
    out = TestOutcome(binary(1), 0.5, 0.05)
    lq = LabeledQuery(Query.ci(0, 1), out)
    assert lq.query == Query.ci(0, 1)
    assert lq.outcome is out


# --- path models --------------------------------------------------------------


def _gaussian_chain_dataset(rs, l, seed):
    n = len(rs) + 1
    cov = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            r = 1.0
            for t in range(i, j):
                r *= rs[t]
            cov[i, j] = cov[j, i] = r
    rng = np.random.default_rng(seed)
    return Dataset(rng.multivariate_normal(np.zeros(n), cov, size=l), tuple(range(n)))


def test_fit_path_two_variables():
    d = _gaussian_chain_dataset([0.6], 5000, seed=0)
    m = fit_path_model(d)
    assert sorted(m.order) == [0, 1]
    assert m.adjacent_corr[0] == pytest.approx(0.6, abs=0.05)


def test_fit_path_planted_chain_prediction():
    d = _gaussian_chain_dataset([0.5, 0.4], 10000, seed=1)
    m = fit_path_model(d)
    assert list(m.order) in ([0, 1, 2], [2, 1, 0])
    pred = path_corr(m, Query.unordered_pair(0, 2))
    assert abs(pred - 0.2) < 3 / np.sqrt(10000) + 0.05


def test_fit_path_recovery_monte_carlo():
    hits = 0
    for s in range(10):
        d = _gaussian_chain_dataset([0.8, 0.75, 0.8, 0.75], 10000, seed=s)
        m = fit_path_model(d)
        hits += list(m.order) in ([0, 1, 2, 3, 4], [4, 3, 2, 1, 0])
    assert hits >= 9


def test_fit_path_needs_two_variables():
    with pytest.raises(InvalidSize):
        fit_path_model(Dataset(np.ones((5, 1)), (0,)))


def test_fit_path_zero_correlation():
    x = np.array([1.0, -1.0, 1.0, -1.0])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    with pytest.raises(ZeroCorrelation):
        fit_path_model(Dataset(np.column_stack([x, y]), (0, 1)))
