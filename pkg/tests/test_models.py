import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalpred.core import Query
from causalpred.errors import (
    GraphError,
    InvalidSize,
    MarginalMismatch,
    NonPsdInput,
    UnknownNode,
    ZeroCorrelation,
)
from causalpred.models import (
    Cpdag,
    Dag,
    PathModel,
    Polytree,
    cpdag_from_dag,
    d_separated,
    glue_gaussian_chain,
    is_polytree,
    load_model,
    markov_equivalent,
    model_from_json,
    model_to_json,
    path_corr,
    path_sign,
    q_anm_polytree,
    q_ci_dag,
    q_dirpath,
    q_lingam_admissible,
    random_dag_from_cpdag,
    save_model,
    v_structures,
)
from oracles import closure_has_path, moral_d_separated, random_dag

CHAIN = Dag(3, [(0, 1), (1, 2)])
COLLIDER = Dag(3, [(0, 2), (1, 2)])
FORK = Dag(3, [(0, 1), (0, 2)])


# --- graph construction -------------------------------------------------------


def test_dag_rejects_cycles_and_self_loops():
    with pytest.raises(GraphError):
        Dag(2, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Dag(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(GraphError):
        Dag(2, [(0, 0)])
    with pytest.raises(UnknownNode):
        Dag(2, [(0, 5)])


def test_polytree_rejects_undirected_cycle():
    with pytest.raises(GraphError):
        Polytree(3, [(0, 1), (0, 2), (1, 2)])
    assert is_polytree(CHAIN) == 1
    assert is_polytree(Dag(3, [(0, 1), (0, 2), (1, 2)])) == 0


def test_cpdag_rejects_conflicts():
    with pytest.raises(GraphError):
        Cpdag(3, [(0, 1)], [(0, 1)])
    with pytest.raises(GraphError):
        Cpdag(3, [(0, 1), (1, 0)], [])


def test_path_model_validation():
    m = PathModel((2, 0, 1), (0.5, -0.4))
    assert m.n == 3
    assert m.position(0) == 1
    with pytest.raises(GraphError):
        PathModel((0, 0, 1), (0.5, 0.5))
    with pytest.raises(InvalidSize):
        PathModel((0, 1, 2), (0.5,))
    with pytest.raises(InvalidSize):
        PathModel((0, 1), (1.0,))
    with pytest.raises(ZeroCorrelation):
        PathModel((0, 1), (0.0,))


# --- d-separation -------------------------------------------------------------


def test_d_separated_chain():
    assert d_separated(CHAIN, Query.ci(0, 2, (1,))) == 1
    assert d_separated(CHAIN, Query.ci(0, 2)) == 0


def test_d_separated_collider():
    assert d_separated(COLLIDER, Query.ci(0, 1, (2,))) == 0
    assert d_separated(COLLIDER, Query.ci(0, 1)) == 1


def test_d_separated_descendant_of_collider_opens_path():
    g = Dag(4, [(0, 2), (1, 2), (2, 3)])
    assert d_separated(g, Query.ci(0, 1, (3,))) == 0


def test_d_separated_matches_moral_oracle_small_sweep():
    for seed in range(40):
        n = 3 + seed % 4
        g = random_dag(n, seed)
        for a, b in itertools.combinations(range(n), 2):
            rest = [v for v in range(n) if v not in (a, b)]
            for size in range(min(2, len(rest)) + 1):
                for cond in itertools.combinations(rest, size):
                    got = d_separated(g, Query.ci(a, b, cond))
                    want = moral_d_separated(g, a, b, set(cond))
                    assert got == want, (g.edges, a, b, cond)


def test_d_separated_wrong_kind():
    with pytest.raises(InvalidSize):
        d_separated(CHAIN, Query.ordered_pair(0, 1))
    with pytest.raises(UnknownNode):
        d_separated(CHAIN, Query.ci(0, 5))


def test_q_ci_dag_is_d_separation():
    q = Query.ci(0, 2, (1,))
    assert q_ci_dag(CHAIN, q) == d_separated(CHAIN, q)


# --- directed paths -----------------------------------------------------------


def test_dirpath_chain():
    assert q_dirpath(CHAIN, Query.ordered_pair(0, 2)) == 1
    assert q_dirpath(CHAIN, Query.ordered_pair(2, 0)) == 0


def test_dirpath_edgeless():
    g = Dag(3, [])
    for a, b in itertools.permutations(range(3), 2):
        assert q_dirpath(g, Query.ordered_pair(a, b)) == 0


def test_dirpath_matches_closure_oracle():
    g = random_dag(8, seed=13)
    for i, j in itertools.permutations(range(8), 2):
        assert q_dirpath(g, Query.ordered_pair(i, j)) == int(closure_has_path(g, i, j))


# --- polytree edge predictor --------------------------------------------------


def test_anm_polytree_edges():
    t = Polytree(3, [(0, 1), (1, 2)])
    assert q_anm_polytree(t, Query.ordered_pair(0, 1)) == 1
    assert q_anm_polytree(t, Query.ordered_pair(1, 0)) == 0
    assert q_anm_polytree(t, Query.ordered_pair(0, 2)) == 0


# --- linear-model admissibility -----------------------------------------------


def test_lingam_fork_pair_confounded():
    assert q_lingam_admissible(FORK, Query.ordered_tuple(1, 2)) == 0


def test_lingam_chain_order_inconsistent():
    assert q_lingam_admissible(CHAIN, Query.ordered_tuple(2, 0, 1)) == 0


def test_lingam_chain_full_order_admissible():
    # under the adopted reading, tuple members do not count as confounders
    assert q_lingam_admissible(CHAIN, Query.ordered_tuple(0, 1, 2)) == 1
    assert q_lingam_admissible(CHAIN, Query.ordered_tuple(0, 1, 2), strict_common_ancestor=True) == 0


def test_lingam_hidden_confounder():
    g = Dag(4, [(3, 0), (3, 1), (1, 2)])
    # 3 confounds both (0, 1) and, through 1, the pair (1, 2)
    assert q_lingam_admissible(g, Query.ordered_tuple(0, 1)) == 0
    assert q_lingam_admissible(g, Query.ordered_tuple(1, 2)) == 0
    assert q_lingam_admissible(g, Query.ordered_tuple(3, 1)) == 1


# --- path-model predictions ---------------------------------------------------


def test_path_corr_product():
    m = PathModel((0, 1, 2), (0.5, 0.4))
    assert path_corr(m, Query.unordered_pair(0, 2)) == pytest.approx(0.2)
    assert path_corr(m, Query.unordered_pair(0, 1)) == pytest.approx(0.5)


def test_path_corr_signed_product():
    m = PathModel((0, 1, 2), (-0.5, 0.4))
    assert path_corr(m, Query.unordered_pair(0, 2)) == pytest.approx(-0.2)


def test_path_sign_values():
    m = PathModel((0, 1, 2), (-0.5, 0.4))
    assert path_sign(m, Query.unordered_pair(0, 1)) == -1
    assert path_sign(m, Query.unordered_pair(1, 2)) == 1
    assert path_sign(m, Query.unordered_pair(0, 2)) == -1


@given(
    st.lists(
        st.floats(0.05, 0.95).flatmap(lambda r: st.sampled_from([r, -r])),
        min_size=2,
        max_size=6,
    )
)
def test_path_corr_composition_law(rs):
    # corr(a, c) = corr(a, b) * corr(b, c) for b between a and c
    n = len(rs) + 1
    m = PathModel(tuple(range(n)), tuple(rs))
    a, b, c = 0, n // 2, n - 1
    full = path_corr(m, Query.unordered_pair(a, c))
    if a != b and b != c:
        left = path_corr(m, Query.unordered_pair(a, b))
        right = path_corr(m, Query.unordered_pair(b, c))
        assert full == pytest.approx(left * right)


# --- Markov equivalence -------------------------------------------------------


def test_markov_equivalent_examples():
    assert markov_equivalent(CHAIN, Dag(3, [(2, 1), (1, 0)])) == 1
    assert markov_equivalent(Dag(3, [(0, 1), (2, 1)]), CHAIN) == 0
    # the fork with the chain's skeleton sits in the chain's class
    assert markov_equivalent(CHAIN, Dag(3, [(1, 0), (1, 2)])) == 1
    # FORK has a different skeleton
    assert markov_equivalent(CHAIN, FORK) == 0


def test_v_structures():
    assert v_structures(COLLIDER) == {(0, 2, 1)}
    assert v_structures(CHAIN) == set()
    # shielded collider is not a v-structure
    g = Dag(3, [(0, 2), (1, 2), (0, 1)])
    assert v_structures(g) == set()


def _all_dags_3():
    from causalpred.bounds import all_dags

    return all_dags(3)


def test_exhaustive_n3_markov_classes():
    dags = _all_dags_3()
    assert len(dags) == 25
    # classes by pairwise equivalence must agree with d-separation functions
    queries = []
    for a, b in itertools.combinations(range(3), 2):
        rest = [v for v in range(3) if v not in (a, b)]
        queries.append(Query.ci(a, b))
        queries.append(Query.ci(a, b, tuple(rest)))
    reps = []
    for g in dags:
        fn = tuple(d_separated(g, q) for q in queries)
        for rep, rep_fn in reps:
            equiv = markov_equivalent(g, rep)
            assert equiv == int(fn == rep_fn), (g.edges, rep.edges)
            if equiv:
                break
        else:
            reps.append((g, fn))
    assert len(reps) == 11


def test_markov_equivalence_is_an_equivalence_relation():
    dags = _all_dags_3()[:12]
    for g in dags:
        assert markov_equivalent(g, g) == 1
    for g1, g2 in itertools.combinations(dags, 2):
        assert markov_equivalent(g1, g2) == markov_equivalent(g2, g1)


# --- CPDAG machinery ----------------------------------------------------------


def test_cpdag_from_dag_chain_and_collider():
    c = cpdag_from_dag(CHAIN)
    assert c.directed == frozenset()
    assert c.undirected == frozenset({frozenset((0, 1)), frozenset((1, 2))})
    c2 = cpdag_from_dag(COLLIDER)
    assert c2.directed == frozenset({(0, 2), (1, 2)})
    assert c2.undirected == frozenset()


def test_random_extension_identity_on_directed_cpdag():
    c = Cpdag(3, [(0, 1), (1, 2)], [])
    g = random_dag_from_cpdag(c, seed=0)
    assert g.edges == CHAIN.edges


def test_random_extension_chain_class_coverage():
    c = cpdag_from_dag(CHAIN)
    allowed = {
        frozenset({(0, 1), (1, 2)}),
        frozenset({(1, 0), (1, 2)}),
        frozenset({(1, 0), (2, 1)}),
    }
    seen = set()
    for s in range(3000):
        g = random_dag_from_cpdag(c, s)
        key = frozenset(g.edges)
        assert key in allowed  # never the collider
        seen.add(key)
    assert seen == allowed


def test_random_extension_stays_in_markov_class():
    for seed in range(30):
        g = random_dag(5, seed, p=0.4)
        c = cpdag_from_dag(g)
        ext = random_dag_from_cpdag(c, seed + 1000)
        assert markov_equivalent(g, ext) == 1


# --- Gaussian chain gluing ----------------------------------------------------


def test_glue_example():
    out = glue_gaussian_chain([[1, 0.5], [0.5, 1]], [[1, 0.4], [0.4, 1]])
    expected = np.array([[1, 0.5, 0.2], [0.5, 1, 0.4], [0.2, 0.4, 1]])
    assert np.allclose(out, expected)
    assert out[0, 0] == 1.0 and out[1, 1] == 1.0 and out[2, 2] == 1.0
    assert out[0, 1] == 0.5 and out[1, 2] == 0.4


def test_glue_zero_correlation():
    out = glue_gaussian_chain([[1, 0.0], [0.0, 1]], [[1, 0.4], [0.4, 1]])
    assert out[0, 2] == 0.0


def test_glue_marginal_mismatch():
    with pytest.raises(MarginalMismatch):
        glue_gaussian_chain([[1, 0.5], [0.5, 1]], [[2, 0.4], [0.4, 1]])


def test_glue_bad_inputs():
    with pytest.raises(NonPsdInput):
        glue_gaussian_chain([[1, 2], [2, 1]], [[1, 0.4], [0.4, 1]])
    with pytest.raises(InvalidSize):
        glue_gaussian_chain(np.eye(3), np.eye(2))


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_glue_output_always_psd(r1, r2):
    out = glue_gaussian_chain([[1, r1], [r1, 1]], [[1, r2], [r2, 1]])
    assert np.linalg.eigvalsh(out).min() >= -1e-9
    assert out[0, 2] == pytest.approx(r1 * r2)


# --- serialization ------------------------------------------------------------


@pytest.mark.parametrize(
    "model",
    [
        CHAIN,
        Polytree(3, [(0, 1), (1, 2)]),
        Cpdag(3, [(0, 2)], [(0, 1)]),
        PathModel((2, 0, 1), (0.5, -0.4)),
    ],
)
def test_json_roundtrip(model, tmp_path):
    back = model_from_json(model_to_json(model))
    assert type(back) is type(model)
    assert model_to_json(back) == model_to_json(model)
    path = tmp_path / "m.json"
    save_model(model, path)
    assert model_to_json(load_model(path)) == model_to_json(model)
