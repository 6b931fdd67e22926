"""Causal model classes acting as predictors of statistical properties.

DAGs, CPDAGs, polytrees and collider-free path models, together with the
graph machinery they need: d-separation, Meek orientation rules, Markov
equivalence, random consistent extensions, and Gaussian chain merging.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import Query, QueryKind
from .errors import (
    GraphError,
    InvalidSize,
    MarginalMismatch,
    NonPsdInput,
    UnknownNode,
    ZeroCorrelation,
)


def _check_nodes(n, *nodes):
    for v in nodes:
        if not 0 <= v < n:
            raise UnknownNode(v)


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on nodes 0..n-1; an edge (i, j) means i -> j."""

    n: int
    edges: frozenset

    def __init__(self, n, edges):
        edges = frozenset((int(a), int(b)) for a, b in edges)
        for a, b in edges:
            if a == b:
                raise GraphError(f"self-loop at {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise UnknownNode(a if not 0 <= a < n else b)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", edges)
        if self.topological_order() is None:
            raise GraphError("graph contains a directed cycle")

    def parents(self, v):
        return {a for a, b in self.edges if b == v}

    def children(self, v):
        return {b for a, b in self.edges if a == v}

    def topological_order(self):
        indeg = {v: 0 for v in range(self.n)}
        for _, b in self.edges:
            indeg[b] += 1
        queue = deque(sorted(v for v in range(self.n) if indeg[v] == 0))
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in sorted(self.children(v)):
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return order if len(order) == self.n else None

    def ancestors(self, v):
        """Proper ancestors of v (v itself excluded)."""
        out = set()
        stack = list(self.parents(v))
        while stack:
            u = stack.pop()
            if u not in out:
                out.add(u)
                stack.extend(self.parents(u))
        return out

    def skeleton(self):
        return frozenset(frozenset(e) for e in self.edges)

    def has_path(self, i, j):
        """True iff a directed path i -> ... -> j exists."""
        stack = [i]
        seen = set()
        while stack:
            u = stack.pop()
            if u == j:
                return True
            if u in seen:
                continue
            seen.add(u)
            stack.extend(self.children(u))
        return False


class Polytree(Dag):
    """A DAG whose undirected skeleton is a forest."""

    def __init__(self, n, edges):
        super().__init__(n, edges)
        if not is_polytree_edges(n, self.edges):
            raise GraphError("skeleton contains an undirected cycle")


def is_polytree_edges(n, edges) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def is_polytree(g: Dag) -> int:
    return int(is_polytree_edges(g.n, g.edges))


@dataclass(frozen=True)
class Cpdag:
    """Partially directed graph as produced by the PC algorithm."""

    n: int
    directed: frozenset
    undirected: frozenset

    def __init__(self, n, directed, undirected):
        directed = frozenset((int(a), int(b)) for a, b in directed)
        undirected = frozenset(frozenset((int(a), int(b))) for a, b in undirected)
        for a, b in directed:
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise GraphError(f"bad directed edge ({a}, {b})")
            if frozenset((a, b)) in undirected:
                raise GraphError(f"edge {a}-{b} both directed and undirected")
        Dag(n, directed)  # directed part must be acyclic
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)


@dataclass(frozen=True)
class PathModel:
    """Collider-free chain: node order plus correlations of adjacent pairs."""

    order: tuple
    adjacent_corr: tuple

    def __init__(self, order, adjacent_corr):
        order = tuple(int(v) for v in order)
        adjacent_corr = tuple(float(r) for r in adjacent_corr)
        if sorted(order) != list(range(len(order))):
            raise GraphError("order must be a permutation of 0..n-1")
        if len(adjacent_corr) != len(order) - 1:
            raise InvalidSize("need exactly n-1 adjacent correlations")
        for r in adjacent_corr:
            if not abs(r) < 1.0:
                raise InvalidSize(f"adjacent correlation {r} outside (-1, 1)")
            if r == 0.0:
                raise ZeroCorrelation("adjacent correlations must be nonzero")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "adjacent_corr", adjacent_corr)

    @property
    def n(self):
        return len(self.order)

    def position(self, v):
        try:
            return self.order.index(v)
        except ValueError:
            raise UnknownNode(v) from None


# --- predictors ---------------------------------------------------------------


def d_separated(g: Dag, q: Query) -> int:
    """1 iff the query pair is d-separated given the conditioning set.

    Reachability formulation (Koller & Friedman, algorithm 3.1): walk the
    graph keeping track of the direction the trail enters each node and
    apply the collider rules exactly.
    """
    if q.kind != QueryKind.COND_INDEP:
        raise InvalidSize("d-separation takes conditional-independence queries")
    x, y = q.members
    z = set(q.cond)
    _check_nodes(g.n, x, y, *z)

    # ancestors of the conditioning set, including the set itself
    anc_z = set(z)
    stack = list(z)
    while stack:
        v = stack.pop()
        for p in g.parents(v):
            if p not in anc_z:
                anc_z.add(p)
                stack.append(p)

    # (node, direction): direction "up" = trail arrives from a child,
    # "down" = trail arrives from a parent
    visited = set()
    frontier = deque([(x, "up")])
    while frontier:
        v, direction = frontier.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v not in z and v == y:
            return 0
        if direction == "up" and v not in z:
            for p in g.parents(v):
                frontier.append((p, "up"))
            for c in g.children(v):
                frontier.append((c, "down"))
        elif direction == "down":
            if v not in z:
                for c in g.children(v):
                    frontier.append((c, "down"))
            if v in anc_z:
                for p in g.parents(v):
                    frontier.append((p, "up"))
    return 1


def q_ci_dag(g: Dag, q: Query) -> int:
    """Predicted conditional independence: 1 = independence, 0 = dependence."""
    return d_separated(g, q)


def q_dirpath(g: Dag, q: Query) -> int:
    """1 iff a directed path runs from the query's source to its target."""
    if q.kind != QueryKind.ORDERED_PAIR:
        raise InvalidSize("directed-path predictor takes ordered pairs")
    i, j = q.members
    _check_nodes(g.n, i, j)
    return int(g.has_path(i, j))


def q_anm_polytree(g: Polytree, q: Query) -> int:
    """1 iff the polytree contains the edge source -> target."""
    if q.kind != QueryKind.ORDERED_PAIR:
        raise InvalidSize("polytree edge predictor takes ordered pairs")
    i, j = q.members
    _check_nodes(g.n, i, j)
    return int((i, j) in g.edges)


def q_lingam_admissible(g: Dag, q: Query, strict_common_ancestor=False) -> int:
    """Admissibility of a linear additive noise model on an ordered tuple.

    Requires (1) no confounder: no node outside the tuple is an ancestor of
    two distinct tuple members, and (2) the tuple order is consistent with
    the graph.  With ``strict_common_ancestor`` tuple members themselves
    also count as common ancestors of the pairs they precede.
    """
    if q.kind != QueryKind.ORDERED_TUPLE:
        raise InvalidSize("admissibility predictor takes ordered tuples")
    members = q.members
    _check_nodes(g.n, *members)
    anc = {v: g.ancestors(v) for v in members}
    member_set = set(members)
    for yi, yj in combinations(members, 2):
        shared = anc[yi] & anc[yj]
        if not strict_common_ancestor:
            shared -= member_set
        if shared:
            return 0
    for i, yi in enumerate(members):
        for yj in members[i + 1 :]:
            if yj in anc[yi]:
                return 0
    return 1


def path_corr(m: PathModel, q: Query) -> float:
    """Correlation predicted by a chain: product of adjacent correlations."""
    if q.kind != QueryKind.UNORDERED_PAIR:
        raise InvalidSize("path correlation takes unordered pairs")
    j, k = q.members
    a, b = sorted((m.position(j), m.position(k)))
    if a == b:
        return 1.0
    out = 1.0
    for i in range(a, b):
        out *= m.adjacent_corr[i]
    return out


def path_sign(m: PathModel, q: Query) -> int:
    return 1 if path_corr(m, q) > 0 else -1


# --- Markov equivalence and CPDAG machinery -----------------------------------


def v_structures(g: Dag):
    """Unshielded colliders a -> c <- b with a, b nonadjacent."""
    skel = g.skeleton()
    out = set()
    for c in range(g.n):
        for a, b in combinations(sorted(g.parents(c)), 2):
            if frozenset((a, b)) not in skel:
                out.add((a, c, b))
    return out


def markov_equivalent(g1: Dag, g2: Dag) -> int:
    """Same skeleton and same unshielded colliders."""
    if g1.n != g2.n:
        raise InvalidSize("graphs must share the node set")
    return int(g1.skeleton() == g2.skeleton() and v_structures(g1) == v_structures(g2))


class _Pdag:
    """Mutable partially directed graph used during orientation."""

    def __init__(self, n, directed=(), undirected=()):
        self.n = n
        self.directed = set(directed)
        self.undirected = {frozenset(e) for e in undirected}

    def adjacent(self, a, b):
        return (
            (a, b) in self.directed
            or (b, a) in self.directed
            or frozenset((a, b)) in self.undirected
        )

    def neighbors(self, v):
        out = set()
        for a, b in self.directed:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        for e in self.undirected:
            if v in e:
                out |= e - {v}
        return out

    def creates_cycle(self, a, b):
        """Would directing a -> b close a directed cycle?"""
        stack, seen = [b], set()
        while stack:
            u = stack.pop()
            if u == a:
                return True
            if u in seen:
                continue
            seen.add(u)
            stack.extend(c for (p, c) in self.directed if p == u)
        return False

    def orient(self, a, b):
        """Direct the undirected edge a-b as a -> b if safely possible."""
        e = frozenset((a, b))
        if e not in self.undirected or (b, a) in self.directed or self.creates_cycle(a, b):
            return False
        self.undirected.discard(e)
        self.directed.add((a, b))
        return True

    def apply_meek_rules(self):
        """Close the orientation under Meek rules R1-R4."""
        changed = True
        while changed:
            changed = False
            for e in sorted(self.undirected, key=sorted):
                a, b = sorted(e)
                for x, y in ((a, b), (b, a)):
                    if self._meek_applies(x, y) and self.orient(x, y):
                        changed = True
                        break
                if changed:
                    break

    def _meek_applies(self, x, y):
        # R1: w -> x - y with w, y nonadjacent
        for w, v in self.directed:
            if v == x and w != y and not self.adjacent(w, y):
                return True
        # R2: x -> v -> y and x - y
        for v in range(self.n):
            if (x, v) in self.directed and (v, y) in self.directed:
                return True
        # R3: x - v, x - w, v -> y, w -> y, v, w nonadjacent
        into_y = [v for (v, u) in self.directed if u == y]
        for v, w in combinations(sorted(into_y), 2):
            if (
                frozenset((x, v)) in self.undirected
                and frozenset((x, w)) in self.undirected
                and not self.adjacent(v, w)
            ):
                return True
        # R4: x - w, w -> v, v -> y, x - v or x adjacent v, w, y nonadjacent
        for v, u in self.directed:
            if u != y:
                continue
            for w, vv in self.directed:
                if vv != v:
                    continue
                if (
                    frozenset((x, w)) in self.undirected
                    and self.adjacent(x, v)
                    and not self.adjacent(w, y)
                ):
                    return True
        return False

    def to_cpdag(self):
        return Cpdag(self.n, self.directed, self.undirected)


def random_dag_from_cpdag(c: Cpdag, seed) -> Dag:
    """Draw a consistent DAG extension with randomized choices.

    Repeatedly closes the orientation under Meek rules, then orients one
    remaining undirected edge at random.  Orientations that would close a
    directed cycle fall back to the opposite direction, so the procedure
    always terminates with a DAG even for non-extendable inputs.
    """
    rng = np.random.default_rng(seed)
    pdag = _Pdag(c.n, c.directed, c.undirected)
    while pdag.undirected:
        pdag.apply_meek_rules()
        if not pdag.undirected:
            break
        e = sorted(pdag.undirected, key=sorted)[rng.integers(len(pdag.undirected))]
        a, b = sorted(e)
        if rng.random() < 0.5:
            a, b = b, a
        if not pdag.orient(a, b):
            pdag.orient(b, a)
    return Dag(c.n, pdag.directed)


def cpdag_from_dag(g: Dag) -> Cpdag:
    """CPDAG of g's Markov equivalence class (v-structures plus Meek closure)."""
    pdag = _Pdag(g.n, undirected=g.skeleton())
    for a, c, b in v_structures(g):
        pdag.orient(a, c)
        pdag.orient(b, c)
    pdag.apply_meek_rules()
    return pdag.to_cpdag()


# --- Gaussian chain merging ---------------------------------------------------


def glue_gaussian_chain(cov_xy, cov_yz) -> np.ndarray:
    """Merge covariances of (X, Y) and (Y, Z) assuming the chain X -> Y -> Z.

    The chain implies X independent of Z given Y, which pins down the only
    missing entry: cov(X, Z) = cov(X, Y) cov(Y, Z) / var(Y).
    """
    cov_xy = np.asarray(cov_xy, dtype=float)
    cov_yz = np.asarray(cov_yz, dtype=float)
    for m in (cov_xy, cov_yz):
        if m.shape != (2, 2):
            raise InvalidSize("expected 2x2 covariance matrices")
        if not np.allclose(m, m.T, atol=1e-9) or np.linalg.eigvalsh(m).min() < -1e-9:
            raise NonPsdInput("covariance input not symmetric PSD")
    var_y = cov_xy[1, 1]
    if abs(var_y - cov_yz[0, 0]) > 1e-9:
        raise MarginalMismatch(
            f"var(Y) disagrees between marginals: {var_y} vs {cov_yz[0, 0]}"
        )
    if var_y < 1e-12:
        raise NonPsdInput("var(Y) is numerically zero")
    cov_xz = cov_xy[0, 1] * cov_yz[0, 1] / var_y
    out = np.array(
        [
            [cov_xy[0, 0], cov_xy[0, 1], cov_xz],
            [cov_xy[0, 1], var_y, cov_yz[0, 1]],
            [cov_xz, cov_yz[0, 1], cov_yz[1, 1]],
        ]
    )
    if np.linalg.eigvalsh(out).min() < -1e-9:
        raise NonPsdInput("glued covariance not PSD")
    return out


# --- JSON serialization -------------------------------------------------------


def model_to_json(model) -> dict:
    if isinstance(model, PathModel):
        return {"type": "path", "order": list(model.order), "r": list(model.adjacent_corr)}
    if isinstance(model, Cpdag):
        return {
            "type": "cpdag",
            "n": model.n,
            "directed": sorted(map(list, model.directed)),
            "undirected": sorted(sorted(e) for e in model.undirected),
        }
    if isinstance(model, Polytree):
        return {"type": "polytree", "n": model.n, "directed": sorted(map(list, model.edges)), "undirected": []}
    if isinstance(model, Dag):
        return {"type": "dag", "n": model.n, "directed": sorted(map(list, model.edges)), "undirected": []}
    raise InvalidSize(f"cannot serialize {type(model).__name__}")


def model_from_json(obj):
    kind = obj.get("type", "dag")
    if kind == "path":
        return PathModel(obj["order"], obj["r"])
    if kind == "cpdag":
        return Cpdag(obj["n"], [tuple(e) for e in obj["directed"]], [tuple(e) for e in obj["undirected"]])
    edges = [tuple(e) for e in obj["directed"]]
    if kind == "polytree":
        return Polytree(obj["n"], edges)
    return Dag(obj["n"], edges)


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh, indent=2)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
