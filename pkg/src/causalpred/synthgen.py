"""Ground-truth structural causal models and samplers for the simulations.

Two generator families: linear-Gaussian SCMs (random node order, edge
probability tuned to a target expected degree, coefficients uniform on
[0.1, 1), standard-normal noise) and generalized-additive SCMs on forest
skeletons (one-hidden-layer tanh mechanisms, uniform noise).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import InvalidDegree, InvalidSize
from .models import Dag, Polytree

HIDDEN_UNITS = 20
DEFAULT_NOISE_WIDTH = 1.0  # uniform noise on [-0.5, 0.5]


@dataclass(frozen=True)
class LinearScm:
    """x_i = noise_i + sum_j A[i, j] x_j with A respecting the node order."""

    n: int
    order: tuple  # order[v] = topological rank of node v
    coeffs: np.ndarray  # coeffs[child, parent]

    def __post_init__(self):
        order = tuple(int(r) for r in self.order)
        coeffs = np.array(self.coeffs, dtype=float)
        if sorted(order) != list(range(self.n)):
            raise InvalidSize("order must be a permutation of 0..n-1")
        if coeffs.shape != (self.n, self.n):
            raise InvalidSize("coefficient matrix must be n x n")
        for i in range(self.n):
            for j in range(self.n):
                if coeffs[i, j] != 0 and order[j] >= order[i]:
                    raise InvalidSize(f"coefficient {j}->{i} violates the node order")
        coeffs.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", coeffs)

    def dag(self) -> Dag:
        n = self.n
        return Dag(n, [(j, i) for i in range(n) for j in range(n) if self.coeffs[i, j] != 0])


@dataclass(frozen=True)
class Mechanism:
    """One-hidden-layer map x -> w2 . tanh(w1 * x + b)."""

    w1: np.ndarray
    w2: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name in ("w1", "w2", "b"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (HIDDEN_UNITS,):
                raise InvalidSize(f"mechanism parameter {name} must have shape ({HIDDEN_UNITS},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __call__(self, x):
        return np.tanh(np.outer(x, self.w1) + self.b) @ self.w2


@dataclass(frozen=True)
class GamScm:
    """Generalized-additive SCM on a forest skeleton with uniform noise."""

    n: int
    dag: Polytree
    mechanisms: dict  # (parent, child) -> Mechanism
    noise_width: float = DEFAULT_NOISE_WIDTH

    def __post_init__(self):
        if set(self.mechanisms) != set(self.dag.edges):
            raise InvalidSize("mechanisms must cover exactly the edges of the skeleton")
        if self.noise_width <= 0:
            raise InvalidSize("noise width must be positive")


@dataclass(frozen=True)
class ScmSample:
    dataset: Dataset
    truth: object  # the generating LinearScm or GamScm

    def __post_init__(self):
        if self.dataset.columns != tuple(range(self.truth.n)):
            raise InvalidSize("sample must cover all variables in id order")


def _random_order_and_pairs(n, expected_degree, rng):
    if n < 2:
        raise InvalidSize("need at least two nodes")
    if not 0 < expected_degree <= n - 1:
        raise InvalidDegree(f"expected degree {expected_degree} outside (0, {n - 1}]")
    p = expected_degree / (n - 1)
    perm = rng.permutation(n)  # perm[rank] = node
    order = np.empty(n, dtype=int)
    order[perm] = np.arange(n)
    # forward pairs in lexicographic rank order, for reproducible rejection
    pairs = [
        (int(perm[a]), int(perm[b]))
        for a in range(n)
        for b in range(a + 1, n)
    ]
    return tuple(int(r) for r in order), pairs, p


def gen_linear_scm(n, expected_degree, seed) -> LinearScm:
    rng = np.random.default_rng(seed)
    order, pairs, p = _random_order_and_pairs(n, expected_degree, rng)
    coeffs = np.zeros((n, n))
    for j, i in pairs:  # j precedes i in the order
        if rng.random() < p:
            coeffs[i, j] = 0.1 + 0.9 * rng.random()
    return LinearScm(n, order, coeffs)


def _random_mechanism(rng) -> Mechanism:
    w1 = 0.1 + 0.9 * rng.random(HIDDEN_UNITS)
    w2 = 0.1 + 0.9 * rng.random(HIDDEN_UNITS)
    b = -1.0 + 2.0 * rng.random(HIDDEN_UNITS)
    return Mechanism(w1, w2, b)


def gen_gam_scm(n, expected_degree, seed, noise_width=DEFAULT_NOISE_WIDTH) -> GamScm:
    """Like gen_linear_scm, but edges closing an undirected cycle are rejected."""
    rng = np.random.default_rng(seed)
    order, pairs, p = _random_order_and_pairs(n, expected_degree, rng)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    mechanisms = {}
    for j, i in pairs:
        if rng.random() < p:
            rj, ri = find(j), find(i)
            if rj == ri:
                continue  # would close an undirected cycle
            parent[rj] = ri
            edges.append((j, i))
            mechanisms[(j, i)] = _random_mechanism(rng)
    return GamScm(n, Polytree(n, edges), mechanisms, noise_width)


def gen_gam_chain(n, seed, noise_width=DEFAULT_NOISE_WIDTH) -> GamScm:
    """A directed chain 0 -> 1 -> ... -> n-1 with random tanh mechanisms."""
    rng = np.random.default_rng(seed)
    edges = [(i, i + 1) for i in range(n - 1)]
    mechanisms = {e: _random_mechanism(rng) for e in edges}
    return GamScm(n, Polytree(n, edges), mechanisms, noise_width)


def sample(scm, l, seed) -> ScmSample:
    """Draw l i.i.d. rows, evaluating ancestors before descendants."""
    if l < 1:
        raise InvalidSize("need at least one sample")
    rng = np.random.default_rng(seed)
    n = scm.n
    x = np.zeros((l, n))  # zeros matter: unassigned columns meet zero coefficients
    if isinstance(scm, LinearScm):
        noise = rng.standard_normal((l, n))
        ranks = np.argsort(np.asarray(scm.order))  # node visited at each rank
        for v in ranks:
            x[:, v] = noise[:, v] + x @ scm.coeffs[v]
    elif isinstance(scm, GamScm):
        w = scm.noise_width
        noise = rng.uniform(-w / 2.0, w / 2.0, size=(l, n))
        for v in scm.dag.topological_order():
            acc = noise[:, v].copy()
            for p in sorted(scm.dag.parents(v)):
                acc += scm.mechanisms[(p, v)](x[:, p])
            x[:, v] = acc
    else:
        raise InvalidSize(f"cannot sample from {type(scm).__name__}")
    return ScmSample(Dataset(x, tuple(range(n))), scm)


def population_covariance(scm: LinearScm) -> np.ndarray:
    """Exact covariance of the induced Gaussian: (I-A)^-1 (I-A)^-T."""
    if not isinstance(scm, LinearScm):
        raise InvalidSize("population covariance is defined for linear SCMs only")
    b = np.linalg.inv(np.eye(scm.n) - scm.coeffs)
    return b @ b.T


def truth_to_json(scm) -> dict:
    if isinstance(scm, LinearScm):
        dag = scm.dag()
        return {
            "type": "linear",
            "order": list(scm.order),
            "edges": sorted(map(list, dag.edges)),
            "coeffs": scm.coeffs.tolist(),
        }
    if isinstance(scm, GamScm):
        return {
            "type": "gam",
            "edges": sorted(map(list, scm.dag.edges)),
            "noise_width": scm.noise_width,
            "mechanisms": {
                f"{p}->{c}": {"w1": m.w1.tolist(), "w2": m.w2.tolist(), "b": m.b.tolist()}
                for (p, c), m in sorted(scm.mechanisms.items())
            },
        }
    raise InvalidSize(f"cannot serialize {type(scm).__name__}")


def save_truth(scm, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth_to_json(scm), fh, indent=2)
