"""Variable universe, datasets, queries, property values, and empirical risk.

Conventions used throughout the package:

* variables are integers ``0..n-1`` of a global universe; an optional
  sidecar JSON file may map names to those ids,
* binary properties use ``1`` for "independence / property holds" and
  ``0`` otherwise; sign properties use ``{-1, +1}``,
* queries are canonicalized (sorted pair, sorted conditioning set) so
  that equality and set membership are well defined.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateColumn,
    InvalidSize,
    KTooLarge,
    LengthMismatch,
    MissingVariable,
    NonNumericCell,
    TagMismatch,
)


class QueryKind(Enum):
    COND_INDEP = "ci"
    ORDERED_PAIR = "ordered_pair"
    UNORDERED_PAIR = "unordered_pair"
    ORDERED_TUPLE = "ordered_tuple"


@dataclass(frozen=True)
class Query:
    """A partly ordered variable tuple plus the property it refers to.

    For ``COND_INDEP`` the target pair is unordered and ``cond`` holds the
    (unordered) conditioning set; both are stored sorted.  Ordered kinds
    keep their member order.
    """

    kind: QueryKind
    members: tuple
    cond: tuple = ()

    def __post_init__(self):
        members = tuple(int(m) for m in self.members)
        cond = tuple(int(c) for c in self.cond)
        if self.kind in (QueryKind.COND_INDEP, QueryKind.UNORDERED_PAIR):
            members = tuple(sorted(members))
        if self.kind == QueryKind.COND_INDEP:
            cond = tuple(sorted(cond))
        elif cond:
            raise InvalidSize("only conditional-independence queries take a conditioning set")
        if self.kind != QueryKind.ORDERED_TUPLE and len(members) != 2:
            raise InvalidSize(f"{self.kind.value} query needs exactly two members")
        if self.kind == QueryKind.ORDERED_TUPLE and len(members) < 1:
            raise InvalidSize("ordered tuple must be nonempty")
        everything = members + cond
        if len(set(everything)) != len(everything):
            raise InvalidSize("query variables must be distinct")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "cond", cond)

    # convenience constructors -------------------------------------------------

    @staticmethod
    def ci(a, b, cond=()):
        return Query(QueryKind.COND_INDEP, (a, b), tuple(cond))

    @staticmethod
    def ordered_pair(source, target):
        return Query(QueryKind.ORDERED_PAIR, (source, target))

    @staticmethod
    def unordered_pair(a, b):
        return Query(QueryKind.UNORDERED_PAIR, (a, b))

    @staticmethod
    def ordered_tuple(*ids):
        return Query(QueryKind.ORDERED_TUPLE, tuple(ids))

    def variables(self):
        return self.members + self.cond


@dataclass(frozen=True)
class PropertyValue:
    """Tagged property value: binary 0/1, real, sign -1/+1, or PSD matrix."""

    tag: str
    value: object = field(compare=False, default=None)

    def __post_init__(self):
        if self.tag == "binary":
            if self.value not in (0, 1):
                raise TagMismatch(f"binary value must be 0 or 1, got {self.value}")
        elif self.tag == "sign":
            if self.value not in (-1, 1):
                raise TagMismatch(f"sign value must be -1 or +1, got {self.value}")
        elif self.tag == "real":
            object.__setattr__(self, "value", float(self.value))
        elif self.tag == "matrix":
            m = np.asarray(self.value, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise TagMismatch("matrix value must be square")
            if not np.allclose(m, m.T, atol=1e-9):
                raise TagMismatch("matrix value must be symmetric")
            if np.linalg.eigvalsh(m).min() < -1e-9:
                raise TagMismatch("matrix value must be positive semidefinite")
            m.setflags(write=False)
            object.__setattr__(self, "value", m)
        else:
            raise TagMismatch(f"unknown property tag {self.tag!r}")

    def __eq__(self, other):
        if not isinstance(other, PropertyValue) or self.tag != other.tag:
            return NotImplemented
        if self.tag == "matrix":
            return np.array_equal(self.value, other.value)
        return self.value == other.value

    def __hash__(self):
        if self.tag == "matrix":
            return hash((self.tag, self.value.tobytes()))
        return hash((self.tag, self.value))


def binary(v) -> PropertyValue:
    return PropertyValue("binary", int(v))


def real(v) -> PropertyValue:
    return PropertyValue("real", float(v))


def sign(v) -> PropertyValue:
    return PropertyValue("sign", int(v))


def matrix(m) -> PropertyValue:
    return PropertyValue("matrix", m)


@dataclass(frozen=True)
class Dataset:
    """An l x k sample matrix together with the global ids of its columns."""

    samples: np.ndarray
    columns: tuple

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2:
            raise InvalidSize("samples must be a 2-d matrix")
        columns = tuple(int(c) for c in self.columns)
        if samples.shape[1] != len(columns):
            raise InvalidSize("column-id list must match the matrix width")
        if len(set(columns)) != len(columns):
            raise DuplicateColumn(f"duplicate column ids in {columns}")
        if samples.shape[0] < 1:
            raise InvalidSize("dataset needs at least one row")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "columns", columns)

    @property
    def l(self):
        return self.samples.shape[0]

    @property
    def k(self):
        return self.samples.shape[1]

    def column(self, variable) -> np.ndarray:
        """Return the sample column for a global variable id."""
        try:
            idx = self.columns.index(variable)
        except ValueError:
            raise MissingVariable(variable) from None
        return self.samples[:, idx]


def load_dataset(path, names_path=None) -> Dataset:
    """Load a CSV dataset; header row carries variable ids or names.

    Names are resolved through a sidecar JSON file ``{"names": [...]}``
    whose list index is the global variable id.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidSize(f"{path} is empty")
    header, body = rows[0], rows[1:]
    if not body:
        raise InvalidSize(f"{path} has no data rows")

    name_to_id = {}
    if names_path is not None:
        with open(names_path, encoding="utf-8") as fh:
            names = json.load(fh)["names"]
        name_to_id = {name: i for i, name in enumerate(names)}

    columns = []
    for cell in header:
        cell = cell.strip()
        if cell in name_to_id:
            columns.append(name_to_id[cell])
        else:
            try:
                columns.append(int(cell))
            except ValueError:
                raise NonNumericCell(0, cell) from None
    if len(set(columns)) != len(columns):
        raise DuplicateColumn(f"duplicate header ids in {columns}")

    data = np.empty((len(body), len(columns)))
    for i, row in enumerate(body):
        if len(row) != len(columns):
            raise InvalidSize(f"row {i + 1} has {len(row)} cells, expected {len(columns)}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise NonNumericCell(i + 1, j) from None
    return Dataset(data, tuple(columns))


def save_dataset(d: Dataset, path):
    """Write a dataset back to CSV with integer-id header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(d.columns)
        w.writerows(d.samples.tolist())


def project(d: Dataset, q: Query) -> Dataset:
    """Restrict a dataset to the query's variables, in canonical order."""
    wanted = q.variables()
    for v in wanted:
        if v not in d.columns:
            raise MissingVariable(v)
    idx = [d.columns.index(v) for v in wanted]
    return Dataset(d.samples[:, idx], wanted)


def enumerate_queries(n, kind, cond_size=0):
    """Exhaustive duplicate-free query universe in canonical order."""
    if n < 2:
        raise InvalidSize("need at least two variables")
    if kind == QueryKind.COND_INDEP:
        if cond_size < 0 or cond_size > n - 2:
            raise InvalidSize(f"conditioning size {cond_size} infeasible for n={n}")
        out = []
        for a, b in combinations(range(n), 2):
            rest = [v for v in range(n) if v not in (a, b)]
            for cond in combinations(rest, cond_size):
                out.append(Query.ci(a, b, cond))
        return out
    if cond_size:
        raise InvalidSize("conditioning set only applies to conditional independence")
    if kind == QueryKind.UNORDERED_PAIR:
        return [Query.unordered_pair(a, b) for a, b in combinations(range(n), 2)]
    if kind == QueryKind.ORDERED_PAIR:
        return [
            Query.ordered_pair(a, b)
            for a in range(n)
            for b in range(n)
            if a != b
        ]
    raise InvalidSize(f"cannot enumerate query kind {kind}")


def sample_queries(universe, k, seed):
    """Draw k distinct queries uniformly without replacement."""
    if not 1 <= k <= len(universe):
        raise KTooLarge(f"cannot draw {k} from a universe of {len(universe)}")
    return random.Random(seed).sample(list(universe), k)


def empirical_error(predictions, test_results) -> float:
    """Mean absolute deviation between predicted and tested property values.

    For binary values this is the disagreement rate; sign values contribute
    their literal absolute difference (2 per disagreement).
    """
    if len(predictions) != len(test_results):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(test_results)} results")
    if not predictions:
        raise LengthMismatch("need at least one prediction")
    total = 0.0
    for p, t in zip(predictions, test_results):
        if p.tag != t.tag:
            raise TagMismatch(f"cannot compare {p.tag} with {t.tag}")
        if p.tag == "matrix":
            raise TagMismatch("matrix-valued properties have no scalar loss")
        total += abs(p.value - t.value)
    return total / len(predictions)
