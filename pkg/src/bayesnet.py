"""Discrete Bayesian-network core for class-augmented attribute networks.

Every attribute has the class as a parent and at most one attribute parent,
so a network is described by a parent list over the attributes. This module
provides counting, parameter estimation (Laplace, maximum likelihood and
Dirichlet MAP), information measures used as structure scores, tree and
forest structure learning, and posterior evaluation as a product of factors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import networkx as nx
import numpy as np
from scipy.cluster.hierarchy import DisjointSet
from scipy.special import logsumexp, xlogy

from src.errors import AlphaError, DataError, EmptyData, LengthError, RangeError, ZeroConfigError

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-12
CLIP_TOL = 1e-12

ThresholdMode = Union[Literal["average"], float]


@dataclass(frozen=True)
class AttributeSpace:
    """Attribute cardinalities ``v_i`` and the number of classes."""

    cardinalities: tuple[int, ...]
    class_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "cardinalities", tuple(int(v) for v in self.cardinalities))
        if not self.cardinalities:
            raise DataError("an attribute space needs at least one attribute")
        if min(self.cardinalities) < 2:
            raise DataError(f"every attribute needs at least 2 values, got {self.cardinalities}")
        if self.class_count < 2:
            raise DataError(f"at least 2 classes are required, got {self.class_count}")

    @classmethod
    def uniform(cls, n: int, k: int, class_count: int) -> "AttributeSpace":
        return cls((k,) * n, class_count)

    @property
    def n(self) -> int:
        return len(self.cardinalities)


@dataclass(frozen=True)
class Structure:
    """Attribute parent list; ``None`` means the class is the only parent."""

    parents: tuple[int | None, ...]

    def __post_init__(self) -> None:
        parents = tuple(None if p is None else int(p) for p in self.parents)
        n = len(parents)
        for child, parent in enumerate(parents):
            if parent is not None and not 0 <= parent < n:
                raise RangeError(f"parent {parent} of attribute {child} outside [0, {n})")
        graph = nx.DiGraph()
        graph.add_nodes_from(range(n))
        graph.add_edges_from((p, c) for c, p in enumerate(parents) if p is not None)
        if not nx.is_directed_acyclic_graph(graph):
            raise DataError(f"parent list {parents} contains a cycle")
        object.__setattr__(self, "parents", parents)

    @classmethod
    def naive(cls, n: int) -> "Structure":
        return cls((None,) * n)

    @property
    def n(self) -> int:
        return len(self.parents)

    @property
    def arcs(self) -> list[tuple[int, int]]:
        """``(parent, child)`` attribute arcs, ordered by child."""

        return [(p, c) for c, p in enumerate(self.parents) if p is not None]

    def skeleton(self) -> set[frozenset[int]]:
        return {frozenset(arc) for arc in self.arcs}


@dataclass(frozen=True)
class CountTables:
    """Sufficient statistics ``N(c)``, ``N(c, a_i)`` and ``N(c, a_i, a_j)``."""

    cardinalities: tuple[int, ...]
    class_counts: np.ndarray
    single: tuple[np.ndarray, ...]
    pairs: dict[tuple[int, int], np.ndarray] = field(repr=False)

    @property
    def total(self) -> int:
        return int(self.class_counts.sum())

    @property
    def class_count(self) -> int:
        return int(self.class_counts.shape[0])

    def pair(self, i: int, j: int) -> np.ndarray:
        """``N(c, a_i, a_j)`` with shape ``(C, v_i, v_j)``."""

        if i < j:
            return self.pairs[(i, j)]
        return self.pairs[(j, i)].transpose(0, 2, 1)


@dataclass(frozen=True)
class BnModel:
    """Class prior, structure and one CPT per attribute.

    CPTs have the child value on axis 0 and the class on the last axis:
    ``(v_i, C)`` without an attribute parent, ``(v_i, v_j, C)`` with parent ``j``.
    """

    space: AttributeSpace
    structure: Structure
    class_prior: np.ndarray
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        _check_distribution(self.class_prior, "class prior")
        if len(self.cpts) != self.space.n or self.structure.n != self.space.n:
            raise LengthError(f"model has {len(self.cpts)} CPTs for {self.space.n} attributes")
        for i, (cpt, parent) in enumerate(zip(self.cpts, self.structure.parents)):
            expected = _cpt_shape(self.space, i, parent) + (self.space.class_count,)
            if cpt.shape != expected:
                raise LengthError(f"CPT of attribute {i} has shape {cpt.shape}, expected {expected}")
            _check_distribution(cpt, f"CPT of attribute {i}")


@dataclass(frozen=True)
class MultiNetModel:
    """One structure and CPT set per class, sharing the class prior.

    ``cpts[c][i]`` has shape ``(v_i,)`` or ``(v_i, v_j)`` for class ``c``.
    """

    space: AttributeSpace
    class_prior: np.ndarray
    structures: tuple[Structure, ...]
    cpts: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self) -> None:
        _check_distribution(self.class_prior, "class prior")
        if len(self.structures) != self.space.class_count or len(self.cpts) != self.space.class_count:
            raise LengthError(f"multinet needs one structure and CPT set for each of {self.space.class_count} classes")
        for c, (structure, tables) in enumerate(zip(self.structures, self.cpts)):
            for i, (cpt, parent) in enumerate(zip(tables, structure.parents)):
                expected = _cpt_shape(self.space, i, parent)
                if cpt.shape != expected:
                    raise LengthError(f"class {c} CPT of attribute {i} has shape {cpt.shape}, expected {expected}")
                _check_distribution(cpt, f"class {c} CPT of attribute {i}")


def _cpt_shape(space: AttributeSpace, attr: int, parent: int | None) -> tuple[int, ...]:
    if parent is None:
        return (space.cardinalities[attr],)
    return (space.cardinalities[attr], space.cardinalities[parent])


def _check_distribution(table: np.ndarray, what: str) -> None:
    sums = np.asarray(table).sum(axis=0)
    if not np.allclose(sums, 1.0, rtol=0.0, atol=NORMALIZATION_TOL):
        raise DataError(f"{what} does not sum to 1 (max deviation {np.max(np.abs(sums - 1.0)):.3g})")


def as_arrays(data: Sequence[tuple[Sequence[int], int]], n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Split ``(label_vector, class)`` pairs into an ``(N, n)`` label matrix and a class vector."""

    if len(data) == 0:
        width = 0 if n is None else n
        return np.zeros((0, width), dtype=np.int64), np.zeros(0, dtype=np.int64)
    labels = np.asarray([vector for vector, _ in data], dtype=np.int64)
    classes = np.asarray([cls for _, cls in data], dtype=np.int64)
    return labels, classes


def check_labels(labels: np.ndarray, cardinalities: Sequence[int]) -> None:
    """Raise :class:`RangeError` if any label falls outside its attribute's values."""

    labels = np.atleast_2d(labels)
    if labels.shape[1] != len(cardinalities):
        raise RangeError(f"label vectors have {labels.shape[1]} attributes, space has {len(cardinalities)}")
    if labels.size and (labels.min() < 0 or np.any(labels.max(axis=0) >= np.asarray(cardinalities))):
        raise RangeError(f"labels outside the attribute cardinalities {tuple(cardinalities)}")


def count_arrays(labels: np.ndarray, classes: np.ndarray, cardinalities: Sequence[int], class_count: int) -> CountTables:
    """Exact integer counts from a label matrix and class vector."""

    labels = np.asarray(labels, dtype=np.int64).reshape(len(classes), len(cardinalities))
    classes = np.asarray(classes, dtype=np.int64)
    check_labels(labels, cardinalities)
    if classes.size and (classes.min() < 0 or classes.max() >= class_count):
        raise RangeError(f"class ids outside [0, {class_count})")

    cards = tuple(int(v) for v in cardinalities)
    class_counts = np.bincount(classes, minlength=class_count)
    single = tuple(
        np.bincount(classes * v + labels[:, i], minlength=class_count * v).reshape(class_count, v)
        for i, v in enumerate(cards)
    )
    pairs = {}
    for i in range(len(cards)):
        for j in range(i + 1, len(cards)):
            vi, vj = cards[i], cards[j]
            flat = (classes * vi + labels[:, i]) * vj + labels[:, j]
            pairs[(i, j)] = np.bincount(flat, minlength=class_count * vi * vj).reshape(class_count, vi, vj)
    return CountTables(cards, class_counts, single, pairs)


def count_tables(data: Sequence[tuple[Sequence[int], int]], space: AttributeSpace) -> CountTables:
    """Count ``N(c)``, ``N(c, a_i)`` and ``N(c, a_i, a_j)`` over ``(label_vector, class)`` pairs."""

    labels, classes = as_arrays(data, space.n)
    return count_arrays(labels, classes, space.cardinalities, space.class_count)


def _as_counts(data: CountTables | Sequence[tuple[Sequence[int], int]], space: AttributeSpace | None) -> CountTables:
    if isinstance(data, CountTables):
        return data
    if space is None:
        raise DataError("an attribute space is required to count raw instances")
    return count_tables(data, space)


def laplace_class_prior(counts: CountTables, space: AttributeSpace | None = None) -> np.ndarray:
    """``P(c) = (N(c) + 1) / (N + C)``."""

    class_count = counts.class_count if space is None else space.class_count
    return (counts.class_counts + 1.0) / (counts.total + class_count)


def family_counts(counts: CountTables, attr: int, parent: int | None) -> np.ndarray:
    """Counts for one CPT, child value first: ``(v_i, C)`` or ``(v_i, v_j, C)``."""

    if parent is None:
        return counts.single[attr].T.astype(float)
    return counts.pair(attr, parent).transpose(1, 2, 0).astype(float)


def laplace_cond(counts: CountTables, space: AttributeSpace, structure: Structure) -> tuple[np.ndarray, ...]:
    """Laplace CPTs ``(N(c, a_i) + 1) / (N(c) + v_i)`` and ``(N(c, a_i, a_j) + 1) / (N(c, a_j) + v_i)``."""

    cpts = []
    for attr, parent in enumerate(structure.parents):
        v = space.cardinalities[attr]
        numerator = family_counts(counts, attr, parent) + 1.0
        if parent is None:
            denominator = counts.class_counts[np.newaxis, :] + float(v)
        else:
            denominator = counts.single[parent].T[np.newaxis, :, :] + float(v)
        cpts.append(numerator / denominator)
    return tuple(cpts)


def ml_estimate(counts: np.ndarray) -> np.ndarray:
    """Relative frequencies ``N_ijk / sum_k N_ijk`` along axis 0.

    Raises:
        ZeroConfigError: If some parent configuration was never observed.
    """

    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=0)
    if np.any(totals == 0):
        raise ZeroConfigError("maximum likelihood is undefined for an unobserved parent configuration")
    return counts / totals


def map_estimate(counts: np.ndarray, alpha: float | np.ndarray) -> np.ndarray:
    """Dirichlet MAP estimate ``(N + a - 1) / sum_k (N + a - 1)`` along axis 0.

    ``alpha = 2`` everywhere reproduces the Laplace estimate. Zero
    probabilities are possible when ``alpha = 1`` and a count is zero.

    Raises:
        AlphaError: If any pseudo-count is below 1.
        ZeroConfigError: If a normalizing sum is zero.
    """

    counts = np.asarray(counts, dtype=float)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), counts.shape)
    if np.any(alpha < 1.0):
        raise AlphaError("Dirichlet pseudo-counts must be at least 1")
    numerator = counts + alpha - 1.0
    totals = numerator.sum(axis=0)
    if np.any(totals <= 0):
        raise ZeroConfigError("MAP estimate has a zero normalizing sum; raise alpha or observe the configuration")
    return numerator / totals


def _entropy(joint: np.ndarray) -> float:
    total = joint.sum()
    p = joint / total
    return float(-xlogy(p, p).sum())


def _clip(value: float) -> float:
    if value < -CLIP_TOL:
        logger.warning("information measure came out at %.3g; clipping to 0", value)
    return max(value, 0.0)


def mutual_information(
    attr_index: int, data: CountTables | Sequence[tuple[Sequence[int], int]], space: AttributeSpace | None = None
) -> float:
    """Empirical ``I(A_i; C)`` in nats."""

    counts = _as_counts(data, space)
    if counts.total == 0:
        raise EmptyData("mutual information needs at least one instance")
    joint = counts.single[attr_index]
    value = _entropy(joint.sum(axis=0)) + _entropy(counts.class_counts) - _entropy(joint)
    return _clip(value)


def conditional_mutual_information(
    i: int,
    j: int,
    data: CountTables | Sequence[tuple[Sequence[int], int]],
    space: AttributeSpace | None = None,
    within_class: int | None = None,
) -> float:
    """Empirical ``I(A_i; A_j | C)`` in nats.

    With ``within_class`` the measure is taken over that class's instances
    only, where it reduces to the plain ``I(A_i; A_j)`` inside the class.
    """

    counts = _as_counts(data, space)
    if i == j:
        return 0.0
    pair = counts.pair(i, j).astype(float)
    if within_class is not None:
        pair = pair[within_class : within_class + 1]
    total = pair.sum()
    if total == 0:
        raise EmptyData("conditional mutual information needs at least one instance")
    value = (
        _entropy(pair.sum(axis=2)) + _entropy(pair.sum(axis=1)) - _entropy(pair) - _entropy(pair.sum(axis=(1, 2)))
    )
    return _clip(value)


def cmi_matrix(counts: CountTables, within_class: int | None = None) -> np.ndarray:
    """Symmetric matrix of pairwise conditional mutual information, zero diagonal."""

    n = len(counts.cardinalities)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i, j] = matrix[j, i] = conditional_mutual_information(i, j, counts, within_class=within_class)
    return matrix


def class_mutual_information(counts: CountTables) -> np.ndarray:
    """``I(A_i; C)`` for every attribute, used to pick tree roots."""

    return np.array([mutual_information(i, counts) for i in range(len(counts.cardinalities))])


def average_cmi(cmi: np.ndarray) -> float:
    """Mean over ordered pairs ``i != j``: ``sum_i sum_{j != i} I(A_i; A_j | C) / (n (n - 1))``."""

    n = cmi.shape[0]
    if n < 2:
        return 0.0
    upper = math.fsum(cmi[i, j] for i in range(n) for j in range(i + 1, n))
    lower = math.fsum(cmi[j, i] for i in range(n) for j in range(i + 1, n))
    return (upper + lower) / (n * (n - 1))


def maximum_spanning_tree(weights: np.ndarray) -> list[tuple[int, int]]:
    """Kruskal's maximum-weight spanning tree; equal weights prefer the smaller ``(i, j)``."""

    n = weights.shape[0]
    candidates = sorted(((-float(weights[i, j]), i, j) for i in range(n) for j in range(i + 1, n)))
    forest = DisjointSet(range(n))
    tree = []
    for _, i, j in candidates:
        if forest.merge(i, j):
            tree.append((i, j))
            if len(tree) == n - 1:
                break
    return tree


def _orient(n: int, edges: Sequence[tuple[int, int]], root_scores: np.ndarray) -> Structure:
    """Direct every component away from its member with the highest root score."""

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(edges)
    parents: list[int | None] = [None] * n
    for component in nx.connected_components(graph):
        root = min(component, key=lambda a: (-root_scores[a], a))
        for parent, child in nx.bfs_edges(graph, root):
            parents[child] = parent
    return Structure(tuple(parents))


def chow_liu_tan(cmi: np.ndarray, root_scores: np.ndarray) -> Structure:
    """TAN structure: maximum-weight spanning tree on ``cmi`` rooted at ``argmax root_scores``."""

    cmi = np.asarray(cmi, dtype=float)
    if cmi.shape[0] < 2:
        raise DataError("a tree-augmented structure needs at least 2 attributes")
    structure = _orient(cmi.shape[0], maximum_spanning_tree(cmi), np.asarray(root_scores, dtype=float))
    logger.debug("TAN arcs: %s", structure.arcs)
    return structure


def resolve_threshold(cmi: np.ndarray, threshold: ThresholdMode) -> float:
    """Numeric edge-pruning cut for a CMI matrix.

    Args:
        cmi: Symmetric pairwise conditional mutual information matrix.
        threshold: ``"average"`` or a fixed number of nats.

    Returns:
        The mean pairwise CMI for ``"average"``, otherwise ``threshold`` as a float.
    """

    if threshold == "average":
        return average_cmi(cmi)
    return float(threshold)


def fan_structure(cmi: np.ndarray, root_scores: np.ndarray, threshold: ThresholdMode = "average") -> Structure:
    """FAN structure: the TAN tree minus edges whose weight is strictly below the threshold.

    ``threshold`` is ``"average"`` for the mean pairwise CMI or a fixed number;
    ``-inf`` keeps the whole tree and ``+inf`` yields the naive structure.
    """

    cmi = np.asarray(cmi, dtype=float)
    n = cmi.shape[0]
    if n < 1:
        raise DataError("a structure needs at least 1 attribute")
    cut = resolve_threshold(cmi, threshold)
    kept = [(i, j) for i, j in maximum_spanning_tree(cmi) if cmi[i, j] >= cut]
    structure = _orient(n, kept, np.asarray(root_scores, dtype=float))
    logger.debug("FAN threshold %.6g keeps %d of %d tree edges", cut, len(kept), max(n - 1, 0))
    return structure


def log_scores(model: BnModel, a: Sequence[int]) -> np.ndarray:
    """Unnormalized ``ln P(c) + sum_i ln P(a_i | parent value, c)`` for every class.

    Args:
        model: Single-structure network with its CPTs.
        a: Label vector, one value per attribute.

    Returns:
        Array of length ``class_count``.

    Raises:
        RangeError: If a label is outside its attribute's values.
    """

    a = np.asarray(a, dtype=np.int64)
    check_labels(a, model.space.cardinalities)
    scores = np.log(model.class_prior).copy()
    for attr, (cpt, parent) in enumerate(zip(model.cpts, model.structure.parents)):
        column = cpt[a[attr]] if parent is None else cpt[a[attr], a[parent]]
        scores += np.log(column)
    return scores


def normalize_log_scores(scores: np.ndarray) -> np.ndarray:
    """Turn per-class log scores into probabilities.

    Args:
        scores: Unnormalized natural-log scores, one per class.

    Returns:
        A distribution over classes summing to 1, computed through ``logsumexp``
        so that very negative scores do not underflow.
    """

    return np.exp(scores - logsumexp(scores))


def posterior(model: BnModel, a: Sequence[int]) -> np.ndarray:
    """Class posterior ``P(c | a)`` from the factored product, normalized in log space."""

    return normalize_log_scores(log_scores(model, a))


def map_decision(post: Sequence[float]) -> int:
    """Most probable class; ties go to the lowest class index."""

    return int(np.argmax(np.asarray(post)))


def robinson_dag_count(n: int) -> int:
    """Number of labelled DAGs on ``n`` nodes, ``G(0) = 1``, in exact integer arithmetic."""

    if n < 0:
        raise RangeError(f"node count must be non-negative, got {n}")
    counts = [1]
    for m in range(1, n + 1):
        counts.append(
            sum((-1) ** (k + 1) * math.comb(m, k) * 2 ** (k * (m - k)) * counts[m - k] for k in range(1, m + 1))
        )
    return counts[n]


def attribute_name(index: int) -> str:
    return f"F{index + 1}"


def structure_lines(structure: Structure) -> list[str]:
    """``attr -> parent`` lines; attributes with only the class parent point to ``C``."""

    return [
        f"{attribute_name(child)} -> {'C' if parent is None else attribute_name(parent)}"
        for child, parent in enumerate(structure.parents)
    ]


__all__ = [
    "AttributeSpace",
    "BnModel",
    "CountTables",
    "MultiNetModel",
    "Structure",
    "ThresholdMode",
    "as_arrays",
    "attribute_name",
    "average_cmi",
    "check_labels",
    "chow_liu_tan",
    "class_mutual_information",
    "cmi_matrix",
    "conditional_mutual_information",
    "count_arrays",
    "count_tables",
    "family_counts",
    "fan_structure",
    "laplace_class_prior",
    "laplace_cond",
    "log_scores",
    "map_decision",
    "map_estimate",
    "maximum_spanning_tree",
    "ml_estimate",
    "mutual_information",
    "normalize_log_scores",
    "posterior",
    "resolve_threshold",
    "robinson_dag_count",
    "structure_lines",
]
