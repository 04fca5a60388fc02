"""The two classifiers: k-nearest-neighbors over cosine similarity and a
binary numeric-threshold decision tree grown on gain ratio with optional
pessimistic pruning.

Both consume a WeightedMatrix whose rows are already L2-normalized, so
cosine similarity reduces to a dot product.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import OntoclassError, ParseError
from .features import WeightedMatrix

log = logging.getLogger(__name__)

SIMILARITIES = ("cosine", "euclidean")
DEFAULT_KNN_K = 5
PRUNE_CONFIDENCE = 0.25


@dataclass(frozen=True)
class KnnModel:
    """Lazy learner: just the training matrix and the vote parameters."""

    matrix: WeightedMatrix
    k: int
    similarity: str = "cosine"

    def __post_init__(self):
        if self.similarity not in SIMILARITIES:
            raise OntoclassError(f"unknown similarity {self.similarity!r}")
        n = self.matrix.values.shape[0]
        if self.k < 1:
            raise OntoclassError(f"k must be >= 1, got {self.k}")
        if self.k > n:
            raise OntoclassError(f"k = {self.k} exceeds {n} training rows")


def knn_train(
    matrix: WeightedMatrix, k: int = DEFAULT_KNN_K, similarity: str = "cosine"
) -> KnnModel:
    if matrix.values.shape[0] == 0:
        raise OntoclassError("empty training matrix")
    return KnnModel(matrix=matrix, k=k, similarity=similarity)


def _as_query_matrix(query, n_cols: int) -> sparse.csr_matrix:
    if sparse.issparse(query):
        q = query.tocsr()
    else:
        arr = np.atleast_2d(np.asarray(query, dtype=np.float64))
        q = sparse.csr_matrix(arr)
    if q.shape[1] != n_cols:
        raise OntoclassError(
            f"query has {q.shape[1]} columns, model expects {n_cols}"
        )
    return q


def _majority_class(labels: Sequence[str]) -> str:
    counts = Counter(labels)
    return min(counts, key=lambda c: (-counts[c], c))


def knn_predict_all(model: KnnModel, queries) -> list[tuple[str, dict[str, int]]]:
    """Classify each query row; returns (category, neighbor votes) pairs.

    Neighbors are the k most similar training rows (ties toward the
    earlier row); the winning category has the most votes, with ties
    broken by larger summed similarity, then by name. A zero query under
    cosine matches nothing and falls back to the training majority class
    with empty votes.
    """
    if isinstance(queries, WeightedMatrix):
        queries = queries.values
    train = model.matrix.values
    labels = model.matrix.labels
    q = _as_query_matrix(queries, train.shape[1])
    dots = np.asarray((q @ train.T).todense())
    if model.similarity == "cosine":
        sims = dots
    else:
        q_sq = np.asarray(q.multiply(q).sum(axis=1)).ravel()
        r_sq = np.asarray(train.multiply(train).sum(axis=1)).ravel()
        d2 = np.maximum(q_sq[:, None] + r_sq[None, :] - 2.0 * dots, 0.0)
        sims = -np.sqrt(d2)
    fallback = _majority_class(labels)
    zero_rows = np.asarray(q.multiply(q).sum(axis=1)).ravel() == 0.0

    out: list[tuple[str, dict[str, int]]] = []
    for i in range(q.shape[0]):
        if model.similarity == "cosine" and zero_rows[i]:
            log.warning("zero query vector; using majority class %r", fallback)
            out.append((fallback, {}))
            continue
        order = np.argsort(-sims[i], kind="stable")[: model.k]
        votes: dict[str, int] = {}
        sum_sim: dict[str, float] = {}
        for j in order:
            cat = labels[j]
            votes[cat] = votes.get(cat, 0) + 1
            sum_sim[cat] = sum_sim.get(cat, 0.0) + sims[i, j]
        winner = min(votes, key=lambda c: (-votes[c], -sum_sim[c], c))
        out.append((winner, votes))
    return out


def knn_predict(model: KnnModel, query) -> tuple[str, dict[str, int]]:
    return knn_predict_all(model, query)[0]


def _entropy(counts: np.ndarray) -> float:
    """Shannon entropy in bits of a count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _counter_vec(labels: Sequence[str]) -> np.ndarray:
    return np.array(list(Counter(labels).values()), dtype=np.float64)


def information_gain(
    parent_labels: Sequence[str], split: Sequence[Sequence[str]]
) -> float:
    """Entropy drop (in bits) from partitioning the parent labels."""
    n = len(parent_labels)
    if sum(len(part) for part in split) != n:
        raise OntoclassError("split is not a partition of the parent labels")
    child = sum(
        len(part) / n * _entropy(_counter_vec(part)) for part in split if part
    )
    return _entropy(_counter_vec(parent_labels)) - child


def gain_ratio(
    parent_labels: Sequence[str], split: Sequence[Sequence[str]]
) -> float:
    """Information gain divided by the entropy of the partition sizes."""
    gain = information_gain(parent_labels, split)
    sizes = np.array([len(part) for part in split], dtype=np.float64)
    split_info = _entropy(sizes)
    if split_info == 0.0:
        return 0.0
    return gain / split_info


@dataclass(frozen=True)
class TreeConfig:
    min_leaf: int = 2
    max_depth: int | None = None
    prune: bool = True
    confidence: float = PRUNE_CONFIDENCE

    def __post_init__(self):
        if self.min_leaf < 1:
            raise OntoclassError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if not 0.0 < self.confidence <= 0.5:
            raise OntoclassError("confidence must be in (0, 0.5]")


@dataclass(frozen=True)
class TreeNode:
    """Internal node (descriptor set) or leaf (descriptor None)."""

    class_counts: dict[str, int]
    category: str
    descriptor: str | None = None
    col: int = -1
    threshold: float = 0.0
    left: TreeNode | None = None
    right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.descriptor is None

    def node_count(self) -> int:
        if self.is_leaf:
            return 1
        return 1 + self.left.node_count() + self.right.node_count()


def _best_split(
    x: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int
) -> tuple[int, float] | None:
    """Spec: pick the (column, threshold) with the best gain ratio among
    splits whose information gain reaches the mean gain of all admissible
    candidates. Ties fall to the lowest column, then lowest threshold.
    """
    n = x.shape[0]
    parent_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    parent_h = _entropy(parent_counts)
    if parent_h == 0.0 or n < 2 * min_leaf:
        return None

    cand_gain: list[np.ndarray] = []
    cand_ratio: list[np.ndarray] = []
    cand_col: list[np.ndarray] = []
    cand_thr: list[np.ndarray] = []
    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), y] = 1.0
    for col in range(x.shape[1]):
        vals = x[:, col]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cum = np.cumsum(onehot[order], axis=0)
        cut = np.nonzero(sv[:-1] != sv[1:])[0]  # left side = first cut+1 rows
        if cut.size == 0:
            continue
        left_n = cut + 1
        keep = (left_n >= min_leaf) & (n - left_n >= min_leaf)
        cut = cut[keep]
        if cut.size == 0:
            continue
        left_n = left_n[keep].astype(np.float64)
        right_n = n - left_n
        left_counts = cum[cut]
        right_counts = parent_counts[None, :] - left_counts

        def h(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
            p = counts / totals[:, None]
            terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
            return -terms.sum(axis=1)

        gain = parent_h - (left_n * h(left_counts, left_n)
                           + right_n * h(right_counts, right_n)) / n
        pl = left_n / n
        split_info = -(pl * np.log2(pl) + (1 - pl) * np.log2(1 - pl))
        ratio = np.where(split_info > 0, gain / split_info, 0.0)
        cand_gain.append(gain)
        cand_ratio.append(ratio)
        cand_col.append(np.full(cut.size, col))
        cand_thr.append((sv[cut] + sv[cut + 1]) / 2.0)

    if not cand_gain:
        return None
    gain = np.concatenate(cand_gain)
    ratio = np.concatenate(cand_ratio)
    cols = np.concatenate(cand_col)
    thrs = np.concatenate(cand_thr)
    mean_gain = gain.mean()
    eligible = (gain >= mean_gain - 1e-12) & (gain > 1e-12)
    if not eligible.any():
        return None
    idx = np.nonzero(eligible)[0]
    best = min(idx, key=lambda i: (-ratio[i], cols[i], thrs[i]))
    return int(cols[best]), float(thrs[best])


def c45_train(matrix: WeightedMatrix, config: TreeConfig = TreeConfig()) -> TreeNode:
    """Grow (and optionally prune) a binary decision tree."""
    n = matrix.values.shape[0]
    if n == 0:
        raise OntoclassError("empty training matrix")
    x = np.asarray(matrix.values.todense(), dtype=np.float64)
    cat_names = sorted(set(matrix.labels))
    cat_index = {c: i for i, c in enumerate(cat_names)}
    y = np.array([cat_index[lab] for lab in matrix.labels], dtype=np.int64)

    def counts_dict(rows: np.ndarray) -> dict[str, int]:
        bc = np.bincount(y[rows], minlength=len(cat_names))
        return {cat_names[i]: int(bc[i]) for i in range(len(cat_names)) if bc[i]}

    def majority(counts: dict[str, int]) -> str:
        return min(counts, key=lambda c: (-counts[c], c))

    def grow(rows: np.ndarray, depth: int) -> TreeNode:
        counts = counts_dict(rows)
        cat = majority(counts)
        if len(counts) == 1 or (
            config.max_depth is not None and depth >= config.max_depth
        ):
            return TreeNode(class_counts=counts, category=cat)
        found = _best_split(x[rows], y[rows], len(cat_names), config.min_leaf)
        if found is None:
            return TreeNode(class_counts=counts, category=cat)
        col, thr = found
        mask = x[rows, col] <= thr
        return TreeNode(
            class_counts=counts,
            category=cat,
            descriptor=matrix.descriptors[col],
            col=col,
            threshold=thr,
            left=grow(rows[mask], depth + 1),
            right=grow(rows[~mask], depth + 1),
        )

    tree = grow(np.arange(n), 0)
    if config.prune:
        tree = prune_tree(tree, config.confidence)
    return tree


def _extra_errors(n: float, e: float, cf: float) -> float:
    """Pessimistic additional-error estimate at confidence cf.

    Classic upper-confidence-bound correction: exact binomial tail at
    e = 0, linear interpolation below one error, continuity-corrected
    normal approximation elsewhere.
    """
    if e < 1.0:
        base = n * (1.0 - cf ** (1.0 / n))
        if e == 0.0:
            return base
        return base + e * (_extra_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return 0.67 * (n - e)
    z = NormalDist().inv_cdf(1.0 - cf)
    f = (e + 0.5) / n
    pr = (
        f + z * z / (2.0 * n)
        + z * math.sqrt(f / n - f * f / n + z * z / (4.0 * n * n))
    ) / (1.0 + z * z / n)
    return pr * n - e


def _estimated_errors(node: TreeNode, cf: float) -> float:
    n = sum(node.class_counts.values())
    if node.is_leaf:
        e = n - node.class_counts.get(node.category, 0)
        return e + _extra_errors(n, e, cf)
    return _estimated_errors(node.left, cf) + _estimated_errors(node.right, cf)


def prune_tree(node: TreeNode, confidence: float = PRUNE_CONFIDENCE) -> TreeNode:
    """Bottom-up subtree replacement when a leaf would not estimate worse."""
    if node.is_leaf:
        return node
    pruned = TreeNode(
        class_counts=node.class_counts,
        category=node.category,
        descriptor=node.descriptor,
        col=node.col,
        threshold=node.threshold,
        left=prune_tree(node.left, confidence),
        right=prune_tree(node.right, confidence),
    )
    n = sum(node.class_counts.values())
    e_leaf = n - node.class_counts.get(node.category, 0)
    leaf_errors = e_leaf + _extra_errors(n, e_leaf, confidence)
    if leaf_errors <= _estimated_errors(pruned, confidence) + 0.1:
        return TreeNode(class_counts=node.class_counts, category=node.category)
    return pruned


def c45_predict(tree: TreeNode, query) -> str:
    if sparse.issparse(query):
        query = np.asarray(query.todense()).ravel()
    else:
        query = np.asarray(query, dtype=np.float64).ravel()
    node = tree
    while not node.is_leaf:
        node = node.left if query[node.col] <= node.threshold else node.right
    return node.category


def c45_predict_all(tree: TreeNode, queries) -> list[str]:
    if isinstance(queries, WeightedMatrix):
        queries = queries.values
    if sparse.issparse(queries):
        queries = np.asarray(queries.todense())
    return [c45_predict(tree, queries[i]) for i in range(queries.shape[0])]


def _counts_fields(counts: dict[str, int]) -> str:
    return "\t".join(f"{cat}={n}" for cat, n in sorted(counts.items()))


def _parse_counts(fields: Sequence[str], lineno: int) -> dict[str, int]:
    counts: dict[str, int] = {}
    for f in fields:
        cat, sep, n = f.rpartition("=")
        if not sep:
            raise ParseError(f"bad class count field {f!r}", lineno)
        counts[cat] = int(n)
    return counts


def save_tree(tree: TreeNode, path: str | Path) -> None:
    """Preorder flat file; thresholds as shortest round-trip decimals."""
    lines = ["tree-model 1"]

    def emit(node: TreeNode) -> None:
        if node.is_leaf:
            lines.append(f"leaf\t{node.category}\t{_counts_fields(node.class_counts)}")
        else:
            lines.append(
                f"split\t{node.col}\t{node.descriptor}\t{node.threshold!r}"
                f"\t{node.category}\t{_counts_fields(node.class_counts)}"
            )
            emit(node.left)
            emit(node.right)

    emit(tree)
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_tree(path: str | Path) -> TreeNode:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "tree-model 1":
        raise ParseError("not a tree-model file", 1)
    pos = 1

    def read() -> TreeNode:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("truncated tree", pos + 1)
        fields = lines[pos].split("\t")
        lineno = pos + 1
        pos += 1
        if fields[0] == "leaf":
            if len(fields) < 3:
                raise ParseError("bad leaf line", lineno)
            return TreeNode(
                class_counts=_parse_counts(fields[2:], lineno),
                category=fields[1],
            )
        if fields[0] == "split":
            if len(fields) < 6:
                raise ParseError("bad split line", lineno)
            left = read()
            right = read()
            return TreeNode(
                class_counts=_parse_counts(fields[5:], lineno),
                category=fields[4],
                descriptor=fields[2],
                col=int(fields[1]),
                threshold=float(fields[3]),
                left=left,
                right=right,
            )
        raise ParseError(f"unknown node kind {fields[0]!r}", lineno)

    tree = read()
    if pos != len(lines):
        raise ParseError("trailing content after tree", pos + 1)
    return tree


def save_knn(model: KnnModel, path: str | Path, matrix_ref: str) -> None:
    """Parameter file pointing at a separately saved matrix."""
    Path(path).write_text(
        "knn-model 1\n"
        f"matrix\t{matrix_ref}\n"
        f"k\t{model.k}\n"
        f"similarity\t{model.similarity}\n",
        encoding="utf-8",
    )


def load_knn(path: str | Path, matrix: WeightedMatrix | None = None) -> KnnModel:
    from .features import load_matrix

    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "knn-model 1":
        raise ParseError("not a knn-model file", 1)
    params: dict[str, str] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        key, sep, value = line.partition("\t")
        if not sep:
            raise ParseError(f"bad parameter line {line!r}", lineno)
        params[key] = value
    if matrix is None:
        ref = Path(params["matrix"])
        if not ref.is_absolute():
            ref = path.parent / ref
        matrix = load_matrix(ref)
    return KnnModel(
        matrix=matrix,
        k=int(params["k"]),
        similarity=params.get("similarity", "cosine"),
    )
