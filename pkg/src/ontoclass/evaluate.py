"""Stratified cross-validation, pooled one-vs-rest confusion accounting,
and precision/recall/F reporting.

A report carries pooled per-category metrics, the macro F average, the
per-fold snapshots, and an echo of the configuration that produced it;
rendering is deterministic so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .classify import (
    TreeConfig,
    c45_predict_all,
    c45_train,
    knn_predict_all,
    knn_train,
)
from .config import ExperimentConfig
from .corpus import Corpus
from .errors import ExperimentError, OntoclassError, ParseError
from .features import build_matrix, compute_category_stats, select_top_k
from .mapping import MappingConfig, map_corpus, stems_only
from .ontology import Ontology
from .preprocess import load_stoplist, preprocess_corpus

log = logging.getLogger(__name__)

#: Called with (fold_index, doc_id) for every document a fitting step
#: reads; tests use it to prove held-out folds stay untouched.
FitRecorder = Callable[[int, str], None]


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every document to one of n folds."""

    n_folds: int
    assignment: dict[str, int]
    seed: int

    def __post_init__(self):
        for doc_id, fold in self.assignment.items():
            if not 0 <= fold < self.n_folds:
                raise OntoclassError(
                    f"document {doc_id!r} assigned to fold {fold} "
                    f"outside [0, {self.n_folds})"
                )

    def fold_ids(self, fold: int) -> frozenset[str]:
        return frozenset(d for d, f in self.assignment.items() if f == fold)


def make_folds(labels: Mapping[str, str], n: int, seed: int) -> FoldPlan:
    """Stratified folds: per category, seeded shuffle then round-robin.

    Per-category fold sizes can differ by at most 1. Categories with
    fewer than n documents are allowed (some folds just miss them) with
    a warning.
    """
    if n < 2:
        raise OntoclassError(f"need at least 2 folds, got {n}")
    by_cat: dict[str, list[str]] = {}
    for doc_id, cat in labels.items():
        by_cat.setdefault(cat, []).append(doc_id)
    rng = random.Random(seed)
    assignment: dict[str, int] = {}
    for cat in sorted(by_cat):
        ids = sorted(by_cat[cat])
        if len(ids) < n:
            log.warning("category %r has %d documents for %d folds", cat,
                        len(ids), n)
        rng.shuffle(ids)
        for i, doc_id in enumerate(ids):
            assignment[doc_id] = i % n
    return FoldPlan(n_folds=n, assignment=assignment, seed=seed)


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean; 0 when both inputs are 0."""
    if not 0.0 <= precision <= 1.0 or not 0.0 <= recall <= 1.0:
        raise ValueError("precision and recall must be in [0, 1]")
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class CategoryMetrics:
    category: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f_measure: float

    @classmethod
    def from_counts(cls, category: str, tp: int, fp: int, fn: int) -> CategoryMetrics:
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        return cls(category, tp, fp, fn, p, r, f_measure(p, r))


@dataclass(frozen=True)
class EvalReport:
    per_category: tuple[CategoryMetrics, ...]
    macro_f: float
    config_echo: tuple[tuple[str, str], ...]
    per_fold: tuple[tuple[CategoryMetrics, ...], ...]


def _confusion_to_metrics(
    categories: Sequence[str], conf: Mapping[str, list[int]]
) -> tuple[CategoryMetrics, ...]:
    return tuple(
        CategoryMetrics.from_counts(cat, *conf[cat]) for cat in categories
    )


def _representation_vectors(
    corpus: Corpus,
    ontology: Ontology | None,
    config: ExperimentConfig,
):
    stopwords = load_stoplist(config.stoplist)
    term_vectors = preprocess_corpus(corpus, stopwords)
    if config.representation == "stems":
        return [stems_only(tv) for tv in term_vectors]
    if ontology is None:
        raise OntoclassError(
            f"representation {config.representation!r} needs an ontology"
        )
    mcfg = MappingConfig(
        strategy=config.strategy,
        disambiguation=config.disambiguation,
        use_hyperonyms=config.representation == "concepts_hyperonyms",
        hyperonym_variant=config.hyperonym_variant,
        use_mesh_annotations=config.use_mesh_annotations,
    )
    mesh_by_doc = None
    if config.use_mesh_annotations:
        mesh_by_doc = {d.doc_id: d.mesh_annotations for d in corpus.documents}
    return map_corpus(term_vectors, ontology, mcfg, mesh_by_doc, stopwords)


def run_experiment(
    corpus: Corpus,
    ontology: Ontology | None,
    config: ExperimentConfig,
    threads: int = 1,
    fit_recorder: FitRecorder | None = None,
) -> EvalReport:
    """Cross-validate the configured pipeline on a labeled corpus.

    Every fold fits its statistics and feature space on the training
    folds only, then classifies the held-out fold; per-category tp/fp/fn
    are pooled across folds before precision/recall/F. n_folds = 1 is a
    diagnostic mode that trains and tests on the full corpus. Folds run
    in a thread pool when threads > 1; results reduce in fold order, so
    the report is identical for any thread count.
    """
    if not corpus.documents:
        raise OntoclassError("empty corpus")
    categories = corpus.categories
    if not categories:
        raise OntoclassError("corpus has no category list")
    vectors = _representation_vectors(corpus, ontology, config)
    labels = {v.doc_id: v.labels[0] for v in vectors}

    if config.n_folds == 1:
        log.warning("single-fold diagnostic mode: training set = test set")
        splits = [(vectors, vectors)]
    else:
        plan = make_folds(labels, config.n_folds, config.seed)
        splits = []
        for fold in range(config.n_folds):
            test_ids = plan.fold_ids(fold)
            train = [v for v in vectors if v.doc_id not in test_ids]
            test = [v for v in vectors if v.doc_id in test_ids]
            splits.append((train, test))

    def run_fold(fold: int) -> dict[str, list[int]]:
        train, test = splits[fold]
        try:
            if not train or not test:
                raise OntoclassError("a fold came out empty")
            recorder = None
            if fit_recorder is not None:
                recorder = lambda doc_id: fit_recorder(fold, doc_id)
            stats = compute_category_stats(
                train, categories=categories, recorder=recorder
            )
            space = select_top_k(
                train, k=config.k_features, categories=categories,
                recorder=recorder,
            )
            train_m = build_matrix(train, space, stats, weighting=config.weighting)
            test_m = build_matrix(test, space, stats, weighting=config.weighting)
            if config.classifier == "knn":
                model = knn_train(train_m, k=config.knn_k,
                                  similarity=config.knn_similarity)
                predicted = [cat for cat, _ in knn_predict_all(model, test_m)]
            else:
                tree_cfg = TreeConfig(
                    min_leaf=config.tree_min_leaf,
                    max_depth=config.tree_max_depth or None,
                    prune=config.tree_prune,
                )
                tree = c45_train(train_m, tree_cfg)
                predicted = c45_predict_all(tree, test_m)
        except Exception as exc:
            raise ExperimentError(f"fold {fold}: {exc}") from exc
        conf = {cat: [0, 0, 0] for cat in categories}  # tp, fp, fn
        for v, pred in zip(test, predicted):
            actual = v.labels[0]
            if pred == actual:
                conf[actual][0] += 1
            else:
                conf[pred][1] += 1
                conf[actual][2] += 1
        return conf

    n_folds = len(splits)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fold_confs = list(pool.map(run_fold, range(n_folds)))
    else:
        fold_confs = [run_fold(i) for i in range(n_folds)]

    pooled = {cat: [0, 0, 0] for cat in categories}
    for conf in fold_confs:
        for cat in categories:
            for slot in range(3):
                pooled[cat][slot] += conf[cat][slot]
    per_category = _confusion_to_metrics(categories, pooled)
    macro_f = sum(m.f_measure for m in per_category) / len(per_category)
    per_fold = tuple(
        _confusion_to_metrics(categories, conf) for conf in fold_confs
    )
    return EvalReport(
        per_category=per_category,
        macro_f=macro_f,
        config_echo=config.echo(),
        per_fold=per_fold,
    )


_CSV_COLUMNS = ("fold", "category", "tp", "fp", "fn",
                "precision", "recall", "f_measure")


def _metric_row(scope: str, m: CategoryMetrics) -> list[str]:
    return [scope, m.category, str(m.tp), str(m.fp), str(m.fn),
            repr(m.precision), repr(m.recall), repr(m.f_measure)]


def report_to_csv(report: EvalReport) -> str:
    """Machine-readable rows under a '#'-prefixed config echo block."""
    buf = io.StringIO()
    for key, value in report.config_echo:
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for m in report.per_category:
        writer.writerow(_metric_row("pooled", m))
    macros = _macro_means(report.per_category)
    writer.writerow(["pooled", "AvG", "", "", "",
                     repr(macros[0]), repr(macros[1]), repr(report.macro_f)])
    for fold, metrics in enumerate(report.per_fold):
        for m in metrics:
            writer.writerow(_metric_row(str(fold), m))
    return buf.getvalue()


def _macro_means(metrics: Sequence[CategoryMetrics]) -> tuple[float, float]:
    n = len(metrics)
    return (sum(m.precision for m in metrics) / n,
            sum(m.recall for m in metrics) / n)


def render_table(report: EvalReport) -> str:
    """Human-readable pooled table: one category per row plus the average."""
    rows = [(m.category, m.precision, m.recall, m.f_measure)
            for m in report.per_category]
    macros = _macro_means(report.per_category)
    rows.append(("AvG", macros[0], macros[1], report.macro_f))
    width = max(len("category"), *(len(r[0]) for r in rows))
    lines = [
        f"{'category':<{width}}  {'precision':>9}  {'recall':>9}  {'f-measure':>9}"
    ]
    for name, p, r, f in rows:
        lines.append(f"{name:<{width}}  {p:>9.3f}  {r:>9.3f}  {f:>9.3f}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.csv and report.txt; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    txt_path = out_dir / "report.txt"
    csv_path.write_text(report_to_csv(report), encoding="utf-8")
    txt_path.write_text(render_table(report), encoding="utf-8")
    return csv_path, txt_path


def read_report_csv(path: str | Path) -> EvalReport:
    """Rebuild a report from its CSV rendering."""
    echo: list[tuple[str, str]] = []
    rows: list[list[str]] = []
    with open(path, encoding="utf-8") as fh:
        data_lines: list[str] = []
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(" = ")
                echo.append((key, value))
            else:
                data_lines.append(line)
    reader = csv.reader(data_lines)
    header = next(reader, None)
    if header != list(_CSV_COLUMNS):
        raise ParseError("unrecognized report header", 1)
    rows = list(reader)

    def metric(row: list[str]) -> CategoryMetrics:
        return CategoryMetrics(
            category=row[1], tp=int(row[2]), fp=int(row[3]), fn=int(row[4]),
            precision=float(row[5]), recall=float(row[6]),
            f_measure=float(row[7]),
        )

    pooled = [metric(r) for r in rows if r[0] == "pooled" and r[1] != "AvG"]
    macro_rows = [r for r in rows if r[0] == "pooled" and r[1] == "AvG"]
    if not pooled or not macro_rows:
        raise ParseError("report has no pooled rows", 2)
    folds: dict[int, list[CategoryMetrics]] = {}
    for r in rows:
        if r[0] not in ("pooled",):
            folds.setdefault(int(r[0]), []).append(metric(r))
    per_fold = tuple(
        tuple(folds[i]) for i in sorted(folds)
    )
    return EvalReport(
        per_category=tuple(pooled),
        macro_f=float(macro_rows[0][7]),
        config_echo=tuple(echo),
        per_fold=per_fold,
    )
