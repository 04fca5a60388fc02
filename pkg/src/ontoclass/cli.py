"""Command-line driver: ingest -> ontology-check -> map -> select ->
evaluate -> report, each stage rerunnable from its cached outputs.

Exit status 0 on success, 2 for configuration problems (the offending
field is named), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
from scipy import sparse

from .config import ExperimentConfig, load_config, resolve_path
from .corpus import (
    assign_labels,
    load_corpus_jsonl,
    load_label_map,
    load_ohsumed,
    parse_textdir,
    save_corpus_jsonl,
)
from .errors import ConfigError, OntoclassError
from .evaluate import read_report_csv, render_table, run_experiment, write_report
from .features import (
    WeightedMatrix,
    compute_category_stats,
    descriptor_counts,
    save_matrix,
    select_top_k,
)
from .mapping import stems_only
from .ontology import import_mesh_ascii, load_ontology
from .preprocess import load_stoplist, preprocess_corpus

log = logging.getLogger(__name__)

CONFIG_ENV = "ONTOCLASS_CONFIG"


def _require_config(args: argparse.Namespace) -> tuple[ExperimentConfig, Path]:
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        raise ConfigError(
            "config", f"no config file given (use --config or ${CONFIG_ENV})"
        )
    config = load_config(path)
    return config, Path(path).parent


def _load_labeled_corpus(config: ExperimentConfig, base: Path):
    path = resolve_path(config.corpus_path, base)
    if config.corpus_format == "ohsumed":
        corpus = load_ohsumed(path)
    elif config.corpus_format == "jsonl":
        corpus = load_corpus_jsonl(path)
    else:
        corpus = parse_textdir(path)
    if config.label_map:
        label_map = load_label_map(resolve_path(config.label_map, base))
        corpus = assign_labels(
            corpus,
            label_map,
            categories=config.categories or None,
            policy=config.label_policy,
        )
    elif config.categories and config.corpus_format == "textdir":
        own_labels = {d.doc_id: d.labels for d in corpus.documents if d.labels}
        corpus = assign_labels(
            corpus, own_labels,
            categories=config.categories, policy=config.label_policy,
        )
    return corpus


def _load_ontology(config: ExperimentConfig, base: Path):
    if not config.ontology_path:
        return None
    path = resolve_path(config.ontology_path, base)
    stopwords = load_stoplist(
        resolve_path(config.stoplist, base) if config.stoplist else None
    )
    if config.ontology_format == "mesh-ascii":
        return import_mesh_ascii(path, stopwords)
    return load_ontology(path, stopwords)


def _out_dir(config: ExperimentConfig, base: Path) -> Path:
    out = resolve_path(config.output_dir, base)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_ingest(args: argparse.Namespace) -> int:
    config, base = _require_config(args)
    corpus = _load_labeled_corpus(config, base)
    out = Path(args.out) if args.out else _out_dir(config, base) / "corpus.jsonl"
    save_corpus_jsonl(corpus, out)
    print(
        f"{len(corpus)} documents, {len(corpus.categories)} categories, "
        f"{len(corpus.dropped)} dropped -> {out}"
    )
    return 0


def _cmd_ontology_check(args: argparse.Namespace) -> int:
    config, base = _require_config(args)
    if not config.ontology_path:
        raise ConfigError("ontology.path", "required for ontology-check")
    onto = _load_ontology(config, base)
    n = len(onto)
    roots = len(onto.roots())
    print(
        f"{n} concept{'s' if n != 1 else ''}, "
        f"{roots} root{'s' if roots != 1 else ''}, depth {onto.depth()}"
    )
    return 0


def _vectors_for(config: ExperimentConfig, base: Path):
    from .evaluate import _representation_vectors

    corpus = _load_labeled_corpus(config, base)
    ontology = None
    if config.representation != "stems":
        ontology = _load_ontology(config, base)
    return corpus, _representation_vectors(corpus, ontology, config)


def _cmd_map(args: argparse.Namespace) -> int:
    config, base = _require_config(args)
    corpus, vectors = _vectors_for(config, base)
    descriptors = sorted({d for v in vectors for d in descriptor_counts(v)})
    col_of = {d: i for i, d in enumerate(descriptors)}
    rows, cols, data = [], [], []
    for r, v in enumerate(vectors):
        for desc, n in descriptor_counts(v).items():
            rows.append(r)
            cols.append(col_of[desc])
            data.append(float(n))
    matrix = WeightedMatrix(
        doc_ids=tuple(v.doc_id for v in vectors),
        descriptors=tuple(descriptors),
        values=sparse.csr_matrix(
            (data, (rows, cols)), shape=(len(vectors), len(descriptors)),
            dtype=np.float64,
        ),
        labels=tuple(v.labels[0] if v.labels else "" for v in vectors),
    )
    out = _out_dir(config, base) / "vectors.mtx"
    save_matrix(matrix, out)
    print(f"{len(vectors)} documents x {len(descriptors)} descriptors -> {out}")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    config, base = _require_config(args)
    corpus, vectors = _vectors_for(config, base)
    if not corpus.categories:
        raise ConfigError("corpus.label_map", "labeled corpus required for select")
    space = select_top_k(
        vectors, k=config.k_features, categories=corpus.categories
    )
    out = _out_dir(config, base) / "features.tsv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"# k = {space.k_per_category}\n")
        for cat in corpus.categories:
            for desc in space.selected[cat]:
                score = space.per_category_scores[(cat, desc)]
                fh.write(f"{cat}\t{desc}\t{score!r}\n")
    print(f"{len(space.descriptors)} descriptors selected -> {out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config, base = _require_config(args)
    corpus = _load_labeled_corpus(config, base)
    ontology = None
    if config.representation != "stems":
        ontology = _load_ontology(config, base)
    report = run_experiment(corpus, ontology, config, threads=args.threads)
    csv_path, txt_path = write_report(report, _out_dir(config, base))
    print(render_table(report), end="")
    print(f"report -> {csv_path} and {txt_path}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    config, base = _require_config(args)
    path = Path(args.report) if args.report else _out_dir(config, base) / "report.csv"
    if not path.exists():
        raise OntoclassError(f"no cached report at {path}; run evaluate first")
    report = read_report_csv(path)
    print(render_table(report), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontoclass",
        description="Classify medical text with ontology-concept representations.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument(
            "--config",
            help=f"experiment config INI (default: ${CONFIG_ENV})",
        )
        p.set_defaults(func=func)
        return p

    p = add("ingest", _cmd_ingest, "parse the corpus and cache it as JSON lines")
    p.add_argument("--out", help="cache file (default: <output_dir>/corpus.jsonl)")
    add("ontology-check", _cmd_ontology_check,
        "load the ontology and print concept/root/depth stats")
    add("map", _cmd_map, "dump document vectors in the sparse-matrix format")
    add("select", _cmd_select, "dump the per-category selected descriptors")
    p = add("evaluate", _cmd_evaluate, "run cross-validation and write the report")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for fold evaluation (default 1)")
    p = add("report", _cmd_report, "render a cached report")
    p.add_argument("--report", help="report CSV (default: <output_dir>/report.csv)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OntoclassError, OSError) as exc:
        print(f"error [{args.command}] {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
