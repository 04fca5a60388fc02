"""Synthetic corpus builders for the classifier-contrast tests.

Two designs:

* synonym_split_fixture: every document voices its category's topics
  through synonyms no other document uses, so stem evidence fragments
  per document while the mini-ontology merges each synonym group into
  one concept. Noise words are shared within category PAIRS, so a
  stems-only classifier can tell pairs apart but flips a coin inside a
  pair.

* sibling_merge_fixture: each document carries one child concept of its
  category's theme, a child no other document uses. Plain concept
  mapping stays fragmented; one level of hyperonym enrichment merges
  the evidence at the shared parent.

Both record ground-truth merged-concept vectors so a brute-force
nearest-neighbor oracle can confirm separability without touching the
code under test.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

from ontoclass.corpus import Corpus, Document
from ontoclass.porter import stem

_CONSONANTS = "bdfgklmnprtvz"
_VOWELS = "aiou"
_FINALS = "bkmprtz"


def _make_words(rng: random.Random, count: int, taken: set[str]) -> list[str]:
    """Nonsense words that are their own Porter stems, pairwise distinct."""
    words = []
    while len(words) < count:
        w = "".join(
            rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(3)
        ) + rng.choice(_FINALS)
        if w in taken or stem(w) != w:
            continue
        taken.add(w)
        words.append(w)
    return words


@dataclass(frozen=True)
class SynthFixture:
    corpus: Corpus
    ontology_rows: tuple[tuple[str, str, tuple[str, ...], tuple[str, ...]], ...]
    concept_truth: dict[str, dict[str, int]]
    categories: tuple[str, ...]


def _pair_noise(
    rng: random.Random, categories: tuple[str, ...], words_per_pair: int,
    taken: set[str],
) -> dict[str, list[str]]:
    noise: dict[str, list[str]] = {}
    for i in range(0, len(categories), 2):
        shared = _make_words(rng, words_per_pair, taken)
        for cat in categories[i : i + 2]:
            noise[cat] = shared
    return noise


def synonym_split_fixture(
    seed: int = 0,
    docs_per_category: int = 52,
    groups_per_category: int = 3,
    noise_vocab: int = 10,
    noise_tokens: int = 15,
) -> SynthFixture:
    """4 categories; each topic synonym appears in exactly one document."""
    rng = random.Random(seed)
    categories = ("Alpha", "Beta", "Gamma", "Delta")
    taken: set[str] = set()
    noise = _pair_noise(rng, categories, noise_vocab, taken)

    rows = []
    synonyms: dict[str, list[list[str]]] = {}
    for ci, cat in enumerate(categories):
        parent_id = f"P{ci:02d}"
        parent_word = _make_words(rng, 1, taken)[0]
        rows.append((parent_id, parent_word, (f"T{ci:02d}",), ()))
        groups = []
        for gi in range(groups_per_category):
            words = _make_words(rng, docs_per_category, taken)
            cid = f"G{ci:02d}{gi:02d}"
            rows.append(
                (cid, words[0], (f"T{ci:02d}.{gi:03d}",), tuple(words[1:]))
            )
            groups.append(words)
        synonyms[cat] = groups

    documents = []
    truth: dict[str, dict[str, int]] = {}
    for ci, cat in enumerate(categories):
        for di in range(docs_per_category):
            doc_id = f"{100000 + ci * docs_per_category + di}"
            topic = [g[di] for g in synonyms[cat]]
            tokens = [w for w in topic for _ in range(2)]
            tokens += [rng.choice(noise[cat]) for _ in range(noise_tokens)]
            rng.shuffle(tokens)
            documents.append(
                Document(
                    doc_id=doc_id,
                    title=" ".join(tokens[:3]),
                    abstract=" ".join(tokens[3:]),
                    labels=(cat,),
                )
            )
            truth[doc_id] = {
                f"G{ci:02d}{gi:02d}": 2 for gi in range(groups_per_category)
            }
    return SynthFixture(
        corpus=Corpus(documents=tuple(documents), categories=categories),
        ontology_rows=tuple(rows),
        concept_truth=truth,
        categories=categories,
    )


def sibling_merge_fixture(
    seed: int = 0,
    docs_per_category: int = 30,
    noise_vocab: int = 10,
    noise_tokens: int = 15,
    child_tf: int = 4,
) -> SynthFixture:
    """Concept evidence that only merges one level up, at theme parents."""
    rng = random.Random(seed)
    categories = ("Alpha", "Beta", "Gamma", "Delta")
    taken: set[str] = set()
    noise = _pair_noise(rng, categories, noise_vocab, taken)

    rows = []
    child_words: dict[str, list[str]] = {}
    for ci, cat in enumerate(categories):
        parent_word = _make_words(rng, 1, taken)[0]
        rows.append((f"P{ci:02d}", parent_word, (f"T{ci:02d}",), ()))
        words = _make_words(rng, docs_per_category, taken)
        child_words[cat] = words
        for di, word in enumerate(words):
            rows.append(
                (f"C{ci:02d}{di:03d}", word, (f"T{ci:02d}.{di:03d}",), ())
            )

    documents = []
    truth: dict[str, dict[str, int]] = {}
    for ci, cat in enumerate(categories):
        for di in range(docs_per_category):
            doc_id = f"{200000 + ci * docs_per_category + di}"
            tokens = [child_words[cat][di]] * child_tf
            tokens += [rng.choice(noise[cat]) for _ in range(noise_tokens)]
            rng.shuffle(tokens)
            documents.append(
                Document(
                    doc_id=doc_id,
                    title=" ".join(tokens[:3]),
                    abstract=" ".join(tokens[3:]),
                    labels=(cat,),
                )
            )
            truth[doc_id] = {f"P{ci:02d}": child_tf}
    return SynthFixture(
        corpus=Corpus(documents=tuple(documents), categories=categories),
        ontology_rows=tuple(rows),
        concept_truth=truth,
        categories=categories,
    )


def loo_nearest_neighbor_accuracy(
    vectors: dict[str, dict[str, int]], labels: dict[str, str]
) -> float:
    """Leave-one-out 1-NN cosine accuracy, written from scratch so it can
    vouch for a fixture without circular trust in the library."""

    def cosine(a: dict[str, int], b: dict[str, int]) -> float:
        dot = sum(n * b.get(w, 0) for w, n in a.items())
        na = math.sqrt(sum(n * n for n in a.values()))
        nb = math.sqrt(sum(n * n for n in b.values()))
        if na == 0 or nb == 0:
            return 0.0
        return dot / (na * nb)

    doc_ids = sorted(vectors)
    correct = 0
    for q in doc_ids:
        best_sim, best_doc = -2.0, None
        for r in doc_ids:
            if r == q:
                continue
            sim = cosine(vectors[q], vectors[r])
            if sim > best_sim:
                best_sim, best_doc = sim, r
        if labels[best_doc] == labels[q]:
            correct += 1
    return correct / len(doc_ids)


def write_ontology_tsv(fixture: SynthFixture, path: Path) -> Path:
    lines = ["# synthetic fixture ontology"]
    for cid, name, trees, entries in fixture.ontology_rows:
        lines.append(f"{cid}\t{name}\t{','.join(trees)}\t{'|'.join(entries)}")
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def write_ohsumed(fixture: SynthFixture, corpus_path: Path, labels_path: Path):
    """Render the fixture in the tagged-record and label-map formats."""
    parts = []
    for i, doc in enumerate(fixture.corpus.documents, start=1):
        parts.append(
            f".I {i}\n.U\n{doc.doc_id}\n.T\n{doc.title}\n.W\n{doc.abstract}\n"
        )
    corpus_path.write_text("".join(parts), encoding="utf-8")
    labels_path.write_text(
        "".join(
            f"{doc.doc_id}\t{doc.labels[0]}\n"
            for doc in fixture.corpus.documents
        ),
        encoding="utf-8",
    )
    return corpus_path, labels_path
