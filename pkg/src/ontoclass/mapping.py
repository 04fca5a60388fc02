"""Term-to-concept mapping: turn a stem vector into a concept-based
representation under one of three combination strategies and two sense
disambiguation strategies, with optional one-level hyperonym enrichment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import OntoclassError, OntologyError
from .ontology import Ontology, phrase_key
from .preprocess import TermVector, load_stoplist

log = logging.getLogger(__name__)

STRATEGIES = ("AddConcept", "ReplaceTerms", "ConceptOnly")
DISAMBIGUATIONS = ("AllConcepts", "FirstConcept")
HYPERONYM_VARIANTS = ("additive", "hyponyms-only")


@dataclass(frozen=True)
class ConceptVector:
    """Sparse concept frequencies; zero entries are never stored."""

    counts: dict[str, int]

    def __post_init__(self):
        object.__setattr__(
            self, "counts", {c: n for c, n in self.counts.items() if n}
        )
        if any(n < 0 for n in self.counts.values()):
            raise OntoclassError("negative concept frequency")

    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class HybridVector:
    """A document in mixed stem/concept space."""

    doc_id: str
    strategy: str
    term_part: dict[str, int]
    concept_part: ConceptVector
    hyperonyms_applied: bool = False
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise OntoclassError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "ConceptOnly" and self.term_part:
            raise OntoclassError("ConceptOnly vector carries terms")

    def dimensionality(self) -> int:
        return len(self.term_part) + len(self.concept_part.counts)


@dataclass(frozen=True)
class MappingConfig:
    """How documents are mapped into concept space."""

    strategy: str = "AddConcept"
    disambiguation: str = "AllConcepts"
    use_hyperonyms: bool = False
    hyperonym_variant: str = "additive"
    use_mesh_annotations: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise OntoclassError(f"unknown strategy {self.strategy!r}")
        if self.disambiguation not in DISAMBIGUATIONS:
            raise OntoclassError(
                f"unknown disambiguation {self.disambiguation!r}"
            )
        if self.hyperonym_variant not in HYPERONYM_VARIANTS:
            raise OntoclassError(
                f"unknown hyperonym variant {self.hyperonym_variant!r}"
            )


def match_phrases(
    term_vector: TermVector, ontology: Ontology, disamb: str = "AllConcepts"
) -> tuple[ConceptVector, set[str]]:
    """Find concept matches in a stem vector.

    With the stem sequence available, matching scans left to right taking
    the longest indexed window (up to the ontology's max phrase length)
    at each position; windows never overlap. Without a sequence, each
    stem is looked up alone with its count. Under AllConcepts every
    candidate concept of a matched key receives the full occurrence
    count; under FirstConcept only the head of the candidate list does.
    Returns the concept counts and the set of stems inside any match.
    """
    if disamb not in DISAMBIGUATIONS:
        raise OntoclassError(f"unknown disambiguation {disamb!r}")

    key_counts: dict[str, int] = {}
    consumed: set[str] = set()
    stems = term_vector.stems
    if stems:
        i = 0
        n = len(stems)
        while i < n:
            for width in range(min(ontology.max_phrase_len, n - i), 0, -1):
                key = " ".join(stems[i : i + width])
                if ontology.lookup_concepts(key):
                    key_counts[key] = key_counts.get(key, 0) + 1
                    consumed.update(stems[i : i + width])
                    i += width
                    break
            else:
                i += 1
    else:
        for s, tf in term_vector.counts.items():
            if ontology.lookup_concepts(s):
                key_counts[s] = key_counts.get(s, 0) + tf
                consumed.add(s)

    counts: dict[str, int] = {}
    for key, n in key_counts.items():
        candidates = ontology.lookup_concepts(key)
        targets = candidates if disamb == "AllConcepts" else candidates[:1]
        for cid in targets:
            counts[cid] = counts.get(cid, 0) + n
    return ConceptVector(counts), consumed


def enrich_hyperonyms(
    concepts: ConceptVector, ontology: Ontology, variant: str = "additive"
) -> ConceptVector:
    """Propagate concept frequencies one hierarchy level upward.

    Every parent receives the summed pre-enrichment frequencies of its
    direct children. The default keeps each concept's own frequency and
    adds the children's; the "hyponyms-only" variant replaces it with the
    children's sum alone. Parents absent from the input vector enter it
    when their children carry frequency.
    """
    if variant not in HYPERONYM_VARIANTS:
        raise OntoclassError(f"unknown hyperonym variant {variant!r}")
    for cid in concepts.counts:
        if cid not in ontology.concepts:
            raise OntologyError(f"unknown concept id {cid!r}")
    from_children: dict[str, int] = {}
    for cid, n in concepts.counts.items():
        for parent in ontology.concepts[cid].parent_ids:
            from_children[parent] = from_children.get(parent, 0) + n
    if variant == "hyponyms-only":
        merged = dict(from_children)
        for cid in concepts.counts:
            merged.setdefault(cid, 0)
    else:
        merged = dict(concepts.counts)
        for cid, n in from_children.items():
            merged[cid] = merged.get(cid, 0) + n
    return ConceptVector(merged)


def map_document(
    term_vector: TermVector,
    ontology: Ontology,
    config: MappingConfig,
    mesh_terms: Sequence[str] = (),
    stopwords: frozenset[str] | None = None,
) -> HybridVector:
    """Build the document's hybrid representation.

    AddConcept keeps every original stem next to the matched concepts;
    ReplaceTerms drops the stems that contributed to a match; ConceptOnly
    drops all stems. Thesaurus annotation phrases (`mesh_terms`) only
    contribute when the config opts in; each annotation counts once.
    """
    concept_vec, consumed = match_phrases(
        term_vector, ontology, config.disambiguation
    )
    counts = dict(concept_vec.counts)

    if config.use_mesh_annotations and mesh_terms:
        if stopwords is None:
            stopwords = load_stoplist()
        for term in mesh_terms:
            candidates = ontology.lookup_concepts(phrase_key(term, stopwords))
            if not candidates:
                continue
            targets = (
                candidates if config.disambiguation == "AllConcepts"
                else candidates[:1]
            )
            for cid in targets:
                counts[cid] = counts.get(cid, 0) + 1
    concept_vec = ConceptVector(counts)

    if config.use_hyperonyms:
        concept_vec = enrich_hyperonyms(
            concept_vec, ontology, config.hyperonym_variant
        )

    if config.strategy == "AddConcept":
        term_part = dict(term_vector.counts)
    elif config.strategy == "ReplaceTerms":
        term_part = {
            s: n for s, n in term_vector.counts.items() if s not in consumed
        }
    else:
        term_part = {}
    return HybridVector(
        doc_id=term_vector.doc_id,
        strategy=config.strategy,
        term_part=term_part,
        concept_part=concept_vec,
        hyperonyms_applied=config.use_hyperonyms,
        labels=term_vector.labels,
    )


def map_corpus(
    term_vectors: Iterable[TermVector],
    ontology: Ontology,
    config: MappingConfig,
    mesh_by_doc: Mapping[str, Sequence[str]] | None = None,
    stopwords: frozenset[str] | None = None,
) -> list[HybridVector]:
    """Map every document; `mesh_by_doc` supplies annotation phrases."""
    if config.use_mesh_annotations and stopwords is None:
        stopwords = load_stoplist()
    mesh_by_doc = mesh_by_doc or {}
    return [
        map_document(
            tv, ontology, config,
            mesh_terms=mesh_by_doc.get(tv.doc_id, ()),
            stopwords=stopwords,
        )
        for tv in term_vectors
    ]


def stems_only(term_vector: TermVector) -> HybridVector:
    """The baseline representation: stems pass through untouched."""
    return HybridVector(
        doc_id=term_vector.doc_id,
        strategy="AddConcept",
        term_part=dict(term_vector.counts),
        concept_part=ConceptVector({}),
        labels=term_vector.labels,
    )
