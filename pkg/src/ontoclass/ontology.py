"""Thesaurus model: concepts with preferred names, synonym entry terms and
a tree-number hierarchy, plus a stemmed phrase index for concept lookup.

Two loaders are provided, one for a portable tab-separated interchange
format and one for the NLM ASCII descriptor format. Both feed the same
builder, so equivalent content yields identical ontologies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .errors import OntologyError, ParseError
from .porter import stem
from .preprocess import load_stoplist, tokenize

log = logging.getLogger(__name__)

#: Longest phrase, in stemmed tokens, kept in the phrase index.
MAX_PHRASE_LEN = 3

#: Sorts after every real tree number, so concepts without tree numbers
#: order last among equals.
_NO_TREE = "~"


@dataclass(frozen=True)
class Concept:
    """A thesaurus descriptor."""

    concept_id: str
    preferred_name: str
    entry_terms: tuple[str, ...]
    tree_numbers: tuple[str, ...]
    parent_ids: frozenset[str]
    child_ids: frozenset[str]


@dataclass(frozen=True)
class Ontology:
    """Immutable concept store plus phrase index.

    `phrase_index` maps a stemmed-phrase key to the ordered candidate
    concept list (most canonical sense first); every query is read-only.
    """

    concepts: dict[str, Concept]
    phrase_index: dict[str, tuple[str, ...]]
    max_phrase_len: int = MAX_PHRASE_LEN

    def __len__(self) -> int:
        return len(self.concepts)

    def lookup_concepts(self, stemmed_phrase: str) -> tuple[str, ...]:
        """Return the ordered candidate concepts for a stemmed phrase key."""
        return self.phrase_index.get(stemmed_phrase, ())

    def hyponyms(self, concept_id: str) -> frozenset[str]:
        """Direct children of a concept (one hierarchy level)."""
        try:
            return self.concepts[concept_id].child_ids
        except KeyError:
            raise OntologyError(f"unknown concept id {concept_id!r}") from None

    def roots(self) -> tuple[str, ...]:
        """Concepts with no parents, in id order."""
        return tuple(
            sorted(cid for cid, c in self.concepts.items() if not c.parent_ids)
        )

    def depth(self) -> int:
        """Number of concepts on the longest root-to-leaf path."""
        if not self.concepts:
            return 0
        in_deg = {cid: len(c.parent_ids) for cid, c in self.concepts.items()}
        depth = {cid: 1 for cid in self.concepts}
        queue = [cid for cid, d in in_deg.items() if d == 0]
        seen = 0
        while queue:
            cid = queue.pop()
            seen += 1
            for child in self.concepts[cid].child_ids:
                depth[child] = max(depth[child], depth[cid] + 1)
                in_deg[child] -= 1
                if in_deg[child] == 0:
                    queue.append(child)
        if seen != len(self.concepts):
            raise OntologyError("hierarchy contains a cycle")
        return max(depth.values())


def phrase_key(term: str, stopwords: frozenset[str]) -> str:
    """Normalize a phrase the same way document text is preprocessed.

    Tokens are lowercased alphabetic runs of length >= 2; stopwords drop
    out; the rest are stemmed and joined with single spaces. May be empty.
    """
    return " ".join(stem(t) for t in tokenize(term) if t not in stopwords)


def load_ontology(
    path: str | Path, stopwords: frozenset[str] | None = None
) -> Ontology:
    """Load the portable tab-separated ontology format.

    One concept per line: id, preferred name, comma-separated tree
    numbers, '|'-separated extra entry terms. The last two fields may be
    empty. '#' starts a comment line.
    """
    rows: list[tuple[str, str, list[str], list[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2 or len(parts) > 4:
                raise ParseError(
                    f"expected 2-4 tab-separated fields, got {len(parts)}", lineno
                )
            concept_id = parts[0].strip()
            preferred = parts[1].strip()
            if not concept_id or not preferred:
                raise ParseError("empty concept id or preferred name", lineno)
            trees = [t.strip() for t in parts[2].split(",")] if len(parts) > 2 else []
            trees = [t for t in trees if t]
            entries = [e.strip() for e in parts[3].split("|")] if len(parts) > 3 else []
            entries = [e for e in entries if e]
            rows.append((concept_id, preferred, trees, entries))
    return build_ontology(rows, stopwords)


def import_mesh_ascii(
    path: str | Path, stopwords: frozenset[str] | None = None
) -> Ontology:
    """Load the NLM ASCII descriptor format.

    Records are separated by ``*NEWRECORD`` lines and carry ``KEY = value``
    lines; only MH, UI, MN, ENTRY and PRINT ENTRY are used. ENTRY values
    keep their first '|'-delimited field. Records missing MH or UI are
    skipped with a warning.
    """
    rows: list[tuple[str, str, list[str], list[str]]] = []
    skipped = 0

    record: dict[str, list[str]] = {}

    def flush():
        nonlocal skipped
        if not record:
            return
        name = record.get("MH", [""])[0]
        uid = record.get("UI", [""])[0]
        if not name or not uid:
            log.warning("descriptor record missing MH or UI; skipped")
            skipped += 1
            record.clear()
            return
        entries = [v.split("|", 1)[0].strip() for v in record.get("ENTRY", [])]
        entries += [v.split("|", 1)[0].strip() for v in record.get("PRINT ENTRY", [])]
        rows.append((uid, name, record.get("MN", []), [e for e in entries if e]))
        record.clear()

    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line == "*NEWRECORD":
                flush()
                continue
            if not line or "=" not in line:
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key in {"MH", "UI", "MN", "ENTRY", "PRINT ENTRY"} and value:
                record.setdefault(key, []).append(value)
    flush()

    if not rows and skipped:
        raise OntologyError("no valid descriptor records")
    return build_ontology(rows, stopwords)


def build_ontology(
    rows: list[tuple[str, str, list[str], list[str]]],
    stopwords: frozenset[str] | None = None,
    max_phrase_len: int = MAX_PHRASE_LEN,
) -> Ontology:
    """Assemble an Ontology from (id, preferred, trees, entries) rows.

    Hierarchy comes from tree numbers: the parent of C01.539.100 is the
    concept owning C01.539; a tree number whose parent path is owned by no
    concept makes that position a root (with a warning). Entry terms
    longer than `max_phrase_len` stemmed tokens are indexed under their
    leading tokens only when that truncated key identifies the concept
    uniquely; otherwise they are dropped.
    """
    if not rows:
        raise OntologyError("no concepts")
    if stopwords is None:
        stopwords = load_stoplist()

    tree_owner: dict[str, str] = {}
    for concept_id, _, trees, _ in rows:
        for tn in trees:
            if tn in tree_owner:
                raise OntologyError(
                    f"tree number {tn} owned by both {tree_owner[tn]} and {concept_id}"
                )
            tree_owner[tn] = concept_id

    seen_ids: set[str] = set()
    parents: dict[str, set[str]] = {}
    children: dict[str, set[str]] = {}
    for concept_id, _, trees, _ in rows:
        if concept_id in seen_ids:
            raise OntologyError(f"duplicate concept id {concept_id!r}")
        seen_ids.add(concept_id)
        parents.setdefault(concept_id, set())
        children.setdefault(concept_id, set())
        for tn in trees:
            if "." not in tn:
                continue
            parent_tn = tn.rsplit(".", 1)[0]
            owner = tree_owner.get(parent_tn)
            if owner is None:
                log.warning(
                    "tree number %s has no parent concept for %s; "
                    "treating %s as a root there", tn, parent_tn, concept_id,
                )
                continue
            parents[concept_id].add(owner)
            children.setdefault(owner, set()).add(concept_id)

    # index construction: exact keys first, then unambiguous truncations
    exact: dict[str, dict[str, bool]] = {}
    truncated: dict[str, dict[str, bool]] = {}
    concepts: dict[str, Concept] = {}
    for concept_id, preferred, trees, entries in rows:
        entry_terms = list(dict.fromkeys([preferred, *entries]))
        concepts[concept_id] = Concept(
            concept_id=concept_id,
            preferred_name=preferred,
            entry_terms=tuple(entry_terms),
            tree_numbers=tuple(sorted(set(trees))),
            parent_ids=frozenset(parents[concept_id]),
            child_ids=frozenset(children[concept_id]),
        )
        for term in entry_terms:
            key = phrase_key(term, stopwords)
            if not key:
                log.debug("entry term %r of %s normalizes to nothing", term,
                          concept_id)
                continue
            tokens = key.split(" ")
            is_pref = term == preferred
            if len(tokens) <= max_phrase_len:
                slot = exact.setdefault(key, {})
                slot[concept_id] = slot.get(concept_id, False) or is_pref
            else:
                key = " ".join(tokens[:max_phrase_len])
                slot = truncated.setdefault(key, {})
                slot[concept_id] = slot.get(concept_id, False) or is_pref

    for key, candidates in truncated.items():
        owners = set(candidates) | set(exact.get(key, {}))
        if len(owners) == 1:
            slot = exact.setdefault(key, {})
            for cid, is_pref in candidates.items():
                slot[cid] = slot.get(cid, False) or is_pref
        else:
            log.warning(
                "long entry terms truncating to %r are ambiguous across %s; dropped",
                key, sorted(owners),
            )

    def order_key(key: str):
        def rank(cid: str) -> tuple:
            c = concepts[cid]
            return (
                0 if exact[key][cid] else 1,
                min(c.tree_numbers, default=_NO_TREE),
                cid,
            )
        return rank

    phrase_index = {
        key: tuple(sorted(cids, key=order_key(key)))
        for key, cids in exact.items()
    }

    onto = Ontology(concepts=concepts, phrase_index=phrase_index,
                    max_phrase_len=max_phrase_len)
    onto.depth()  # raises on a hierarchy cycle
    return onto
