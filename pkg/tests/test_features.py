import logging
import math
import random

import numpy as np
import pytest

from ontoclass.errors import OntoclassError
from ontoclass.features import (
    CategoryStats,
    ContingencyTable,
    FeatureSpace,
    build_matrix,
    chi_square,
    compute_category_stats,
    descriptor_counts,
    load_matrix,
    save_matrix,
    select_top_k,
    tfidf_weight,
)
from ontoclass.mapping import ConceptVector, HybridVector


def hv(doc_id, terms, concepts=None, label=None):
    return HybridVector(
        doc_id=doc_id,
        strategy="AddConcept",
        term_part=dict(terms),
        concept_part=ConceptVector(concepts or {}),
        labels=(label,) if label else (),
    )


def chi_square_definitional(n11, n10, n01, n00):
    """Independent oracle: sum of (observed - expected)^2 / expected."""
    total = n11 + n10 + n01 + n00
    rows = (n11 + n10, n01 + n00)
    cols = (n11 + n01, n10 + n00)
    observed = ((n11, n10), (n01, n00))
    acc = 0.0
    for i in range(2):
        for j in range(2):
            expected = rows[i] * cols[j] / total
            acc += (observed[i][j] - expected) ** 2 / expected
    return acc


class TestTfidfWeight:
    def test_df_equal_to_category_count_is_zero(self):
        assert tfidf_weight(7, 5, 5) == 0.0

    def test_zero_tf_is_zero(self):
        assert tfidf_weight(0, 1, 8) == 0.0

    def test_worked_value(self):
        assert math.isclose(tfidf_weight(3, 2, 8), 3 * math.log(4))
        assert round(tfidf_weight(3, 2, 8), 4) == 4.1589

    def test_df_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            tfidf_weight(1, 0, 8)
        with pytest.raises(ValueError):
            tfidf_weight(1, 9, 8)

    def test_negative_tf_rejected(self):
        with pytest.raises(ValueError):
            tfidf_weight(-1, 1, 8)

    def test_strictly_increasing_in_tf(self):
        weights = [tfidf_weight(tf, 3, 8) for tf in range(6)]
        assert all(b > a for a, b in zip(weights, weights[1:]))


class TestChiSquare:
    def test_independent_table_scores_zero(self):
        assert chi_square(ContingencyTable(2, 2, 2, 2)) == 0.0

    def test_worked_value_exact(self):
        assert chi_square(ContingencyTable(4, 1, 1, 4)) == 3.6

    def test_perfect_association_equals_total(self):
        assert chi_square(ContingencyTable(5, 0, 0, 5)) == 10.0

    def test_degenerate_marginal_scores_zero(self):
        assert chi_square(ContingencyTable(0, 0, 3, 5)) == 0.0
        assert chi_square(ContingencyTable(3, 5, 0, 0)) == 0.0
        assert chi_square(ContingencyTable(0, 3, 0, 5)) == 0.0
        assert chi_square(ContingencyTable(3, 0, 5, 0)) == 0.0

    def test_negative_cell_rejected(self):
        with pytest.raises(ValueError):
            ContingencyTable(1, -1, 2, 2)

    def test_matches_definitional_form(self):
        rng = random.Random(17)
        checked = 0
        while checked < 1000:
            cells = [rng.randint(0, 30) for _ in range(4)]
            table = ContingencyTable(*cells)
            if table.degenerate:
                continue
            assert abs(chi_square(table) - chi_square_definitional(*cells)) <= 1e-9
            checked += 1

    def test_invariant_under_category_complement(self):
        rng = random.Random(5)
        for _ in range(200):
            n11, n10, n01, n00 = (rng.randint(0, 12) for _ in range(4))
            a = chi_square(ContingencyTable(n11, n10, n01, n00))
            b = chi_square(ContingencyTable(n01, n00, n11, n10))
            assert math.isclose(a, b, abs_tol=1e-12)

    def test_invariant_under_term_complement(self):
        rng = random.Random(6)
        for _ in range(200):
            n11, n10, n01, n00 = (rng.randint(0, 12) for _ in range(4))
            a = chi_square(ContingencyTable(n11, n10, n01, n00))
            b = chi_square(ContingencyTable(n10, n11, n00, n01))
            assert math.isclose(a, b, abs_tol=1e-12)

    def test_non_negative_and_zero_iff_independent(self):
        rng = random.Random(7)
        for _ in range(500):
            n11, n10, n01, n00 = (rng.randint(0, 9) for _ in range(4))
            table = ContingencyTable(n11, n10, n01, n00)
            score = chi_square(table)
            assert score >= 0.0
            if not table.degenerate:
                assert (score == 0.0) == (n11 * n00 == n10 * n01)


class TestDescriptorCounts:
    def test_namespaces_are_disjoint(self):
        v = hv("d", {"cold": 2}, {"cold": 5})
        assert descriptor_counts(v) == {"t:cold": 2, "c:cold": 5}


class TestCategoryStats:
    def fixture(self):
        return [
            hv("d1", {"a": 2, "b": 1}, label="X"),
            hv("d2", {"a": 1}, {"K9": 3}, label="X"),
            hv("d3", {"b": 2}, label="Y"),
        ]

    def test_tf_sums_over_category(self):
        stats = compute_category_stats(self.fixture())
        assert stats.tf[("X", "t:a")] == 3
        assert stats.tf[("X", "t:b")] == 1
        assert stats.tf[("Y", "t:b")] == 2
        assert stats.tf[("X", "c:K9")] == 3
        assert ("Y", "t:a") not in stats.tf

    def test_df_counts_categories_not_documents(self):
        stats = compute_category_stats(self.fixture())
        assert stats.df == {"t:a": 1, "t:b": 2, "c:K9": 1}
        assert stats.nbr_category == 2

    def test_category_order_is_first_appearance(self):
        stats = compute_category_stats(self.fixture())
        assert stats.categories == ("X", "Y")

    def test_explicit_label_mapping_wins(self):
        vecs = self.fixture()
        stats = compute_category_stats(
            vecs, labels={"d1": "Y", "d2": "Y", "d3": "X"}
        )
        assert stats.tf[("Y", "t:a")] == 3

    def test_recorder_sees_every_document(self):
        seen = []
        compute_category_stats(self.fixture(), recorder=seen.append)
        assert seen == ["d1", "d2", "d3"]

    def test_unlabeled_document_rejected(self):
        with pytest.raises(OntoclassError):
            compute_category_stats([hv("d1", {"a": 1})])

    def test_df_bounds_enforced(self):
        with pytest.raises(OntoclassError):
            CategoryStats(nbr_category=2, tf={}, df={"t:a": 3}, categories=("X", "Y"))

    def test_empty_input_rejected(self):
        with pytest.raises(OntoclassError):
            compute_category_stats([])


def marker_fixture():
    """12 docs, 3 categories; 'mx' marks every X doc and nothing else."""
    vecs = []
    for i in range(4):
        vecs.append(hv(f"x{i}", {"mx": 1, "shared": 1}, label="X"))
    for i in range(4):
        terms = {"shared": 1, "ybias": 1} if i < 3 else {"shared": 1}
        vecs.append(hv(f"y{i}", terms, label="Y"))
    for i in range(4):
        terms = {"shared": 1, "zbias": 1} if i < 2 else {"shared": 1}
        vecs.append(hv(f"z{i}", terms, label="Z"))
    return vecs


class TestSelectTopK:
    def test_category_marker_always_selected(self):
        space = select_top_k(marker_fixture(), k=1)
        assert "t:mx" in space.descriptors
        assert space.selected["X"] == ("t:mx",)
        # perfect association: chi-square equals the table total
        assert space.per_category_scores[("X", "t:mx")] == 12.0

    def test_scores_kept_for_unselected_descriptors(self):
        space = select_top_k(marker_fixture(), k=1)
        assert ("Y", "t:mx") in space.per_category_scores
        assert ("X", "t:shared") in space.per_category_scores

    def test_uniform_descriptor_never_selected(self):
        space = select_top_k(marker_fixture(), k=50)
        assert "t:shared" not in space.descriptors
        assert space.per_category_scores[("X", "t:shared")] == 0.0

    def test_large_k_selects_all_discriminating_descriptors(self):
        space = select_top_k(marker_fixture(), k=50)
        assert set(space.descriptors) == {"t:mx", "t:ybias", "t:zbias"}

    def test_per_category_count_is_min_k_positive(self):
        for k in (1, 2, 50):
            space = select_top_k(marker_fixture(), k=k)
            for cat in ("X", "Y", "Z"):
                positive = sum(
                    1
                    for (c, _), s in space.per_category_scores.items()
                    if c == cat and s > 0
                )
                assert len(space.selected[cat]) == min(k, positive)
            assert len(space.descriptors) <= k * 3

    def test_union_order_categories_first_occurrence(self):
        vecs = [
            hv("x0", {"mx": 1, "both": 1}, label="X"),
            hv("x1", {"mx": 1, "both": 1}, label="X"),
            hv("y0", {"my": 1}, label="Y"),
            hv("y1", {"my": 1, "both": 1}, label="Y"),
        ]
        space = select_top_k(vecs, k=5)
        # X's descriptors first, score-descending; Y adds only what is new
        assert space.descriptors[0] == "t:mx"
        assert space.descriptors.index("t:mx") < space.descriptors.index("t:my")
        assert len(space.descriptors) == len(set(space.descriptors))

    def test_ties_break_lexicographically(self):
        vecs = [
            hv("d1", {"ab": 1, "aa": 1}, label="X"),
            hv("d2", {"zz": 1}, label="Y"),
        ]
        space = select_top_k(vecs, k=1)
        assert space.selected["X"] == ("t:aa",)

    def test_deterministic_output(self):
        a = select_top_k(marker_fixture(), k=2)
        b = select_top_k(marker_fixture(), k=2)
        assert a.descriptors == b.descriptors
        assert a.selected == b.selected

    def test_bad_inputs_rejected(self):
        with pytest.raises(OntoclassError):
            select_top_k(marker_fixture(), k=0)
        with pytest.raises(OntoclassError):
            select_top_k([], k=1)
        with pytest.raises(OntoclassError):
            select_top_k([hv("d", {"a": 1}, label="X")], k=1)

    def test_label_outside_category_list_rejected(self):
        with pytest.raises(OntoclassError):
            select_top_k(marker_fixture(), k=1, categories=("X", "Y"))

    def test_recorder_sees_every_document(self):
        seen = []
        select_top_k(marker_fixture(), k=1, recorder=seen.append)
        assert len(seen) == 12


def small_matrix_fixture():
    vecs = [
        hv("d1", {"a": 2, "b": 1}, label="X"),
        hv("d2", {"a": 1, "c": 3}, label="Y"),
        hv("d3", {"b": 2, "c": 1, "d": 1}, label="Z"),
    ]
    stats = compute_category_stats(vecs)
    space = select_top_k(vecs, k=10)
    return vecs, stats, space


class TestBuildMatrix:
    def test_hand_computed_tfidf_rows(self):
        vecs, stats, space = small_matrix_fixture()
        matrix = build_matrix(vecs, space, stats)
        # df: a=2, b=2, c=2, d=1 over 3 categories; weight = n*ln(3/df),
        # rows L2-normalized; values hand-computed from that formula
        expected = {
            "d1": {"t:a": 0.894427190999916, "t:b": 0.447213595499958},
            "d2": {"t:a": 0.31622776601683794, "t:c": 0.9486832980505139},
            "d3": {"t:b": 0.5693074621569949, "t:c": 0.28465373107849745,
                   "t:d": 0.7712724984825094},
        }
        dense = matrix.values.toarray()
        col = {d: i for i, d in enumerate(matrix.descriptors)}
        for r, doc_id in enumerate(matrix.doc_ids):
            want = expected[doc_id]
            for desc in matrix.descriptors:
                got = dense[r, col[desc]]
                assert abs(got - want.get(desc, 0.0)) <= 1e-9

    def test_rows_are_unit_length(self):
        vecs, stats, space = small_matrix_fixture()
        matrix = build_matrix(vecs, space, stats)
        norms = np.sqrt(matrix.values.multiply(matrix.values).sum(axis=1))
        assert np.allclose(np.asarray(norms).ravel(), 1.0)

    def test_labels_and_ids_in_corpus_order(self):
        vecs, stats, space = small_matrix_fixture()
        matrix = build_matrix(vecs, space, stats)
        assert matrix.doc_ids == ("d1", "d2", "d3")
        assert matrix.labels == ("X", "Y", "Z")

    def test_tf_weighting_keeps_raw_proportions(self):
        vecs, stats, space = small_matrix_fixture()
        matrix = build_matrix(vecs, space, stats, weighting="tf")
        dense = matrix.values.toarray()
        col = matrix.descriptors.index("t:c")
        row = matrix.doc_ids.index("d2")
        assert math.isclose(dense[row, col], 3 / math.sqrt(10))

    def test_binary_weighting_flattens_counts(self):
        vecs, stats, space = small_matrix_fixture()
        matrix = build_matrix(vecs, space, stats, weighting="binary")
        dense = matrix.values.toarray()
        row = matrix.doc_ids.index("d1")
        nonzero = dense[row][dense[row] > 0]
        assert np.allclose(nonzero, 1 / math.sqrt(2))

    def test_unknown_weighting_rejected(self):
        vecs, stats, space = small_matrix_fixture()
        with pytest.raises(OntoclassError):
            build_matrix(vecs, space, stats, weighting="idf")

    def test_descriptor_missing_from_stats_weighs_zero(self, caplog):
        vecs, stats, space = small_matrix_fixture()
        widened = FeatureSpace(
            descriptors=space.descriptors + ("t:ghost",),
            per_category_scores=space.per_category_scores,
            k_per_category=space.k_per_category,
        )
        ghost = [
            hv("d9", {"ghost": 4}, label="X"),
        ]
        with caplog.at_level(logging.WARNING, logger="ontoclass.features"):
            matrix = build_matrix(vecs + ghost, widened, stats)
        assert "absent from training stats" in caplog.text
        dense = matrix.values.toarray()
        assert dense[:, list(matrix.descriptors).index("t:ghost")].sum() == 0.0

    def test_document_without_selected_descriptors_is_zero_row(self, caplog):
        vecs, stats, space = small_matrix_fixture()
        stranger = hv("d4", {"qqq": 5}, label="X")
        with caplog.at_level(logging.WARNING, logger="ontoclass.features"):
            matrix = build_matrix(vecs + [stranger], space, stats)
        assert "all-zero rows" in caplog.text
        assert matrix.values.getrow(3).nnz == 0


class TestMatrixSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        vecs, stats, space = small_matrix_fixture()
        matrix = build_matrix(vecs, space, stats)
        path = tmp_path / "weights.mtx"
        save_matrix(matrix, path)
        back = load_matrix(path)
        assert back.doc_ids == matrix.doc_ids
        assert back.descriptors == matrix.descriptors
        assert back.labels == matrix.labels
        assert (back.values != matrix.values).nnz == 0

    def test_header_counts_nonzeros(self, tmp_path):
        vecs, stats, space = small_matrix_fixture()
        matrix = build_matrix(vecs, space, stats)
        path = tmp_path / "weights.mtx"
        save_matrix(matrix, path)
        header = path.read_text().splitlines()[0].split()
        assert header == ["3", str(len(matrix.descriptors)),
                          str(matrix.values.nnz)]
