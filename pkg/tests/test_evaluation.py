"""Joint goal accuracy, run aggregation, and selection analysis."""

from __future__ import annotations

import csv
import math
import random

import pytest

from ictrack.corpus import SlotId
from ictrack.errors import AlignmentError
from ictrack.evaluation import (
    EvalReport,
    aggregate_runs,
    joint_goal_accuracy,
    load_retrieval_log,
    merge_reports,
    save_retrieval_log,
    selection_analysis,
)
from ictrack.generation import PredictedState, RetrievalLogEntry

from conftest import make_corpus, synthetic_corpus_dicts


def perfect_predictions(dialogues) -> list[PredictedState]:
    return [
        PredictedState(d.id, t.index, dict(t.gold_state))
        for d in dialogues
        for t in d.turns
    ]


def brute_force_jga(preds, dialogues, scope=None) -> float:
    """Independent checker: compares sorted (slot string, value) tuples."""
    by_key = {(p.dialogue_id, p.turn_index): p for p in preds}
    correct = 0
    total = 0
    for dialogue in dialogues:
        for turn in dialogue.turns:
            pred = by_key[(dialogue.id, turn.index)]

            def flat(entries):
                return sorted(
                    (str(slot), value)
                    for slot, value in entries.items()
                    if scope is None or str(slot).startswith(scope + "-")
                )

            total += 1
            if flat(pred.entries) == flat(turn.gold_state):
                correct += 1
    return correct / total


class TestJointGoalAccuracy:
    def test_identity_is_one(self, ontology):
        dialogues = make_corpus(synthetic_corpus_dicts(10, seed=51), ontology)
        report = joint_goal_accuracy(perfect_predictions(dialogues), dialogues)
        assert report.jga == 1.0
        assert report.turn_count == sum(len(d.turns) for d in dialogues)

    def test_extra_predicted_slot_fails_the_turn(self, ontology):
        raw = [{
            "id": "d1",
            "turns": [
                {"system": "", "user": "u0", "state": {"hotel-area": "centre"}},
                {"system": "s", "user": "u1", "state": {"hotel-area": "centre"}},
            ],
        }]
        dialogues = make_corpus(raw, ontology)
        preds = perfect_predictions(dialogues)
        # corrupt turn 1 with one extra slot; turn 0 stays exact
        preds[1] = PredictedState(
            "d1", 1, {**preds[1].entries, SlotId("hotel", "stars"): "4"}
        )
        report = joint_goal_accuracy(preds, dialogues)
        # hand enumeration: turn 0 correct, turn 1 wrong -> 1/2
        assert report.jga == 0.5

    def test_empty_vs_empty_counts_correct(self, ontology):
        raw = [{"id": "d1", "turns": [{"system": "", "user": "hi", "state": {}}]}]
        dialogues = make_corpus(raw, ontology)
        report = joint_goal_accuracy(
            [PredictedState("d1", 0, {})], dialogues
        )
        assert report.jga == 1.0

    def test_slot_scope_restricts_comparison(self, ontology):
        raw = [{
            "id": "d1",
            "turns": [{
                "system": "", "user": "u",
                "state": {"hotel-area": "centre", "train-day": "monday"},
            }],
        }]
        dialogues = make_corpus(raw, ontology)
        # prediction nails hotel but misses train entirely
        preds = [PredictedState("d1", 0, {SlotId("hotel", "area"): "centre"})]
        assert joint_goal_accuracy(preds, dialogues, slot_scope="hotel").jga == 1.0
        assert joint_goal_accuracy(preds, dialogues, slot_scope="train").jga == 0.0
        assert joint_goal_accuracy(preds, dialogues).jga == 0.0

    def test_alignment_errors(self, ontology, small_corpus):
        preds = perfect_predictions(small_corpus)
        with pytest.raises(AlignmentError) as excinfo:
            joint_goal_accuracy(preds[:-1], small_corpus)
        assert "d-train" in str(excinfo.value)
        with pytest.raises(AlignmentError):
            joint_goal_accuracy(
                preds + [PredictedState("ghost", 0, {})], small_corpus
            )
        with pytest.raises(AlignmentError):
            joint_goal_accuracy(preds + [preds[0]], small_corpus)

    def test_monotone_under_correction(self, ontology):
        dialogues = make_corpus(synthetic_corpus_dicts(8, seed=52), ontology)
        preds = perfect_predictions(dialogues)
        rng = random.Random(0)
        broken = list(preds)
        wrong_positions = rng.sample(range(len(broken)), 5)
        for pos in wrong_positions:
            state = dict(broken[pos].entries)
            state[SlotId("hotel", "area")] = "__wrong__"
            broken[pos] = PredictedState(
                broken[pos].dialogue_id, broken[pos].turn_index, state
            )
        before = joint_goal_accuracy(broken, dialogues).jga
        fixed = list(broken)
        fixed[wrong_positions[0]] = preds[wrong_positions[0]]
        after = joint_goal_accuracy(fixed, dialogues).jga
        assert after >= before

    def test_matches_brute_force_on_randomized_pairs(self, ontology):
        # randomized (pred, gold) pairs, <= 5 turns and <= 6 slots per turn
        rng = random.Random(99)
        slots = [
            SlotId("hotel", "area"), SlotId("hotel", "stars"),
            SlotId("hotel", "price range"), SlotId("train", "day"),
            SlotId("train", "leave at"), SlotId("restaurant", "food"),
        ]
        for trial in range(50):
            raw = synthetic_corpus_dicts(
                3, seed=1000 + trial, max_turns=5
            )
            dialogues = make_corpus(raw, ontology)
            preds = []
            for dialogue in dialogues:
                for turn in dialogue.turns:
                    entries = {}
                    for slot in slots:
                        roll = rng.random()
                        if roll < 0.4 and slot in turn.gold_state:
                            entries[slot] = turn.gold_state[slot]
                        elif roll < 0.55:
                            entries[slot] = "noise"
                    preds.append(PredictedState(dialogue.id, turn.index, entries))
            scope = rng.choice([None, "hotel", "train"])
            got = joint_goal_accuracy(preds, dialogues, slot_scope=scope).jga
            assert got == brute_force_jga(preds, dialogues, scope)


class TestAggregation:
    def test_single_run(self):
        assert aggregate_runs([EvalReport(jga=0.5, turn_count=10)]) == (0.5, 0.0)

    def test_two_runs_closed_form(self):
        reports = [EvalReport(jga=0.4, turn_count=10),
                   EvalReport(jga=0.6, turn_count=10)]
        mean, std = aggregate_runs(reports)
        assert mean == pytest.approx(0.5, abs=1e-12)
        # sample std of {0.4, 0.6}: sqrt(2 * 0.01) = 0.1414213...
        assert std == pytest.approx(math.sqrt(0.02), abs=1e-9)

    def test_empty_is_an_error(self):
        with pytest.raises(ValueError):
            aggregate_runs([])

    def test_merge_reports_carries_runs(self):
        merged = merge_reports(
            [EvalReport(jga=0.4, turn_count=10), EvalReport(jga=0.6, turn_count=10)]
        )
        assert merged.seed_runs == [0.4, 0.6]
        assert merged.mean == pytest.approx(0.5)
        assert merged.to_dict()["std"] == pytest.approx(math.sqrt(0.02))


class TestSelectionAnalysis:
    @staticmethod
    def _log(query: str, picked: list[str]) -> RetrievalLogEntry:
        return RetrievalLogEntry(
            query_slot=SlotId.parse(query),
            retrieved_slots=tuple(SlotId.parse(p) for p in picked),
        )

    def test_fixture_matches_hand_tally(self):
        logs = [
            self._log("hotel-area", ["hotel-area", "train-day"]),
            self._log("hotel-area", ["restaurant-food", "hotel-stars"]),
            self._log("train-day", ["train-day", "train-day"]),
            self._log("restaurant-food", ["hotel-area", "train-day"]),
        ]
        matrix, summary = selection_analysis(logs, axis="domain")

        # independent tally over the same fixture
        expected = {}
        for entry in logs:
            for slot in entry.retrieved_slots:
                key = (entry.query_slot.domain, slot.domain)
                expected[key] = expected.get(key, 0) + 1
        for r, row_label in enumerate(matrix.labels):
            for c, col_label in enumerate(matrix.labels):
                assert matrix.counts[r][c] == expected.get((row_label, col_label), 0)
        assert matrix.total() == 8
        assert summary.retrieved_total == 8
        # same-slot: hotel-area@q0, train-day x2 @q2 -> 3/8
        assert summary.same_slot_fraction == pytest.approx(3 / 8)
        # same-domain: q0 hotel-area, q1 hotel-stars, q2 both train-day -> 4/8
        assert summary.same_domain_fraction == pytest.approx(4 / 8)

    def test_all_same_slot(self):
        logs = [self._log("hotel-area", ["hotel-area", "hotel-area"])]
        _, summary = selection_analysis(logs, axis="slot")
        assert summary.same_slot_fraction == 1.0

    def test_zero_shot_diagonal_empty(self):
        # retrieved domains never equal the query domain -> zero diagonal
        logs = [
            self._log("hotel-area", ["train-day", "restaurant-food"]),
            self._log("train-day", ["hotel-area"]),
            self._log("restaurant-food", ["hotel-stars", "train-day"]),
        ]
        matrix, _ = selection_analysis(logs, axis="domain")
        assert all(d == 0 for d in matrix.diagonal())

    def test_matrix_conservation(self):
        rng = random.Random(5)
        pool = ["hotel-area", "hotel-stars", "train-day", "restaurant-food"]
        logs = [
            self._log(rng.choice(pool), rng.choices(pool, k=rng.randint(0, 3)))
            for _ in range(40)
        ]
        matrix, summary = selection_analysis(logs, axis="slot")
        assert matrix.total() == sum(len(e.retrieved_slots) for e in logs)
        assert summary.retrieved_total == matrix.total()

    def test_empty_logs_rejected(self):
        with pytest.raises(ValueError):
            selection_analysis([], axis="domain")

    def test_csv_emission(self, tmp_path):
        logs = [self._log("hotel-area", ["train-day"])]
        matrix, _ = selection_analysis(logs, axis="domain")
        path = tmp_path / "matrix.csv"
        matrix.to_csv(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["query"] + matrix.labels
        assert len(rows) == 1 + len(matrix.labels)

    def test_log_round_trip(self, tmp_path):
        logs = [
            self._log("hotel-area", ["train-day", "hotel-area"]),
            self._log("train-day", []),
        ]
        path = tmp_path / "log.jsonl"
        save_retrieval_log(logs, path)
        assert load_retrieval_log(path) == logs
