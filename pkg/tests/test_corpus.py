"""Corpus parsing, value normalization, splits, and query enumeration."""

from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ictrack.corpus import (
    SlotId,
    SplitSpec,
    enumerate_queries,
    make_split,
    normalize_value,
    parse_corpus,
    parse_ontology,
)
from ictrack.errors import (
    CorpusEncodingError,
    CorpusParseError,
    SchemaError,
    SplitError,
)

from conftest import corpus_bytes, make_corpus, synthetic_corpus_dicts


class TestParseCorpus:
    def test_two_turn_dialogue(self, ontology):
        raw = [
            {
                "id": "d1",
                "turns": [
                    {"system": "", "user": "hotel in the centre",
                     "state": {"hotel-area": "centre"}},
                    {"system": "stars?", "user": "4",
                     "state": {"hotel-area": "centre", "hotel-stars": "4"}},
                ],
            }
        ]
        dialogues = parse_corpus(corpus_bytes(raw), ontology)
        assert len(dialogues) == 1
        dialogue = dialogues[0]
        assert dialogue.domains == {"hotel"}
        assert len(dialogue.turns) == 2
        assert dialogue.turns[1].gold_state == {
            SlotId("hotel", "area"): "centre",
            SlotId("hotel", "stars"): "4",
        }

    def test_unknown_slot_names_slot_and_dialogue(self, ontology):
        raw = [
            {
                "id": "d-bad",
                "turns": [
                    {"system": "", "user": "hi",
                     "state": {"hotel-parking": "yes"}},
                ],
            }
        ]
        with pytest.raises(SchemaError) as excinfo:
            parse_corpus(corpus_bytes(raw), ontology)
        assert "hotel-parking" in str(excinfo.value)
        assert "d-bad" in str(excinfo.value)

    def test_ten_dialogue_corpus_counts(self, ontology):
        # Independent oracle: count dialogues and domains straight off the
        # raw dicts before they ever reach the parser.
        raw = synthetic_corpus_dicts(10, seed=3, domains=["hotel", "train"])
        expected_domains = set()
        for dialogue in raw:
            for turn in dialogue["turns"]:
                for key in turn["state"]:
                    expected_domains.add(key.split("-", 1)[0])
        dialogues = parse_corpus(corpus_bytes(raw), ontology)
        assert len(dialogues) == 10
        union = set().union(*(d.domains for d in dialogues))
        assert union == expected_domains == {"hotel", "train"}

    def test_malformed_json_reports_byte_offset(self, ontology):
        with pytest.raises(CorpusParseError) as excinfo:
            parse_corpus(b'[{"id": "x", }]', ontology)
        assert excinfo.value.byte_offset is not None
        assert "byte" in str(excinfo.value)

    def test_non_utf8_is_an_encoding_error(self, ontology):
        with pytest.raises(CorpusEncodingError):
            parse_corpus(b"\xff\xfe[]", ontology)

    def test_absent_values_are_dropped(self, ontology):
        raw = [
            {
                "id": "d1",
                "turns": [
                    {"system": "", "user": "hi",
                     "state": {"hotel-area": "not mentioned",
                               "hotel-stars": "none",
                               "hotel-price range": "do not care"}},
                ],
            }
        ]
        (dialogue,) = parse_corpus(corpus_bytes(raw), ontology)
        assert dialogue.turns[0].gold_state == {
            SlotId("hotel", "price range"): "dontcare"
        }

    def test_empty_system_only_on_opening_turn(self, ontology):
        raw = [
            {
                "id": "d1",
                "turns": [
                    {"system": "", "user": "hi", "state": {}},
                    {"system": "  ", "user": "again", "state": {}},
                ],
            }
        ]
        with pytest.raises(SchemaError):
            parse_corpus(corpus_bytes(raw), ontology)

    def test_duplicate_dialogue_id_rejected(self, ontology):
        raw = [
            {"id": "dup", "turns": [{"system": "", "user": "a", "state": {}}]},
            {"id": "dup", "turns": [{"system": "", "user": "b", "state": {}}]},
        ]
        with pytest.raises(SchemaError):
            parse_corpus(corpus_bytes(raw), ontology)


class TestParseOntology:
    def test_categorical_requires_values(self):
        raw = {"slots": [{"domain": "hotel", "name": "area",
                          "kind": "categorical", "values": []}]}
        with pytest.raises(SchemaError):
            parse_ontology(json.dumps(raw).encode())

    def test_candidate_values_deduplicated(self):
        raw = {"slots": [{"domain": "hotel", "name": "area",
                          "kind": "categorical",
                          "values": ["centre", "north", "centre"]}]}
        onto = parse_ontology(json.dumps(raw).encode())
        assert onto.slots[0].candidate_values == ("centre", "north")

    def test_slot_ids_canonicalized(self):
        raw = {"slots": [{"domain": " Hotel ", "name": "Price  Range",
                          "kind": "span", "values": []}]}
        onto = parse_ontology(json.dumps(raw).encode())
        assert str(onto.slots[0].id) == "hotel-price range"

    def test_duplicate_slot_rejected(self):
        raw = {"slots": [
            {"domain": "hotel", "name": "area", "kind": "span", "values": []},
            {"domain": "HOTEL", "name": " area", "kind": "span", "values": []},
        ]}
        with pytest.raises(SchemaError):
            parse_ontology(json.dumps(raw).encode())


class TestNormalizeValue:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("  Centre ", "centre"),
            ("not mentioned", None),
            ("none", None),
            ("do not care", "dontcare"),
            ("dont care", "dontcare"),
            ("dontcare", "dontcare"),
            ("4  Stars", "4 stars"),
        ],
    )
    def test_examples(self, raw, expected):
        assert normalize_value(raw) == expected

    @given(st.text(max_size=40))
    def test_idempotent(self, raw):
        once = normalize_value(raw)
        if once is not None:
            assert normalize_value(once) == once


class TestMakeSplit:
    def test_zero_shot_excludes_target_entirely(self, ontology):
        raw = synthetic_corpus_dicts(40, seed=5, multi_domain_fraction=0.4)
        dialogues = make_corpus(raw, ontology)
        spec = SplitSpec(mode="zero_shot", target_domain="hotel")
        train, info = make_split(dialogues, spec)
        assert train, "expected a non-empty zero-shot train set"
        for dialogue in train:
            assert "hotel" not in dialogue.domains
        assert info.train_count == len(train)
        assert set(info.heldout_ids) == {
            d.id for d in dialogues if "hotel" in d.domains
        }

    def test_zero_shot_all_target_is_an_error(self, ontology):
        raw = synthetic_corpus_dicts(5, seed=1, domains=["hotel"])
        dialogues = make_corpus(raw, ontology)
        with pytest.raises(SplitError):
            make_split(dialogues, SplitSpec(mode="zero_shot", target_domain="hotel"))

    def test_missing_target_domain_is_an_error(self, ontology):
        dialogues = make_corpus(synthetic_corpus_dicts(5, seed=1,
                                                       domains=["hotel"]), ontology)
        with pytest.raises(SplitError):
            make_split(dialogues, SplitSpec(mode="zero_shot", target_domain="spa"))

    def test_seed_determinism(self, ontology):
        dialogues = make_corpus(synthetic_corpus_dicts(50, seed=2), ontology)
        spec = SplitSpec(mode="multi_domain_few_shot", fraction=0.1, seed=7)
        first, _ = make_split(dialogues, spec)
        second, _ = make_split(dialogues, spec)
        assert [d.id for d in first] == [d.id for d in second]
        other, _ = make_split(
            dialogues, SplitSpec(mode="multi_domain_few_shot", fraction=0.1, seed=8)
        )
        assert {d.id for d in other} != {d.id for d in first}

    def test_fraction_floor_with_minimum_one(self, ontology):
        dialogues = make_corpus(synthetic_corpus_dicts(50, seed=2), ontology)
        train, _ = make_split(
            dialogues, SplitSpec(mode="multi_domain_few_shot", fraction=0.1, seed=7)
        )
        assert len(train) == 5  # floor(0.1 * 50)
        tiny, _ = make_split(
            dialogues, SplitSpec(mode="multi_domain_few_shot", fraction=0.001, seed=7)
        )
        assert len(tiny) == 1  # floor would be 0; the minimum kicks in

    def test_nested_prefix_fractions(self, ontology):
        dialogues = make_corpus(synthetic_corpus_dicts(60, seed=9), ontology)
        picks = {}
        for fraction in (0.01, 0.05, 0.10):
            train, _ = make_split(
                dialogues,
                SplitSpec(mode="multi_domain_few_shot", fraction=fraction, seed=3),
            )
            picks[fraction] = {d.id for d in train}
        assert picks[0.01] <= picks[0.05] <= picks[0.10]

    def test_cross_domain_adds_target_sample(self, ontology):
        raw = synthetic_corpus_dicts(60, seed=4)
        dialogues = make_corpus(raw, ontology)
        target_pool = [d for d in dialogues if "train" in d.domains]
        spec = SplitSpec(mode="cross_domain_few_shot", target_domain="train",
                         fraction=0.2, seed=1)
        train, info = make_split(dialogues, spec)
        sampled = [d for d in train if "train" in d.domains]
        assert len(sampled) == max(1, int(0.2 * len(target_pool)))
        assert set(info.sampled_ids) == {d.id for d in sampled}
        non_target = [d for d in dialogues if "train" not in d.domains]
        assert {d.id for d in train} >= {d.id for d in non_target}

    def test_full_shot_keeps_everything(self, ontology):
        dialogues = make_corpus(synthetic_corpus_dicts(12, seed=6), ontology)
        train, info = make_split(dialogues, SplitSpec(mode="full_shot"))
        assert [d.id for d in train] == [d.id for d in dialogues]
        assert info.heldout_ids == ()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mode": "zero_shot"},  # missing target
            {"mode": "full_shot", "target_domain": "hotel"},  # forbidden target
            {"mode": "multi_domain_few_shot", "fraction": 1.0},  # needs < 1
            {"mode": "multi_domain_few_shot", "fraction": 0.0},  # out of range
            {"mode": "nonsense"},
        ],
    )
    def test_invalid_specs(self, kwargs):
        with pytest.raises(SplitError):
            SplitSpec(**kwargs)


class TestEnumerateQueries:
    @staticmethod
    def _three_turns():
        return [{
            "id": "d1",
            "turns": [
                {"system": "" if t == 0 else f"s{t}", "user": f"u{t}", "state": {}}
                for t in range(3)
            ],
        }]

    def test_counts_without_filter(self, ontology):
        dialogues = make_corpus(self._three_turns(), ontology)
        queries = enumerate_queries(dialogues, ontology)
        assert len(queries) == 3 * 6

    def test_domain_filter_restricts_slots(self, ontology):
        dialogues = make_corpus(self._three_turns(), ontology)
        queries = enumerate_queries(dialogues, ontology, domain_filter="train")
        assert len(queries) == 3 * 2
        assert all(slot.domain == "train" for _, _, slot in queries)

    def test_empty_corpus(self, ontology):
        assert enumerate_queries([], ontology) == []
