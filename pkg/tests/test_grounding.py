from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from spanagree.grounding import (
    MissingAnnotationsKey,
    NoJsonFound,
    NotAList,
    RawAnnotation,
    extract_last_json_object,
    ground_annotations,
    parse_annotation_payload,
    split_reasoning,
    strip_reasoning_markup,
)


class TestStripReasoning:
    def test_single_balanced_pair(self):
        assert strip_reasoning_markup('<think>plan</think>{"annotations":[]}') == '{"annotations":[]}'

    def test_no_tags_unchanged(self):
        assert strip_reasoning_markup('{"annotations":[]}') == '{"annotations":[]}'

    def test_two_balanced_pairs(self):
        assert strip_reasoning_markup("<think>a</think>x<think>b</think>y") == "xy"

    def test_unbalanced_tail_preserved(self):
        assert strip_reasoning_markup("a<think>b</think>c<think>d") == "ac<think>d"

    def test_orphan_close_preserved(self):
        assert strip_reasoning_markup("a</think>b") == "a</think>b"

    def test_multiline_contents(self):
        assert strip_reasoning_markup("<think>line1\nline2</think>rest") == "rest"

    def test_split_reasoning_returns_removed_text(self):
        clean, reasoning = split_reasoning("<think>first</think>x<think>second</think>")
        assert clean == "x"
        assert reasoning == "first\nsecond"

    @given(
        st.lists(
            st.sampled_from(["<think>", "</think>", "text ", '{"a": 1}', "\n"]),
            max_size=12,
        )
    )
    def test_idempotent(self, tokens):
        raw = "".join(tokens)
        once = strip_reasoning_markup(raw)
        assert strip_reasoning_markup(once) == once


class TestExtractLastJson:
    def test_last_of_several_objects(self):
        assert extract_last_json_object('noise {"a":1} tail {"annotations":[]}') == {
            "annotations": []
        }

    def test_whole_input(self):
        assert extract_last_json_object('{"annotations":[]}') == {"annotations": []}

    def test_brace_inside_string_does_not_terminate(self):
        assert extract_last_json_object('{"a": "}" }') == {"a": "}"}

    def test_escaped_quote_inside_string(self):
        assert extract_last_json_object('{"a": "say \\"}\\" ok"}') == {"a": 'say "}" ok'}

    def test_nested_object_returns_top_level(self):
        assert extract_last_json_object('x {"a": {"b": 1}} y') == {"a": {"b": 1}}

    def test_invalid_outer_falls_back_to_inner(self):
        assert extract_last_json_object('say {oops {"a":1} }') == {"a": 1}

    def test_unterminated_then_valid(self):
        assert extract_last_json_object('{broken {"a": 2}') == {"a": 2}

    def test_no_object_raises(self):
        with pytest.raises(NoJsonFound):
            extract_last_json_object("nothing here [1, 2, 3]")


class TestParsePayload:
    def test_valid_item(self):
        raws, report = parse_annotation_payload(
            {"annotations": [{"reason": "r", "text": "t", "type": 2}]}, k=6
        )
        assert raws == [RawAnnotation("r", "t", 2)]
        assert report.grounded == 0 and report.dropped == 0

    def test_bad_category_dropped(self):
        raws, report = parse_annotation_payload(
            {"annotations": [{"reason": "r", "text": "t", "type": 9}]}, k=6
        )
        assert raws == []
        assert report.dropped_bad_category == 1

    def test_empty_list_is_valid(self):
        raws, report = parse_annotation_payload({"annotations": []}, k=6)
        assert raws == [] and report.dropped == 0

    def test_missing_reason_becomes_empty(self):
        raws, _ = parse_annotation_payload(
            {"annotations": [{"text": "t", "type": 0}]}, k=6
        )
        assert raws[0].reason == ""

    def test_annotation_type_alias(self):
        raws, _ = parse_annotation_payload(
            {"annotations": [{"reason": "", "text": "t", "annotation_type": 1}]}, k=6
        )
        assert raws[0].type == 1

    @pytest.mark.parametrize(
        "item",
        [
            {"reason": "r", "type": 0},                       # no text
            {"reason": "r", "text": "", "type": 0},           # empty surface
            {"reason": "r", "text": "t", "type": "0"},        # string type
            {"reason": "r", "text": "t", "type": True},       # bool type
            {"reason": 3, "text": "t", "type": 0},            # non-string reason
            "not an object",
        ],
    )
    def test_malformed_items_dropped(self, item):
        raws, report = parse_annotation_payload({"annotations": [item]}, k=6)
        assert raws == []
        assert report.dropped_malformed == 1

    def test_missing_annotations_key(self):
        with pytest.raises(MissingAnnotationsKey):
            parse_annotation_payload({"spans": []}, k=6)

    def test_non_object_payload(self):
        with pytest.raises(MissingAnnotationsKey):
            parse_annotation_payload([1, 2], k=6)

    def test_non_list_annotations(self):
        with pytest.raises(NotAList):
            parse_annotation_payload({"annotations": "nope"}, k=6)

    def test_counts_add_up(self):
        payload = {
            "annotations": [
                {"reason": "", "text": "ok", "type": 0},
                {"reason": "", "text": "bad", "type": 99},
                {"bogus": 1},
            ]
        }
        raws, report = parse_annotation_payload(payload, k=6)
        assert len(raws) + report.dropped == 3


def raw(text, category=0, reason=""):
    return RawAnnotation(reason, text, category)


class TestGroundAnnotations:
    def test_cursor_advances_past_first_match(self):
        spans, report = ground_annotations(
            [raw("cat"), raw("cat")], "the cat sat on the cat"
        )
        assert [(s.start, s.end) for s in spans] == [(4, 7), (19, 22)]
        assert report.grounded == 2

    def test_whole_string_match(self):
        spans, _ = ground_annotations([raw("abc")], "abc")
        assert [(s.start, s.end) for s in spans] == [(0, 3)]

    def test_absent_surface_dropped(self):
        spans, report = ground_annotations([raw("xyz")], "abc")
        assert spans == []
        assert report.dropped_unmatched == 1

    def test_wrap_around_when_cursor_past_occurrence(self):
        # second surface occurs only before the cursor
        spans, report = ground_annotations(
            [raw("world"), raw("hello")], "hello world"
        )
        assert [(s.start, s.end) for s in spans] == [(6, 11), (0, 5)]
        assert report.dropped == 0

    def test_case_insensitive_fallback_is_flagged(self):
        spans, report = ground_annotations([raw("the cat")], "The Cat sat")
        assert [(s.start, s.end) for s in spans] == [(0, 7)]
        assert ("", "the cat", "case-insensitive-match") in report.notes

    def test_exact_match_preferred_over_case_fold(self):
        spans, report = ground_annotations([raw("Cat")], "cat and Cat")
        assert spans[0].start == 8
        assert report.notes == []

    def test_grounded_spans_carry_surface_and_reason(self):
        spans, _ = ground_annotations([raw("cat", 2, "why")], "a cat")
        ann = spans[0]
        assert ann.surface == "cat" and ann.reason == "why" and ann.category == 2

    def test_unicode_offsets_are_scalar_positions(self):
        text = "größer und schöner"
        spans, _ = ground_annotations([raw("schöner")], text)
        assert text[spans[0].start : spans[0].end] == "schöner"

    @given(st.data())
    def test_round_trip_unique_surfaces(self, data):
        text = data.draw(
            st.text(alphabet="abcdefgh ", min_size=20, max_size=60), label="text"
        )
        n = data.draw(st.integers(1, 4), label="n")
        chosen = []
        surfaces = set()
        for i in range(n):
            start = data.draw(st.integers(0, len(text) - 2), label=f"start{i}")
            end = data.draw(st.integers(start + 1, len(text)), label=f"end{i}")
            surface = text[start:end]
            if text.count(surface) != 1 or surface in surfaces:
                continue
            surfaces.add(surface)
            chosen.append((start, end))
        chosen.sort()
        raws = [raw(text[s:e]) for s, e in chosen]
        spans, report = ground_annotations(raws, text)
        assert [(s.start, s.end) for s in spans] == chosen
        assert report.dropped == 0
