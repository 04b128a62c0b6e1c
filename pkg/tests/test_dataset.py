import json

import numpy as np
import pytest

from s2t.dataset import (SplitConfig, build_examples, compose_sentence,
                         count_glyph_clusters, generate_glyph, load_jsonl,
                         make_subjects, preprocess_text, save_jsonl,
                         split_subjects)


class TestPreprocess:
    def test_french_accents(self):
        assert preprocess_text("été", "fr") == "ete"

    def test_german_eszett(self):
        assert preprocess_text("groß", "de") == "gross"

    def test_plain_text_identity(self):
        assert preprocess_text("abc") == "abc"

    def test_whitespace_collapse_and_drops(self):
        assert preprocess_text("a  b\tc\n42!") == "a b c"

    def test_uppercase_accents(self):
        assert preprocess_text("École à Paris", "fr") == "Ecole a Paris"

    def test_total_on_arbitrary_input(self):
        assert preprocess_text("☃ß€", "de") == "ss"


class TestGenerateGlyph:
    def test_deterministic(self, subjects, bank):
        a = generate_glyph("a", subjects[0], 0, bank)
        b = generate_glyph("a", subjects[0], 0, bank)
        for s1, s2 in zip(a.strokes, b.strokes):
            np.testing.assert_array_equal(s1.xy, s2.xy)

    def test_occurrences_differ(self, subjects, bank):
        a = generate_glyph("a", subjects[0], 0, bank)
        b = generate_glyph("a", subjects[0], 1, bank)
        assert not np.array_equal(a.strokes[0].xy, b.strokes[0].xy)

    def test_subjects_differ(self, subjects, bank):
        a = generate_glyph("o", subjects[0], 0, bank)
        b = generate_glyph("o", subjects[1], 0, bank)
        assert not np.array_equal(a.strokes[0].xy, b.strokes[0].xy)

    def test_dotted_i_has_two_strokes(self, subjects, bank):
        assert len(generate_glyph("i", subjects[3], 0, bank).strokes) == 2

    def test_unknown_symbol(self, subjects, bank):
        with pytest.raises(ValueError, match="no glyph for symbol"):
            generate_glyph("@", subjects[0], 0, bank)


class TestCompose:
    def test_space_emits_nothing(self, neutral_subject, bank):
        one = compose_sentence("a", bank, neutral_subject)
        two = compose_sentence("a a", bank, neutral_subject)
        assert two.stroke_count() == 2 * one.stroke_count()

    def test_apostrophe_clusters_with_next_glyph(self, neutral_subject, bank):
        # 13 non-space glyphs, but ' hugs the following s: I|t|'s + 9 letters
        seq = compose_sentence("It's attention", bank, neutral_subject)
        assert count_glyph_clusters(seq) == 12

    def test_monotone_glyph_layout(self, neutral_subject, bank):
        seq = compose_sentence("attention", bank, neutral_subject)
        starts = []
        for _, lo, hi in seq.glyph_spans:
            xs = np.concatenate([seq.strokes[i].xy[:, 0] for i in range(lo, hi)])
            starts.append(xs.min())
        assert all(b > a for a, b in zip(starts, starts[1:]))

    def test_reference_stored_verbatim(self, subjects, bank):
        seq = compose_sentence("ab c", bank, subjects[0])
        assert seq.text == "ab c"

    def test_budget_error(self, subjects, bank):
        with pytest.raises(ValueError, match="sentence too long"):
            compose_sentence("aaaaaaaa", bank, subjects[0], max_strokes=4)

    def test_deterministic(self, subjects, bank):
        a = compose_sentence("test ok", bank, subjects[1])
        b = compose_sentence("test ok", bank, subjects[1])
        np.testing.assert_array_equal(a.points(), b.points())

    def test_timestamps_non_decreasing(self, subjects, bank):
        seq = compose_sentence("abc", bank, subjects[0])
        t = np.concatenate([s.t for s in seq.strokes])
        assert np.all(np.diff(t) > 0)


class TestSplits:
    def test_ten_subjects(self):
        subs = make_subjects(10, seed=1)
        tr, va, te = split_subjects(subs, SplitConfig(), seed=2)
        assert (len(tr), len(va), len(te)) == (6, 2, 2)

    def test_five_subjects_rounding(self):
        subs = make_subjects(5, seed=1)
        tr, va, te = split_subjects(subs, SplitConfig(), seed=2)
        assert (len(tr), len(va), len(te)) == (3, 1, 1)

    def test_deterministic_and_disjoint(self):
        subs = make_subjects(20, seed=3)
        a = split_subjects(subs, SplitConfig(), seed=4)
        b = split_subjects(subs, SplitConfig(), seed=4)
        assert [[s.subject_id for s in grp] for grp in a] == \
               [[s.subject_id for s in grp] for grp in b]
        ids = [s.subject_id for grp in a for s in grp]
        assert len(ids) == len(set(ids)) == 20

    def test_bad_fractions(self):
        with pytest.raises(ValueError, match="sum"):
            split_subjects(make_subjects(10, 0), SplitConfig(0.5, 0.2, 0.2), 0)


class TestJsonl:
    def test_round_trip(self, tmp_path, subjects, bank):
        texts = ["ab", "cd e", "hello"]
        examples = build_examples(texts, subjects[:4], bank, max_strokes=50,
                                  sentences_per_subject=3)
        path = tmp_path / "data.jsonl"
        save_jsonl(examples, path)
        loaded = load_jsonl(path)
        assert len(loaded) == len(examples)
        for a, b in zip(examples, loaded):
            assert a.text == b.text and a.subject_id == b.subject_id
            for s1, s2 in zip(a.strokes, b.strokes):
                np.testing.assert_array_equal(s1.xy, s2.xy)

    def test_truncated_line_names_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = json.dumps({"subject_id": "s", "text": "a", "strokes": [[[0, 0]]]})
        path.write_text("\n".join([good] * 6 + [good[: len(good) // 2]]) + "\n")
        with pytest.raises(ValueError, match="line 7"):
            load_jsonl(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_jsonl(path) == []

    def test_pipeline_byte_identical(self, tmp_path, bank):
        for run in ("one", "two"):
            subs = make_subjects(6, seed=11)
            tr, _, _ = split_subjects(subs, SplitConfig(), seed=11)
            ex = build_examples(["ab c", "de"], tr, bank, max_strokes=40,
                                sentences_per_subject=2)
            save_jsonl(ex, tmp_path / f"{run}.jsonl")
        assert (tmp_path / "one.jsonl").read_bytes() == \
               (tmp_path / "two.jsonl").read_bytes()
