"""Corpus loading, re-splitting, word counting and length bucketing."""

import pytest
from hypothesis import given, strategies as st

from tweetinform.corpus import (
    ClassLabel,
    CorpusError,
    LabeledCorpus,
    LengthBucket,
    TweetRecord,
    bucket_of,
    load_corpus,
    resplit,
    save_corpus,
    word_count,
)


def write(tmp_path, text, name="data.tsv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCorpus:
    def test_two_row_file(self, tmp_path):
        path = write(tmp_path, "1\thello world\tINFORMATIVE\n2\tbye\tUNINFORMATIVE\n")
        corpus = load_corpus(path, has_labels=True, expect_header=False)
        assert len(corpus) == 2
        assert [r.label for r in corpus] == [ClassLabel.INFORMATIVE, ClassLabel.UNINFORMATIVE]
        assert [r.id for r in corpus] == ["1", "2"]

    def test_header_row_consumed(self, tmp_path):
        path = write(tmp_path, "Id\tText\tLabel\n1\thi there\tINFORMATIVE\n")
        corpus = load_corpus(path)
        assert len(corpus) == 1

    def test_missing_column_reports_line(self, tmp_path):
        path = write(tmp_path, "3\ttext only\n")
        with pytest.raises(CorpusError, match="line 1"):
            load_corpus(path, has_labels=True, expect_header=False)

    def test_unknown_label(self, tmp_path):
        path = write(tmp_path, "1\thello\tMAYBE\n")
        with pytest.raises(CorpusError, match="unknown label"):
            load_corpus(path, has_labels=True, expect_header=False)

    def test_duplicate_id(self, tmp_path):
        path = write(tmp_path, "1\ta b\tINFORMATIVE\n1\tc d\tUNINFORMATIVE\n")
        with pytest.raises(CorpusError, match="duplicate id"):
            load_corpus(path, has_labels=True, expect_header=False)

    def test_internal_tab_rejected(self, tmp_path):
        path = write(tmp_path, "1\thello\tworld\tINFORMATIVE\n")
        with pytest.raises(CorpusError, match="columns"):
            load_corpus(path, has_labels=True, expect_header=False)

    def test_unlabeled_file(self, tmp_path):
        path = write(tmp_path, "Id\tText\na\tsome tweet\n")
        corpus = load_corpus(path, has_labels=False)
        assert corpus.split_tag == "test"
        assert corpus.records[0].label is None

    def test_round_trip(self, tmp_path):
        records = (
            TweetRecord("a", "stay home", ClassLabel.INFORMATIVE),
            TweetRecord("b", "save lives", ClassLabel.UNINFORMATIVE),
        )
        corpus = LabeledCorpus(records, "train")
        path = tmp_path / "out.tsv"
        save_corpus(corpus, path)
        reloaded = load_corpus(path)
        assert reloaded.records == corpus.records


class TestCorpusValidation:
    def test_train_split_requires_labels(self):
        with pytest.raises(CorpusError, match="unlabeled"):
            LabeledCorpus((TweetRecord("a", "hi there"),), "train")

    def test_empty_text_rejected(self):
        with pytest.raises(CorpusError, match="empty text"):
            LabeledCorpus((TweetRecord("a", "   ", ClassLabel.INFORMATIVE),), "train")


class TestResplit:
    @staticmethod
    def corpora(n_train, n_valid):
        train = LabeledCorpus(
            tuple(
                TweetRecord(f"t{i}", f"tweet number {i}", ClassLabel(i % 2))
                for i in range(n_train)
            ),
            "train",
        )
        valid = LabeledCorpus(
            tuple(
                TweetRecord(f"v{i}", f"valid number {i}", ClassLabel(i % 2))
                for i in range(n_valid)
            ),
            "validation",
        )
        return train, valid

    def test_ninety_ten_sizes(self):
        train, valid = self.corpora(70, 10)
        new_train, new_valid = resplit(train, valid, seed=3)
        assert (len(new_train), len(new_valid)) == (72, 8)

    def test_small_input_rounding(self):
        train, valid = self.corpora(9, 1)
        new_train, new_valid = resplit(train, valid, seed=99)
        assert (len(new_train), len(new_valid)) == (9, 1)

    def test_multiset_preserved(self):
        train, valid = self.corpora(23, 7)
        new_train, new_valid = resplit(train, valid, seed=11)
        before = sorted(r.id for r in list(train) + list(valid))
        after = sorted(r.id for r in list(new_train) + list(new_valid))
        assert before == after

    def test_deterministic_in_seed(self):
        train, valid = self.corpora(40, 10)
        first = resplit(train, valid, seed=5)
        second = resplit(train, valid, seed=5)
        assert first[0].records == second[0].records
        assert first[1].records == second[1].records
        different = resplit(train, valid, seed=6)
        assert different[0].records != first[0].records

    def test_too_small_errors(self):
        train, valid = self.corpora(5, 4)
        with pytest.raises(CorpusError, match="at least 10"):
            resplit(train, valid, seed=0)


class TestWordCountAndBuckets:
    def test_word_count_examples(self):
        assert word_count("stay home save lives") == 4
        assert word_count("") == 0
        assert word_count("  spaced   out  ") == 2

    @pytest.mark.parametrize(
        "count,bucket",
        [
            (0, LengthBucket.SHORT),
            (22, LengthBucket.SHORT),
            (23, LengthBucket.MEDIUM),
            (44, LengthBucket.MEDIUM),
            (45, LengthBucket.LONG),
            (1000, LengthBucket.LONG),
        ],
    )
    def test_boundaries(self, count, bucket):
        assert bucket_of(count) == bucket

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            bucket_of(-1)

    @given(st.integers(min_value=0, max_value=10_000))
    def test_partition_property(self, count):
        matches = [b for b in LengthBucket if bucket_of(count) == b]
        assert len(matches) == 1

    def test_23_word_tweet_is_medium(self):
        tweet = " ".join(["word"] * 23)
        assert bucket_of(word_count(tweet)) == LengthBucket.MEDIUM
