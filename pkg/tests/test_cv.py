from dataclasses import replace

import pytest

from carriertag.cv import (
    ExperimentConfig,
    FoldSplit,
    corpus_iaa,
    load_experiment_config,
    logo_splits,
    report_text,
    report_tsv,
    run_experiment,
    run_fold,
)

NARRATORS = [f"p{i:02d}" for i in range(11)]

FAST_NN = ExperimentConfig(
    model="nn",
    folds=3,
    seed=0,
    epochs=1,
    lstm_hidden=8,
    lstm_layers=1,
    fc_units=8,
    fc_layers=1,
    dropout_rate=0.0,
)

FAST_CRF = ExperimentConfig(model="crf", folds=3, seed=0, crf_iterations=20)


class TestLogoSplits:
    def test_test_groups_partition_narrators(self):
        splits = logo_splits(NARRATORS, k=4, seed=5)
        seen = [n for s in splits for n in s.test_narrators]
        assert sorted(seen) == sorted(NARRATORS)
        assert len(seen) == len(set(seen))

    def test_folds_are_disjoint_and_cover(self):
        for split in logo_splits(NARRATORS, k=4, seed=5):
            train = set(split.train_narrators)
            dev = set(split.dev_narrators)
            test = set(split.test_narrators)
            assert not train & dev
            assert not train & test
            assert not dev & test
            assert train | dev | test == set(NARRATORS)
            assert dev and test and train

    def test_dev_group_is_next_test_group(self):
        splits = logo_splits(NARRATORS, k=4, seed=5)
        for i, split in enumerate(splits):
            assert split.dev_narrators == splits[(i + 1) % len(splits)].test_narrators

    def test_duplicate_ids_collapse(self):
        splits = logo_splits(["a", "b", "c", "a", "b"], k=3, seed=0)
        assert sorted(n for s in splits for n in s.test_narrators) == ["a", "b", "c"]

    def test_same_seed_is_deterministic(self):
        assert logo_splits(NARRATORS, k=4, seed=9) == logo_splits(NARRATORS, k=4, seed=9)

    def test_different_seed_changes_grouping(self):
        assert logo_splits(NARRATORS, k=4, seed=0) != logo_splits(NARRATORS, k=4, seed=1)

    def test_too_few_folds(self):
        with pytest.raises(ValueError, match="at least 3"):
            logo_splits(NARRATORS, k=2)

    def test_more_folds_than_narrators(self):
        with pytest.raises(ValueError, match="cannot make 4 folds"):
            logo_splits(["a", "b", "c"], k=4)


class TestExperimentConfig:
    def test_defaults_validate(self):
        ExperimentConfig().validate()

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="model"):
            replace(ExperimentConfig(), model="svm").validate()

    def test_carrier_segmentation_cannot_score(self):
        with pytest.raises(ValueError, match="leak"):
            replace(ExperimentConfig(), test_segmentation="sentcarr").validate()

    def test_carrier_segmentation_ok_for_training(self):
        replace(ExperimentConfig(), train_segmentation="sentcarr").validate()

    def test_unknown_segmentation(self):
        with pytest.raises(ValueError, match="train_segmentation"):
            replace(ExperimentConfig(), train_segmentation="words").validate()

    def test_threshold_range(self):
        with pytest.raises(ValueError, match="threshold"):
            replace(ExperimentConfig(), threshold=0.0).validate()

    def test_run_experiment_validates_first(self, synth_small):
        bad = replace(FAST_CRF, test_segmentation="sentcarr")
        with pytest.raises(ValueError, match="leak"):
            run_experiment(synth_small.narratives, bad)


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# experiment\n"
            "model = crf\n"
            "folds=3\n"
            "crf_learning_rate = 0.05  # tuned\n"
            "strip_punct = false\n"
            "fine_tune_embeddings = 1\n",
            encoding="utf-8",
        )
        config = load_experiment_config(path)
        assert config.model == "crf"
        assert config.folds == 3
        assert config.crf_learning_rate == 0.05
        assert config.strip_punct is False
        assert config.fine_tune_embeddings is True
        assert config.epochs == ExperimentConfig().epochs

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("modle = crf\n", encoding="utf-8")
        with pytest.raises(ValueError, match="unknown key"):
            load_experiment_config(path)

    def test_bad_boolean(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("strip_punct = maybe\n", encoding="utf-8")
        with pytest.raises(ValueError, match="boolean"):
            load_experiment_config(path)

    def test_bare_line(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("folds\n", encoding="utf-8")
        with pytest.raises(ValueError, match="key=value"):
            load_experiment_config(path)


class TestRunExperiment:
    def test_neural_smoke(self, synth_small):
        result = run_experiment(
            synth_small.narratives,
            FAST_NN,
            embeddings=synth_small.embeddings,
            stopwords=synth_small.stopwords,
            lexicon=synth_small.lexicon,
        )
        assert len(result.folds) == 3
        tested = [n for fold in result.folds for n in fold.test_narrators]
        assert len(tested) == len(set(tested)) == 6
        for fold in result.folds:
            assert fold.n_test_tokens > 0
            assert fold.n_train_sequences > 0
            assert fold.n_reference_spans >= 0
            for value in (
                fold.token.precision_class_i,
                fold.token.recall_class_i,
                fold.token.f1_class_i,
                fold.token.f1_micro,
            ):
                assert 0.0 <= value <= 1.0
            assert sorted(fold.spans) == ["a", "b", "c", "d", "e"]
            for prf in fold.spans.values():
                assert 0.0 <= prf.f1 <= 1.0
        assert sorted(result.iaa) == ["a", "b", "c", "d", "e"]
        assert all(0.0 <= v <= 1.0 for v in result.iaa.values())

    def test_crf_smoke_and_determinism(self, synth_small):
        kwargs = dict(
            embeddings=None,
            stopwords=synth_small.stopwords,
            lexicon=synth_small.lexicon,
        )
        first = run_experiment(synth_small.narratives, FAST_CRF, **kwargs)
        second = run_experiment(synth_small.narratives, FAST_CRF, **kwargs)
        assert report_tsv(first) == report_tsv(second)
        assert report_text(first) == report_text(second)

    def test_parallel_folds_match_serial(self, synth_small):
        kwargs = dict(stopwords=synth_small.stopwords, lexicon=synth_small.lexicon)
        serial = run_experiment(synth_small.narratives, FAST_CRF, jobs=1, **kwargs)
        parallel = run_experiment(synth_small.narratives, FAST_CRF, jobs=2, **kwargs)
        assert report_tsv(serial) == report_tsv(parallel)

    def test_neural_needs_embeddings(self, synth_small):
        with pytest.raises(ValueError, match="embedding"):
            run_experiment(synth_small.narratives, FAST_NN, embeddings=None)

    def test_missing_narrator_fails_loudly(self, synth_small):
        ghost = FoldSplit(
            fold=0,
            train_narrators=("nobody",),
            dev_narrators=("nobody-else",),
            test_narrators=("third",),
        )
        with pytest.raises(ValueError, match="empty"):
            run_fold(ghost, synth_small.narratives, FAST_CRF, None, None, None)


@pytest.fixture(scope="module")
def result(synth_small):
    return run_experiment(
        synth_small.narratives,
        FAST_CRF,
        stopwords=synth_small.stopwords,
        lexicon=synth_small.lexicon,
    )


class TestReports:
    def test_tsv_shape(self, result):
        lines = report_tsv(result).splitlines()
        assert len(lines) == 1 + 3 + 2  # header, folds, mean, std
        header = lines[0].split("\t")
        assert header[:5] == ["fold", "test_narrators", "test_tokens", "pred_spans", "ref_spans"]
        assert "token_f1" in header
        assert "e_f1" in header
        width = len(header)
        for line in lines[1:]:
            assert len(line.split("\t")) == width
        first = dict(zip(header, lines[1].split("\t")))
        assert 0.0 <= float(first["token_f1"]) <= 1.0
        assert lines[-2].startswith("mean\t")
        assert lines[-1].startswith("std\t")

    def test_tsv_mean_matches_folds(self, result):
        lines = report_tsv(result).splitlines()
        header = lines[0].split("\t")
        col = header.index("token_f1")
        fold_values = [float(line.split("\t")[col]) for line in lines[1:4]]
        mean = float(lines[4].split("\t")[col])
        assert mean == pytest.approx(sum(fold_values) / 3, abs=5e-6)

    def test_text_summary(self, result):
        text = report_text(result)
        assert "model: crf" in text
        assert "mean(std)" in text
        assert "iaa" in text
        for name in "abcde":
            assert f"\n  {name} [" in text


class TestCorpusIaa:
    def test_keys_and_ranges(self, tiny_narratives):
        iaa = corpus_iaa(tiny_narratives)
        assert sorted(iaa) == ["a", "b", "c", "d", "e"]
        assert all(0.0 <= v <= 1.0 for v in iaa.values())

    def test_relaxation_never_hurts(self, tiny_narratives):
        iaa = corpus_iaa(tiny_narratives)
        assert iaa["d"] >= iaa["b"] - 1e-12
        assert iaa["d"] >= iaa["c"] - 1e-12
        assert iaa["e"] >= iaa["d"] - 1e-12

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            corpus_iaa([])
