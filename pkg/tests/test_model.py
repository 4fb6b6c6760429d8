import random

import pytest

from freetok.model import ModelFormatError, NGramModel, compress, load, merge


def brute_force_counts(lines, max_n, mode="chars"):
    """Independent counter: enumerate every position with explicit slicing."""
    grams = {n: {} for n in range(1, max_n + 1)}
    fwd = {n: {} for n in range(1, max_n + 1)}
    bwd = {n: {} for n in range(1, max_n + 1)}
    for line in lines:
        for n in range(1, max_n + 1):
            ulen = n if mode == "grams" else 1
            for i in range(len(line)):
                g = line[i:i + n]
                if len(g) != n:
                    continue
                grams[n][g] = grams[n].get(g, 0) + 1
                after = line[i + n:i + n + ulen]
                if len(after) == ulen:
                    fwd[n].setdefault(g, {})[after] = fwd[n].get(g, {}).get(after, 0) + 1
                before = line[max(0, i - ulen):i]
                if len(before) == ulen:
                    bwd[n].setdefault(g, {})[before] = bwd[n].get(g, {}).get(before, 0) + 1
    return grams, fwd, bwd


class TestTrain:
    def test_tiny_unigram_counts(self, tiny_model):
        assert tiny_model.gram_counts[1] == {"a": 3, "b": 2, " ": 2, "c": 1}

    def test_tiny_forward(self, tiny_model):
        assert tiny_model.fwd[1] == {"a": {"b": 2, "c": 1}, "b": {" ": 2}, " ": {"a": 2}}
        assert "c" not in tiny_model.fwd[1]  # line end

    def test_tiny_backward(self, tiny_model):
        assert tiny_model.bwd[1] == {"b": {"a": 2}, " ": {"b": 2},
                                     "a": {" ": 2}, "c": {"a": 1}}

    def test_tiny_bigrams(self, tiny_model2):
        assert tiny_model2.gram_counts[2] == {"ab": 2, "b ": 2, " a": 2, "ac": 1}
        assert tiny_model2.fwd[2] == {"ab": {" ": 2}, "b ": {"a": 2}, " a": {"b": 1, "c": 1}}

    def test_grams_mode(self):
        m = NGramModel(max_n=2, mode="grams").train(["abcd"])
        # Neighbors are the non-overlapping adjacent bigrams.
        assert m.fwd[2] == {"ab": {"cd": 1}}
        assert m.bwd[2] == {"cd": {"ab": 1}}
        assert m.fwd[1] == {"a": {"b": 1}, "b": {"c": 1}, "c": {"d": 1}}

    def test_empty_lines_contribute_nothing(self):
        assert NGramModel(max_n=2).train(["", ""]) == NGramModel(max_n=2)

    def test_matches_brute_force(self):
        rng = random.Random(11)
        lines = ["".join(rng.choices("abcde", k=rng.randint(0, 20))) for _ in range(30)]
        model = NGramModel(max_n=3).train(lines)
        grams, fwd, bwd = brute_force_counts(lines, 3)
        assert model.gram_counts == grams
        assert model.fwd == fwd
        assert model.bwd == bwd

    def test_grams_mode_matches_brute_force(self):
        rng = random.Random(12)
        lines = ["".join(rng.choices("abc", k=rng.randint(0, 15))) for _ in range(30)]
        model = NGramModel(max_n=3, mode="grams").train(lines)
        grams, fwd, bwd = brute_force_counts(lines, 3, mode="grams")
        assert (model.gram_counts, model.fwd, model.bwd) == (grams, fwd, bwd)

    def test_incremental_additivity(self):
        rng = random.Random(13)
        a = ["".join(rng.choices("xy z", k=10)) for _ in range(10)]
        b = ["".join(rng.choices("xy z", k=10)) for _ in range(10)]
        incremental = NGramModel(max_n=2).train(a).train(b)
        assert incremental == NGramModel(max_n=2).train(a + b)

    def test_forward_totals_bounded_by_gram_count(self, tiny_model2):
        for n in (1, 2):
            for g, tmap in tiny_model2.fwd[n].items():
                assert sum(tmap.values()) <= tiny_model2.gram_counts[n][g]

    def test_rank1_symmetry(self):
        rng = random.Random(14)
        model = NGramModel(max_n=1).train(
            "".join(rng.choices("pq r", k=25)) for _ in range(20))
        for g, tmap in model.fwd[1].items():
            for s, c in tmap.items():
                assert model.bwd[1][s][g] == c


class TestMerge:
    def test_equals_concatenated_training(self):
        a = NGramModel(max_n=1).train(["ab"])
        b = NGramModel(max_n=1).train(["ab"])
        assert merge(a, b) == NGramModel(max_n=1).train(["ab", "ab"])

    def test_identity(self, tiny_model):
        assert merge(tiny_model, NGramModel(max_n=1)) == tiny_model

    def test_shards(self):
        merged = merge(NGramModel(max_n=2).train(["ab ab"]),
                       NGramModel(max_n=2).train(["ac"]))
        assert merged == NGramModel(max_n=2).train(["ab ab", "ac"])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            merge(NGramModel(max_n=1), NGramModel(max_n=2))
        with pytest.raises(ValueError):
            merge(NGramModel(max_n=1, mode="chars"), NGramModel(max_n=1, mode="grams"))

    def test_does_not_mutate_inputs(self, tiny_model):
        snapshot = tiny_model.copy()
        merge(tiny_model, tiny_model)
        assert tiny_model == snapshot


class TestCompress:
    def test_zero_threshold_unchanged(self, tiny_model):
        assert compress(tiny_model, 0.0) == tiny_model

    def test_prunes_weak_transition_and_gram(self, tiny_model):
        # At 0.6: gram cutoff 0.6*3 = 1.8 removes c (count 1); in fwd[1] of a
        # the cutoff is 0.6*2 = 1.2, removing a->c.  TF+ of a drops 2 -> 1.
        out = compress(tiny_model, 0.6)
        assert out.gram_counts[1] == {"a": 3, "b": 2, " ": 2}
        assert out.fwd[1]["a"] == {"b": 2}
        assert "c" not in out.bwd[1]
        assert out.count_params() == 9

    def test_small_threshold_keeps_everything(self, tiny_model):
        # At 0.3 the gram cutoff is 0.9 and every count (min 1) survives;
        # transition cutoffs are at most 0.6.
        assert compress(tiny_model, 0.3) == tiny_model

    def test_threshold_range(self, tiny_model):
        with pytest.raises(ValueError):
            compress(tiny_model, -0.1)
        with pytest.raises(ValueError):
            compress(tiny_model, 1.5)

    def test_params_never_grow(self):
        rng = random.Random(15)
        model = NGramModel(max_n=2).train(
            "".join(rng.choices("abcd ", k=30)) for _ in range(40))
        before = model.count_params()
        for t in (0.0, 0.001, 0.1, 0.5, 1.0):
            assert compress(model, t).count_params() <= before

    def test_input_not_mutated(self, tiny_model):
        snapshot = tiny_model.copy()
        compress(tiny_model, 0.9)
        assert tiny_model == snapshot


class TestCountParams:
    def test_empty(self):
        assert NGramModel(max_n=3).count_params() == 0

    def test_tiny(self, tiny_model):
        # 4 gram entries + 4 forward transition entries + 4 backward entries.
        assert tiny_model.count_params() == 12

    def test_matches_recount(self):
        rng = random.Random(16)
        model = NGramModel(max_n=3).train(
            "".join(rng.choices("abc ", k=25)) for _ in range(30))
        expected = 0
        for n in (1, 2, 3):
            expected += len(model.gram_counts[n])
            expected += sum(len(t) for t in model.fwd[n].values())
            expected += sum(len(t) for t in model.bwd[n].values())
        assert model.count_params() == expected


class TestSaveLoad:
    def test_round_trip(self, tiny_model2, tmp_path):
        path = tmp_path / "m.ftok"
        tiny_model2.save(path)
        assert load(path) == tiny_model2

    def test_gzip_round_trip(self, tiny_model, tmp_path):
        path = tmp_path / "m.ftok.gz"
        tiny_model.save(path)
        assert load(path) == tiny_model

    def test_header_parse(self, tmp_path):
        path = tmp_path / "m.ftok"
        path.write_text("FTOK\t1\tgrams\t3\n", encoding="utf-8")
        model = load(path)
        assert model.mode == "grams" and model.max_n == 3

    def test_truncated_file(self, tiny_model, tmp_path):
        path = tmp_path / "m.ftok"
        tiny_model.save(path)
        data = path.read_text(encoding="utf-8")
        path.write_text(data[:len(data) // 2 + 1], encoding="utf-8")
        with pytest.raises(ModelFormatError):
            load(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "m.ftok"
        path.write_text("FTOK\t9\tchars\t1\n", encoding="utf-8")
        with pytest.raises(ModelFormatError) as exc:
            load(path)
        assert "1" in str(exc.value) and "9" in str(exc.value)

    def test_not_a_model(self, tmp_path):
        path = tmp_path / "m.ftok"
        path.write_text("hello\n", encoding="utf-8")
        with pytest.raises(ModelFormatError):
            load(path)

    def test_canonical_output(self, tmp_path):
        # Same counts reached in different orders serialize identically.
        a = NGramModel(max_n=2).train(["xy zx", "q"])
        b = NGramModel(max_n=2).train(["q", "xy zx"])
        pa, pb = tmp_path / "a.ftok", tmp_path / "b.ftok"
        a.save(pa)
        b.save(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_escaped_symbols(self, tmp_path):
        model = NGramModel(max_n=2).train(["a\tb\\c"])
        path = tmp_path / "m.ftok"
        model.save(path)
        assert load(path) == model

    def test_random_round_trips(self, tmp_path):
        rng = random.Random(17)
        for i in range(10):
            lines = ["".join(rng.choices("ab\t\\ 字", k=rng.randint(0, 20)))
                     for _ in range(10)]
            model = NGramModel(max_n=rng.randint(1, 3)).train(lines)
            path = tmp_path / f"m{i}.ftok"
            model.save(path)
            assert load(path) == model
