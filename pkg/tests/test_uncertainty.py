import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp_special

from speechadapt.phonemes import Lexicon, LexiconEntry, PhonemeInventory
from speechadapt.recognizer import (
    AdaptiveModel,
    HypothesisSet,
    Utterance,
    UtteranceSource,
    ensemble_pass,
    update_from_correction,
)
from speechadapt.uncertainty import (
    Band,
    annotate,
    band_of,
    digamma,
    expected_row_entropy,
    export_difficulty_csv,
    normalized_entropy,
    phoneme_difficulty_score,
    phoneme_mutual_information,
    slot_distribution,
)


def hset(rows, coherent=0, M=None):
    return HypothesisSet(
        hypotheses=tuple(tuple(r) for r in rows), coherent=coherent, M=M or len(rows)
    )


class TestDigamma:
    def test_against_scipy(self):
        xs = np.concatenate(
            [np.geomspace(1e-6, 1.0, 200), np.linspace(1.0, 50.0, 200), [1e3, 1e6, 1e9]]
        )
        for x in xs:
            assert digamma(float(x)) == pytest.approx(
                float(sp_special.digamma(x)), rel=1e-12, abs=1e-10
            )

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            digamma(0.0)


class TestSlotDistribution:
    def test_point_mass(self):
        hs = hset([["Enge"]] * 10)
        assert slot_distribution(hs, 0).mass == {"Enge": 1.0}

    def test_frequencies(self):
        hs = hset([["Pelikan"]] * 8 + [["Pylikan"]] * 2)
        assert slot_distribution(hs, 0).mass == {"Pelikan": 0.8, "Pylikan": 0.2}

    def test_even_split(self):
        hs = hset([["x"], ["y"]])
        assert slot_distribution(hs, 0).mass == {"x": 0.5, "y": 0.5}

    def test_excludes_appended_coherent(self):
        # 3 sampled passes plus a distinct appended coherent hypothesis:
        # masses are over the samples only and still sum to 1.
        hs = hset([["x"], ["x"], ["y"], ["z"]], coherent=3, M=3)
        mass = slot_distribution(hs, 0).mass
        assert mass == {"x": pytest.approx(2 / 3), "y": pytest.approx(1 / 3)}


class TestNormalizedEntropy:
    def test_point_mass_is_zero(self):
        hs = hset([["w"]] * 10)
        assert normalized_entropy(slot_distribution(hs, 0), 10) == 0.0

    def test_uniform_is_one(self):
        hs = hset([[f"w{i}"] for i in range(10)])
        got = normalized_entropy(slot_distribution(hs, 0), 10)
        assert got == pytest.approx(1.0, abs=1e-12) and got <= 1.0

    def test_eight_two_split(self):
        hs = hset([["a"]] * 8 + [["b"]] * 2)
        got = normalized_entropy(slot_distribution(hs, 0), 10)
        want = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2)) / math.log(10)
        assert got == pytest.approx(want, abs=1e-12)
        assert got == pytest.approx(0.21733, abs=1e-5)

    def test_band_threshold_rationale(self):
        # 9-vs-1 at M=10 stays Low; 8-vs-2 lands in Medium.
        nine_one = hset([["a"]] * 9 + [["b"]])
        eight_two = hset([["a"]] * 8 + [["b"]] * 2)
        u91 = normalized_entropy(slot_distribution(nine_one, 0), 10)
        u82 = normalized_entropy(slot_distribution(eight_two, 0), 10)
        assert band_of(u91) is Band.LOW
        assert band_of(u82) is Band.MEDIUM

    @given(st.lists(st.integers(min_value=0, max_value=10), min_size=1, max_size=10))
    @settings(max_examples=200, deadline=None)
    def test_bounds(self, counts):
        total = sum(counts)
        if total == 0:
            return
        rows = []
        for i, c in enumerate(counts):
            rows += [[f"w{i}"]] * c
        hs = hset(rows, M=total) if total >= 1 else None
        dist = slot_distribution(hs, 0)
        u = normalized_entropy(dist, max(total, 2))
        assert 0.0 <= u <= 1.0


class TestRowEntropyAndMi:
    def test_symmetric_pair(self):
        assert expected_row_entropy([1.0, 1.0]) == pytest.approx(0.5, abs=1e-9)

    def test_large_counts_reach_mean_entropy(self):
        assert expected_row_entropy([1e9, 1e9]) == pytest.approx(math.log(2), abs=1e-3)

    def test_point_mass_limit(self):
        assert expected_row_entropy([1e9, 1e-9]) == pytest.approx(0.0, abs=1e-6)

    def test_mi_symmetric_pair(self):
        assert phoneme_mutual_information([1.0, 1.0]) == pytest.approx(
            math.log(2) - 0.5, abs=1e-12
        )
        assert phoneme_mutual_information([1.0, 1.0]) == pytest.approx(0.19315, abs=1e-5)

    def test_mi_vanishes_with_data(self):
        assert phoneme_mutual_information([1e6, 1e6]) < 1e-3

    def test_mi_near_point_mass(self):
        for c in (0.5, 3.0, 1e4):
            assert phoneme_mutual_information([c, c * 1e-9]) == pytest.approx(0.0, abs=1e-6)

    @given(
        st.lists(
            st.floats(min_value=1e-3, max_value=1e6, allow_nan=False),
            min_size=2,
            max_size=12,
        )
    )
    @settings(max_examples=300, deadline=None)
    def test_mi_non_negative(self, row):
        assert phoneme_mutual_information(row) >= 0.0

    def test_closed_form_matches_monte_carlo(self):
        rng = np.random.default_rng(77)
        for row in ([1.0, 1.0], [0.3, 2.0, 5.0], [4.0, 4.0, 4.0, 4.0]):
            samples = rng.dirichlet(row, size=50_000)
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.where(samples > 0, np.log(samples), 0.0)
            entropies = -np.sum(samples * logs, axis=1)
            se = entropies.std(ddof=1) / math.sqrt(len(entropies))
            assert abs(expected_row_entropy(row) - entropies.mean()) < 3 * se

    def test_epistemic_decay(self):
        # MI shrinks as evidence accumulates, below 0.01 nats by 1000 counts.
        true_row = np.array([0.2, 0.5, 0.3])
        for seed in range(20):
            rng = np.random.default_rng(seed)
            alpha = np.array([5.0, 0.1, 0.1])
            draws = rng.choice(3, size=1000, p=true_row)
            mi_at = {}
            for n, q in enumerate(draws, start=1):
                alpha[q] += 1.0
                if n in (100, 1000):
                    mi_at[n] = phoneme_mutual_information(alpha)
            assert mi_at[1000] < 0.01
            assert mi_at[1000] < mi_at[100]


def make_transcription(inv, lex, model, observed, nonce=0):
    utt = Utterance("u", (), tuple(observed), UtteranceSource.SIMULATED)
    hs = ensemble_pass(utt, model, lex, M=10, nonce=nonce)
    return utt, hs


class TestAnnotate:
    @pytest.fixture
    def inv(self):
        return PhonemeInventory(["a", "b", "p"])

    @pytest.fixture
    def lex(self, inv):
        return Lexicon(
            inv,
            [
                LexiconEntry("bab", ("b", "a", "b")),
                LexiconEntry("pap", ("p", "a", "p")),
                LexiconEntry("papa", ("p", "a", "p", "a")),
                LexiconEntry("ab", ("a", "b")),
            ],
        )

    def test_confident_transcript_all_low(self, inv, lex):
        alpha = np.full((3, 3), 1e-3)
        np.fill_diagonal(alpha, 1e7)
        model = AdaptiveModel(inv, alpha)
        utt, hs = make_transcription(inv, lex, model, [("b", "a", "b"), ("a", "b")])
        transcript = annotate(hs, model, lex, utt)
        assert [s.band for s in transcript.slots] == [Band.LOW, Band.LOW]
        assert all(s.alternatives is None for s in transcript.slots)
        assert tuple(s.word for s in transcript.slots) == hs.coherent_words

    def test_ambiguous_slot_flagged_with_alternatives(self, inv, lex):
        # Three plausible words compete for the first slot under a weak
        # posterior; the second slot is clean. Nonce 3 gives a 3-way split.
        model = AdaptiveModel(inv, np.ones((3, 3)))
        utt, hs = make_transcription(
            inv, lex, model, [("p", "a", "p"), ("a", "b")], nonce=3
        )
        transcript = annotate(hs, model, lex, utt, k=3)
        assert [s.band for s in transcript.slots] == [Band.HIGH, Band.LOW]
        flagged = transcript.slots[0]
        assert flagged.alternatives and len(flagged.alternatives) == 3
        assert flagged.alternatives[0] == flagged.word
        assert transcript.slots[1].alternatives is None

    def test_degenerate_thresholds_flag_everything(self, inv, lex):
        model = AdaptiveModel.fresh(inv)
        utt, hs = make_transcription(inv, lex, model, [("b", "a", "b")])
        transcript = annotate(hs, model, lex, utt, thresholds=(0.0, 0.0))
        assert all(s.band is Band.HIGH for s in transcript.slots)
        assert all(s.alternatives for s in transcript.slots)

    def test_payload_round_trip(self, inv, lex):
        model = AdaptiveModel.fresh(inv)
        utt, hs = make_transcription(inv, lex, model, [("p", "a", "p")])
        transcript = annotate(hs, model, lex, utt)
        from speechadapt.uncertainty import AnnotatedTranscript

        assert AnnotatedTranscript.from_payload(transcript.to_payload()) == transcript


class TestDifficulty:
    def test_mastered_phoneme_scores_zero(self):
        inv = PhonemeInventory(["a", "b"])
        alpha = np.array([[1e9, 1e-3], [1e-3, 1e9]])
        table = phoneme_difficulty_score(AdaptiveModel(inv, alpha))
        assert table["a"].phd_score == pytest.approx(0.0, abs=1e-6)

    def test_fresh_prior_values(self):
        inv = PhonemeInventory(["a", "b"])
        model = AdaptiveModel.fresh(inv)
        table = phoneme_difficulty_score(model)
        row = np.array([5.0, 0.1])
        want_error = 0.1 / 5.1
        # Independent oracle: scipy digamma for the closed form.
        total = row.sum()
        e_h = float(
            sp_special.digamma(total + 1)
            - np.sum((row / total) * sp_special.digamma(row + 1))
        )
        mean = row / total
        want_mi = float(-(mean * np.log(mean)).sum()) - e_h
        entry = table["a"]
        assert entry.error_rate == pytest.approx(want_error, abs=1e-12)
        assert entry.epistemic_mi == pytest.approx(want_mi, abs=1e-9)
        assert entry.phd_score == pytest.approx(want_error + want_mi, abs=1e-9)

    def test_untrained_scores_higher(self):
        inv = PhonemeInventory(["a", "b"])
        lex = Lexicon(inv, [LexiconEntry("a", ("a",)), LexiconEntry("b", ("b",))])
        model = AdaptiveModel.fresh(inv)
        for _ in range(200):
            model = update_from_correction(model, "a", ("a",), lex)
        table = phoneme_difficulty_score(model)
        assert table["b"].phd_score > table["a"].phd_score

    def test_csv_export(self):
        inv = PhonemeInventory(["a", "b"])
        model = AdaptiveModel.fresh(inv)
        csv = export_difficulty_csv(phoneme_difficulty_score(model))
        lines = csv.strip().split("\n")
        assert lines[0] == "phoneme,error_rate,epistemic_mi,phd_score"
        assert len(lines) == 3
        assert export_difficulty_csv(phoneme_difficulty_score(model)) == csv
