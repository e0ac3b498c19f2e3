import httpx
import numpy as np
import pytest

from speechadapt.curriculum import (
    PromptPlan,
    SentenceTemplate,
    Strategy,
    TextGenerationClient,
    cold_start_plan,
    load_templates,
    rechain_sentences,
    score_words,
    select_next_prompts,
)
from speechadapt.errors import ColdStartIncomplete, NoFillableTemplate
from speechadapt.phonemes import Lexicon, LexiconEntry, PhonemeInventory, phonemes_of
from speechadapt.recognizer import AdaptiveModel
from speechadapt.uncertainty import DifficultyEntry


def difficulty_table(scores):
    return {
        p: DifficultyEntry(phoneme=p, error_rate=s, epistemic_mi=0.0, phd_score=s)
        for p, s in scores.items()
    }


class TestColdStartPlan:
    def test_toy_plan(self, toy_lexicon):
        plan = cold_start_plan(toy_lexicon, budget=10)
        assert plan.prompts == (("aba", "ac"),)
        assert plan.rationale == (("a", "b", "c"),)

    def test_budget_caps_word_count(self, toy_lexicon):
        plan = cold_start_plan(toy_lexicon, budget=500)
        assert len(plan.words) <= 500

    def test_budget_one(self, toy_lexicon):
        plan = cold_start_plan(toy_lexicon, budget=1)
        assert plan.prompts == (("aba",),)

    def test_chunking_preserves_order(self):
        inv = PhonemeInventory(list("abcdefghij"))
        entries = [
            LexiconEntry(f"w{i}", (inv.symbols[i], inv.symbols[(i + 1) % 10]))
            for i in range(10)
        ]
        lex = Lexicon(inv, entries)
        plan = cold_start_plan(lex, budget=100, chunk_size=3)
        flattened = [w for p in plan.prompts for w in p]
        report_words = [w for w in flattened]
        assert all(len(p) <= 3 for p in plan.prompts)
        assert len(set(report_words)) == len(report_words)


class TestScoreWords:
    def test_uniform_ties_lexicographic(self, toy_lexicon):
        table = difficulty_table({"a": 0.5, "b": 0.5, "c": 0.5})
        ranked = score_words(toy_lexicon, table)
        assert [w for w, _ in ranked] == ["aba", "ac", "bab"]

    def test_density_dominance(self):
        inv = PhonemeInventory(["a", "b", "c"])
        lex = Lexicon(
            inv,
            [LexiconEntry("bab", ("b", "a", "b")), LexiconEntry("aca", ("a", "c", "a"))],
        )
        table = difficulty_table({"a": 0.0, "b": 1.0, "c": 0.0})
        ranked = score_words(lex, table)
        assert ranked[0][0] == "bab" and ranked[0][1] > ranked[1][1]

    def test_mean_density_arithmetic(self):
        inv = PhonemeInventory(["a", "b", "c"])
        lex = Lexicon(inv, [LexiconEntry("bab", ("b", "a", "b"))])
        table = difficulty_table({"a": 0.2, "b": 0.4, "c": 0.0})
        ranked = score_words(lex, table)
        assert ranked[0][1] == pytest.approx(1 / 3, abs=1e-12)


@pytest.fixture
def sentence_inventory():
    return PhonemeInventory(list("abcdehilnopst"))


@pytest.fixture
def sentence_lexicon(sentence_inventory):
    def spell(word):
        return tuple(word)

    entries = [
        LexiconEntry("the", ("t", "e")),
        LexiconEntry("sees", ("s", "i", "s")),
        LexiconEntry("pelican", spell("pelican"), category="noun"),
        LexiconEntry("boat", spell("boat"), category="noun"),
        LexiconEntry("dish", ("d", "i", "s"), category="noun"),
        LexiconEntry("pond", ("p", "o", "n", "d"), category="noun"),
        LexiconEntry("salad", ("s", "a", "l", "a", "d"), category="noun"),
        LexiconEntry("пhat", ("h", "a", "t"), category="noun"),
    ]
    return Lexicon(sentence_inventory, entries)


class TestRechain:
    def test_basic_fill(self, sentence_lexicon):
        template = SentenceTemplate.parse("the <noun> sees the <noun>")
        ranked = [("pelican", 1.0), ("boat", 0.5)]
        plan = rechain_sentences(ranked, [template], 1, sentence_lexicon)
        assert plan.prompts == (("the", "pelican", "sees", "the", "boat"),)

    def test_rotation_gives_distinct_sentences(self, sentence_lexicon):
        template = SentenceTemplate.parse("the <noun> sees the <noun>")
        nouns = ["pelican", "boat", "dish", "pond", "salad", "пhat"]
        ranked = [(w, 1.0 - i / 10) for i, w in enumerate(nouns)]
        plan = rechain_sentences(ranked, [template], 3, sentence_lexicon)
        assert len(set(plan.prompts)) == 3
        used = [w for p in plan.prompts for w in p if w not in ("the", "sees")]
        assert used == nouns

    def test_generator_validation_rejects_bad_sentence(self, sentence_lexicon):
        def handler(request):
            return httpx.Response(
                200, json={"sentences": ["the pelican sees the zorkmid"]}
            )

        generator = TextGenerationClient(
            "http://gen/api", client=httpx.Client(transport=httpx.MockTransport(handler))
        )
        template = SentenceTemplate.parse("the <noun> sees the <noun>")
        ranked = [("pelican", 1.0), ("boat", 0.5)]
        plan = rechain_sentences(
            ranked, [template], 1, sentence_lexicon, generator=generator
        )
        # Out-of-lexicon word -> generated sentence rejected, template used.
        assert plan.prompts == (("the", "pelican", "sees", "the", "boat"),)

    def test_generator_accepted_when_valid(self, sentence_lexicon):
        def handler(request):
            return httpx.Response(
                200, json={"sentences": ["the pelican sees the dish"]}
            )

        generator = TextGenerationClient(
            "http://gen/api", client=httpx.Client(transport=httpx.MockTransport(handler))
        )
        ranked = [("pelican", 1.0), ("boat", 0.5)]
        plan = rechain_sentences(ranked, [], 1, sentence_lexicon, generator=generator)
        assert plan.prompts == (("the", "pelican", "sees", "the", "dish"),)

    def test_no_fillable_template(self, sentence_lexicon):
        template = SentenceTemplate.parse("the <verb> sees the <verb>")
        with pytest.raises(NoFillableTemplate):
            rechain_sentences([("pelican", 1.0)], [template], 1, sentence_lexicon)

    def test_template_file_parsing(self, tmp_path):
        path = tmp_path / "templates.txt"
        path.write_text("# greetings\nthe <noun> sees the <noun>\n", encoding="utf-8")
        templates = load_templates(path)
        assert len(templates) == 1 and templates[0].slot_categories == ["noun", "noun"]

    def test_template_shape_validation(self):
        with pytest.raises(ValueError):
            SentenceTemplate.parse("<noun> only")
        with pytest.raises(ValueError):
            SentenceTemplate.parse("one two three four five")


class PlanningStub:
    def __init__(self, lexicon, model, words_per_prompt=4, cold_start_complete=True):
        self.lexicon = lexicon
        self.model = model
        self.train_words = lexicon.words()
        self.coverage_order = sorted(lexicon.words())
        self.coverage_cursor = 0
        self.cold_start_complete = cold_start_complete
        self.templates = []
        self.words_per_prompt = words_per_prompt


@pytest.fixture
def planning_fixture():
    inv = PhonemeInventory(["a", "b", "c", "d"])
    entries = []
    for i, pron in enumerate(
        [
            ("b", "a", "b"),
            ("b", "b", "c"),
            ("a", "b", "b"),
            ("b", "c", "b"),
            ("a", "c", "a"),
            ("c", "a", "d"),
            ("d", "a", "c"),
            ("a", "d", "a"),
            ("c", "d", "c"),
            ("d", "c", "d"),
            ("a", "c", "d"),
            ("d", "a", "d"),
        ]
    ):
        entries.append(LexiconEntry(f"w{i:02d}", pron))
    lex = Lexicon(inv, entries)
    # Phoneme b is by far the least mastered row.
    alpha = np.full((4, 4), 1e-3)
    np.fill_diagonal(alpha, 1e6)
    b = inv.index("b")
    alpha[b] = [1.0, 1.0, 1.0, 1.0]
    model = AdaptiveModel(inv, alpha)
    return lex, model


class TestSelectNextPrompts:
    def test_random_is_deterministic(self, planning_fixture):
        lex, model = planning_fixture
        profile = PlanningStub(lex, model)
        a = select_next_prompts(profile, 2, Strategy.RANDOM, nonce=5)
        b = select_next_prompts(profile, 2, Strategy.RANDOM, nonce=5)
        assert a == b
        c = select_next_prompts(profile, 2, Strategy.RANDOM, nonce=6)
        assert a != c

    def test_uncertainty_targets_difficult_phoneme(self, planning_fixture):
        lex, model = planning_fixture
        profile = PlanningStub(lex, model)
        plan = select_next_prompts(profile, 1, Strategy.UNCERTAINTY, nonce=0)
        for prompt in plan.prompts:
            assert any("b" in phonemes_of(w, lex) for w in prompt)

    def test_zero_prompts(self, planning_fixture):
        lex, model = planning_fixture
        profile = PlanningStub(lex, model)
        plan = select_next_prompts(profile, 0, Strategy.UNCERTAINTY, nonce=0)
        assert plan.prompts == ()

    def test_cold_start_required(self, planning_fixture):
        lex, model = planning_fixture
        profile = PlanningStub(lex, model, cold_start_complete=False)
        with pytest.raises(ColdStartIncomplete):
            select_next_prompts(profile, 1, Strategy.UNCERTAINTY, nonce=0)

    def test_coverage_only_continues_order(self, planning_fixture):
        lex, model = planning_fixture
        profile = PlanningStub(lex, model)
        profile.coverage_cursor = 2
        plan = select_next_prompts(profile, 1, Strategy.COVERAGE_ONLY, nonce=0)
        assert plan.prompts[0] == tuple(profile.coverage_order[2:6])

    def test_lexicon_closure(self, planning_fixture):
        lex, model = planning_fixture
        profile = PlanningStub(lex, model)
        for strategy in Strategy:
            plan = select_next_prompts(profile, 3, strategy, nonce=17)
            for word in plan.words:
                assert word in lex

    def test_targeting_beats_random(self, planning_fixture):
        # The top-difficulty phoneme appears at least as often under the
        # uncertainty strategy as under random sampling, for 20 seeds.
        lex, model = planning_fixture
        profile = PlanningStub(lex, model)

        def b_frequency(plan):
            words = plan.words
            total = sum(len(phonemes_of(w, lex)) for w in words)
            hits = sum(
                sum(1 for p in phonemes_of(w, lex) if p == "b") for w in words
            )
            return hits / total

        unc = b_frequency(select_next_prompts(profile, 1, Strategy.UNCERTAINTY, nonce=0))
        for seed in range(20):
            rnd = b_frequency(select_next_prompts(profile, 1, Strategy.RANDOM, nonce=seed))
            assert unc >= rnd
