import math
import random

import pytest
from hypothesis import given, strategies as st

from vocabstory.errors import (
    DegenerateSample,
    EmptyBatch,
    PlanMismatch,
    UnparseableGrade,
)
from vocabstory.evalkit import (
    AggregateRow,
    MetricsRecord,
    aggregate,
    count_metrics,
    emit_table_text,
    emit_table_tsv,
    judge_story,
    parse_grade,
    pearson,
    spearman,
    t_test_unpaired,
)
from vocabstory.gateway import CallableBackend, Gateway
from vocabstory.lexicon import Language, LemmaTable
from vocabstory.srs import SessionPlan
from vocabstory.textcheck import verify_story

EMPTY_TABLE = LemmaTable(language=Language.EN, table={})


def metrics_for(story, allowed, new_words, language=Language.EN, lemma_table=None):
    table = lemma_table or LemmaTable(language=language, table={})
    plan = SessionPlan(new_words=tuple(new_words), review_words=())
    tokenized, report = verify_story(
        story, frozenset(allowed), frozenset(new_words), language, table
    )
    return count_metrics(report, tokenized, plan)


class TestCountMetrics:
    def test_single_word_three_occurrences(self):
        words = ["the", "cat", "likes", "to", "doze", "and", "dog", "so", "they"]
        story = " ".join(
            "the cat likes to doze and the dog likes to".split() * 3
        )  # 30 tokens, 3x doze... build explicitly below instead
        story = (
            "the cat likes to doze and the dog likes to doze "
            "so they doze and doze and doze and they doze the doze cat dog to so they and"
        )
        # use a simpler hand-counted story: 30 tokens, "doze" occurs 3 times
        story = (
            "the cat likes to doze and the dog likes to "
            "doze so they like to doze and the cat and "
            "the dog like it so much that they like it"
        )
        m = metrics_for(story, words + ["like", "it", "much", "that"], ["doze"])
        assert m.length == 30
        assert m.mean_target_occurrences == 3.0
        assert m.introduced_fraction == 1.0
        assert m.length_per_occurrence == 10.0
        assert m.oov_fraction == 0.0

    def test_two_words_one_missing(self):
        m = metrics_for("the cat can doze", ["the", "cat", "can", "doze", "haggle"],
                        ["doze", "haggle"])
        assert m.mean_target_occurrences == 0.5
        assert m.introduced_fraction == 0.5
        assert m.length_per_occurrence == 4.0

    def test_no_occurrences_ratio_none(self):
        m = metrics_for("the cat sat", ["the", "cat", "sat", "doze"], ["doze"])
        assert m.mean_target_occurrences == 0.0
        assert m.introduced_fraction == 0.0
        assert m.length_per_occurrence is None

    def test_zh_character_length(self):
        m = metrics_for("你好你好", ["你", "好"], ["你好"], language=Language.ZH,
                        lemma_table=LemmaTable(language=Language.ZH, table={}))
        assert m.length == 4
        assert m.mean_target_occurrences == 2.0
        assert m.length_per_occurrence == 2.0

    def test_oov_fraction_carried_over(self):
        m = metrics_for("the cat zzz", ["the", "cat", "doze"], ["doze"])
        assert m.oov_fraction == pytest.approx(1 / 3)

    def test_plan_mismatch(self):
        plan = SessionPlan(new_words=("doze", "haggle"), review_words=())
        tokenized, report = verify_story(
            "the cat", frozenset({"the", "cat", "doze"}), frozenset({"doze"}),
            Language.EN, EMPTY_TABLE,
        )
        with pytest.raises(PlanMismatch):
            count_metrics(report, tokenized, plan)


class TestParseGrade:
    @pytest.mark.parametrize(
        "reply,expected",
        [
            ("4", 4),
            ("Grade: 4.", 4),
            ("I would rate this story a 3 out of 5.\n3", 3),
            ("The story earns:\n\n5", 5),
            ("1", 1),
            ("First I thought 2, but on reflection: 4", 4),
        ],
    )
    def test_parses(self, reply, expected):
        assert parse_grade(reply) == expected

    @pytest.mark.parametrize("reply", ["", "no number here", "I rate it 7", "0", "4.5", "45"])
    def test_rejects(self, reply):
        with pytest.raises(UnparseableGrade):
            parse_grade(reply)


class TestJudgeStory:
    def test_prompt_carries_story_and_returns_grade(self):
        prompts = []
        gw = Gateway(CallableBackend(
            lambda r: prompts.append(r.messages[-1].content) or "4"
        ))
        grade, raw = judge_story("the cat sat", "gram", gw)
        assert grade == 4
        assert raw == "4"
        assert "the cat sat" in prompts[0]
        assert "focus on grammatical errors" in prompts[0]

    def test_unknown_aspect(self):
        gw = Gateway(CallableBackend(lambda r: "4"))
        with pytest.raises(ValueError):
            judge_story("x", "style", gw)


# Frozen oracle values: scipy.stats.ttest_ind(equal_var=True) over pairs drawn
# with random.Random(20240817); sizes randint(3, 12), values uniform(-10, 10)
# rounded to 3 places. Tuples are (sample_a, sample_b, t, df, p).
TTEST_CASES = [
    ([6.682, -5.504, -4.83, -7.19, -5.278, -9.146, -3.587], [-5.675, 0.671, 7.039, 0.833, 9.592, -5.407], -1.6849732471949488, 11.0, 0.12011978879394745),
    ([1.343, -0.621, 3.116, 0.364, -3.633, -1.717, 4.739, 7.508, -8.348, 0.293, -7.599, 9.579], [-3.05, 2.323, 5.976, -2.939, -4.885, 5.064, -6.672, -6.434, 9.028, -4.456, 4.455], 0.24447901746987094, 21.0, 0.8092327496897236),
    ([8.95, 0.475, -2.288, 5.797, -1.793, 0.079], [9.674, -5.577, -3.016, 9.418, 2.861, -9.464], 0.32658116003337745, 10.0, 0.7507171752771692),
    ([6.683, -7.918, -1.856, 1.585, 3.607, 3.844, 1.653], [-2.962, -5.472, 2.211, 2.306, 2.299, 8.681, 6.459, -9.352], 0.19847493289203108, 13.0, 0.8457437094194483),
    ([7.922, -8.181, 8.88, 1.989], [3.403, -0.222, -1.724, 9.027, -4.453, 3.772, 0.477, 3.521, -4.165, 6.207, -3.827, 1.03], 0.5173332765002963, 14.0, 0.6130000729106277),
    ([-5.733, -7.998, -4.279, -0.832, 5.572, -0.538, 9.951], [8.768, -6.213, 7.351, -4.893, -6.704, 4.746, 8.317, -5.386, 3.985, 4.456], -0.6302317607474458, 15.0, 0.5380263322101178),
    ([-8.67, 8.833, 8.819, 1.955, -3.925, 2.991, -6.472, 6.879, -2.282, -8.533], [9.535, 0.665, 3.087, -4.956, -3.945, -7.998, 3.053, 9.061, 5.932, 8.219], -0.7861807898752223, 18.0, 0.44198915017379603),
    ([2.359, -5.278, -8.534, 6.383, 5.234, 0.236, 5.441, 9.083, -4.737, 0.93, 9.825], [-1.191, -0.296, 7.919, 1.317, -8.046, -3.79], 0.8745493679484678, 15.0, 0.39560634048589494),
    ([4.095, 3.927, -2.47, 9.964, -4.08], [-0.706, -0.667, 7.572, -3.704, -0.572, -7.833, 5.821, -2.01, 7.991, 0.801], 0.561566252504102, 13.0, 0.5839634307704642),
    ([7.777, 6.81, 7.89, 1.451], [-2.437, -7.672, 1.731, -5.21, 9.688], 1.8238166765515507, 7.0, 0.11094631848291679),
    ([2.97, 3.478, -6.083, 2.956, -0.931, -5.471, -1.765], [4.622, 1.368, 2.445], -1.417097802618575, 8.0, 0.1941998060434),
    ([-5.526, -2.377, 1.723, -9.648], [5.219, 2.943, -9.525, 7.095, -1.151, 5.355, -6.859, -2.825, 9.208, -5.807], -1.1946976228609445, 12.0, 0.25528444899622105),
    ([8.612, -2.851, 4.969], [3.212, -8.062, -4.632], 1.418219175732052, 4.0, 0.22911202117873358),
    ([-0.82, -8.286, 0.276, 5.237, 8.806, -3.886, 6.863], [-7.401, -5.433, -6.714, 2.282], 1.5499694410669873, 9.0, 0.15556002228885038),
    ([0.079, 6.682, 9.444, 3.518, 8.885, -5.463, 4.49, -8.906, 9.219, -8.506, 9.877, -7.056], [5.051, 0.464, -2.201, -9.514, 0.026, -2.442, -3.769, -1.673], 1.236705503655246, 18.0, 0.2320900548964825),
    ([7.569, 5.051, -4.789, 2.957, -1.146, 8.349, 8.686, 2.631], [2.747, 7.981, -9.783, -0.923], 1.042539733749429, 10.0, 0.3217097322739179),
    ([-1.642, -7.589, 5.617, 9.687, 7.92, -0.972, -9.2, 8.768], [-4.25, 8.811, -7.673, -9.744, -4.744, 6.825, 4.613, 7.955, -1.907, 6.104, 2.047], 0.2591045023614263, 17.0, 0.7986660171492572),
    ([-2.908, 5.43, 5.462, 6.12, 8.948, -3.696, 3.854, 1.081, 9.716, -4.497, 2.066], [-6.772, -6.113, -4.657, 6.267, 2.136, -9.11], 2.2028224680253525, 15.0, 0.04365971977166952),
    ([1.905, 1.881, -0.242, -7.151, -7.136, 8.255, 9.354, -8.218], [-4.983, -3.333, -1.379, 6.623, -3.704, 1.261, 7.202, 5.343, 5.769], -0.5536223792280834, 15.0, 0.5879954230976214),
    ([2.977, -6.174, -1.035, 1.359, 3.734, 3.89, -1.28, -9.683, 4.952, -2.961, -9.885, -1.489], [8.421, -6.855, -4.475, 3.821, 4.765, 2.278, -8.567, 3.421, 0.935], -0.7217003511550788, 19.0, 0.47926694668059056),
]

# (x, y, pearson r, spearman rho) pairs frozen from scipy.stats on the same rng stream.
CORR_CASES = [
    ([-2.759, 2.773, 0.151, -2.343, -7.781, 2.687, 7.635, -1.14, 0.633], [-2.716, 1.24, 2.219, -9.006, -8.471, 6.396, 9.063, 9.266, -5.438], 0.6963516532705761, 0.5499999999999999),
    ([-0.083, 0.807, -8.606, 9.862, 0.792, 6.079, -7.767, 6.798, 3.507], [4.138, -1.198, 8.088, -3.921, 2.812, 1.737, 1.767, -3.608, 3.744], -0.716481276826285, -0.7999999999999999),
    ([-3.865, -2.075, -5.083, -1.752, -2.112, 2.18, -4.96, 2.814, 3.946, -7.426], [-2.963, 5.798, -4.149, 4.409, -2.781, 1.412, -5.434, -0.646, -2.637, 6.217], -0.07698922376703893, 0.19999999999999998),
    ([9.117, -4.839, 4.097, 3.246, 5.937], [-2.059, 4.307, 4.607, 4.863, 3.802], -0.6106863128233883, -0.7),
    ([1.033, -4.044, -0.823, 2.361, 5.22, -7.779, 1.971], [4.601, 6.234, -8.47, -8.247, 3.439, 3.778, 2.606], -0.2343191277235654, -0.39285714285714296),
    ([2.473, -2.12, -0.441, 6.921, 3.596, 4.475, -6.947], [3.874, 2.268, 0.743, -1.555, -9.799, -8.356, 0.618], -0.46771100687349376, -0.5357142857142858),
    ([-1.498, -2.465, 7.138, 3.964, 3.263, -5.381, 4.617, -6.364], [-7.816, 5.703, 7.337, 2.605, -4.045, -3.861, -9.348, 5.865], -0.04799148237928336, -0.11904761904761905),
    ([-6.202, 3.108, -1.162, 2.283, 7.129, 6.966], [-5.928, 3.451, -3.29, 8.886, -8.177, -7.539], -0.07901393064961457, -0.48571428571428577),
]


class TestTTest:
    def test_textbook_case(self):
        r = t_test_unpaired([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert r.t_statistic == pytest.approx(-1.0, abs=1e-12)
        assert r.degrees_of_freedom == 8.0
        assert r.p_value == pytest.approx(0.34659350708733416, abs=1e-9)

    @pytest.mark.parametrize("a,b,t,df,p", TTEST_CASES)
    def test_frozen_oracle(self, a, b, t, df, p):
        r = t_test_unpaired(a, b)
        assert abs(r.t_statistic - t) < 1e-9
        assert r.degrees_of_freedom == df
        assert abs(r.p_value - p) < 1e-6

    def test_antisymmetry(self):
        rng = random.Random(7)
        a = [rng.uniform(0, 5) for _ in range(8)]
        b = [rng.uniform(1, 6) for _ in range(6)]
        r1, r2 = t_test_unpaired(a, b), t_test_unpaired(b, a)
        assert r1.t_statistic == pytest.approx(-r2.t_statistic, abs=1e-12)
        assert r1.p_value == pytest.approx(r2.p_value, abs=1e-12)

    def test_shift_scale_invariance_of_p(self):
        a, b = [1.0, 2.5, 4.0, 3.3], [2.1, 0.2, 5.5, 1.1, 0.4]
        r1 = t_test_unpaired(a, b)
        r2 = t_test_unpaired([3 * x + 7 for x in a], [3 * x + 7 for x in b])
        assert r1.t_statistic == pytest.approx(r2.t_statistic, abs=1e-9)
        assert r1.p_value == pytest.approx(r2.p_value, abs=1e-9)

    def test_identical_means_give_t_zero(self):
        r = t_test_unpaired([1, 2, 3], [1, 2, 3])
        assert r.t_statistic == 0.0
        assert r.p_value == pytest.approx(1.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateSample):
            t_test_unpaired([1.0], [1.0, 2.0])
        with pytest.raises(DegenerateSample):
            t_test_unpaired([2.0, 2.0], [3.0, 3.0])

    def test_welch_differs_on_unequal_variances(self):
        a = [0.0, 0.1, -0.1, 0.05, -0.05]
        b = [10.0, -10.0, 5.0, -5.0, 8.0, -8.0, 3.0]
        student = t_test_unpaired(a, b)
        welch = t_test_unpaired(a, b, welch=True)
        assert welch.degrees_of_freedom != student.degrees_of_freedom
        assert welch.degrees_of_freedom < student.degrees_of_freedom


class TestCorrelation:
    @pytest.mark.parametrize("x,y,r_expected,rho_expected", CORR_CASES)
    def test_frozen_oracle(self, x, y, r_expected, rho_expected):
        assert abs(pearson(x, y) - r_expected) < 1e-12
        assert abs(spearman(x, y) - rho_expected) < 1e-12

    def test_perfect_linear(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)
        assert pearson(x, [-2 * v + 1 for v in x]) == pytest.approx(-1.0)

    def test_spearman_monotone_invariance(self):
        x = [0.3, 5.1, 2.2, 9.9, 4.4, 1.0]
        y = [1.0, 0.5, 8.8, 3.1, 2.0, 7.7]
        base = spearman(x, y)
        assert spearman([math.exp(v) for v in x], y) == pytest.approx(base, abs=1e-12)
        assert spearman(x, [v**3 for v in y]) == pytest.approx(base, abs=1e-12)

    def test_spearman_handles_ties(self):
        # scipy.stats.spearmanr([1, 2, 2, 3], [1, 2, 3, 4]) == 0.9486832980505138
        assert spearman([1, 2, 2, 3], [1, 2, 3, 4]) == pytest.approx(
            0.9486832980505138, abs=1e-12
        )

    def test_symmetry(self):
        x = [1.5, -2.0, 0.7, 3.3, -1.1]
        y = [0.2, 4.4, -3.3, 1.1, 2.2]
        assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-15)
        assert spearman(x, y) == pytest.approx(spearman(y, x), abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateSample):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(DegenerateSample):
            spearman([1, 2], [1, 2, 3])

    @given(
        st.lists(st.floats(-100, 100).map(lambda v: round(v, 3)),
                 min_size=3, max_size=20),
        st.data(),
    )
    def test_pearson_bounded(self, x, data):
        y = data.draw(st.lists(st.floats(-100, 100).map(lambda v: round(v, 3)),
                               min_size=len(x), max_size=len(x)))
        if len(set(x)) < 2 or len(set(y)) < 2:
            return
        try:
            r = pearson(x, y)
        except DegenerateSample:
            return
        assert -1.0 - 1e-9 <= r <= 1.0 + 1e-9


def rec(length=100, occ=2.0, intro=1.0, oov=0.0, ratio=50.0, judge=None):
    return MetricsRecord(
        mean_target_occurrences=occ,
        introduced_fraction=intro,
        length=length,
        oov_fraction=oov,
        length_per_occurrence=ratio,
        judge_scores=judge or {},
    )


class TestAggregate:
    def test_empty_batch(self):
        with pytest.raises(EmptyBatch):
            aggregate([])

    def test_means(self):
        row = aggregate([rec(length=100, occ=1.0, ratio=100.0),
                         rec(length=200, occ=3.0, ratio=60.0)])
        assert row.mean_length == 150.0
        assert row.mean_target_occurrences == 2.0
        assert row.length_per_occurrence == 80.0
        assert row.n_records == 2
        assert row.n_without_occurrences == 0

    def test_none_ratios_skipped(self):
        row = aggregate([rec(ratio=40.0), rec(ratio=None, occ=0.0, intro=0.0)])
        assert row.length_per_occurrence == 40.0
        assert row.n_without_occurrences == 1

    def test_all_none_ratios(self):
        row = aggregate([rec(ratio=None, occ=0.0)])
        assert row.length_per_occurrence is None

    def test_judge_missing_counts(self):
        row = aggregate([
            rec(judge={"gram": 5, "coh": 4}),
            rec(judge={"gram": 3}),
        ])
        assert row.judge_means["gram"] == 4.0
        assert row.judge_means["coh"] == 4.0
        assert "int" not in row.judge_means
        assert row.judge_missing == {"gram": 0, "coh": 1, "int": 2}


class TestTables:
    def rows(self):
        row = aggregate([
            rec(length=578, occ=1.92, intro=1.0, oov=0.0064, ratio=30.11,
                judge={"gram": 5, "coh": 4, "int": 3}),
        ])
        return [("baseline", row)]

    def test_tsv_structure(self):
        out = emit_table_tsv(self.rows())
        lines = out.splitlines()
        assert lines[0].split("\t") == ["Method", "Gram.", "Coh.", "Int.",
                                        "#L", "Len.", "OOV", "#|L|>=1"]
        assert lines[1].split("\t")[0] == "baseline"
        assert len(lines) == 2

    def test_text_percentages(self):
        out = emit_table_text(self.rows())
        assert "0.64%" in out
        assert "100.00%" in out

    def test_missing_judge_cell(self):
        row = aggregate([rec()])
        out = emit_table_tsv([("x", row)])
        cells = out.splitlines()[1].split("\t")
        assert cells[1] == "-"
