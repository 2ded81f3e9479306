import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videonav.judge import (
    JudgeParseError,
    JudgeScores,
    JudgeWeights,
    Verdict,
    build_ranking_prompt,
    format_judge_output,
    parse_judge_output,
    reward,
    select_best,
)
from helpers import oracle_select_best

W = JudgeWeights()


def scores(status, tp, as_, sc, reason="r"):
    return JudgeScores(status=Verdict(status), sc_tp=tp, sc_as=as_, sc_sc=sc, reason=reason)


class TestReward:
    def test_maximal_scores_hit_scale_top(self):
        assert reward(scores("Pass", 5, 5, 5), W) == 5.0

    def test_zero_case(self):
        assert reward(scores("Pass", 0, 0, 0), W) == 0.0

    def test_hand_arithmetic(self):
        # (1.4*5 + 0.8*4 + 0.8*4) / 3 = 13.4 / 3
        assert reward(scores("Pass", 5.0, 4.0, 4.0), W) == pytest.approx(13.4 / 3.0, abs=1e-9)
        assert reward(scores("Pass", 5.0, 4.0, 4.0), W) == pytest.approx(4.4666666666666667, abs=1e-9)

    @given(
        st.floats(min_value=0, max_value=5),
        st.floats(min_value=0, max_value=5),
        st.floats(min_value=0, max_value=5),
    )
    @settings(max_examples=50)
    def test_monotone_in_each_dimension(self, tp, as_, sc):
        base = reward(scores("Pass", tp, as_, sc), W)
        bumped_tp = reward(scores("Pass", min(5.0, tp + 0.1), as_, sc), W)
        bumped_as = reward(scores("Pass", tp, min(5.0, as_ + 0.1), sc), W)
        bumped_sc = reward(scores("Pass", tp, as_, min(5.0, sc + 0.1)), W)
        assert bumped_tp >= base - 1e-12
        assert bumped_as >= base - 1e-12
        assert bumped_sc >= base - 1e-12


class TestTypes:
    def test_scores_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            scores("Pass", 5.1, 0, 0)
        with pytest.raises(ValueError):
            scores("Pass", 0, -0.1, 0)

    def test_fail_with_high_tp_is_flagged_not_rejected(self):
        v = scores("Fail", 3.5, 2.0, 2.0)
        assert v.flagged

    def test_pass_with_high_tp_is_not_flagged(self):
        assert not scores("Pass", 4.8, 4.0, 4.0).flagged

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            JudgeWeights(w_as=0.0)
        with pytest.raises(ValueError):
            JudgeWeights(normalizer=-1.0)


class TestPrompt:
    def test_mentions_candidate_count(self):
        prompt = build_ranking_prompt("orbit the tree", 3)
        assert "You have 3 candidate videos" in prompt

    def test_contains_weighted_formula_line(self):
        prompt = build_ranking_prompt("orbit the tree", 3)
        assert "Total Score = (TP * 1.4 + AS * 0.8 + SC * 0.8) / 3" in prompt

    def test_contains_instruction_and_output_grammar(self):
        prompt = build_ranking_prompt("orbit the tree", 2)
        assert "orbit the tree" in prompt
        assert "<score> X.X </score>" in prompt
        assert "Best: Video N" in prompt

    def test_single_video_is_singular(self):
        prompt = build_ranking_prompt("hover", 1)
        assert "You have 1 candidate video," in prompt
        assert "ranking arbitrator" in prompt

    def test_no_unresolved_placeholders(self):
        prompt = build_ranking_prompt("hover", 4)
        assert re.search(r"\{\w+\}", prompt) is None

    def test_empty_instruction_rejected(self):
        with pytest.raises(ValueError):
            build_ranking_prompt("", 3)

    def test_zero_videos_rejected(self):
        with pytest.raises(ValueError):
            build_ranking_prompt("hover", 0)


GOOD = (
    "Video 1: <score> 4.5 </score> | Status: Pass | TP: 4.8 | AS: 4.0 | SC: 4.2 | Reason: smooth orbit\n"
    "Video 2: <score> 1.2 </score> | Status: Fail | TP: 1.0 | AS: 2.0 | SC: 1.0 | Reason: wrong direction\n"
    "Best: Video 1\n"
)


class TestParser:
    def test_example_line(self):
        parsed = parse_judge_output(GOOD, 2)
        v1 = parsed.verdicts[0]
        assert v1.status is Verdict.PASS
        assert (v1.sc_tp, v1.sc_as, v1.sc_sc) == (4.8, 4.0, 4.2)
        assert v1.reason == "smooth orbit"
        assert parsed.totals[0] == 4.5
        assert parsed.best == 1

    def test_fail_status_maps_to_fail(self):
        parsed = parse_judge_output(GOOD, 2)
        assert parsed.verdicts[1].status is Verdict.FAIL

    def test_bracketed_status_accepted(self):
        text = GOOD.replace("Status: Pass", "Status: [Pass]")
        assert parse_judge_output(text, 2).verdicts[0].status is Verdict.PASS

    def test_out_of_order_lines_accepted(self):
        lines = GOOD.strip().splitlines()
        text = "\n".join([lines[1], lines[0], lines[2]]) + "\n"
        parsed = parse_judge_output(text, 2)
        assert parsed.verdicts[0].sc_tp == 4.8

    def test_missing_best_line(self):
        text = GOOD.replace("Best: Video 1\n", "")
        with pytest.raises(JudgeParseError) as err:
            parse_judge_output(text, 2)
        assert "Best" in str(err.value)

    def test_missing_video_line(self):
        text = GOOD.replace(
            "Video 2: <score> 1.2 </score> | Status: Fail | TP: 1.0 | AS: 2.0 | SC: 1.0 | Reason: wrong direction\n",
            "",
        )
        with pytest.raises(JudgeParseError) as err:
            parse_judge_output(text, 2)
        assert "Video 2" in str(err.value)

    def test_duplicate_video_line(self):
        text = GOOD.replace("Video 2:", "Video 1:")
        with pytest.raises(JudgeParseError) as err:
            parse_judge_output(text, 2)
        assert err.value.line is not None

    def test_out_of_range_id(self):
        with pytest.raises(JudgeParseError) as err:
            parse_judge_output(GOOD, 1)
        assert "Video 2" in (err.value.line or "")

    def test_score_out_of_range(self):
        text = GOOD.replace("TP: 4.8", "TP: 6.8")
        with pytest.raises(JudgeParseError) as err:
            parse_judge_output(text, 2)
        assert "6.8" in (err.value.line or "")

    def test_malformed_score_tag(self):
        text = GOOD.replace("<score> 4.5 </score>", "<score> 4..5 </score>")
        with pytest.raises(JudgeParseError):
            parse_judge_output(text, 2)

    def test_stray_line_rejected(self):
        with pytest.raises(JudgeParseError) as err:
            parse_judge_output("Let me think about this.\n" + GOOD, 2)
        assert "Let me think" in (err.value.line or "")

    def test_best_referencing_unknown_video(self):
        text = GOOD.replace("Best: Video 1", "Best: Video 7")
        with pytest.raises(JudgeParseError):
            parse_judge_output(text, 2)

    def test_round_trip_fixed_point(self):
        parsed = parse_judge_output(GOOD, 2)
        again = parse_judge_output(format_judge_output(parsed), 2)
        assert again == parsed

    @given(st.data())
    @settings(max_examples=40)
    def test_generated_round_trips(self, data):
        n = data.draw(st.integers(min_value=1, max_value=6))
        lines = []
        rows = []
        for _ in range(n):
            status = data.draw(st.sampled_from(["Pass", "Fail"]))
            tp, as_, sc = (round(data.draw(st.floats(min_value=0, max_value=5)), 1) for _ in range(3))
            total = round((1.4 * tp + 0.8 * as_ + 0.8 * sc) / 3, 1)
            rows.append((status, tp, as_, sc, total))
        best = 1
        for i, (status, tp, as_, sc, total) in enumerate(rows, start=1):
            lines.append(
                f"Video {i}: <score> {total} </score> | Status: {status} | "
                f"TP: {tp} | AS: {as_} | SC: {sc} | Reason: case {i}"
            )
        lines.append(f"Best: Video {best}")
        text = "\n".join(lines) + "\n"
        parsed = parse_judge_output(text, n)
        assert parse_judge_output(format_judge_output(parsed), n) == parsed


class TestSelectBest:
    def test_highest_reward_among_valid_only(self):
        verdicts = [
            scores("Pass", 3.1, 3.1, 3.1),
            scores("Fail", 4.9, 4.9, 4.9),  # best reward but invalid
            scores("Pass", 4.2, 4.2, 4.2),
        ]
        outcome = select_best(verdicts, W)
        assert outcome.best_id == 3
        assert outcome.best_reward == pytest.approx(4.2)
        assert not outcome.escalated

    def test_all_fail_escalates(self):
        verdicts = [scores("Fail", 1, 1, 1), scores("Fail", 0, 0, 0)]
        outcome = select_best(verdicts, W)
        assert outcome.escalated
        assert outcome.best_id is None
        assert len(outcome.verdicts) == 2

    def test_tie_breaks_to_lower_id(self):
        verdicts = [scores("Pass", 4, 4, 4), scores("Pass", 4, 4, 4)]
        assert select_best(verdicts, W).best_id == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_best([], W)

    def test_never_selects_fail(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            verdicts = [
                scores(
                    "Pass" if rng.random() < 0.5 else "Fail",
                    *(float(np.round(rng.uniform(0, 5), 2)) for _ in range(3)),
                )
                for _ in range(n)
            ]
            outcome = select_best(verdicts, W)
            if outcome.best_id is not None:
                assert verdicts[outcome.best_id - 1].status is Verdict.PASS

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(99)
        for _ in range(300):
            n = int(rng.integers(1, 9))
            raw = []
            verdicts = []
            for _ in range(n):
                status = "Pass" if rng.random() < 0.6 else "Fail"
                tp, as_, sc = (float(np.round(rng.uniform(0, 5), 2)) for _ in range(3))
                raw.append((status, tp, as_, sc))
                verdicts.append(scores(status, tp, as_, sc))
            expected = oracle_select_best(raw)
            outcome = select_best(verdicts, W)
            if expected is None:
                assert outcome.escalated
            else:
                assert outcome.best_id == expected[0]
                assert outcome.best_reward == pytest.approx(expected[1], abs=1e-9)

    @given(st.floats(min_value=0.01, max_value=100.0), st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=50)
    def test_argmax_invariant_under_rescaling(self, k, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        verdicts = [
            scores(
                "Pass" if rng.random() < 0.7 else "Fail",
                *(float(np.round(rng.uniform(0, 5), 2)) for _ in range(3)),
            )
            for _ in range(n)
        ]
        base = select_best(verdicts, W)
        scaled_weights = JudgeWeights(
            w_as=W.w_as * k, w_sc=W.w_sc * k, w_tp=W.w_tp * k, normalizer=W.normalizer * k
        )
        rescaled = select_best(verdicts, scaled_weights)
        assert rescaled.best_id == base.best_id
        assert rescaled.escalated == base.escalated
