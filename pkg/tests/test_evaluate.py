import math

import pytest

from ajdn.detector import JumpRecord
from ajdn.evaluate import EvaluationResult, aggregate, match_and_score, matching_margin
from ajdn.simulate import TrueJump


def _record(dimension: int, index: int, refined=None) -> JumpRecord:
    return JumpRecord(
        dimension, index, index / 1000, 0.1, 10.0, 4.0, 1,
        refined_time_index=refined,
        refined_time=None if refined is None else refined / 1000,
    )


def _jump(dimension: int, index: int) -> TrueJump:
    return TrueJump(dimension, index, index / 1000, 5.0, 5.0)


def test_matching_margin():
    expected = math.log(1000) * math.log(20) / (2 * 1000 * 25)

    assert matching_margin(1000, 20, 5.0) == pytest.approx(expected)
    assert matching_margin(1000, 20, 5.0) * 1000 < 1
    assert matching_margin(1000, 10**9, 1.0) == pytest.approx(
        math.log(1000) * math.log(10**9) / 2000
    )
    assert matching_margin(1000, 1, 5.0) == 0.0
    with pytest.raises(ValueError):
        matching_margin(1000, 20, 0.0)


def test_exact_detection():
    truth = [_jump(0, 200), _jump(1, 500)]

    result = match_and_score([_record(0, 200), _record(1, 500)], truth, 1000, 20)

    assert result.m_bar == 2.0
    assert result.m_hat_p == 1.0
    assert result.mad == 0.0
    assert result.rejection_rate == 1.0
    assert result.n_matched == 2


def test_off_by_one_is_outside_the_formula_margin():
    result = match_and_score([_record(0, 201)], [_jump(0, 200)], 1000, 20, Delta=5.0)

    assert result.m_bar == 1.0
    assert result.m_hat_p == 0.0
    assert result.mad is None
    assert result.margin == pytest.approx(matching_margin(1000, 20, 5.0))


def test_wider_margin_for_smaller_jumps():
    truth = [TrueJump(0, 200, 0.2, 1.0, 1.0)]

    result = match_and_score([_record(0, 202)], truth, 1000, 20)

    assert matching_margin(1000, 20, 1.0) * 1000 > 2
    assert result.m_hat_p == 1.0
    assert result.mad == 2.0


def test_mad_grows_with_the_offset():
    truth = [TrueJump(0, 200, 0.2, 1.0, 1.0)]

    mads = [match_and_score([_record(0, 200 + k)], truth, 1000, 20).mad for k in range(4)]

    assert mads == sorted(mads)
    assert mads[0] < mads[-1]


def test_refined_location_is_used():
    result = match_and_score([_record(0, 230, refined=200)], [_jump(0, 200)], 1000, 20)

    assert result.m_hat_p == 1.0
    assert result.mad == 0.0


def test_false_positive_breaks_exactness():
    result = match_and_score([_record(0, 200), _record(3, 700)], [_jump(0, 200)], 1000, 20)

    assert result.m_bar == 2.0
    assert result.m_hat_p == 0.0


def test_synchronous_jumps_count_once():
    truth = [_jump(0, 250), _jump(1, 250), _jump(2, 750)]

    result = match_and_score(
        [_record(0, 250), _record(1, 250), _record(2, 750)], truth, 1000, 20
    )

    assert result.m_bar == 2.0
    assert result.m_hat_p == 1.0


def test_detection_in_a_quiet_dimension_matches_but_not_for_mad():
    result = match_and_score([_record(5, 200)], [_jump(0, 200)], 1000, 20)

    assert result.m_hat_p == 1.0
    assert result.mad is None
    assert result.n_matched == 0


def test_missed_jump():
    result = match_and_score([], [_jump(0, 200)], 1000, 20)

    assert result.m_bar == 0.0
    assert result.m_hat_p == 0.0
    assert result.rejection_rate == 0.0


def test_nothing_to_find_and_nothing_found():
    result = match_and_score([], [], 1000, 20)

    assert result.m_bar == 0.0
    assert result.m_hat_p == 1.0
    assert result.mad is None


def test_explicit_margin_overrides_the_formula():
    result = match_and_score([_record(0, 210)], [_jump(0, 200)], 1000, 20, margin=0.02)

    assert result.m_hat_p == 1.0
    assert result.margin == 0.02


def test_aggregate_weights_runs():
    runs = [
        EvaluationResult(2.0, 1.0, 0.5, 0.001, 1.0),
        EvaluationResult(3.0, 0.0, None, 0.001, 1.0),
        EvaluationResult(1.0, 1.0, 1.5, 0.001, 0.0),
    ]

    total = aggregate(runs)

    assert total.runs == 3
    assert total.m_bar == pytest.approx(2.0)
    assert total.m_hat_p == pytest.approx(2 / 3)
    assert total.mad == pytest.approx(1.0)
    assert total.rejection_rate == pytest.approx(2 / 3)
    assert EvaluationResult.from_json(total.to_json()) == total


def test_aggregate_needs_results():
    with pytest.raises(ValueError):
        aggregate([])
