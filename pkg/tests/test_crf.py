import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from daymeter.crf import (
    log_partition,
    logsumexp,
    make_transitions,
    marginals,
    nll_and_grad,
    sequence_score,
    viterbi,
)


def random_instance(rng, n=None, k=None, scale=2.0):
    n = n or int(rng.integers(1, 9))
    k = k or int(rng.integers(1, 6))
    p = rng.normal(size=(n, k)) * scale
    a = make_transitions(k)
    a[: k + 1, :k] += rng.normal(size=(k + 1, k)) * scale
    a[:k, k + 1] += rng.normal(size=k) * scale
    return p, a


def enumerate_scores(p, a):
    n, k = p.shape
    return {
        y: sequence_score(p, a, np.array(y))
        for y in itertools.product(range(k), repeat=n)
    }


def brute_force_viterbi(p, a):
    """Exhaustive argmax; ties resolved like the backtracking rule, i.e.
    minimizing labels from the last position backwards."""
    scores = enumerate_scores(p, a)
    best = max(scores.values())
    winners = [y for y, s in scores.items() if s >= best - 1e-12]
    return min(winners, key=lambda y: y[::-1]), best


def brute_force_log_partition(p, a):
    vals = list(enumerate_scores(p, a).values())
    m = max(vals)
    if not math.isfinite(m):
        return m
    return m + math.log(sum(math.exp(v - m) for v in vals))


def brute_force_marginals(p, a):
    n, k = p.shape
    scores = enumerate_scores(p, a)
    log_z = brute_force_log_partition(p, a)
    unary = np.zeros((n, k))
    pairwise = np.zeros((max(n - 1, 0), k, k))
    for y, s in scores.items():
        w = math.exp(s - log_z)
        for t, label in enumerate(y):
            unary[t, label] += w
            if t + 1 < n:
                pairwise[t, label, y[t + 1]] += w
    return unary, pairwise


def test_sequence_score_single_emission():
    p = np.array([[2.0, 5.0]])
    a = make_transitions(2)
    assert sequence_score(p, a, np.array([1])) == 5.0


def test_sequence_score_zero_transitions():
    p = np.array([[1.0, 0.0], [0.0, 1.0]])
    a = make_transitions(2)
    assert sequence_score(p, a, np.array([0, 1])) == 2.0


def test_sequence_score_matches_term_by_term_sum():
    rng = np.random.default_rng(42)
    p, a = random_instance(rng, n=4, k=3)
    y = np.array([2, 0, 1, 1])
    expected = a[3, 2] + p[0, 2]
    expected += a[2, 0] + p[1, 0]
    expected += a[0, 1] + p[2, 1]
    expected += a[1, 1] + p[3, 1]
    expected += a[1, 4]
    assert sequence_score(p, a, y) == pytest.approx(expected, abs=1e-12)


def test_sequence_score_rejects_bad_lengths():
    p = np.array([[1.0, 0.0]])
    a = make_transitions(2)
    with pytest.raises(ValueError):
        sequence_score(p, a, np.array([0, 1]))
    with pytest.raises(ValueError):
        sequence_score(p, a, np.array([2]))


def test_viterbi_zero_transitions_is_per_frame_argmax():
    rng = np.random.default_rng(3)
    p = rng.normal(size=(10, 4))
    a = make_transitions(4)
    y, score = viterbi(p, a)
    assert np.array_equal(y, p.argmax(axis=1))
    assert score == pytest.approx(p.max(axis=1).sum(), abs=1e-12)


def test_viterbi_total_tie_breaks_to_zeros():
    p = np.ones((6, 3))
    a = make_transitions(3)
    y, _ = viterbi(p, a)
    assert np.array_equal(y, np.zeros(6, dtype=int))


def test_viterbi_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(40):
        p, a = random_instance(rng)
        y, score = viterbi(p, a)
        by, bscore = brute_force_viterbi(p, a)
        assert tuple(y) == by
        assert score == pytest.approx(bscore, abs=1e-9)
        # decode score is self-consistent
        assert score == pytest.approx(sequence_score(p, a, y), abs=1e-12)


def test_log_partition_two_equal_sequences():
    p = np.zeros((1, 2))
    a = make_transitions(2)
    assert log_partition(p, a) == pytest.approx(math.log(2.0), abs=1e-12)


def test_log_partition_singleton_label_space():
    rng = np.random.default_rng(5)
    p, a = random_instance(rng, n=6, k=1)
    only = np.zeros(6, dtype=int)
    assert log_partition(p, a) == pytest.approx(
        sequence_score(p, a, only), abs=1e-12
    )


def test_log_partition_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(40):
        p, a = random_instance(rng)
        assert log_partition(p, a) == pytest.approx(
            brute_force_log_partition(p, a), abs=1e-9
        )


def test_marginals_singleton_label_space():
    rng = np.random.default_rng(9)
    p, a = random_instance(rng, n=5, k=1)
    unary, pairwise = marginals(p, a)
    assert np.allclose(unary, 1.0, atol=1e-12)
    assert np.allclose(pairwise, 1.0, atol=1e-12)


def test_marginals_zero_transitions_are_row_softmax():
    rng = np.random.default_rng(13)
    p = rng.normal(size=(6, 4))
    a = make_transitions(4)
    unary, _ = marginals(p, a)
    soft = np.exp(p - p.max(axis=1, keepdims=True))
    soft /= soft.sum(axis=1, keepdims=True)
    assert np.allclose(unary, soft, atol=1e-12)


def test_marginals_match_brute_force():
    rng = np.random.default_rng(17)
    for _ in range(25):
        p, a = random_instance(rng, n=int(rng.integers(1, 6)), k=int(rng.integers(1, 5)))
        unary, pairwise = marginals(p, a)
        bu, bp = brute_force_marginals(p, a)
        assert np.allclose(unary, bu, atol=1e-9)
        assert np.allclose(pairwise, bp, atol=1e-9)
        assert np.allclose(unary.sum(axis=1), 1.0, atol=1e-9)


def test_nll_saturated_model_has_near_zero_loss():
    k = 3
    p = np.full((5, k), -50.0)
    y = np.array([0, 1, 2, 1, 0])
    p[np.arange(5), y] = 50.0
    a = make_transitions(k)
    loss, dp, da = nll_and_grad(p, a, y)
    assert 0.0 <= loss < 1e-12
    assert np.max(np.abs(dp)) < 1e-12
    assert np.max(np.abs(da[np.isfinite(da)])) < 1e-12


def test_nll_singleton_label_space_is_exactly_zero():
    rng = np.random.default_rng(19)
    p, a = random_instance(rng, n=4, k=1)
    loss, dp, da = nll_and_grad(p, a, np.zeros(4, dtype=int))
    assert loss == 0.0
    assert np.all(dp == 0.0)
    assert np.all(da[np.isfinite(da)] == 0.0)


def test_nll_gradients_match_finite_differences():
    rng = np.random.default_rng(23)
    p, a = random_instance(rng, n=5, k=3, scale=1.0)
    y = rng.integers(0, 3, size=5)
    loss, dp, da = nll_and_grad(p, a, y)
    step = 1e-6

    def rel(analytic, numeric):
        return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-8)

    for idx in np.ndindex(p.shape):
        p[idx] += step
        plus = nll_and_grad(p, a, y)[0]
        p[idx] -= 2 * step
        minus = nll_and_grad(p, a, y)[0]
        p[idx] += step
        assert rel(dp[idx], (plus - minus) / (2 * step)) < 1e-5
    for idx in np.ndindex(a.shape):
        if not np.isfinite(a[idx]):
            continue
        a[idx] += step
        plus = nll_and_grad(p, a, y)[0]
        a[idx] -= 2 * step
        minus = nll_and_grad(p, a, y)[0]
        a[idx] += step
        assert rel(da[idx], (plus - minus) / (2 * step)) < 1e-5


def test_loss_nonnegative_and_logz_dominates_scores():
    rng = np.random.default_rng(29)
    for _ in range(20):
        p, a = random_instance(rng)
        n, k = p.shape
        log_z = log_partition(p, a)
        vscore = viterbi(p, a)[1]
        assert log_z >= vscore - 1e-9
        for _ in range(5):
            y = rng.integers(0, k, size=n)
            s = sequence_score(p, a, y)
            assert s <= vscore + 1e-9
            assert log_z >= s - 1e-9
            loss = nll_and_grad(p, a, y)[0]
            assert loss >= -1e-12


def test_row_shift_leaves_decode_and_marginals_invariant():
    rng = np.random.default_rng(31)
    p, a = random_instance(rng, n=6, k=4)
    y0, s0 = viterbi(p, a)
    u0, pw0 = marginals(p, a)
    shifted = p.copy()
    shifted[2] += 7.5
    y1, s1 = viterbi(shifted, a)
    u1, pw1 = marginals(shifted, a)
    assert np.array_equal(y0, y1)
    assert s1 == pytest.approx(s0 + 7.5, abs=1e-9)
    assert np.allclose(u0, u1, atol=1e-9)
    assert np.allclose(pw0, pw1, atol=1e-9)


def test_masked_transitions_never_decoded():
    rng = np.random.default_rng(37)
    k = 4
    for _ in range(20):
        p = rng.normal(size=(6, k)) * 3
        a = make_transitions(k)
        a[: k + 1, :k] += rng.normal(size=(k + 1, k))
        a[0, 1] = -np.inf  # forbid 0 -> 1
        y, score = viterbi(p, a)
        assert math.isfinite(score)
        for left, right in zip(y, y[1:]):
            assert (left, right) != (0, 1)


def test_transition_matrix_masks():
    a = make_transitions(3)
    assert np.all(np.isneginf(a[:, 3]))
    assert np.all(np.isneginf(a[4, :]))
    a2 = make_transitions(3, priors=[(0, 0, 1.5), (3, 2, -0.5)])
    assert a2[0, 0] == 1.5
    assert a2[3, 2] == -0.5
    with pytest.raises(ValueError):
        make_transitions(3, priors=[(9, 0, 1.0)])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_viterbi_score_is_maximal_on_sampled_sequences(seed):
    rng = np.random.default_rng(seed)
    p, a = random_instance(rng, n=int(rng.integers(1, 7)), k=int(rng.integers(1, 5)))
    y, vscore = viterbi(p, a)
    assert vscore == pytest.approx(sequence_score(p, a, y), abs=1e-12)
    n, k = p.shape
    for _ in range(10):
        sample = rng.integers(0, k, size=n)
        assert sequence_score(p, a, sample) <= vscore + 1e-9


def test_logsumexp_handles_all_neg_inf():
    x = np.array([-np.inf, -np.inf])
    assert logsumexp(x, axis=0) == -np.inf
    mixed = np.array([[0.0, -np.inf], [1.0, -np.inf]])
    out = logsumexp(mixed, axis=0)
    assert out[0] == pytest.approx(np.logaddexp(0.0, 1.0))
    assert out[1] == -np.inf
