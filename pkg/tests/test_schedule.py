import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hangpose import schedule


def test_default_schedule_terminal_mixing():
    s = schedule.make_schedule()
    assert s.alpha_bar[-1] < 0.01


def test_alpha_bar_definition_first_steps():
    s = schedule.make_schedule()
    assert s.alpha_bar[0] == s.alpha[0]
    assert abs(s.alpha_bar[1] - (1 - s.beta[1]) * (1 - s.beta[0])) < 1e-15


def test_alpha_bar_strictly_decreasing():
    s = schedule.make_schedule()
    assert np.all(np.diff(s.alpha_bar) < 0.0)


def test_beta_tilde_below_beta():
    s = schedule.make_schedule()
    assert np.all(s.beta_tilde[1:] <= s.beta[1:])
    assert np.all(s.beta_tilde >= 0.0)


def test_alpha_bar_matches_recomputed_prefix_products():
    s = schedule.make_schedule()
    for t in [0, 1, 7, 50, 123, 199]:
        assert abs(np.prod(s.alpha[: t + 1]) - s.alpha_bar[t]) < 1e-12


def test_narrow_beta_range_terminal_value_frozen():
    # Direct product computation for T=200, beta in [1e-4, 0.02]: the
    # terminal retention is ~0.132, far above the 0.01 mixing target, which
    # is why the default range is wider.
    s = schedule.make_schedule(200, 1e-4, 0.02)
    assert s.alpha_bar[-1] == pytest.approx(0.13218275425061793, rel=1e-12)


def test_make_schedule_rejections():
    with pytest.raises(ValueError):
        schedule.make_schedule(1, 1e-4, 0.02)
    with pytest.raises(ValueError):
        schedule.make_schedule(10, 0.0, 0.02)
    with pytest.raises(ValueError):
        schedule.make_schedule(10, 0.05, 0.02)
    with pytest.raises(ValueError):
        schedule.make_schedule(10, 1e-4, 1.0)


@given(
    st.integers(min_value=2, max_value=500),
    st.floats(min_value=1e-6, max_value=0.01),
    st.floats(min_value=0.011, max_value=0.3),
)
@settings(max_examples=50, deadline=None)
def test_schedule_invariants_hold_generally(steps, beta_min, beta_max):
    s = schedule.make_schedule(steps, beta_min, beta_max)
    assert np.all(s.beta > 0.0) and np.all(s.beta < 1.0)
    assert np.all(np.diff(s.alpha_bar) < 0.0)
    assert np.all(s.beta_tilde[1:] <= s.beta[1:] + 1e-15)


def test_adjust_schedule_constants():
    adj = schedule.make_adjust_schedule()
    assert adj.beta_start == 3e-5
    assert adj.t_jitter == 1
    assert np.sqrt(adj.beta_start) == pytest.approx(0.00548, abs=2e-5)


def test_adjust_schedule_retention_single_step():
    adj = schedule.make_adjust_schedule()
    assert adj.retention() == pytest.approx(1.0 - 3e-5, rel=1e-12)


def test_adjust_schedule_more_steps_more_noise():
    variances = [
        1.0 - schedule.make_adjust_schedule(t).retention() for t in (1, 3, 6, 10)
    ]
    assert all(b > a for a, b in zip(variances, variances[1:]))


def test_adjust_schedule_rejects_bad_jitter():
    with pytest.raises(ValueError):
        schedule.make_adjust_schedule(0)
