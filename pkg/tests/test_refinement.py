import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from roughman.refinement import EXACT_FLOOR, LEVELS, observed_order, pairwise_orders, vanishes_under_refinement


@given(st.floats(0.2, 3.0), st.floats(1e-6, 10.0))
def test_power_law_order_recovered(order, c):
    errs = [c * n ** -order for n in LEVELS]
    # below the floor errors are clamped as round-off
    assume(errs[-1] > 1e3 * EXACT_FLOOR)
    assert observed_order(LEVELS, errs) == pytest.approx(order, rel=1e-9)
    np.testing.assert_allclose(pairwise_orders(LEVELS, errs), order, rtol=1e-9)
    fit = vanishes_under_refinement(LEVELS, errs)
    assert fit.vanishes and fit.bound == pytest.approx(2 * errs[-1], rel=1e-9)


def test_round_off_counts_as_exact():
    fit = vanishes_under_refinement(LEVELS, [3e-16, 1e-15, 2e-16, 4e-16])
    assert fit.vanishes and fit.exact


def test_stagnating_error_rejected():
    assert not vanishes_under_refinement(LEVELS, [0.1, 0.1, 0.1, 0.1]).vanishes
    assert not vanishes_under_refinement(LEVELS, [0.1, 0.05, 0.025, 0.2]).vanishes
    assert not vanishes_under_refinement(LEVELS, [0.1, 0.2, 0.4, 0.8]).vanishes
    assert not vanishes_under_refinement(LEVELS, [0.649, 0.6488, 0.6488, 0.6487]).vanishes


def test_noisy_decay_accepted():
    assert vanishes_under_refinement(LEVELS, [5.9e-3, 1.5e-3, 1.26e-3, 8.9e-4]).vanishes
