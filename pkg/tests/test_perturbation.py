from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothnet.network import Balancer, Orientation, build_ccc
from smoothnet.perturbation import (
    effective_orientation, null_plan, phi_sign, psi_sign, sample_plan,
)


def test_same_seed_same_plan():
    s = build_ccc(6)
    assert sample_plan(s, 0.3, 11) == sample_plan(s, 0.3, 11)
    assert sample_plan(s, 0.3, 11) != sample_plan(s, 0.3, 12)


def test_canonical_stream_order():
    s = build_ccc(4)
    plan = sample_plan(s, 0.4, 5)
    ref = np.random.default_rng(5).random(s.num_balancers) < 0.4
    assert np.array_equal(np.concatenate(plan.flips), ref)


@pytest.mark.parametrize("alpha,expect", [(0.0, 0.0), (1.0, 1.0)])
def test_extreme_alphas(alpha, expect):
    plan = sample_plan(build_ccc(5), alpha, 0)
    assert plan.flip_fraction() == expect


def test_flip_fraction_concentrates():
    plan = sample_plan(build_ccc(14), 0.25, 3)
    # 114688 draws, sd about 0.0013
    assert abs(plan.flip_fraction() - 0.25) < 0.01


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_alpha_range(alpha):
    with pytest.raises(ValueError):
        sample_plan(build_ccc(2), alpha, 0)


def test_effective_orientation_is_xor():
    s = build_ccc(5, "down")
    plan = sample_plan(s, 0.5, 9)
    for m, f, eff in zip(s, plan.flips, effective_orientation(s, plan)):
        assert np.array_equal(eff, m.toward_u ^ f)
    assert all(np.array_equal(e, m.toward_u) for e, m in zip(effective_orientation(s, None), s))
    with pytest.raises(ValueError):
        effective_orientation(build_ccc(4), plan)


def test_signs():
    s = build_ccc(3)
    plan = sample_plan(s, 1.0, 0)
    assert psi_sign(plan, 1, 0) == Fraction(-1, 2)
    assert psi_sign(null_plan(s), 1, 0) == Fraction(1, 2)
    with pytest.raises(IndexError):
        psi_sign(plan, 4, 0)
    with pytest.raises(IndexError):
        psi_sign(plan, 1, 4)
    assert phi_sign(Balancer(0, 1)) == 1
    assert phi_sign(Balancer(0, 1, Orientation.TOWARD_V)) == -1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(0, 1), st.integers(0, 2**32))
def test_excess_goes_to_u_iff_sign_product_positive(log_n, alpha, seed):
    s = build_ccc(log_n, "down" if seed % 2 else "up")
    plan = sample_plan(s, alpha, seed)
    eff = effective_orientation(s, plan)
    for t, m in enumerate(s, start=1):
        for k, b in enumerate(m.balancers):
            assert bool(eff[t - 1][k]) == (phi_sign(b) * 2 * psi_sign(plan, t, k) == 1)


def test_hex_dump_shape():
    s = build_ccc(4)
    dump = sample_plan(s, 1.0, 0).hex_dump().splitlines()
    assert dump == ["ff"] * 4
