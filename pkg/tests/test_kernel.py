import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gstar.kernel import KernelSpec, check_holder, check_size, eval_kernel, size_bound


def test_poisson_value():
    spec = KernelSpec(1.0, 1.0, 2)
    # t = 1: factors 1/(1+d)^2 at d = 0 and d = 1
    assert eval_kernel(spec, [0.0], [[0.0], [1.0]], 1.0) == 0.25


def test_gaussian_constant_is_tight():
    spec = KernelSpec(1.0, 1.0, 2, "product_gaussian")
    p = spec.m + spec.alpha
    d = np.linspace(0, 20, 200001)
    ratio = spec.gauss_c * np.exp(-d * d) * (1 + d) ** p
    assert ratio.max() <= 1.0 + 1e-15
    assert ratio.max() == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("family", ["product_poisson", "product_gaussian"])
def test_size_condition_holds(family):
    rep = check_size(KernelSpec(1.0, 0.5, 3, family), 500, seed=2, n=2)
    assert rep.max_ratio <= 1.0 + 1e-12


@pytest.mark.parametrize("family", ["product_poisson", "product_gaussian"])
def test_holder_ratios_are_bounded(family):
    rep = check_holder(KernelSpec(1.0, 1.0, 2, family), 300, seed=3)
    assert len(rep.slot_max) == 3
    assert 0 < rep.max_ratio < 50


@given(st.floats(0.1, 5), st.floats(0.01, 1), st.integers(2, 4), st.floats(1e-3, 1e3))
@settings(max_examples=60)
def test_poisson_equals_size_bound(m, a, k, t):
    spec = KernelSpec(m, a, k)
    rng = np.random.default_rng(k)
    ys = rng.uniform(-3, 3, (k, 1))
    assert eval_kernel(spec, [0.0], ys, t) == pytest.approx(size_bound(spec, [0.0], ys, t), rel=1e-12)


def test_theorem_hypotheses():
    spec = KernelSpec(1.0, 1.0, 2)
    assert spec.theorem_hypotheses(6.0)
    assert not spec.theorem_hypotheses(4.0)
    assert not KernelSpec(1.0, 3.0, 2).theorem_hypotheses(6.0)


@pytest.mark.parametrize("kw", [{"m": 0}, {"alpha": -1}, {"kappa": 1}, {"family": "x"}, {"amplitude": 0}])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        KernelSpec(**kw)


def test_json_round_trip():
    spec = KernelSpec(2.0, 0.5, 3, "product_gaussian", 1.5)
    assert KernelSpec.from_json(spec.to_json()) == spec


def test_zero_step_rejected():
    from gstar.kernel import holder_ratio
    with pytest.raises(ValueError):
        holder_ratio(KernelSpec(), [0.0], [[1.0], [2.0]], 1.0, 0, [0.0])
    assert math.isfinite(holder_ratio(KernelSpec(), [0.0], [[1.0], [2.0]], 1.0, 1, [0.1]))
