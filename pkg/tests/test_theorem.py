import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videodeg.rng import SeededRng
from videodeg.theorem import (
    BUILTIN_MODELS,
    DifferentiableModel,
    ModelError,
    builtin_problem,
    constant_model,
    cubic_model,
    finite_difference_check,
    gap_slope,
    linear_model,
    mlp_model,
    quadratic_model,
    standard_noise,
    verify_theorem,
)

ETAS = (0.1, 0.05, 0.025)


def checks_for(name, sampler="matched", weight=1.0, n_mc=100_000, seed=0):
    model, data = builtin_problem(name, seed=seed)
    return [
        verify_theorem(model, data, eta, n_mc, SeededRng(seed).spawn("verify", name), sampler=sampler, curvature_weight=weight)
        for eta in ETAS
    ]


def test_linear_closed_form():
    # E||W(x+z) - y||^2 = ||Wx - y||^2 + eta^2 ||W||_F^2
    rng = SeededRng(1)
    W = rng.normal((2, 3))
    model = linear_model(W)
    x, y = rng.normal(3), rng.normal(2)
    c = verify_theorem(model, [(x, y)], 0.3, 100_000, rng.spawn("mc"))
    assert c.rhs == pytest.approx(float(np.sum((W @ x - y) ** 2) + 0.09 * np.sum(W**2)), rel=1e-12)


@pytest.mark.parametrize("sampler", ["matched", "plain"])
def test_linear_gap_within_three_se(sampler):
    for i in range(20):
        rng = SeededRng(100 + i)
        k, d = 1 + rng.integers(0, 3), 1 + rng.integers(0, 4)
        model = linear_model(rng.normal((k, d)), rng.normal(k))
        data = [(rng.normal(d), rng.normal(k)) for _ in range(4)]
        c = verify_theorem(model, data, 0.2, 100_000, rng.spawn("mc"), sampler=sampler)
        assert c.abs_gap < 3 * c.stderr or c.abs_gap < 1e-12 * max(1.0, c.rhs)


def test_constant_model_ignores_noise():
    model = constant_model(np.array([0.5, -1.0]), d=3)
    data = [(np.zeros(3), np.array([1.0, 1.0])), (np.ones(3), np.array([0.0, 2.0]))]
    c = verify_theorem(model, data, 0.5, 2000, SeededRng(0))
    clean = (0.25 + 4 + 0.25 + 9) / 2
    assert c.lhs == clean and c.rhs == clean and c.abs_gap == 0


@pytest.mark.parametrize("name", ["quadratic", "cubic", "mlp-tiny"])
def test_gap_shrinks_as_eta_halves(name):
    gaps = [c.abs_gap for c in checks_for(name)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_cubic_gap_slope():
    assert gap_slope(checks_for("cubic")) >= 2.5


def test_printed_half_coefficient_leaves_second_order_residual():
    # with 1/2 on the curvature term an O(eta^2) part of the gap survives
    assert gap_slope(checks_for("cubic", weight=0.5)) < 2.5


def test_matched_noise_moments():
    eps = standard_noise(SeededRng(3), 10_000, 4)
    assert np.allclose(eps.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(eps.T @ eps / 10_000, np.eye(4), atol=1e-10)
    with pytest.raises(ValueError):
        standard_noise(SeededRng(3), 11, 2)
    with pytest.raises(ValueError):
        standard_noise(SeededRng(3), 10, 2, "sobol")


def test_finite_difference_examples():
    lin = linear_model(np.array([[1.0, -2.0]]))
    assert finite_difference_check(lin, [0.3, 0.7]) < 1e-8
    assert not lin.hessian_diag(np.zeros(2)).any()
    quad = quadratic_model(1)
    d2 = (quad.fn(np.array([2.0 + 1e-4])) - 2 * quad.fn(np.array([2.0])) + quad.fn(np.array([2.0 - 1e-4]))) / 1e-8
    assert abs(d2[0] - 2.0) < 1e-4
    cub = cubic_model()
    d2 = (cub.fn(np.array([1.0001])) - 2 * cub.fn(np.array([1.0])) + cub.fn(np.array([0.9999]))) / 1e-8
    assert abs(d2[0] - 6.0) < 1e-4
    assert finite_difference_check(cub, [1.0]) < 1e-4


def test_inconsistent_derivatives_raise():
    bad = DifferentiableModel(
        "bad", 1, 1,
        fn=lambda x: np.asarray(x) ** 3,
        jacobian=lambda x: np.reshape(3.0 * np.asarray(x) ** 2, (1, 1)),
        hessian_diag=lambda x: np.reshape(3.0 * np.asarray(x), (1, 1)),
    )  # fmt: skip
    with pytest.raises(ModelError):
        verify_theorem(bad, [(np.array([1.0]), np.array([0.0]))], 0.1, 1000, SeededRng(0))


def test_argument_validation():
    model, data = builtin_problem("cubic")
    with pytest.raises(ValueError):
        verify_theorem(model, data, 0.0, 1000, SeededRng(0))
    with pytest.raises(ValueError):
        verify_theorem(model, data, 0.1, 999, SeededRng(0))
    with pytest.raises(ValueError):
        verify_theorem(model, [], 0.1, 1000, SeededRng(0))
    with pytest.raises(ValueError):
        builtin_problem("resnet")


@pytest.mark.parametrize("name", BUILTIN_MODELS)
def test_builtin_models_are_consistent(name):
    model, data = builtin_problem(name, n_points=5)
    assert len(data) == 5
    for x, _ in data:
        assert finite_difference_check(model, x) < 1e-4


@given(st.integers(0, 2**32), st.integers(1, 4), st.integers(1, 5))
@settings(max_examples=30, deadline=None)
def test_random_mlp_derivatives(seed, k, d):
    rng = SeededRng(seed)
    model = mlp_model(rng.normal((6, d)), rng.normal(6), rng.normal((k, 6)), rng.normal(k))
    assert finite_difference_check(model, rng.uniform(-1, 1, d)) < 1e-4


def test_z_score():
    model, data = builtin_problem("linear")
    c = verify_theorem(model, data, 0.1, 10_000, SeededRng(0), sampler="plain")
    assert c.z_score == pytest.approx(c.abs_gap / c.stderr)
    assert math.isfinite(c.z_score)
