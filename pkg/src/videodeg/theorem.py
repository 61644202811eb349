"""Monte-Carlo check of the noise-injection regularization identity.

For noise ``z`` with zero mean and covariance ``eta^2 I``::

    E_z E_(x,y) ||f(x + z) - y||^2
        = E ||f(x) - y||^2
          + eta^2 E[ ||df/dx||_F^2 + (f(x) - y)^T (d^2 f / dx_i^2 summed over i) ]
          + O(eta^4)

(odd moments of symmetric noise vanish, so the remainder is fourth order).
The left side is estimated by sampling; the right side is evaluated from
the model's analytic derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .rng import SeededRng


class ModelError(ValueError):
    """A model's derivative maps disagree with its evaluation map."""


@dataclass
class DifferentiableModel:
    """``fn`` maps ``(..., d) -> (..., k)``; derivatives are per point.

    ``jacobian(x)`` returns ``(k, d)``; ``hessian_diag(x)`` returns ``(k, d)``
    holding ``d^2 f_k / dx_i^2``.
    """

    name: str
    d: int
    k: int
    fn: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    hessian_diag: Callable[[np.ndarray], np.ndarray]


def finite_difference_check(model: DifferentiableModel, x, step: float = 1e-4) -> float:
    """Worst error of the analytic derivatives against central differences.

    Errors are relative for derivatives of magnitude above one and absolute
    below.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=np.float64).reshape(model.d)
    f0 = np.asarray(model.fn(x)).reshape(model.k)
    jac = np.asarray(model.jacobian(x)).reshape(model.k, model.d)
    hess = np.asarray(model.hessian_diag(x)).reshape(model.k, model.d)
    worst = 0.0
    for i in range(model.d):
        e = np.zeros(model.d)
        e[i] = step
        fp = np.asarray(model.fn(x + e)).reshape(model.k)
        fm = np.asarray(model.fn(x - e)).reshape(model.k)
        d1 = (fp - fm) / (2 * step)
        d2 = (fp - 2 * f0 + fm) / (step * step)
        worst = max(
            worst,
            float(np.max(np.abs(jac[:, i] - d1) / np.maximum(1.0, np.abs(jac[:, i])))),
            float(np.max(np.abs(hess[:, i] - d2) / np.maximum(1.0, np.abs(hess[:, i])))),
        )
    return worst


class TheoremCheck(NamedTuple):
    eta: float
    lhs: float
    rhs: float
    abs_gap: float
    stderr: float

    @property
    def z_score(self) -> float:
        return self.abs_gap / self.stderr if self.stderr > 0 else (0.0 if self.abs_gap == 0 else math.inf)


def standard_noise(rng: SeededRng, n: int, d: int, sampler: str = "matched") -> np.ndarray:
    """``(n, d)`` draws with zero mean and identity covariance.

    ``plain`` is i.i.d. normal. ``matched`` uses antithetic pairs (all odd
    sample moments vanish) and whitens the sample so its second moment is
    exactly the identity.
    """
    if sampler == "plain":
        return rng.normal((n, d))
    if sampler != "matched":
        raise ValueError(f"unknown sampler {sampler!r}")
    if n % 2:
        raise ValueError("matched sampling needs an even sample count")
    half = rng.normal((n // 2, d))
    eps = np.concatenate([half, -half])
    cov = eps.T @ eps / n
    chol = np.linalg.cholesky(cov)
    return np.linalg.solve(chol, eps.T).T


def verify_theorem(
    model: DifferentiableModel,
    dataset: Sequence[tuple[np.ndarray, np.ndarray]],
    eta: float,
    n_mc: int,
    rng: SeededRng,
    sampler: str = "matched",
    curvature_weight: float = 1.0,
    check_derivatives: bool = True,
) -> TheoremCheck:
    """Compare the sampled noisy loss against its second-order expansion.

    ``curvature_weight`` scales the ``(f - y)^T (d^2 f) 1`` term; 1 is the
    exact second-order coefficient for a loss without a leading 1/2.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    if not dataset:
        raise ValueError("empty dataset")
    xs = [np.asarray(x, dtype=np.float64).reshape(model.d) for x, _ in dataset]
    ys = [np.asarray(y, dtype=np.float64).reshape(model.k) for _, y in dataset]
    if check_derivatives:
        for x in xs:
            err = finite_difference_check(model, x)
            if err > 1e-4:
                raise ModelError(f"{model.name}: derivative mismatch {err:.3g} at x={x}")

    eps = standard_noise(rng, n_mc, model.d, sampler)
    per_sample = np.zeros(n_mc)
    clean = 0.0
    reg = 0.0
    for x, y in zip(xs, ys):
        out = np.asarray(model.fn(x + eta * eps)).reshape(n_mc, model.k)
        per_sample += np.sum((out - y) ** 2, axis=1)
        fx = np.asarray(model.fn(x)).reshape(model.k)
        jac = np.asarray(model.jacobian(x)).reshape(model.k, model.d)
        hess = np.asarray(model.hessian_diag(x)).reshape(model.k, model.d)
        clean += float(np.sum((fx - y) ** 2))
        reg += float(np.sum(jac**2) + curvature_weight * (fx - y) @ hess.sum(axis=1))
    m = len(xs)
    per_sample /= m
    lhs = float(np.mean(per_sample))
    rhs = clean / m + eta**2 * reg / m
    if sampler == "matched":
        pairs = 0.5 * (per_sample[: n_mc // 2] + per_sample[n_mc // 2 :])
        stderr = float(np.std(pairs, ddof=1) / math.sqrt(pairs.size))
    else:
        stderr = float(np.std(per_sample, ddof=1) / math.sqrt(n_mc))
    return TheoremCheck(float(eta), lhs, rhs, abs(lhs - rhs), stderr)


def gap_slope(checks: Sequence[TheoremCheck]) -> float:
    """Least-squares slope of log(abs_gap) against log(eta)."""
    etas = np.log([c.eta for c in checks])
    gaps = np.log([max(c.abs_gap, 1e-300) for c in checks])
    return float(np.polyfit(etas, gaps, 1)[0])


# --- builtin models -------------------------------------------------------


def linear_model(weights: np.ndarray, bias: np.ndarray | None = None) -> DifferentiableModel:
    W = np.asarray(weights, dtype=np.float64)
    k, d = W.shape
    b = np.zeros(k) if bias is None else np.asarray(bias, dtype=np.float64)
    return DifferentiableModel(
        "linear",
        d,
        k,
        fn=lambda x: np.asarray(x) @ W.T + b,
        jacobian=lambda x: W.copy(),
        hessian_diag=lambda x: np.zeros((k, d)),
    )


def constant_model(value: np.ndarray, d: int) -> DifferentiableModel:
    c = np.atleast_1d(np.asarray(value, dtype=np.float64))
    k = c.size
    return DifferentiableModel(
        "constant",
        d,
        k,
        fn=lambda x: np.broadcast_to(c, np.shape(x)[:-1] + (k,)).copy(),
        jacobian=lambda x: np.zeros((k, d)),
        hessian_diag=lambda x: np.zeros((k, d)),
    )


def quadratic_model(d: int = 3) -> DifferentiableModel:
    """Elementwise square."""
    return DifferentiableModel(
        "quadratic",
        d,
        d,
        fn=lambda x: np.asarray(x) ** 2,
        jacobian=lambda x: np.diag(2.0 * np.asarray(x).reshape(d)),
        hessian_diag=lambda x: 2.0 * np.eye(d),
    )


def cubic_model() -> DifferentiableModel:
    """Scalar ``f(x) = x^3``."""
    return DifferentiableModel(
        "cubic",
        1,
        1,
        fn=lambda x: np.asarray(x) ** 3,
        jacobian=lambda x: np.reshape(3.0 * np.asarray(x) ** 2, (1, 1)),
        hessian_diag=lambda x: np.reshape(6.0 * np.asarray(x), (1, 1)),
    )


def mlp_model(w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray) -> DifferentiableModel:
    """One hidden tanh layer: ``w2 tanh(w1 x + b1) + b2``."""
    w1, b1, w2, b2 = (np.asarray(a, dtype=np.float64) for a in (w1, b1, w2, b2))
    d, k = w1.shape[1], w2.shape[0]

    def fn(x):
        return np.tanh(np.asarray(x) @ w1.T + b1) @ w2.T + b2

    def jacobian(x):
        t = np.tanh(w1 @ np.asarray(x).reshape(d) + b1)
        return (w2 * (1 - t * t)) @ w1

    def hessian_diag(x):
        t = np.tanh(w1 @ np.asarray(x).reshape(d) + b1)
        s2 = -2.0 * t * (1 - t * t)
        return (w2 * s2) @ (w1 * w1)

    return DifferentiableModel("mlp-tiny", d, k, fn, jacobian, hessian_diag)


BUILTIN_MODELS = ("linear", "quadratic", "cubic", "mlp-tiny")


def builtin_problem(name: str, seed: int = 0, n_points: int = 8):
    """A model from ``BUILTIN_MODELS`` with a fixed synthetic dataset."""
    rng = SeededRng(seed).spawn("theorem", name)
    if name == "linear":
        model = linear_model(rng.normal((3, 4)), rng.normal(3))
    elif name == "quadratic":
        model = quadratic_model(3)
    elif name == "cubic":
        model = cubic_model()
    elif name == "mlp-tiny":
        model = mlp_model(rng.normal((8, 3)), rng.normal(8) * 0.1, rng.normal((2, 8)) * 0.5, rng.normal(2) * 0.1)
    else:
        raise ValueError(f"unknown model {name!r}; choose from {BUILTIN_MODELS}")
    dataset = []
    for _ in range(n_points):
        x = rng.uniform(-1.0, 1.0, model.d)
        y = np.asarray(model.fn(x)).reshape(model.k) + 0.3 * rng.normal(model.k)
        dataset.append((x, y))
    return model, dataset
