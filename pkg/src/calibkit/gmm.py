"""Two-class Gaussian mixture with logistic models: a world where the
calibration function and the expected miscalibration are known exactly.

Classes are equally likely; ``X | Y=-1 ~ N(-1, 1)`` and ``X | Y=+1 ~ N(1, 1)``.
Component 0 of every prediction is the probability of ``Y = -1`` and
component 1 that of ``Y = +1``; label 0 encodes ``Y = -1``.

A logistic model predicts ``(sigmoid(b0 + b1 x), 1 - sigmoid(b0 + b1 x))``.
``(0, -2)`` reproduces the posterior exactly, ``(0, 0)`` is the calibrated
constant model and ``(1, 1)`` is the standard miscalibrated example.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats
from scipy.special import expit, logit

from .binning import Partition
from .errors import DomainError, NonFiniteInput, NonInvertibleModel, QuadratureFailure
from .estimator import QUAD_TOLERANCE, analytic_binned_miscalibration
from .types import DistanceKind, LabeledDataset, distance

X_RANGE = (-12.0, 12.0)


@dataclass(frozen=True)
class GmmModel:
    beta0: float
    beta1: float

    @property
    def invertible(self) -> bool:
        return self.beta1 != 0.0

    def to_dict(self):
        return {"beta0": self.beta0, "beta1": self.beta1}


PERFECT = GmmModel(0.0, -2.0)
CONSTANT = GmmModel(0.0, 0.0)
UNCALIBRATED = GmmModel(1.0, 1.0)


def _finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput(f"non-finite input {x!r}")
    return x


def gmm_sample(n: int, rng: np.random.Generator):
    """Draw ``n`` pairs; returns ``(x, y)`` arrays with ``y`` in {0, 1}."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    y = rng.integers(0, 2, size=n)
    x = rng.standard_normal(n) + (2.0 * y - 1.0)
    return x, y


def mixture_pdf(x):
    return 0.5 * stats.norm.pdf(x, -1.0, 1.0) + 0.5 * stats.norm.pdf(x, 1.0, 1.0)


def gmm_posterior(x) -> np.ndarray:
    """``(P(Y=-1 | x), P(Y=+1 | x))``, stacked along the last axis."""
    x = _finite(x)
    return np.stack([expit(-2.0 * x), expit(2.0 * x)], axis=-1)


def logistic_predict(model: GmmModel, x) -> np.ndarray:
    x = _finite(x)
    t = model.beta0 + model.beta1 * x
    return np.stack([expit(t), expit(-t)], axis=-1)


def simulate(model: GmmModel, n: int, rng: np.random.Generator) -> LabeledDataset:
    """Sample inputs and labels, return the model's predictions with labels."""
    x, y = gmm_sample(n, rng)
    return LabeledDataset(logistic_predict(model, x), y)


def level_set_input(model: GmmModel, mu0) -> np.ndarray:
    """The input ``x`` at which the model predicts ``mu0`` for class 0."""
    mu0 = np.asarray(mu0, dtype=float)
    if np.any((mu0 <= 0.0) | (mu0 >= 1.0)):
        raise DomainError("calibration function is only defined on the open simplex")
    return (logit(mu0) - model.beta0) / model.beta1


def analytic_calibration(model: GmmModel, mu) -> np.ndarray:
    """True outcome distribution given that the model predicted ``mu``.

    For ``beta1 != 0`` the prediction is attained at a single input, so the
    answer is the posterior there.  For ``beta1 == 0`` the model always
    predicts the same vector and the answer is the class marginal
    ``(1/2, 1/2)``; any other ``mu`` is never predicted.
    """
    mu = np.asarray(mu, dtype=float)
    if not model.invertible:
        predicted = expit(model.beta0)
        if mu.shape[-1] != 2 or not np.allclose(mu[..., 0], predicted, rtol=0, atol=1e-12):
            raise NonInvertibleModel(
                f"constant model {model} never predicts {mu.tolist()}"
            )
        return np.broadcast_to(np.array([0.5, 0.5]), mu.shape).copy()
    return gmm_posterior(level_set_input(model, mu[..., 0]))


def calibrated_positive(model: GmmModel, x):
    """``r(g(x))`` on the positive-class component, as a function of ``x``."""
    x = np.asarray(x, dtype=float)
    if not model.invertible:
        return np.full_like(x, 0.5)
    # the level set of g(x) is {x} itself, so r(g(x)) is the posterior at x
    return expit(2.0 * x)


def _quad(f, tol):
    a, b = X_RANGE
    val, err = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=500)
    if err > tol:
        raise QuadratureFailure(f"integration error {err:g} above {tol:g}")
    return val


def analytic_eta(model: GmmModel, kind: DistanceKind = DistanceKind.TOTAL_VARIATION,
                 tol: float = QUAD_TOLERANCE) -> float:
    """Expected miscalibration ``E[d(r(g(X)), g(X))]`` by adaptive quadrature."""

    def integrand(x):
        g1 = expit(-(model.beta0 + model.beta1 * x))
        r1 = float(calibrated_positive(model, x))
        return distance(kind, [1.0 - r1, r1], [1.0 - g1, g1]) * mixture_pdf(x)

    return float(_quad(integrand, tol))


def monte_carlo_eta(model: GmmModel, kind: DistanceKind, n: int,
                    rng: np.random.Generator, chunk: int = 1_000_000) -> float:
    """Plain Monte Carlo estimate of the expected miscalibration."""
    total = 0.0
    done = 0
    while done < n:
        size = min(chunk, n - done)
        x, _ = gmm_sample(size, rng)
        g = logistic_predict(model, x)
        r1 = calibrated_positive(model, x)
        r = np.stack([1.0 - r1, r1], axis=-1)
        total += float(np.sum(distance(kind, r, g)))
        done += size
    return total / n


def binned_eta(model: GmmModel, partition: Partition,
               kind: DistanceKind = DistanceKind.TOTAL_VARIATION,
               tol: float = QUAD_TOLERANCE) -> float:
    """Large-sample limit of the binned estimator for a fixed 1-d partition."""
    return analytic_binned_miscalibration(
        curve=lambda x: float(calibrated_positive(model, x)),
        weight=lambda x: float(mixture_pdf(x)),
        partition=partition,
        kind=kind,
        predict=lambda x: float(expit(-(model.beta0 + model.beta1 * x))),
        domain=X_RANGE,
        tol=tol,
    )


def analytic_deviation_curve(model: GmmModel, points: int = 101):
    """Samples ``(t, r(t) - t)`` of the positive-class deviation over the
    range of predictions the model can make.

    For the constant model this is a single point.
    """
    if not model.invertible:
        t = float(expit(-model.beta0))
        return [(t, 0.5 - t)]
    t = np.linspace(0.0, 1.0, points + 2)[1:-1]
    r = analytic_calibration(model, np.stack([1.0 - t, t], axis=-1))[..., 1]
    return [(float(a), float(b - a)) for a, b in zip(t, r)]
