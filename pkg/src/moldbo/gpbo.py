"""Gaussian-process surrogate and acquisition over the learned latent space.

A Matern smoothness-5/2 kernel with one shared lengthscale models the
standardized targets.  Hyperparameters maximize the log marginal likelihood
by multi-start quasi-Newton ascent in log space with an analytic gradient.
Candidates are proposed by maximizing the upper confidence bound inside a
box spanning the observed latents plus a one-standard-deviation margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

SQRT5 = math.sqrt(5.0)
JITTERS = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
LOG_BOUNDS = (
    (math.log(1e-4), math.log(1e4)),   # signal variance
    (math.log(1e-3), math.log(1e3)),   # lengthscale
    (math.log(1e-8), math.log(1.0)),   # noise variance
)


class GpError(ValueError):
    """Base class for surrogate errors."""


class CholeskyFailureError(GpError):
    """Raised when no jitter on the ladder makes the kernel factorizable."""


class TooFewPointsError(GpError):
    """Raised when a latent box is requested on fewer than two points."""


@dataclass(frozen=True)
class KernelParams:
    """Positive kernel hyperparameters."""

    signal_variance: float
    lengthscale: float
    noise_variance: float

    def as_log_vector(self) -> np.ndarray:
        return np.log(
            [self.signal_variance, self.lengthscale, self.noise_variance]
        )

    @staticmethod
    def from_log_vector(u) -> "KernelParams":
        s, l, n = np.exp(np.asarray(u, dtype=float))
        return KernelParams(float(s), float(l), float(n))


DEGENERATE_PARAMS = KernelParams(1.0, 1.0, 1e-6)


def matern_kernel(z1, z2, params: KernelParams) -> float:
    """Matern 5/2 covariance between two latent points."""
    r = float(np.linalg.norm(np.asarray(z1, float) - np.asarray(z2, float)))
    t = SQRT5 * r / params.lengthscale
    return params.signal_variance * (1.0 + t + t * t / 3.0) * math.exp(-t)


def _kernel_matrix(dist: np.ndarray, params: KernelParams) -> np.ndarray:
    t = SQRT5 * dist / params.lengthscale
    return params.signal_variance * (1.0 + t + t * t / 3.0) * np.exp(-t)


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.maximum((diff * diff).sum(axis=2), 0.0))


@dataclass
class GpState:
    """Fitted surrogate: training latents, standardized targets, factorization.

    Predictions are in the standardized target scale; ``y_mean`` and
    ``y_std`` convert back to raw objective units when needed.
    """

    z: np.ndarray
    y: np.ndarray
    y_mean: float
    y_std: float
    params: KernelParams
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    lml: float
    degenerate: bool = False

    def destandardize(self, mean, variance):
        return (
            np.asarray(mean) * self.y_std + self.y_mean,
            np.asarray(variance) * self.y_std**2,
        )


def _chol_with_ladder(kn: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return cholesky(kn, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(kn.shape[0])
    for jitter in JITTERS:
        try:
            return cholesky(kn + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            continue
    raise CholeskyFailureError("kernel matrix not factorizable after max jitter")


def log_marginal_likelihood(
    dist: np.ndarray, y: np.ndarray, u: np.ndarray
) -> tuple[float, np.ndarray]:
    """LML and its gradient with respect to log hyperparameters.

    ``dist`` is the precomputed pairwise distance matrix of the training
    latents and ``u`` = (log signal variance, log lengthscale, log noise
    variance).  Returns (-inf, zeros) when the factorization fails, which
    lets line searches back off instead of aborting.
    """
    params = KernelParams.from_log_vector(u)
    n = y.size
    k = _kernel_matrix(dist, params)
    kn = k + params.noise_variance * np.eye(n)
    try:
        low, _ = _chol_with_ladder(kn)
    except CholeskyFailureError:
        return -np.inf, np.zeros(3)
    alpha = cho_solve((low, True), y)
    lml = (
        -0.5 * float(y @ alpha)
        - float(np.log(np.diag(low)).sum())
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    # tr((alpha alpha^T - Kn^-1) dK) per log parameter
    kn_inv = cho_solve((low, True), np.eye(n))
    outer = np.outer(alpha, alpha) - kn_inv

    t = SQRT5 * dist / params.lengthscale
    decay = np.exp(-t)
    dk_dlog_signal = k
    dk_dlog_length = (
        params.signal_variance * (t * t / 3.0) * (1.0 + t) * decay
    )
    grad = np.array(
        [
            0.5 * float((outer * dk_dlog_signal).sum()),
            0.5 * float((outer * dk_dlog_length).sum()),
            0.5 * params.noise_variance * float(np.trace(outer)),
        ]
    )
    return lml, grad


def fit(
    z,
    y,
    restarts: int = 2,
    rng: np.random.Generator | None = None,
    previous: KernelParams | None = None,
) -> GpState:
    """Fit the surrogate by multi-start gradient ascent on the LML.

    Starts are the previous parameters (when given), a median-distance
    heuristic, and ``restarts`` random draws.  The returned parameters are
    the best over all start points and all optimizer results, so including
    the previous parameters can never lose likelihood against them.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    y_raw = np.asarray(y, dtype=float)
    rng = rng or np.random.default_rng(0)
    n = y_raw.size

    y_mean = float(y_raw.mean())
    y_scale = float(y_raw.std())
    if y_scale < 1e-12:
        # constant targets carry no signal; fixed fallback hyperparameters
        y_std = 1.0
        ys = y_raw - y_mean
        return _finalize(z, ys, y_mean, y_std, DEGENERATE_PARAMS, degenerate=True)
    y_std = y_scale
    ys = (y_raw - y_mean) / y_std

    dist = _pairwise_distances(z, z)
    positive = dist[dist > 0]
    median = float(np.median(positive)) if positive.size else 1.0
    median = max(median, 1e-3)

    starts = []
    if previous is not None:
        starts.append(previous.as_log_vector())
    starts.append(np.array([0.0, math.log(median), math.log(1e-2)]))
    for _ in range(restarts):
        starts.append(
            np.array(
                [
                    rng.uniform(-2.0, 2.0),
                    math.log(median) + rng.uniform(-2.0, 2.0),
                    rng.uniform(math.log(1e-6), math.log(1e-1)),
                ]
            )
        )

    def objective(u):
        value, grad = log_marginal_likelihood(dist, ys, u)
        if not np.isfinite(value):
            return 1e12, np.zeros(3)
        return -value, -grad

    best_u = None
    best_value = -np.inf
    for u0 in starts:
        u0 = np.clip(u0, [b[0] for b in LOG_BOUNDS], [b[1] for b in LOG_BOUNDS])
        start_value, _ = log_marginal_likelihood(dist, ys, u0)
        if start_value > best_value:
            best_value, best_u = start_value, u0
        result = minimize(
            objective, u0, jac=True, method="L-BFGS-B", bounds=LOG_BOUNDS
        )
        value, _ = log_marginal_likelihood(dist, ys, result.x)
        if value > best_value:
            best_value, best_u = value, result.x
    params = KernelParams.from_log_vector(best_u)
    return _finalize(z, ys, y_mean, y_std, params)


def _finalize(
    z, ys, y_mean, y_std, params: KernelParams, degenerate: bool = False
) -> GpState:
    dist = _pairwise_distances(z, z)
    kn = _kernel_matrix(dist, params) + params.noise_variance * np.eye(ys.size)
    low, jitter = _chol_with_ladder(kn)
    alpha = cho_solve((low, True), ys)
    lml = (
        -0.5 * float(ys @ alpha)
        - float(np.log(np.diag(low)).sum())
        - 0.5 * ys.size * math.log(2.0 * math.pi)
    )
    return GpState(
        z=z,
        y=ys,
        y_mean=y_mean,
        y_std=y_std,
        params=params,
        chol=low,
        alpha=alpha,
        jitter=jitter,
        lml=lml,
        degenerate=degenerate,
    )


def predict(state: GpState, z) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance (standardized scale) at query points.

    Accepts one latent row or a batch; returns matching-shaped arrays with
    the variance floored at zero.
    """
    single = np.asarray(z).ndim == 1
    zq = np.atleast_2d(np.asarray(z, dtype=float))
    dist = _pairwise_distances(zq, state.z)
    k_star = _kernel_matrix(dist, state.params)
    mean = k_star @ state.alpha
    v = solve_triangular(state.chol, k_star.T, lower=True)
    variance = np.maximum(
        state.params.signal_variance - (v * v).sum(axis=0), 0.0
    )
    if single:
        return float(mean[0]), float(variance[0])
    return mean, variance


@dataclass(frozen=True)
class LatentBox:
    """Axis-aligned acquisition bounds in latent space."""

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, z) -> bool:
        z = np.asarray(z)
        return bool(np.all(z >= self.lo - 1e-12) and np.all(z <= self.hi + 1e-12))

    def width(self) -> np.ndarray:
        return self.hi - self.lo


def latent_box(z) -> LatentBox:
    """Observed per-dimension range widened by one population standard deviation.

    Dimensions with zero spread are widened symmetrically to a total width
    of 1e-3 so the box always has volume.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[0] < 2:
        raise TooFewPointsError("latent box needs at least two points")
    sigma = z.std(axis=0)
    lo = z.min(axis=0) - sigma
    hi = z.max(axis=0) + sigma
    flat = hi <= lo
    lo[flat] -= 5e-4
    hi[flat] += 5e-4
    return LatentBox(lo=lo, hi=hi)


def ucb(mean, variance, kappa: float) -> np.ndarray | float:
    """Upper confidence bound: mean plus kappa standard deviations."""
    return mean + kappa * np.sqrt(np.maximum(variance, 0.0))


def _ucb_and_gradient(state: GpState, z: np.ndarray, kappa: float):
    diff = z[None, :] - state.z
    r = np.sqrt(np.maximum((diff * diff).sum(axis=1), 0.0))
    params = state.params
    t = SQRT5 * r / params.lengthscale
    decay = np.exp(-t)
    k_star = params.signal_variance * (1.0 + t + t * t / 3.0) * decay
    # dk/dr divided by r stays finite at r = 0
    radial = (
        -(5.0 / 3.0)
        * params.signal_variance
        / params.lengthscale**2
        * (1.0 + t)
        * decay
    )
    grad_k = radial[:, None] * diff

    mean = float(k_star @ state.alpha)
    grad_mean = grad_k.T @ state.alpha

    beta = cho_solve((state.chol, True), k_star)
    variance = max(params.signal_variance - float(k_star @ beta), 0.0)
    grad_variance = -2.0 * (grad_k.T @ beta)

    value = mean + kappa * math.sqrt(variance)
    if variance > 1e-12:
        grad = grad_mean + kappa * grad_variance / (2.0 * math.sqrt(variance))
    else:
        grad = grad_mean
    return value, grad


def optimize_acquisition(
    state: GpState,
    box: LatentBox,
    kappa: float,
    rng: np.random.Generator,
    n_starts: int = 10,
    incumbents=None,
) -> np.ndarray:
    """Maximize the UCB inside the box by multi-start projected ascent.

    Starts are uniform draws in the box, with the last two replaced by small
    perturbations of the supplied incumbent latents when available.  Ties
    between converged starts resolve to the lowest start index.
    """
    dim = box.lo.size
    starts = [
        rng.uniform(box.lo, box.hi) for _ in range(n_starts)
    ]
    if incumbents is not None:
        incumbents = np.atleast_2d(np.asarray(incumbents, dtype=float))
        scale = 0.01 * box.width()
        n_seedable = min(2, len(incumbents), n_starts)
        for s in range(n_seedable):
            jittered = incumbents[s % len(incumbents)] + scale * rng.standard_normal(dim)
            starts[n_starts - 1 - s] = np.clip(jittered, box.lo, box.hi)

    bounds = list(zip(box.lo, box.hi))

    def objective(z):
        value, grad = _ucb_and_gradient(state, z, kappa)
        return -value, -grad

    best_z = None
    best_value = -np.inf
    for z0 in starts:
        result = minimize(
            objective, z0, jac=True, method="L-BFGS-B", bounds=bounds
        )
        z_final = np.clip(result.x, box.lo, box.hi)
        value, _ = _ucb_and_gradient(state, z_final, kappa)
        if value > best_value:
            best_value = value
            best_z = z_final
    return best_z
