"""Adversarial viability of subspaces: gradient directions, their covariance
spectrum, and the (alpha, delta) guarantees attached to eigen- and random
subspaces.

A subspace V is (alpha, delta)-viable when the projected unit gradient keeps
norm at least alpha with probability 1 - delta over data conditioned on the
positive region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    EigenFailure,
    EmptyConditional,
    TOutOfRange,
    ZeroGradient,
)
from .geometry import Subspace, orthonormalize, projection_norm
from .regions import GRAD_TOL, Region
from .samplers import sample_conditional


def gradient_direction(region: Region, x) -> np.ndarray:
    """Unit gradient direction eta(x) = grad f(x)/|grad f(x)|."""
    g = region.gradient(x)
    nrm = np.linalg.norm(g)
    if nrm < GRAD_TOL:
        raise ZeroGradient("gradient norm below 1e-12")
    return g / nrm


def gradient_directions_many(region: Region, x: np.ndarray) -> np.ndarray:
    g = region.gradient_many(np.asarray(x, dtype=float))
    nrm = np.linalg.norm(g, axis=1)
    if np.any(nrm < GRAD_TOL):
        raise ZeroGradient("gradient norm below 1e-12 at a sampled point")
    return g / nrm[:, None]


@dataclass(frozen=True)
class GradientCovariance:
    """Empirical second moment of unit gradient directions on C'.

    Centered form matches the experimental protocol; the uncentered form
    E[eta eta^T] has unit trace, which is the semantics the eigen-subspace
    viability formula assumes.
    """

    matrix: np.ndarray
    n_samples: int
    centered: bool

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if np.max(np.abs(m - m.T)) > 1e-10:
            raise EigenFailure("covariance is not symmetric within 1e-10")
        if not self.centered:
            tr = float(np.trace(m))
            if tr > 1.0 + 1e-8:
                raise EigenFailure(f"uncentered unit-direction trace {tr} exceeds 1")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def estimate_gradient_covariance(
    region: Region,
    sampler,
    n: int,
    rng: np.random.Generator,
    centered: bool = True,
) -> GradientCovariance:
    """Empirical covariance of eta(X) over n draws conditioned on X in C'."""
    if n < 2:
        raise EmptyConditional("need at least 2 conditioned samples")
    xs = sample_conditional(region, sampler, n, rng)
    etas = gradient_directions_many(region, xs)
    if centered:
        mean = etas.mean(axis=0)
        dev = etas - mean
        mat = dev.T @ dev / (n - 1)
    else:
        mat = etas.T @ etas / n
    return GradientCovariance(matrix=mat, n_samples=n, centered=centered)


def eigen_subspace(cov: GradientCovariance, k: int) -> tuple[Subspace, float]:
    """Top-k eigenvector span of the covariance and the eigenvalue mass s_k.

    Uses a dense symmetric eigendecomposition; the residual |Sigma v - lambda v|
    must stay below 1e-6 |Sigma| or EigenFailure is raised.  For uncentered
    unit-direction covariances s_k is clamped into [0, 1].
    """
    d = cov.dim
    if not (1 <= k <= d):
        raise AlphaOutOfRange(f"need 1 <= k <= d, got k={k}")
    lam, vecs = np.linalg.eigh(cov.matrix)
    lam = lam[::-1]
    vecs = vecs[:, ::-1]
    scale = max(float(np.linalg.norm(cov.matrix, 2)), 1e-300)
    resid = np.linalg.norm(cov.matrix @ vecs - vecs * lam, axis=0).max()
    if resid > 1e-6 * scale:
        raise EigenFailure(f"eigen residual {resid:.3e} exceeds 1e-6 * |Sigma|")
    s_k = float(lam[:k].sum())
    if not cov.centered:
        s_k = min(max(s_k, 0.0), 1.0)
    return orthonormalize(vecs[:, :k]), s_k


def svd_viability_delta(s_k: float, alpha: float) -> float:
    """delta = (1 - s_k)/(1 - alpha^2) for the top-k eigen-subspace.

    Valid for 0 < alpha < sqrt(s_k) <= 1; the eigen-subspace is then
    (alpha, delta)-viable.
    """
    if not (0.0 < s_k <= 1.0 + 1e-12):
        raise AlphaOutOfRange(
            f"s_k={s_k} outside (0, 1]; use an uncentered unit-direction covariance"
        )
    s_k = min(s_k, 1.0)
    if not (0.0 < alpha < np.sqrt(s_k)):
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, sqrt(s_k)={np.sqrt(s_k):.6f})")
    return (1.0 - s_k) / (1.0 - alpha**2)


def random_viability_params(d: int, k: int, t: float) -> tuple[float, float]:
    """(alpha, delta) = (sqrt(k/d) - t, min(1, 2 exp(-t^2 d / 2))) for a
    Haar-random k-dimensional subspace."""
    if not (1 <= k <= d):
        raise TOutOfRange(f"need 1 <= k <= d, got k={k}, d={d}")
    root = np.sqrt(k / d)
    if not (0.0 < t < root):
        raise TOutOfRange(f"need 0 < t < sqrt(k/d)={root:.6f}, got t={t}")
    alpha = root - t
    delta = min(1.0, 2.0 * np.exp(-t * t * d / 2.0))
    return float(alpha), float(delta)


@dataclass(frozen=True)
class ViabilityEstimate:
    """Empirical (alpha, delta) for one subspace: delta_hat is the fraction of
    C'-conditioned points whose projected gradient direction drops below alpha."""

    alpha: float
    delta_hat: float
    stderr: float
    n: int


def estimate_viability(
    region: Region,
    subspace: Subspace,
    sampler,
    n: int,
    alpha: float,
    rng: np.random.Generator,
) -> ViabilityEstimate:
    """Monte-Carlo estimate of delta for a fixed subspace at level alpha.

    The joint probability over (X, V) is marginalized by fixing the sampled V;
    averaging over subspaces belongs to the experiment layer.
    """
    if n < 100:
        raise ValueError("need n >= 100")
    xs = sample_conditional(region, sampler, n, rng)
    etas = gradient_directions_many(region, xs)
    pn = projection_norm(subspace, etas)
    delta_hat = float(np.mean(pn < alpha))
    stderr = float(np.sqrt(delta_hat * (1.0 - delta_hat) / n))
    return ViabilityEstimate(alpha=float(alpha), delta_hat=delta_hat, stderr=stderr, n=n)
