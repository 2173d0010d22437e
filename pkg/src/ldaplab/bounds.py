"""Closed-form fooling-rate bounds and the identities behind them.

Lower bounds are evaluated against empirical margin samples and clamped into
[0, 1]; on matched experiments they must stay below the empirical fooling rate
up to Monte-Carlo noise.  Probability plumbing (standard normal CDF and
quantile) lives here too since several bounds are Gaussian expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .errors import (
    AlphaOutOfRange,
    AlphaTooSmall,
    DegenerateVolume,
    EmptySample,
    EpsExceedsR,
    EpsOutOfValidityWindow,
    POutOfRange,
    TOutOfRange,
)
from .geometry import Subspace
from .regions import Polytope, Region
from .samplers import sample_conditional
from .viability import random_viability_params


@dataclass(frozen=True)
class ConditionParams:
    """Viability plus regularity parameters feeding the generic bounds."""

    alpha: float
    delta: float
    beta: float
    gamma: float
    L: float = 0.0
    theta: float = 0.0
    R: float = math.inf

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise AlphaOutOfRange(f"alpha={self.alpha} outside (0, 1]")
        if not (0.0 <= self.delta < 1.0):
            raise AlphaOutOfRange(f"delta={self.delta} outside [0, 1)")
        if not (0.0 <= self.gamma < 1.0):
            raise AlphaOutOfRange(f"gamma={self.gamma} outside [0, 1)")
        if self.beta <= 0.0:
            raise AlphaOutOfRange("beta must be positive")
        if self.L < 0.0 or self.theta < 0.0 or self.R <= 0.0:
            raise AlphaOutOfRange("L, theta must be >= 0 and R > 0")


@dataclass(frozen=True)
class MarginSample:
    """One C'-conditioned draw: the margin and the gradient norm at the point."""

    margin: float
    grad_norm: float


def collect_margin_samples(
    region: Region, sampler, n: int, rng: np.random.Generator
) -> list[MarginSample]:
    """Margins and gradient norms over n draws conditioned on X in C'."""
    xs = sample_conditional(region, sampler, n, rng)
    f = region.value_many(xs)
    gn = np.linalg.norm(region.gradient_many(xs), axis=1)
    m = np.where(f > 0, f / np.maximum(gn, 1e-300), 0.0)
    return [MarginSample(float(mi), float(gi)) for mi, gi in zip(m, gn)]


def _margins_gradnorms(samples: Sequence[MarginSample]) -> tuple[np.ndarray, np.ndarray]:
    if len(samples) == 0:
        raise EmptySample("no margin samples supplied")
    m = np.array([s.margin for s in samples])
    g = np.array([s.grad_norm for s in samples])
    return m, g


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


# ---------------------------------------------------------------------------
# generic lower/upper bounds from margin samples


def bound_strongslope(samples: Sequence[MarginSample], beta: float, eps: float) -> float:
    """Full-dimensional lower bound: P(f(X) <= beta * eps | C').

    f(X) is recovered from the samples as margin * grad_norm.
    """
    if eps < 0:
        raise EpsExceedsR("eps must be >= 0")
    m, g = _margins_gradnorms(samples)
    return _clamp01(float(np.mean(m * g <= beta * eps)))


def bound_smooth_A(
    samples: Sequence[MarginSample], alpha: float, delta: float, L: float, eps: float
) -> float:
    """Lipschitz-gradient lower bound on the average fooling rate:
    P(m_f <= min(alpha eps / 2, alpha^2 |grad f| / (2L)) | C') - delta."""
    if L <= 0:
        raise EpsOutOfValidityWindow("L must be positive; use bound_strongslope for L = 0")
    if eps < 0:
        raise EpsExceedsR("eps must be >= 0")
    m, g = _margins_gradnorms(samples)
    thresh = np.minimum(alpha * eps / 2.0, alpha * alpha * g / (2.0 * L))
    return _clamp01(float(np.mean(m <= thresh)) - delta)


def bound_smooth_B(
    samples: Sequence[MarginSample],
    alpha: float,
    delta: float,
    beta: float,
    gamma: float,
    L: float,
    eps: float,
) -> float:
    """Absolute form of the Lipschitz bound, valid for eps <= alpha beta / L:
    P(m_f <= alpha eps / 2 | C') - delta - gamma."""
    if eps < 0:
        raise EpsExceedsR("eps must be >= 0")
    window = math.inf if L == 0 else alpha * beta / L
    if eps > window * (1.0 + 1e-12):
        raise EpsOutOfValidityWindow(f"eps={eps} beyond validity window {window:.6g}")
    m, _ = _margins_gradnorms(samples)
    return _clamp01(float(np.mean(m <= alpha * eps / 2.0)) - delta - gamma)


def bound_upper_convex(samples: Sequence[MarginSample], alpha_tilde: float, eps: float) -> float:
    """Convex-region upper bound P(m_f <= alpha_tilde * eps | C').

    Convexity of f is the caller's responsibility.  alpha_tilde = 1 gives the
    universal upper bound valid for every subspace.
    """
    if not (0.0 <= alpha_tilde <= 1.0):
        raise AlphaOutOfRange(f"alpha_tilde={alpha_tilde} outside [0, 1]")
    if eps < 0:
        raise EpsExceedsR("eps must be >= 0")
    m, _ = _margins_gradnorms(samples)
    return _clamp01(float(np.mean(m <= alpha_tilde * eps)))


def bound_almost_const(
    samples: Sequence[MarginSample],
    alpha: float,
    delta: float,
    beta: float,
    gamma: float,
    theta: float,
    R: float,
    eps: float,
) -> float:
    """Almost-constant-gradient lower bound with alpha_bar = 1 - theta/(alpha beta):
    P(m_f <= alpha_bar * eps | C', |grad f| >= beta) - delta - gamma, for eps <= R."""
    if beta <= 0 or alpha <= theta / beta:
        raise AlphaTooSmall(f"need alpha > theta/beta = {theta / max(beta, 1e-300):.6g}")
    if not (0.0 <= eps <= R * (1.0 + 1e-12)):
        raise EpsExceedsR(f"eps={eps} outside [0, R={R}]")
    m, g = _margins_gradnorms(samples)
    strong = g >= beta
    if not np.any(strong):
        raise EmptySample("no samples satisfy |grad f| >= beta")
    alpha_bar = 1.0 - theta / (alpha * beta)
    frac = float(np.mean(m[strong] <= alpha_bar * eps))
    return _clamp01(frac - delta - gamma)


# ---------------------------------------------------------------------------
# compact decision regions


def g_d(d: int, eps: float) -> float:
    """Ball-case fooling-rate lower bound built from spherical-cap decay.

    Piecewise: 1 for eps >= 2; 1 - exp(-eps^2 (d-1)/8)/(eps sqrt(d)) on
    [sqrt(8/d), 2); 1 - exp(-eps^2 d / 8) on [0, sqrt(8/d)); clamped to [0, 1].
    """
    if d < 1:
        raise TOutOfRange("d must be >= 1")
    if eps < 0:
        raise EpsExceedsR("eps must be >= 0")
    if eps >= 2.0:
        return 1.0
    if eps >= math.sqrt(8.0 / d):
        val = 1.0 - math.exp(-eps * eps * (d - 1) / 8.0) / (eps * math.sqrt(d))
    else:
        val = 1.0 - math.exp(-eps * eps * d / 8.0)
    return _clamp01(val)


def log_unit_ball_volume(d: int) -> float:
    """log of the unit-ball volume pi^(d/2)/Gamma(d/2 + 1)."""
    return (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0 + 1.0)


def iso_volumetric_radius(volume: float, d: int) -> float:
    """Radius of the d-ball with the given volume, computed in log space so
    large d does not overflow the Gamma function."""
    if volume < 0:
        raise DegenerateVolume("volume must be >= 0")
    if volume == 0.0:
        return 0.0
    if math.isinf(volume):
        return math.inf
    return math.exp((math.log(volume) - log_unit_ball_volume(d)) / d)


def bound_compact(d: int, eps: float, iso_radius: float) -> float:
    """Existence bound for a universal direction on a compact positive region:
    g_d(eps / (2 R)) with R the iso-volumetric radius of the region."""
    if iso_radius <= 0:
        raise DegenerateVolume("iso_radius must be positive")
    return g_d(d, eps / (2.0 * iso_radius))


# ---------------------------------------------------------------------------
# auxiliary suprema identities


def huber_envelope(b_norm: float, rho: float, r: float) -> float:
    """sup over |z| <= rho of b.z - |z|^2/(2r): the Huber function of |b|."""
    if rho <= 0 or r <= 0:
        raise TOutOfRange("rho and r must be positive")
    if b_norm < 0:
        raise TOutOfRange("b_norm must be >= 0")
    if b_norm <= rho / r:
        return r * b_norm * b_norm / 2.0
    return rho * b_norm - rho * rho / (2.0 * r)


def soft_threshold_sup(b_norm: float, rho: float, r: float) -> float:
    """sup over |z| <= rho of b.z - |z|/r = rho * (|b| - 1/r)_+."""
    if rho <= 0 or r <= 0:
        raise TOutOfRange("rho and r must be positive")
    return rho * max(b_norm - 1.0 / r, 0.0)


# ---------------------------------------------------------------------------
# polytopes and Gaussian expansions


def alpha_V_polytope(polytope: Polytope, subspace: Subspace) -> float:
    """min over faces of |Pi_V w_i|, the subspace alignment of the worst normal."""
    pn = np.linalg.norm(polytope.normals @ subspace.basis, axis=1)
    return float(pn.min())


def alpha_V_certified(polytope: Polytope, subspace: Subspace, iters: int = 2000) -> float:
    """max over unit v in V of min over faces of v.w_i.

    This minimax value certifies the expansion containment
    C^{a eps} within C_V^eps (a single direction witnesses every face), and by
    duality equals the norm of the min-norm point of the convex hull of the
    projected normals, computed here by a Gilbert-type iteration.  It is never
    larger than alpha_V_polytope and is 0 whenever the projected normals
    surround the origin.
    """
    A = polytope.normals @ subspace.basis  # (N, k) projected normals
    p = A[np.linalg.norm(A, axis=1).argmin()].copy()
    for _ in range(iters):
        i = int(np.argmin(A @ p))
        q = A[i]
        # stop when p already minimizes over the hull segment directions
        diff = q - p
        denom = diff @ diff
        if denom <= 1e-30:
            break
        t = float(np.clip(-(p @ diff) / denom, 0.0, 1.0))
        newp = p + t * diff
        if np.linalg.norm(newp - p) < 1e-14:
            break
        p = newp
    nrm = float(np.linalg.norm(p))
    if nrm < 1e-12:
        return 0.0
    # the certified value is the achieved min along the candidate direction
    return float(max((A @ (p / nrm)).min(), 0.0))


def std_normal_cdf(x: float) -> float:
    """Phi(x) via the complementary error function (machine precision)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def std_normal_quantile(p: float) -> float:
    """Functional inverse of Phi on (0, 1)."""
    if not (0.0 < p < 1.0):
        raise POutOfRange(f"p={p} outside (0, 1)")
    return float(ndtri(p))


def gaussian_expansion_bound(p: float, alpha_v: float, eps: float, sigma: float) -> float:
    """Gaussian isoperimetric expansion Phi(Phi^-1(p) + alpha_v * eps / sigma).

    The minimal N(0, sigma^2 I) mass of an (alpha_v * eps)-expansion of a set
    of mass p, attained by half-spaces.  The eps/sigma scaling is forced by the
    half-space tightness case.
    """
    if not (0.0 < p < 1.0):
        raise POutOfRange(f"p={p} outside (0, 1)")
    if sigma <= 0:
        raise POutOfRange("sigma must be positive")
    if eps < 0:
        raise EpsExceedsR("eps must be >= 0")
    if not (0.0 <= alpha_v <= 1.0):
        raise AlphaOutOfRange(f"alpha_v={alpha_v} outside [0, 1]")
    return std_normal_cdf(std_normal_quantile(p) + alpha_v * eps / sigma)


def random_polytope_bound(
    d: int, k: int, t: float, N: int, p: float, eps: float, sigma: float
) -> tuple[float, float]:
    """Expansion bound for a Haar-random subspace against an N-face polytope.

    Returns (bound value, validity probability 1 - exp(-t^2 d / 2)); the
    probability is reported alongside, not multiplied in.
    """
    if N < 1:
        raise TOutOfRange("N must be >= 1")
    alpha, _ = random_viability_params(d, k, t)
    value = gaussian_expansion_bound(p, alpha, eps, sigma)
    prob = 1.0 - math.exp(-t * t * d / 2.0)
    return value, prob


# ---------------------------------------------------------------------------
# Monte-Carlo overlap functional


@dataclass(frozen=True)
class MonteCarloEstimate:
    """An MC estimate with its standard error and effective sample counts."""

    value: float
    stderr: float
    n_points: int
    n_dirs: int


def tau_overlap_mc(
    membership,
    bbox_lo,
    bbox_hi,
    eps: float,
    n_dirs: int,
    n_vol: int,
    rng: np.random.Generator,
) -> MonteCarloEstimate:
    """Average self-overlap of a body under random shifts of length <= eps:
    E_v[ vol(K intersect (eps v + K)) / vol(K) ] with v uniform in the unit ball.

    ``membership`` maps an (n, d) array to booleans; the body must lie in the
    box [bbox_lo, bbox_hi].  Volume samples are rejection-drawn from the box.
    The standard error combines the between-point and between-direction spread.
    """
    lo = np.asarray(bbox_lo, dtype=float)
    hi = np.asarray(bbox_hi, dtype=float)
    d = lo.shape[0]
    if eps < 0:
        raise EpsExceedsR("eps must be >= 0")
    box = rng.uniform(lo, hi, (n_vol, d))
    inside = membership(box)
    pts = box[inside]
    n_in = pts.shape[0]
    if n_in == 0:
        raise DegenerateVolume("no volume sample landed inside the body")
    dirs = rng.standard_normal((n_dirs, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs *= rng.random(n_dirs)[:, None] ** (1.0 / d)
    hits = np.empty((n_dirs, n_in))
    for j in range(n_dirs):
        hits[j] = membership(pts - eps * dirs[j])
    per_point = hits.mean(axis=0)
    per_dir = hits.mean(axis=1)
    value = float(per_point.mean())
    var_pts = float(per_point.var(ddof=1)) if n_in > 1 else 0.0
    var_dir = float(per_dir.var(ddof=1)) if n_dirs > 1 else 0.0
    stderr = math.sqrt(var_pts / n_in + var_dir / n_dirs)
    return MonteCarloEstimate(value=value, stderr=stderr, n_points=n_in, n_dirs=n_dirs)
