"""Subspace-constrained adversarial search.

The central quantity is the along-subspace distance d_V(x): the smallest norm
of a perturbation inside V that lands x in the negative region.  Closed forms
exist for half-spaces and inside-negative balls; everything else is attacked
with a projected-gradient descent whose cumulative path length certifies an
upper bound on d_V.  Fooling rates estimated through the attack are therefore
lower estimates of the definitional supremum, which only makes lower-bound
comparisons harder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .geometry import Subspace
from .regions import Ball, HalfSpace, Region
from .samplers import sample_conditional

PROJ_GRAD_TOL = 1e-12


@dataclass(frozen=True)
class AttackConfig:
    """Attack hyperparameters.

    eps is the search budget (paths longer than this give up).  The
    backtracking rule proposes min(eps * step_init_frac, f/|proj grad|), i.e.
    a capped Newton length, then halves on non-decrease until
    eps * min_step_frac; the fixed rule always proposes ``fixed_step``.
    line_grid is the number of symmetric scan points used by segment attacks.
    """

    eps: float = 1.0
    max_iters: int = 200
    step_rule: str = "backtracking"
    step_init_frac: float = 0.25
    shrink: float = 0.5
    min_step_frac: float = 1e-4
    fixed_step: float = 0.1
    line_grid: int = 11

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.step_rule not in ("backtracking", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.line_grid < 2:
            raise ValueError("line_grid must be >= 2")

    def with_eps(self, eps: float) -> "AttackConfig":
        return AttackConfig(
            eps=eps,
            max_iters=self.max_iters,
            step_rule=self.step_rule,
            step_init_frac=self.step_init_frac,
            shrink=self.shrink,
            min_step_frac=self.min_step_frac,
            fixed_step=self.fixed_step,
            line_grid=self.line_grid,
        )


@dataclass(frozen=True)
class FoolingEstimate:
    """Empirical fooling rate at one budget with its binomial standard error."""

    fr_hat: float
    stderr: float
    n_positive: int
    eps: float


# ---------------------------------------------------------------------------
# exact along-subspace distances


def _halfspace_dv_batch(hs: HalfSpace, subspace: Subspace, x: np.ndarray) -> np.ndarray:
    pw = np.linalg.norm(subspace.basis.T @ hs.w)
    excess = np.maximum(x @ hs.w - hs.b, 0.0)
    if pw < PROJ_GRAD_TOL:
        return np.where(excess > 0, np.inf, 0.0)
    return excess / pw


def _ball_dv_batch(ball: Ball, subspace: Subspace, x: np.ndarray) -> np.ndarray:
    xv = x @ subspace.basis
    nxv2 = (xv * xv).sum(axis=1)
    perp2 = np.maximum((x * x).sum(axis=1) - nxv2, 0.0)
    room = ball.r**2 - perp2
    with np.errstate(invalid="ignore"):
        dv = np.maximum(np.sqrt(nxv2) - np.sqrt(np.maximum(room, 0.0)), 0.0)
    return np.where(room >= 0.0, dv, np.inf)


def exact_dV_halfspace(hs: HalfSpace, subspace: Subspace, x) -> float:
    """(x.w - b)_+ / |Pi_V w|; infinity when V is orthogonal to the normal."""
    v = np.asarray(x, dtype=float)
    if v.shape != (hs.dim,):
        raise DimensionMismatch(f"expected vector of dim {hs.dim}")
    return float(_halfspace_dv_batch(hs, subspace, v[None, :])[0])


def exact_dV_ball(ball: Ball, subspace: Subspace, x) -> float:
    """Distance along V to an inside-negative ball.

    Splitting x = Pi_V x + x_perp, the reachable slice of C inside the affine
    plane x_perp + V is a ball of radius sqrt(r^2 - |x_perp|^2); the distance
    is (|Pi_V x| - that radius)_+, or infinity when the slice is empty.
    """
    if ball.orientation != "inside-negative":
        raise ValueError("closed form requires an inside-negative ball")
    v = np.asarray(x, dtype=float)
    if v.shape != (ball.dim,):
        raise DimensionMismatch(f"expected vector of dim {ball.dim}")
    return float(_ball_dv_batch(ball, subspace, v[None, :])[0])


def exact_distance_along(region: Region, subspace: Subspace, x: np.ndarray):
    """Batched exact d_V when the region supports it, else None."""
    if isinstance(region, HalfSpace):
        return _halfspace_dv_batch(region, subspace, x)
    if isinstance(region, Ball) and region.orientation == "inside-negative":
        return _ball_dv_batch(region, subspace, x)
    return None


# ---------------------------------------------------------------------------
# iterative attack


def _bisect_final_step(region, x_prev, u, s_hi, iters=40):
    """Shrink crossing steps: f(x_prev) > 0 and f(x_prev - s_hi u) <= 0 hold on
    entry; returns the smallest step (to 2^-iters precision) still landing in C."""
    lo = np.zeros_like(s_hi)
    hi = s_hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = region.value_many(x_prev - mid[:, None] * u)
        neg = fm <= 0.0
        hi[neg] = mid[neg]
        lo[~neg] = mid[~neg]
    return hi


def attack_distances(
    region: Region, subspace: Subspace, x: np.ndarray, cfg: AttackConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Batched upper bounds on d_V via projected-gradient descent.

    Returns (dv, zero_grad_flag).  dv[i] is the cumulative path length of a
    path inside V from x[i] into C (hence >= d_V(x[i])), infinity when the
    budget, iteration cap, or step floor is exhausted.  zero_grad_flag marks
    points abandoned because the projected gradient vanished.
    """
    x0 = np.asarray(x, dtype=float)
    n = x0.shape[0]
    dv = np.full(n, np.inf)
    zero_flag = np.zeros(n, dtype=bool)
    fx = region.value_many(x0)
    dv[fx <= 0.0] = 0.0
    active = np.where(fx > 0.0)[0]
    if active.size == 0 or cfg.eps == 0.0:
        return dv, zero_flag

    cur = x0[active].copy()
    fcur = fx[active]
    cum = np.zeros(active.size)
    min_step = cfg.min_step_frac * cfg.eps
    cap = cfg.step_init_frac * cfg.eps if cfg.step_rule == "backtracking" else cfg.fixed_step
    alive = np.ones(active.size, dtype=bool)

    for _ in range(cfg.max_iters):
        if not alive.any():
            break
        ia = np.where(alive)[0]
        xa = cur[ia]
        fa = fcur[ia]
        g = region.gradient_many(xa)
        pg = (g @ subspace.basis) @ subspace.basis.T
        pn = np.linalg.norm(pg, axis=1)
        dead = pn < PROJ_GRAD_TOL
        if dead.any():
            zero_flag[active[ia[dead]]] = True
            alive[ia[dead]] = False
            keep = ~dead
            ia, xa, fa, g, pg, pn = ia[keep], xa[keep], fa[keep], g[keep], pg[keep], pn[keep]
            if ia.size == 0:
                continue
        u = pg / pn[:, None]
        if cfg.step_rule == "backtracking":
            step = np.minimum(cap, fa / pn)
        else:
            step = np.full(ia.size, cfg.fixed_step)

        # backtrack until the value strictly decreases or the step floor is hit
        pending = np.ones(ia.size, dtype=bool)
        fnew = np.empty(ia.size)
        while pending.any():
            ip = np.where(pending)[0]
            cand = xa[ip] - step[ip, None] * u[ip]
            fc = region.value_many(cand)
            ok = fc < fa[ip]
            fnew[ip[ok]] = fc[ok]
            pending[ip[ok]] = False
            bad = ip[~ok]
            if cfg.step_rule == "fixed":
                # no backtracking: give up on non-decreasing points
                alive[ia[bad]] = False
                pending[bad] = False
                continue
            step[bad] *= cfg.shrink
            floor = bad[step[bad] < min_step]
            alive[ia[floor]] = False
            pending[floor] = False
        live = alive[ia]
        ia, xa, fa, u, pn, step, fnew = (
            ia[live], xa[live], fa[live], u[live], pn[live], step[live], fnew[live],
        )
        if ia.size == 0:
            continue

        crossed = fnew <= 0.0
        if crossed.any():
            ic = np.where(crossed)[0]
            s_hi = step[ic].copy()
            # refine only when the first-order shortening is worth the evals
            worth = (-fnew[ic]) / pn[ic] > 1e-9 + 1e-6 * s_hi
            if worth.any():
                iw = ic[worth]
                s_hi[worth] = _bisect_final_step(region, xa[iw], u[iw], step[iw])
            dv[active[ia[ic]]] = cum[ia[ic]] + s_hi
            alive[ia[ic]] = False
        adv = ~crossed
        if adv.any():
            iu = ia[adv]
            cur[iu] = xa[adv] - step[adv, None] * u[adv]
            fcur[iu] = fnew[adv]
            cum[iu] += step[adv]
            over = iu[cum[iu] >= cfg.eps]
            alive[over] = False
    return dv, zero_flag


def attack_dV_upper(region: Region, subspace: Subspace, x, cfg: AttackConfig) -> float:
    """Upper bound on d_V(x) for a single point; infinity when the search fails.

    A vanishing projected gradient is reported as infinity (the flag is
    available through attack_distances).
    """
    v = np.asarray(x, dtype=float)
    if v.shape != (region.dim,):
        raise DimensionMismatch(f"expected vector of dim {region.dim}")
    dv, _ = attack_distances(region, subspace, v[None, :], cfg)
    return float(dv[0])


# ---------------------------------------------------------------------------
# fooling-rate estimators


def distances_along(
    region: Region,
    subspace: Subspace,
    x: np.ndarray,
    cfg: AttackConfig,
    method: str = "auto",
) -> np.ndarray:
    """d_V estimates for a batch: exact formulas when available, attack otherwise."""
    if method not in ("auto", "exact", "attack"):
        raise ValueError(f"unknown method {method!r}")
    if method != "attack":
        exact = exact_distance_along(region, subspace, x)
        if exact is not None:
            return exact
        if method == "exact":
            raise ValueError("no exact d_V formula for this region")
    return attack_distances(region, subspace, x, cfg)[0]


def _estimate(dv: np.ndarray, eps: float) -> FoolingEstimate:
    n = dv.shape[0]
    fr = float(np.mean(dv <= eps))
    return FoolingEstimate(
        fr_hat=fr, stderr=float(np.sqrt(fr * (1.0 - fr) / n)), n_positive=n, eps=float(eps)
    )


def fooling_rate(
    region: Region,
    subspace: Subspace,
    eps: float,
    sampler,
    n: int,
    cfg: AttackConfig,
    rng: np.random.Generator,
    method: str = "auto",
    max_reject_factor: int = 100,
) -> FoolingEstimate:
    """FR(V; eps) over n draws conditioned on the positive region.

    Success for a point means the estimated d_V is at most eps; with the attack
    estimator this is a certified lower estimate of the true fooling rate.
    """
    if n < 100:
        raise ValueError("need n >= 100")
    xs = sample_conditional(region, sampler, n, rng, max_factor=max_reject_factor)
    dv = distances_along(region, subspace, xs, cfg.with_eps(max(cfg.eps, eps)), method)
    return _estimate(dv, eps)


def fooling_curve(
    region: Region,
    subspace: Subspace,
    eps_grid,
    sampler,
    n: int,
    cfg: AttackConfig,
    rng: np.random.Generator,
    method: str = "auto",
    max_reject_factor: int = 100,
) -> list[FoolingEstimate]:
    """FR(V; eps) across a grid, from one conditioned sample and one d_V pass.

    Sharing the per-point distances across the grid makes the curve
    nondecreasing in eps by construction.
    """
    eps_grid = [float(e) for e in eps_grid]
    if n < 100:
        raise ValueError("need n >= 100")
    xs = sample_conditional(region, sampler, n, rng, max_factor=max_reject_factor)
    budget = max(max(eps_grid), cfg.eps)
    dv = distances_along(region, subspace, xs, cfg.with_eps(budget), method)
    return [_estimate(dv, e) for e in eps_grid]


def uap_fooling_rate(
    region: Region,
    v,
    eps: float,
    sampler,
    n: int,
    cfg: AttackConfig,
    rng: np.random.Generator,
    max_reject_factor: int = 100,
) -> FoolingEstimate:
    """Fooling rate of the 1-d subspace spanned by v via a segment scan.

    A point counts as fooled when f(x + s v) <= 0 for some s on a symmetric
    ``line_grid``-point grid over [-eps, eps] (endpoints always included).
    """
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("v must be a unit vector")
    if n < 100:
        raise ValueError("need n >= 100")
    xs = sample_conditional(region, sampler, n, rng, max_factor=max_reject_factor)
    if eps == 0.0:
        return _estimate(np.full(n, np.inf), 0.0)
    fooled = np.zeros(n, dtype=bool)
    for s in np.linspace(-eps, eps, cfg.line_grid):
        fooled |= region.value_many(xs + s * v) <= 0.0
        if fooled.all():
            break
    fr = float(np.mean(fooled))
    return FoolingEstimate(
        fr_hat=fr, stderr=float(np.sqrt(fr * (1.0 - fr) / n)), n_positive=n, eps=float(eps)
    )


def uap_fooling_curve(
    region: Region,
    v,
    eps_grid,
    sampler,
    n: int,
    cfg: AttackConfig,
    rng: np.random.Generator,
    max_reject_factor: int = 100,
) -> list[FoolingEstimate]:
    """Segment-scan fooling rates across a budget grid on one shared sample.

    Fooled sets are accumulated while the grid grows, which keeps the curve
    nondecreasing and remains a sound lower estimate: a scan point within a
    smaller budget is within every larger one.
    """
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("v must be a unit vector")
    if n < 100:
        raise ValueError("need n >= 100")
    eps_grid = [float(e) for e in eps_grid]
    xs = sample_conditional(region, sampler, n, rng, max_factor=max_reject_factor)
    fooled = np.zeros(n, dtype=bool)
    out = []
    for eps in eps_grid:
        if eps > 0.0:
            for s in np.linspace(-eps, eps, cfg.line_grid):
                pending = ~fooled
                if not pending.any():
                    break
                fooled[pending] |= region.value_many(xs[pending] + s * v) <= 0.0
        fr = float(np.mean(fooled))
        out.append(FoolingEstimate(
            fr_hat=fr, stderr=float(np.sqrt(fr * (1.0 - fr) / n)),
            n_positive=n, eps=eps,
        ))
    return out
