"""Config-driven experiment runners: fooling-rate curves vs theoretical bounds.

A run is described by a JSON document (schema 1) naming a region, a data
distribution, a subspace scheme, an epsilon grid, and the bounds to evaluate.
Parameter estimation (gradient conditions, margin samples, covariance spectra)
always uses seed streams disjoint from the fooling-rate evaluation stream, so
bounds are computed on held-out data.  Identical config and seed give
byte-identical outputs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from .attacks import AttackConfig, fooling_curve, uap_fooling_curve
from .errors import (
    AlphaOutOfRange,
    AlphaTooSmall,
    ConfigError,
    EmptySample,
    EpsExceedsR,
    EpsOutOfValidityWindow,
)
from .geometry import orthonormalize, projection_norm, sample_random_subspace
from .regions import (
    Ball,
    Ellipsoid,
    GradientConditions,
    HalfSpace,
    Polytope,
    Region,
    estimate_conditions,
    init_random_mlp,
    load_mlp_weights,
)
from .rng import split_rng
from .samplers import (
    GaussianSampler,
    UniformBallSampler,
    UniformCubeSampler,
    sample_conditional,
)
from .viability import (
    eigen_subspace,
    estimate_gradient_covariance,
    gradient_directions_many,
    random_viability_params,
    svd_viability_delta,
)

LOWER_BOUNDS = ("almost_const", "smooth_A", "smooth_B", "strongslope", "gd", "compact",
                "halfspace_exact", "gaussian_expansion")
UPPER_BOUNDS = ("upper_convex",)
KNOWN_BOUNDS = LOWER_BOUNDS + UPPER_BOUNDS

# seed stream roles; fixed numbers keep runs reproducible across code motion
_STREAM_REGION = 0
_STREAM_SUBSPACE = 1
_STREAM_ESTIMATE = 2
_STREAM_EVAL = 3


class CubeRegion(Region):
    """Positive region C' = open cube (-h, h)^d; f(x) = h - max_j |x_j|.

    Supports the compact-region experiments; the gradient is the (lowest-index)
    maximizing coordinate direction, defined almost everywhere.
    """

    def __init__(self, dim: int, half_width: float):
        if half_width <= 0:
            raise ValueError("half_width must be positive")
        self.dim = int(dim)
        self.half_width = float(half_width)

    def value_many(self, x):
        x = np.asarray(x, dtype=float)
        return self.half_width - np.abs(x).max(axis=-1)

    def gradient_many(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.abs(x).argmax(axis=-1)
        rows = np.arange(x.shape[0])
        g = np.zeros_like(x)
        g[rows, idx] = -np.sign(x[rows, idx])
        return g


@dataclass(frozen=True)
class CurveRow:
    eps: float
    fr_hat: float
    stderr: float
    bounds: dict
    flag: str = ""


@dataclass(frozen=True)
class FoolingCurve:
    """One empirical fooling-rate curve with its per-eps bound values."""

    experiment_id: str
    region_kind: str
    scheme: str
    k: int
    seed: int
    rows: list
    params: dict = field(default_factory=dict)

    def violations(self) -> int:
        return sum(1 for r in self.rows if r.flag)


class MarginEcdf:
    """Right-continuous empirical CDF of margins, evaluable at any threshold."""

    def __init__(self, values):
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise EmptySample("cannot build an ECDF from zero samples")
        self.values = np.sort(v)
        self.n = v.size

    def __call__(self, t):
        return np.searchsorted(self.values, t, side="right") / self.n

    def table(self):
        """Step-function knots: (threshold, cdf value at threshold)."""
        uniq, counts = np.unique(self.values, return_counts=True)
        return uniq, np.cumsum(counts) / self.n


def margin_ecdf(margins) -> MarginEcdf:
    return MarginEcdf(margins)


# ---------------------------------------------------------------------------
# configuration


def _req(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}{key}", "missing")
    return cfg[key]


def validate_config(cfg: dict) -> dict:
    """Schema check only; raises ConfigError naming the offending field."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if cfg.get("schema") != 1:
        raise ConfigError("schema", "must be 1")
    _req(cfg, "experiment_id", "")
    kind = _req(cfg, "kind", "")
    if kind not in ("random_subspace", "eigen_subspace", "compact"):
        raise ConfigError("kind", f"unknown experiment kind {kind!r}")

    region = _req(cfg, "region", "")
    rkind = _req(region, "kind", "region.")
    known_regions = ("halfspace", "ball", "ellipsoid", "polytope", "mlp",
                     "mlp-weights-file", "cube")
    if rkind not in known_regions:
        raise ConfigError("region.kind", f"unknown region kind {rkind!r}")
    if rkind == "mlp-weights-file":
        path = _req(region, "path", "region.")
        if not os.path.exists(path):
            raise ConfigError("region.path", f"weights file {path!r} does not exist")
    elif rkind == "mlp":
        widths = _req(region, "widths", "region.")
        if not isinstance(widths, list) or len(widths) < 3 or widths[-1] != 1:
            raise ConfigError("region.widths", "need (d0, ..., hidden, 1)")
        if region.get("activation", "relu") not in ("relu", "tanh"):
            raise ConfigError("region.activation", "must be relu or tanh")
        if region.get("output_mode", "random") not in ("random", "ridge"):
            raise ConfigError("region.output_mode", "must be random or ridge")
    else:
        _req(region, "dim", "region.")

    data = _req(cfg, "data", "")
    dkind = _req(data, "kind", "data.")
    if dkind not in ("gaussian", "uniform_ball", "uniform_cube"):
        raise ConfigError("data.kind", f"unknown data kind {dkind!r}")

    sub = _req(cfg, "subspace", "")
    scheme = _req(sub, "scheme", "subspace.")
    if scheme not in ("random", "eigen", "fixed", "uap"):
        raise ConfigError("subspace.scheme", f"unknown scheme {scheme!r}")
    if scheme in ("random", "eigen"):
        ks = _req(sub, "k", "subspace.")
        if not isinstance(ks, list) or not ks or any(int(k) < 1 for k in ks):
            raise ConfigError("subspace.k", "must be a nonempty list of positive ints")
    if scheme == "fixed":
        path = _req(sub, "basis_file", "subspace.")
        if not os.path.exists(path):
            raise ConfigError("subspace.basis_file", f"{path!r} does not exist")
    if kind == "compact" and scheme != "uap":
        raise ConfigError("subspace.scheme", "compact experiments use the uap scheme")

    grid = _req(cfg, "eps_grid", "")
    if not isinstance(grid, list) or len(grid) < 1:
        raise ConfigError("eps_grid", "must be a nonempty list")
    arr = [float(e) for e in grid]
    if any(e < 0 for e in arr):
        raise ConfigError("eps_grid", "entries must be nonnegative")
    if any(b <= a for a, b in zip(arr, arr[1:])):
        raise ConfigError("eps_grid", "must be strictly increasing")

    n_samples = _req(cfg, "n_samples", "")
    if int(n_samples) < 100:
        raise ConfigError("n_samples", "must be >= 100")
    if int(cfg.get("n_repeats", 1)) < 1:
        raise ConfigError("n_repeats", "must be >= 1")
    if "seed" not in cfg:
        raise ConfigError("seed", "missing")

    for name in cfg.get("bounds", []):
        if name not in KNOWN_BOUNDS:
            raise ConfigError("bounds", f"unknown bound {name!r}")
    return cfg


def _build_region(cfg: dict, rng: np.random.Generator):
    r = cfg["region"]
    kind = r["kind"]
    if kind == "halfspace":
        d = int(r["dim"])
        w = r.get("w", "random")
        if w == "random":
            w = rng.standard_normal(d)
        return HalfSpace(w, float(r.get("b", 0.0)))
    if kind == "ball":
        return Ball(int(r["dim"]), float(r.get("r", 1.0)),
                    r.get("orientation", "inside-negative"))
    if kind == "ellipsoid":
        d = int(r["dim"])
        diag = r.get("diag")
        if diag is None:
            lo, hi = r.get("diag_range", [0.5, 4.0])
            diag = np.linspace(lo, hi, d)
        return Ellipsoid.from_diagonal(np.asarray(diag, dtype=float), float(r["r"]))
    if kind == "polytope":
        d = int(r["dim"])
        if "normals" in r:
            return Polytope(np.asarray(r["normals"], dtype=float),
                            np.asarray(r["offsets"], dtype=float))
        n_faces = int(r.get("n_faces", 10))
        lo, hi = r.get("offset_range", [0.5, 1.5])
        W = rng.standard_normal((n_faces, d))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        return Polytope(W, rng.uniform(lo, hi, n_faces))
    if kind == "cube":
        return CubeRegion(int(r["dim"]), float(r["half_width"]))
    if kind == "mlp-weights-file":
        return load_mlp_weights(r["path"])
    if kind == "mlp":
        widths = [int(w) for w in r["widths"]]
        mode = r.get("output_mode", "random")
        act = r.get("activation", "relu")
        if mode == "ridge":
            n_train = int(r.get("n_train", 2000))
            coord = int(r.get("label_coord", 0))
            xs = rng.standard_normal((n_train, widths[0]))
            return init_random_mlp(widths, act, rng, output_mode="ridge",
                                   train_x=xs, train_y=xs[:, coord],
                                   ridge_lambda=float(r.get("ridge_lambda", 1e-3)))
        return init_random_mlp(widths, act, rng)
    raise ConfigError("region.kind", f"unknown region kind {kind!r}")


def _build_sampler(cfg: dict, dim: int):
    d = cfg["data"]
    if d["kind"] == "gaussian":
        return GaussianSampler(dim, float(d.get("sigma", 1.0)))
    if d["kind"] == "uniform_ball":
        return UniformBallSampler(dim, float(d.get("radius", 1.0)))
    return UniformCubeSampler(dim, float(d.get("half_width", 0.5)))


def _attack_config(cfg: dict, eps_max: float) -> AttackConfig:
    a = cfg.get("attack", {})
    return AttackConfig(
        eps=float(a.get("eps", eps_max)),
        max_iters=int(a.get("max_iters", 200)),
        step_rule=a.get("step_rule", "backtracking"),
        step_init_frac=float(a.get("step_init_frac", 0.25)),
        shrink=float(a.get("shrink", 0.5)),
        min_step_frac=float(a.get("min_step_frac", 1e-4)),
        fixed_step=float(a.get("fixed_step", 0.1)),
        line_grid=int(a.get("line_grid", 11)),
    )


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LDAP_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _run_tasks(tasks, fn):
    n = _threads()
    if n == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# bound evaluation shared by the runners


def _eval_bounds(names, eps, samples, cp, region, subspace, extras):
    """Evaluate each requested bound at one eps; None marks 'not applicable'.

    Expansion-type bounds on the unconditioned mass P(X in C_V^eps) are
    converted to fooling-rate form (J - p)/(1 - p) so every column compares
    against the conditional fr_hat.
    """
    out = {}
    for name in names:
        val = None
        try:
            if name == "strongslope" and cp is not None and samples:
                val = bnd.bound_strongslope(samples, cp.beta, eps)
            elif name == "smooth_A" and cp is not None and samples and cp.L > 0:
                val = bnd.bound_smooth_A(samples, cp.alpha, cp.delta, cp.L, eps)
            elif name == "smooth_B" and cp is not None and samples:
                val = bnd.bound_smooth_B(samples, cp.alpha, cp.delta, cp.beta,
                                         cp.gamma, cp.L, eps)
            elif name == "almost_const" and cp is not None and samples:
                val = bnd.bound_almost_const(samples, cp.alpha, cp.delta, cp.beta,
                                             cp.gamma, cp.theta, cp.R, eps)
            elif name == "upper_convex" and samples and region is not None \
                    and region.is_convex:
                val = bnd.bound_upper_convex(samples, 1.0, eps)
            elif name == "halfspace_exact" and isinstance(region, HalfSpace):
                # tight value for Gaussian data: conditional mass within
                # alignment * eps of the plane
                sig = extras.get("sigma")
                if sig is not None and subspace is not None:
                    align = float(np.linalg.norm(subspace.basis.T @ region.w))
                    zb = region.b / sig
                    tail = 1.0 - bnd.std_normal_cdf(zb)
                    if tail > 0:
                        val = (bnd.std_normal_cdf(zb + align * eps / sig)
                               - bnd.std_normal_cdf(zb)) / tail
            elif name == "gd" and extras.get("ball_radius"):
                val = bnd.g_d(region.dim, eps / extras["ball_radius"])
            elif name == "compact" and extras.get("iso_radius"):
                val = bnd.bound_compact(region.dim, eps, extras["iso_radius"])
            elif name == "gaussian_expansion" and extras.get("p_mass") is not None:
                alpha_v = extras.get("alpha_v")
                sig = extras.get("sigma") or 1.0
                p = extras["p_mass"]
                if alpha_v is not None and 0.0 < p < 1.0:
                    j = bnd.gaussian_expansion_bound(p, alpha_v, eps, sig)
                    val = min(1.0, max(0.0, (j - p) / (1.0 - p)))
        except (AlphaTooSmall, AlphaOutOfRange, EpsOutOfValidityWindow, EpsExceedsR,
                EmptySample):
            val = None  # outside the bound's validity window: vacuous, not a violation
        out[name] = val
    return out


def _flag_row(fr_hat, stderr, values) -> str:
    bad = []
    for name, val in values.items():
        if val is None:
            continue
        if name in UPPER_BOUNDS:
            if val < fr_hat - 3.0 * stderr:
                bad.append(name)
        elif val > fr_hat + 3.0 * stderr:
            bad.append(name)
    return ";".join(sorted(bad))


def _pick_t(samples, cond: GradientConditions, eps_grid, d: int, k: int):
    """Choose t on a 10-point grid in (0, sqrt(k/d)) maximizing the average
    almost-constant-gradient bound over the eps grid; ties keep the smaller t."""
    root = math.sqrt(k / d)
    best = None
    for t in np.linspace(root / 11.0, root * (10.0 / 11.0), 10):
        try:
            alpha, delta = random_viability_params(d, k, float(t))
            cp = _conditions_to_params(cond, alpha, delta)
        except AlphaOutOfRange:
            continue
        total = 0.0
        for eps in eps_grid:
            try:
                total += bnd.bound_almost_const(samples, cp.alpha, cp.delta, cp.beta,
                                                cp.gamma, cp.theta, cp.R, eps)
            except (AlphaTooSmall, EpsExceedsR, EmptySample):
                pass
        if best is None or total > best[0]:
            best = (total, float(t), cp)
    if best is None:
        # every delta clamped to 1; fall back to the largest t with delta < 1
        t = root * (10.0 / 11.0)
        alpha = root - t
        delta = min(2.0 * math.exp(-t * t * d / 2.0), 1.0 - 1e-9)
        return t, _conditions_to_params(cond, alpha, delta)
    return best[1], best[2]


def _conditions_to_params(cond, alpha, delta) -> bnd.ConditionParams:
    return bnd.ConditionParams(
        alpha=alpha, delta=min(delta, 1.0 - 1e-12),
        beta=max(cond.beta, 1e-300), gamma=min(cond.gamma, 1.0 - 1e-12),
        L=cond.L, theta=cond.theta, R=cond.R,
    )


def _estimate_run_conditions(cfg, region, sampler, rep_seed_path):
    c = cfg.get("conditions", {})
    n_est = int(c.get("n_estimate", 2000))
    eps_grid = [float(e) for e in cfg["eps_grid"]]
    radius = c.get("radius", "eps_max")
    radius = max(eps_grid) if radius == "eps_max" else float(radius)
    radius = max(radius, 1e-9)
    rng = split_rng(cfg["seed"], _STREAM_ESTIMATE, *rep_seed_path)
    cond = estimate_conditions(
        region, sampler, n_est, rng,
        gamma_quantile=float(c.get("gamma_quantile", 0.05)),
        theta_quantile=float(c.get("theta_quantile", 0.99)),
        n_pairs=int(c.get("n_pairs", 10_000)),
        radius=radius,
    )
    samples = bnd.collect_margin_samples(region, sampler, n_est, rng)
    return cond, samples


def _materialized_params(cfg, cond, alpha, delta, t, extra=None):
    a = _attack_config(cfg, max(float(e) for e in cfg["eps_grid"]))
    out = {
        "alpha": alpha, "delta": delta,
        "beta": cond.beta if cond else "", "gamma": cond.gamma if cond else "",
        "theta": cond.theta if cond else "", "L": cond.L if cond else "",
        "R": cond.R if cond else "", "t": t,
        "attack": {
            "eps": a.eps, "max_iters": a.max_iters, "step_rule": a.step_rule,
            "step_init_frac": a.step_init_frac, "shrink": a.shrink,
            "min_step_frac": a.min_step_frac, "line_grid": a.line_grid,
        },
        "n_samples": int(cfg["n_samples"]),
    }
    if extra:
        out.update(extra)
    return out


def _expansion_extras(cfg, names, region, subspace, rep):
    """p_mass and alpha_v for the Gaussian-expansion column, when requested."""
    extras = {"sigma": cfg["data"].get("sigma", 1.0)
              if cfg["data"]["kind"] == "gaussian" else None}
    if "gaussian_expansion" in names and isinstance(region, Polytope) \
            and extras["sigma"] is not None and subspace is not None:
        rng = split_rng(cfg["seed"], _STREAM_ESTIMATE, rep, 999)
        sampler = _build_sampler(cfg, region.dim)
        raw = sampler.sample(int(cfg["n_samples"]), rng)
        extras["p_mass"] = float(np.mean(region.value_many(raw) <= 0.0))
        extras["alpha_v"] = bnd.alpha_V_polytope(region, subspace)
    return extras


# ---------------------------------------------------------------------------
# runners


def run_random_subspace_experiment(cfg: dict) -> list[FoolingCurve]:
    """Haar-random (or fixed-basis) subspace attacks across k values and seeds."""
    validate_config(cfg)
    if cfg["subspace"]["scheme"] not in ("random", "fixed"):
        raise ConfigError("subspace.scheme", "expected random or fixed")
    eps_grid = [float(e) for e in cfg["eps_grid"]]
    names = list(cfg.get("bounds", []))
    n_eval = int(cfg["n_samples"])
    n_rep = int(cfg.get("n_repeats", 1))
    fixed_basis = None
    if cfg["subspace"]["scheme"] == "fixed":
        fixed_basis = orthonormalize(np.loadtxt(cfg["subspace"]["basis_file"], ndmin=2))
        ks = [fixed_basis.dim_sub]
    else:
        ks = [int(k) for k in cfg["subspace"]["k"]]

    tasks = [(rep, k) for rep in range(n_rep) for k in ks]

    def one(task):
        rep, k = task
        region = _build_region(cfg, split_rng(cfg["seed"], _STREAM_REGION, rep))
        sampler = _build_sampler(cfg, region.dim)
        if fixed_basis is not None:
            V = fixed_basis
        else:
            V = sample_random_subspace(
                region.dim, k, split_rng(cfg["seed"], _STREAM_SUBSPACE, rep, k))
        cond, samples = _estimate_run_conditions(cfg, region, sampler, (rep, k))
        t_sel, cp = _pick_t(samples, cond, eps_grid, region.dim, k)
        attack = _attack_config(cfg, max(eps_grid))
        ests = fooling_curve(region, V, eps_grid, sampler, n_eval, attack,
                             split_rng(cfg["seed"], _STREAM_EVAL, rep, k))
        extras = _expansion_extras(cfg, names, region, V, rep)
        rows = []
        for est in ests:
            vals = _eval_bounds(names, est.eps, samples, cp, region, V, extras)
            rows.append(CurveRow(est.eps, est.fr_hat, est.stderr, vals,
                                 _flag_row(est.fr_hat, est.stderr, vals)))
        params = _materialized_params(cfg, cond, cp.alpha, cp.delta, t_sel)
        return FoolingCurve(cfg["experiment_id"], cfg["region"]["kind"],
                            cfg["subspace"]["scheme"], k, rep, rows, params)

    return _run_tasks(tasks, one)


def run_eigen_subspace_experiment(cfg: dict):
    """Gradient-covariance eigen-subspace attacks.

    Returns (spectrum_report, viability_rows, curves).  The spectrum report
    lists per-seed eigenvalues of the estimated covariance; viability rows
    compare the empirical delta at each alpha with the spectral bound
    (1 - s_k)/(1 - alpha^2) on held-out data.
    """
    validate_config(cfg)
    if cfg["subspace"]["scheme"] != "eigen":
        raise ConfigError("subspace.scheme", "expected eigen")
    sub = cfg["subspace"]
    eps_grid = [float(e) for e in cfg["eps_grid"]]
    names = list(cfg.get("bounds", []))
    n_eval = int(cfg["n_samples"])
    n_rep = int(cfg.get("n_repeats", 1))
    n_grad = int(sub.get("n_grad", 1000))
    centered = bool(sub.get("centered", False))
    alpha_grid = [float(a) for a in sub.get("alpha_grid", [0.3, 0.5, 0.7])]
    ks = [int(k) for k in sub["k"]]

    spectrum, viability, curves = [], [], []
    for rep in range(n_rep):
        region = _build_region(cfg, split_rng(cfg["seed"], _STREAM_REGION, rep))
        sampler = _build_sampler(cfg, region.dim)
        cov = estimate_gradient_covariance(
            region, sampler, n_grad,
            split_rng(cfg["seed"], _STREAM_ESTIMATE, rep, 1), centered=centered)
        lam = np.linalg.eigvalsh(cov.matrix)[::-1]
        spectrum.append({"seed": rep, "eigenvalues": lam.tolist(),
                         "trace": float(lam.sum()), "centered": centered})
        cond, samples = _estimate_run_conditions(cfg, region, sampler, (rep,))
        for k in ks:
            V, s_k = eigen_subspace(cov, k)
            # empirical viability at every alpha, on one held-out sample
            via_rng = split_rng(cfg["seed"], _STREAM_EVAL, rep, k, 1)
            xs = sample_conditional(region, sampler, n_eval, via_rng)
            pn = projection_norm(V, gradient_directions_many(region, xs))
            best_cp = None
            for a in alpha_grid:
                try:
                    dlt = svd_viability_delta(s_k, a)
                except AlphaOutOfRange:
                    continue
                d_hat = float(np.mean(pn < a))
                se = float(np.sqrt(d_hat * (1.0 - d_hat) / n_eval))
                flag = "VIOLATION" if d_hat > dlt + 3.0 * se else ""
                viability.append({"seed": rep, "k": k, "alpha": a, "s_k": s_k,
                                  "delta_hat": d_hat, "stderr": se,
                                  "svd_bound": dlt, "flag": flag})
                if dlt < 1.0:
                    cp = _conditions_to_params(cond, a, dlt)
                    if best_cp is None or (cp.alpha * (1.0 - cp.delta)
                                           > best_cp.alpha * (1.0 - best_cp.delta)):
                        best_cp = cp
            attack = _attack_config(cfg, max(eps_grid))
            eval_rng = split_rng(cfg["seed"], _STREAM_EVAL, rep, k, 0)
            if k == 1:
                ests = uap_fooling_curve(region, V.basis[:, 0], eps_grid, sampler,
                                         n_eval, attack, eval_rng)
            else:
                ests = fooling_curve(region, V, eps_grid, sampler, n_eval, attack,
                                     eval_rng)
            extras = _expansion_extras(cfg, names, region, V, rep)
            rows = []
            for est in ests:
                vals = _eval_bounds(names, est.eps, samples, best_cp, region, V, extras)
                rows.append(CurveRow(est.eps, est.fr_hat, est.stderr, vals,
                                     _flag_row(est.fr_hat, est.stderr, vals)))
            params = _materialized_params(
                cfg, cond,
                best_cp.alpha if best_cp else "", best_cp.delta if best_cp else "", "",
                extra={"s_k": s_k, "centered": centered, "n_grad": n_grad})
            curves.append(FoolingCurve(cfg["experiment_id"], cfg["region"]["kind"],
                                       "eigen", k, rep, rows, params))
    return spectrum, viability, curves


def run_compact_experiment(cfg: dict) -> list[FoolingCurve]:
    """Universal-perturbation attacks on a compact positive region.

    The fooling rate reported per eps is the best over the configured number
    of random candidate directions; the compact-region bound is existential,
    which justifies taking the maximum over a small candidate set.
    """
    validate_config(cfg)
    sub = cfg["subspace"]
    eps_grid = [float(e) for e in cfg["eps_grid"]]
    names = list(cfg.get("bounds", []))
    n_eval = int(cfg["n_samples"])
    n_rep = int(cfg.get("n_repeats", 1))
    n_cand = int(sub.get("n_candidates", 1))

    curves = []
    for rep in range(n_rep):
        region = _build_region(cfg, split_rng(cfg["seed"], _STREAM_REGION, rep))
        sampler = _build_sampler(cfg, region.dim)
        d = region.dim
        extras = {"sigma": None}
        if isinstance(region, Ball) and region.orientation == "outside-negative":
            extras["ball_radius"] = region.r
            extras["iso_radius"] = region.r
        elif isinstance(region, CubeRegion):
            logvol = d * math.log(2.0 * region.half_width)
            extras["iso_radius"] = math.exp((logvol - bnd.log_unit_ball_volume(d)) / d)
        attack = _attack_config(cfg, max(eps_grid))
        dir_rng = split_rng(cfg["seed"], _STREAM_SUBSPACE, rep)
        best = np.zeros(len(eps_grid))
        best_se = np.zeros(len(eps_grid))
        for c in range(n_cand):
            if isinstance(sub.get("direction"), list):
                v = np.asarray(sub["direction"], dtype=float)
                v = v / np.linalg.norm(v)
            else:
                v = dir_rng.standard_normal(d)
                v /= np.linalg.norm(v)
            ests = uap_fooling_curve(region, v, eps_grid, sampler, n_eval, attack,
                                     split_rng(cfg["seed"], _STREAM_EVAL, rep, c))
            for j, est in enumerate(ests):
                if est.fr_hat > best[j]:
                    best[j] = est.fr_hat
                    best_se[j] = est.stderr
        rows = []
        for j, e in enumerate(eps_grid):
            vals = _eval_bounds(names, e, [], None, region, None, extras)
            rows.append(CurveRow(e, float(best[j]), float(best_se[j]), vals,
                                 _flag_row(float(best[j]), float(best_se[j]), vals)))
        params = _materialized_params(cfg, None, "", "", "",
                                      extra={"n_candidates": n_cand,
                                             "iso_radius": extras.get("iso_radius", "")})
        curves.append(FoolingCurve(cfg["experiment_id"], cfg["region"]["kind"],
                                   "uap", 1, rep, rows, params))
    return curves
