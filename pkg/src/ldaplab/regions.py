"""Classifier feature maps f and their negative decision regions C = {f <= 0}.

Every region exposes exact values and gradients of f, vectorized over batches
of points (rows).  The positive region C' = {f > 0} is the side under attack.
Regions are immutable after construction; value/gradient are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import BadShape, DimensionMismatch, EmptyConditional, ZeroGradient

GRAD_TOL = 1e-12


class Region:
    """Interface: a feature map with exact value and gradient.

    Subclasses implement ``value_many`` / ``gradient_many`` on (n, d) arrays;
    the scalar forms are derived.  ``lipschitz_gradient`` returns an analytic
    upper bound on the Lipschitz constant of x -> grad f(x) over C', or None
    when no closed form is available.
    """

    dim: int

    def value_many(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient_many(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, x) -> float:
        return float(self.value_many(self._check(x)[None, :])[0])

    def gradient(self, x) -> np.ndarray:
        return self.gradient_many(self._check(x)[None, :])[0]

    def lipschitz_gradient(self):
        return None

    @property
    def is_convex(self) -> bool:
        return False

    def _check(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.dim:
            raise DimensionMismatch(f"expected vector of dim {self.dim}, got shape {v.shape}")
        return v


class HalfSpace(Region):
    """f(x) = x.w - b with unit normal w; C is the half-space below the plane."""

    def __init__(self, w, b: float):
        w = np.asarray(w, dtype=float)
        nrm = np.linalg.norm(w)
        if nrm < GRAD_TOL:
            raise ZeroGradient("half-space normal is numerically zero")
        self.w = w / nrm
        self.w.setflags(write=False)
        self.b = float(b)
        self.dim = w.shape[0]

    def value_many(self, x):
        return np.asarray(x, dtype=float) @ self.w - self.b

    def gradient_many(self, x):
        n = np.asarray(x).shape[0]
        return np.broadcast_to(self.w, (n, self.dim)).copy()

    def lipschitz_gradient(self):
        return 0.0

    @property
    def is_convex(self):
        return True


class Ball(Region):
    """Spherical region of radius r.

    orientation "inside-negative": f(x) = (|x|^2 - r^2)/2, C is the closed ball.
    orientation "outside-negative": f(x) = (r^2 - |x|^2)/2, C is the exterior,
    so the ball itself is the positive region under attack.
    """

    def __init__(self, dim: int, r: float, orientation: str = "inside-negative"):
        if r <= 0:
            raise ValueError("radius must be positive")
        if orientation not in ("inside-negative", "outside-negative"):
            raise ValueError(f"unknown orientation {orientation!r}")
        self.dim = int(dim)
        self.r = float(r)
        self.orientation = orientation
        self._sign = 1.0 if orientation == "inside-negative" else -1.0

    def value_many(self, x):
        x = np.asarray(x, dtype=float)
        return self._sign * ((x * x).sum(axis=-1) - self.r**2) / 2.0

    def gradient_many(self, x):
        return self._sign * np.asarray(x, dtype=float)

    def lipschitz_gradient(self):
        return 1.0

    @property
    def is_convex(self):
        return self.orientation == "inside-negative"


class Ellipsoid(Region):
    """f(x) = (x^T B x - r^2)/2 for a symmetric PSD matrix B."""

    def __init__(self, B, r: float):
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise BadShape(f"B must be square, got {B.shape}")
        if np.max(np.abs(B - B.T)) > 1e-10:
            raise BadShape("B must be symmetric within 1e-10")
        if r <= 0:
            raise ValueError("radius must be positive")
        eigvals = np.linalg.eigvalsh(B)
        if eigvals.min() < -1e-10:
            raise BadShape("B must be positive semi-definite")
        self.B = 0.5 * (B + B.T)
        self.B.setflags(write=False)
        self.r = float(r)
        self.dim = B.shape[0]
        self._eig_min = float(max(eigvals.min(), 0.0))
        self._eig_max = float(eigvals.max())

    @classmethod
    def from_diagonal(cls, diag, r: float) -> "Ellipsoid":
        return cls(np.diag(np.asarray(diag, dtype=float)), r)

    def value_many(self, x):
        x = np.asarray(x, dtype=float)
        return ((x @ self.B) * x).sum(axis=-1) / 2.0 - self.r**2 / 2.0

    def gradient_many(self, x):
        return np.asarray(x, dtype=float) @ self.B

    def lipschitz_gradient(self):
        # operator norm of the constant Hessian B
        return self._eig_max

    def strong_gradient_floor(self):
        """inf over C' of |grad f| = r * sqrt(lambda_min(B)); 0 if B singular."""
        return self.r * np.sqrt(self._eig_min)

    @property
    def is_convex(self):
        return True


class Polytope(Region):
    """f(x) = max_i (x.w_i - b_i); C is the intersection of N half-spaces.

    Normals are unit vectors.  Argmax ties are broken by lowest index so the
    gradient is deterministic.  The constructor verifies C is nonempty and
    stores a witness point.
    """

    def __init__(self, normals, offsets, witness=None):
        W = np.asarray(normals, dtype=float)
        b = np.asarray(offsets, dtype=float)
        if W.ndim != 2 or W.shape[0] == 0:
            raise BadShape(f"normals must be (N, d) with N >= 1, got {W.shape}")
        if b.shape != (W.shape[0],):
            raise BadShape("offsets must match the number of normals")
        nrms = np.linalg.norm(W, axis=1)
        if np.any(np.abs(nrms - 1.0) > 1e-12):
            W = W / nrms[:, None]
        self.normals = W
        self.offsets = b
        self.normals.setflags(write=False)
        self.offsets.setflags(write=False)
        self.dim = W.shape[1]
        self.n_faces = W.shape[0]
        if witness is None:
            witness = self._find_witness()
        witness = np.asarray(witness, dtype=float)
        if self.value(witness) > 1e-9:
            raise ValueError("witness point is not inside the polytope")
        self.witness = witness

    def _find_witness(self):
        # cyclic projection onto the half-spaces; converges iff C is nonempty
        x = np.zeros(self.dim)
        for _ in range(200):
            moved = 0.0
            for i in range(self.n_faces):
                v = x @ self.normals[i] - self.offsets[i]
                if v > 0:
                    x = x - v * self.normals[i]
                    moved = max(moved, v)
            if moved < 1e-13:
                break
        if (x @ self.normals.T - self.offsets).max() > 1e-9:
            raise ValueError("polytope appears empty: feasibility search failed")
        return x

    def value_many(self, x):
        return (np.asarray(x, dtype=float) @ self.normals.T - self.offsets).max(axis=-1)

    def gradient_many(self, x):
        vals = np.asarray(x, dtype=float) @ self.normals.T - self.offsets
        idx = vals.argmax(axis=-1)  # np.argmax returns the lowest maximizing index
        return self.normals[idx]

    @property
    def is_convex(self):
        return True


class MlpNet(Region):
    """Feed-forward net: f(x) = W_M^T act(W_{M-1}^T ... act(W_1^T x)).

    ``weights[l]`` has shape (d_l, d_{l+1}); the final layer is linear with a
    single output.  The ReLU derivative at 0 is taken as 0.  Gradients are
    reverse-mode accumulated through the layer chain.
    """

    activations = ("relu", "tanh")

    def __init__(self, weights, activation: str):
        if activation not in self.activations:
            raise BadShape(f"unknown activation {activation!r}")
        ws = [np.asarray(w, dtype=float) for w in weights]
        if len(ws) < 2:
            raise BadShape("need at least one hidden layer plus the output layer")
        for i, w in enumerate(ws):
            if w.ndim != 2:
                raise BadShape(f"layer {i} weights must be 2-d")
            if not np.all(np.isfinite(w)):
                raise BadShape(f"layer {i} weights contain non-finite entries")
            if i > 0 and w.shape[0] != ws[i - 1].shape[1]:
                raise BadShape(
                    f"layer {i} expects input width {ws[i - 1].shape[1]}, got {w.shape[0]}"
                )
        if ws[-1].shape[1] != 1:
            raise BadShape("output layer must have width 1")
        for w in ws:
            w.setflags(write=False)
        self.weights = ws
        self.activation = activation
        self.dim = ws[0].shape[0]
        self.widths = [ws[0].shape[0]] + [w.shape[1] for w in ws]
        self.depth = len(ws)

    def _act(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return np.tanh(z)

    def _act_deriv(self, z):
        if self.activation == "relu":
            return (z > 0).astype(float)
        t = np.tanh(z)
        return 1.0 - t * t

    def _forward(self, x):
        pre = []
        h = np.asarray(x, dtype=float)
        for w in self.weights[:-1]:
            z = h @ w
            pre.append(z)
            h = self._act(z)
        out = h @ self.weights[-1]
        return pre, out[..., 0]

    def value_many(self, x):
        return self._forward(x)[1]

    def gradient_many(self, x):
        pre, _ = self._forward(x)
        g = np.broadcast_to(self.weights[-1][:, 0], pre[-1].shape).copy()
        for z, w in zip(reversed(pre), reversed(self.weights[:-1])):
            g = (g * self._act_deriv(z)) @ w.T
        return g

    def hidden_features(self, x):
        """Activations of the last hidden layer, shape (n, d_{M-1})."""
        pre, _ = self._forward(x)
        return self._act(pre[-1])

    def lipschitz_gradient(self):
        """Chain upper bound for tanh nets; None for relu (gradient jumps).

        For tanh the Hessian splits into one term per hidden layer; bounding
        activation slopes by 1 and |tanh''| by its maximum 4/(3*sqrt(3)) gives
        L <= max|tanh''| * sum_l (prod_{j<=l} |W_j|)^2 * prod_{j>l} |W_j|.
        This is an upper bound, which keeps the smooth-boundary guarantees valid.
        """
        if self.activation != "tanh":
            return None
        ops = [np.linalg.norm(w, 2) for w in self.weights]
        max_tanh2 = 4.0 / (3.0 * np.sqrt(3.0))
        total = 0.0
        prefix = 1.0
        for l in range(len(ops) - 1):
            prefix *= ops[l]
            suffix = np.prod(ops[l + 1 :])
            total += prefix**2 * suffix
        return float(max_tanh2 * total)


def margin_many(region: Region, x: np.ndarray) -> np.ndarray:
    """Margins max(f, 0)/|grad f| for a batch; 0 on C by definition."""
    x = np.asarray(x, dtype=float)
    f = region.value_many(x)
    out = np.zeros_like(f)
    pos = f > 0
    if np.any(pos):
        gn = np.linalg.norm(region.gradient_many(x[pos]), axis=-1)
        if np.any(gn < GRAD_TOL):
            raise ZeroGradient("zero gradient at a point with f > 0")
        out[pos] = f[pos] / gn
    return out


def margin(region: Region, x) -> float:
    """Pointwise margin m_f(x) = max(f(x), 0)/|grad f(x)|."""
    return float(margin_many(region, np.asarray(x, dtype=float)[None, :])[0])


def init_random_mlp(
    widths,
    activation: str,
    rng: np.random.Generator,
    output_mode: str = "random",
    train_x=None,
    train_y=None,
    ridge_lambda: float = 1e-3,
) -> MlpNet:
    """Random net with entries of layer l drawn iid N(0, 1/d_{l-1}).

    ``widths`` runs (d_0, ..., d_{M-1}, 1) and must contain at least one hidden
    layer.  With output_mode "random" the output vector has the same scaling;
    with "ridge" it solves an L2-regularized least squares fit of the supplied
    training pairs on the final hidden features (random-features regime).
    """
    widths = [int(w) for w in widths]
    if len(widths) < 3:
        raise BadShape("need at least one hidden layer: widths (d0, ..., 1)")
    if widths[-1] != 1:
        raise BadShape("output width must be 1")
    if any(w < 1 for w in widths):
        raise BadShape("all widths must be >= 1")
    if output_mode not in ("random", "ridge"):
        raise BadShape(f"unknown output mode {output_mode!r}")

    ws = []
    for l in range(len(widths) - 1):
        fan_in = widths[l]
        ws.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), (widths[l], widths[l + 1])))

    if output_mode == "ridge":
        if train_x is None or train_y is None:
            raise BadShape("ridge mode requires training pairs")
        net = MlpNet(ws, activation)
        H = net.hidden_features(np.asarray(train_x, dtype=float))
        y = np.asarray(train_y, dtype=float)
        if H.shape[0] != y.shape[0]:
            raise BadShape("train_x and train_y lengths differ")
        h = H.shape[1]
        gram = H.T @ H
        lam = ridge_lambda * max(np.trace(gram) / h, 1e-30)
        a = np.linalg.solve(gram + lam * np.eye(h), H.T @ y)
        ws[-1] = a[:, None]
    return MlpNet(ws, activation)


@dataclass(frozen=True)
class GradientConditions:
    """Empirical strong-gradient / oscillation / smoothness parameters.

    beta: lower quantile of |grad f| on C'; gamma: fraction below it.
    theta: upper quantile of |grad f(x') - grad f(x)| over pairs within R.
    L: analytic Lipschitz bound when the region has one, else the same upper
    quantile of the difference/distance ratio.
    """

    beta: float
    gamma: float
    theta: float
    R: float
    L: float


def estimate_conditions(
    region: Region,
    sampler,
    n: int,
    rng: np.random.Generator,
    gamma_quantile: float = 0.05,
    theta_quantile: float = 0.99,
    n_pairs: int = 10_000,
    radius: float = 1.0,
) -> GradientConditions:
    """Estimate (beta, gamma, theta, R, L) from C'-conditioned samples.

    The quantile levels are configuration, not constants: beta is the
    ``gamma_quantile`` of gradient norms, theta the ``theta_quantile`` of
    gradient oscillation over random pairs at distance <= ``radius`` with both
    endpoints in C'.
    """
    if n < 100:
        raise ValueError("need n >= 100 samples")
    from .samplers import sample_conditional  # local import avoids a cycle

    xs = sample_conditional(region, sampler, n, rng)
    grads = region.gradient_many(xs)
    gn = np.linalg.norm(grads, axis=1)
    beta = float(np.quantile(gn, gamma_quantile))
    gamma = float(np.mean(gn < beta))

    idx = rng.integers(0, n, n_pairs)
    u = rng.standard_normal((n_pairs, region.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rad = radius * rng.random(n_pairs) ** (1.0 / region.dim)
    x2 = xs[idx] + u * rad[:, None]
    keep = region.value_many(x2) > 0
    if not np.any(keep):
        raise EmptyConditional("no perturbed pair partner landed in C'")
    diffs = np.linalg.norm(region.gradient_many(x2[keep]) - grads[idx][keep], axis=1)
    theta = float(np.quantile(diffs, theta_quantile))

    L = region.lipschitz_gradient()
    if L is None:
        dists = np.maximum(rad[keep], 1e-30)
        L = float(np.quantile(diffs / dists, theta_quantile))
    return GradientConditions(beta=beta, gamma=gamma, theta=theta, R=float(radius), L=float(L))


def save_mlp_weights(net: MlpNet, path) -> None:
    """Write the weight-file JSON document for a net."""
    doc = {
        "activation": net.activation,
        "widths": net.widths,
        "weights": [np.asarray(w).flatten().tolist() for w in net.weights],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_mlp_weights(path) -> MlpNet:
    """Load a net from the JSON weight document, validating shapes and finiteness.

    Schema: {"activation": "relu"|"tanh", "widths": [ints],
    "weights": [row-major floats per layer]}.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("activation", "widths", "weights"):
        if key not in doc:
            raise BadShape(f"weight file missing key {key!r}")
    widths = [int(w) for w in doc["widths"]]
    flat = doc["weights"]
    if len(flat) != len(widths) - 1:
        raise BadShape("weight file: number of layers does not match widths")
    ws = []
    for l, entries in enumerate(flat):
        a = np.asarray(entries, dtype=float)
        want = widths[l] * widths[l + 1]
        if a.size != want:
            raise BadShape(f"layer {l}: expected {want} entries, got {a.size}")
        ws.append(a.reshape(widths[l], widths[l + 1]))
    return MlpNet(ws, doc["activation"])
