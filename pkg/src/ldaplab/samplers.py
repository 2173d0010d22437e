"""Data distributions and rejection sampling conditioned on the positive region."""

from __future__ import annotations

import numpy as np

from .errors import EmptyConditional


class GaussianSampler:
    """X ~ N(0, sigma^2 I_d)."""

    def __init__(self, dim: int, sigma: float = 1.0):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.dim = int(dim)
        self.sigma = float(sigma)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.sigma * rng.standard_normal((n, self.dim))

    def describe(self) -> str:
        return f"gaussian(sigma={self.sigma})"


class UniformBallSampler:
    """X uniform on the ball of given radius: Gaussian direction, U^(1/d) radius."""

    def __init__(self, dim: int, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.dim = int(dim)
        self.radius = float(radius)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / self.dim)
        return g * r[:, None]

    def describe(self) -> str:
        return f"uniform_ball(radius={self.radius})"


class UniformCubeSampler:
    """X uniform on the centered cube [-h, h]^d."""

    def __init__(self, dim: int, half_width: float):
        if half_width <= 0:
            raise ValueError("half_width must be positive")
        self.dim = int(dim)
        self.half_width = float(half_width)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-self.half_width, self.half_width, (n, self.dim))

    def describe(self) -> str:
        return f"uniform_cube(half_width={self.half_width})"


def sample_conditional(
    region,
    sampler,
    n: int,
    rng: np.random.Generator,
    max_factor: int = 100,
) -> np.ndarray:
    """Draw n points from the sampler conditioned on X in C' = {f > 0}.

    Rejection sampling in batches; raises EmptyConditional once more than
    ``max_factor * n`` raw draws have been spent.
    """
    out = []
    got = 0
    spent = 0
    budget = max_factor * n
    while got < n:
        batch = min(max(n, 1024), budget - spent)
        if batch <= 0:
            raise EmptyConditional(
                f"only {got}/{n} samples landed in C' after {spent} draws"
            )
        x = sampler.sample(batch, rng)
        spent += batch
        keep = region.value_many(x) > 0
        if keep.any():
            out.append(x[keep])
            got += int(keep.sum())
    return np.concatenate(out, axis=0)[:n]
