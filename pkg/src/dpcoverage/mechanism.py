"""Output perturbation with spherically symmetric Laplace-norm noise.

The private training mechanism releases A(x) + b where the noise vector b
has density proportional to exp(-beta |b|) with scale

    beta = n * lam * epsilon / 2

(Chaudhuri, Monteleoni & Sarwate, 2011).  A draw is a uniform direction on
the (d-1)-sphere times a radius from Gamma(shape=d, rate=beta), which is
exactly the radial law of that density.  All densities in this package are
used unnormalized: every quantity of interest is a ratio or a difference
of logs, so the normalizer cancels.

Reproducibility: randomness flows from one master seed through
`stream_rng(seed, *path)`, which keys a NumPy SeedSequence with the given
integer path (`spawn_key`).  Streams with distinct paths are independent,
and a stream's output depends only on (seed, path), never on the order in
which streams are created -- so parallel consumers stay deterministic.
Within a batch, directions are drawn before radii.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .erm import ModelPoint


@dataclass(frozen=True)
class MechanismParams:
    """Mechanism configuration (epsilon, lam, n) plus the model dimension."""

    epsilon: float
    lam: float
    n: int
    d: int

    def __post_init__(self):
        for name in ("epsilon", "lam", "n", "d"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def beta(self) -> float:
        return beta_of(self.epsilon, self.n, self.lam)


@dataclass(frozen=True)
class NoiseSample:
    """One noise vector with its radius and an optional provenance token."""

    b: np.ndarray
    radius: float
    seed_id: str | None = None


def beta_of(epsilon: float, n: int, lam: float) -> float:
    """Laplace scale beta = n * lam * epsilon / 2."""
    if epsilon <= 0 or n <= 0 or lam <= 0:
        raise ValueError("epsilon, n and lam must all be positive")
    return n * lam * epsilon / 2.0


def stream_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent, order-insensitive random stream for (seed, path)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=path))


def standard_noise_draws(
    d: int, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Scale-free raw draws: unit directions (size, d) and Gamma(d, 1) radii.

    Dividing the radii by beta yields noise for any scale from the same
    underlying draws, which keeps comparisons across beta values free of
    fresh Monte Carlo noise.
    """
    z = rng.standard_normal((size, d))
    norms = np.linalg.norm(z, axis=1)
    # A zero draw has probability 0; regenerate defensively if it happens.
    while np.any(norms == 0.0):
        bad = norms == 0.0
        z[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(z, axis=1)
    directions = z / norms[:, None]
    radii = rng.standard_gamma(d, size=size)
    return directions, radii


def sample_noise_batch(
    params: MechanismParams, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """`size` noise vectors (size, d) and their radii (size,)."""
    directions, raw_radii = standard_noise_draws(params.d, size, rng)
    radii = raw_radii / params.beta
    return directions * radii[:, None], radii


def sample_noise(
    params: MechanismParams, rng: np.random.Generator, seed_id: str | None = None
) -> NoiseSample:
    """One noise vector with density proportional to exp(-beta |b|)."""
    b, radii = sample_noise_batch(params, 1, rng)
    return NoiseSample(b=b[0], radius=float(radii[0]), seed_id=seed_id)


def sample_model(
    center: ModelPoint, params: MechanismParams, rng: np.random.Generator
) -> ModelPoint:
    """One draw from the mechanism centered at `center`."""
    center = np.asarray(center, dtype=np.float64)
    if center.shape != (params.d,):
        raise ValueError(f"center has shape {center.shape}, expected ({params.d},)")
    return center + sample_noise(params, rng).b


def sample_model_batch(
    center: ModelPoint, params: MechanismParams, size: int, rng: np.random.Generator
) -> np.ndarray:
    """`size` mechanism draws centered at `center`, shape (size, d)."""
    center = np.asarray(center, dtype=np.float64)
    if center.shape != (params.d,):
        raise ValueError(f"center has shape {center.shape}, expected ({params.d},)")
    b, _ = sample_noise_batch(params, size, rng)
    return center + b


def log_pdf_unnormalized(center: ModelPoint, M: ModelPoint, beta: float) -> float:
    """log of the unnormalized mechanism density at M: -beta * |center - M|."""
    center = np.asarray(center, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if center.shape != M.shape:
        raise ValueError(f"shape mismatch: {center.shape} vs {M.shape}")
    return -beta * float(np.linalg.norm(center - M))
