"""Coverage-based privacy losses and per-model privacy profiles.

For a released model point M, the privacy loss of neighbor y against the
base dataset x under shared-scale Laplace-norm noise has the closed form

    l(x, y, M) = beta * (|A(y) - M| - |A(x) - M|),

the negative log of the ratio of the two mechanisms' densities at M.  Its
magnitude factors as |l| = beta * d(x, y, M) with the beta-free distance
functional d = ||A(y) - M| - |A(x) - M||, so ranking neighbors by |l|
gives the same permutation at every noise scale.  The privacy profile is
that ranking, ascending in |l|, ties broken by neighbor index.

Coverage by finite-radius ball (the probability that a mechanism lands
within a cutoff of M) is kept as a Monte Carlo validation tool; all other
paths use the density form directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .erm import ModelPoint
from .mechanism import MechanismParams, sample_noise_batch
from .neighbors import NeighborSet


@dataclass(frozen=True)
class PrivacyLoss:
    """Signed privacy loss of one neighbor at one model point."""

    neighbor_index: int
    loss: float
    abs_loss: float
    d_xyM: float
    beta: float


@dataclass(eq=False)
class PrivacyProfile:
    """Neighbors of one model point ranked ascending by |privacy loss|.

    `ranking[j]` is the neighbor index holding rank j; the last entry is
    the most vulnerable row for this model point.
    """

    model_point: ModelPoint
    beta: float
    ranked_losses: list[PrivacyLoss]
    ranking: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ranked_losses)

    @property
    def abs_losses(self) -> np.ndarray:
        return np.array([pl.abs_loss for pl in self.ranked_losses])

    @property
    def d_values(self) -> np.ndarray:
        return np.array([pl.d_xyM for pl in self.ranked_losses])


@dataclass(frozen=True)
class CoverageEstimate:
    """Monte Carlo ball-coverage estimate with its binomial standard error."""

    coverage: float
    stderr: float
    hits: int
    samples: int


def delta_distances(
    base_point: ModelPoint, neighbor_points: np.ndarray, M: ModelPoint
) -> np.ndarray:
    """Signed |A(y_i) - M| - |A(x) - M| for a stack of neighbor points."""
    base_point = np.asarray(base_point, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if M.shape != base_point.shape:
        raise ValueError(f"shape mismatch: {M.shape} vs {base_point.shape}")
    nbr = np.atleast_2d(np.asarray(neighbor_points, dtype=np.float64))
    d_base = float(np.linalg.norm(base_point - M))
    d_nbr = np.linalg.norm(nbr - M, axis=1)
    return d_nbr - d_base


def privacy_loss(
    base_point: ModelPoint,
    neighbor_point: ModelPoint,
    M: ModelPoint,
    beta: float,
    neighbor_index: int = -1,
) -> PrivacyLoss:
    """Privacy loss of one neighbor model point at M."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    delta = float(delta_distances(base_point, neighbor_point, M)[0])
    loss = beta * delta
    return PrivacyLoss(
        neighbor_index=neighbor_index,
        loss=loss,
        abs_loss=abs(loss),
        d_xyM=abs(delta),
        beta=beta,
    )


def privacy_profile(
    base_point: ModelPoint, neighbor_set: NeighborSet, M: ModelPoint, beta: float
) -> PrivacyProfile:
    """Ranked privacy losses of all neighbors at M (ties by neighbor index)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    delta = delta_distances(base_point, neighbor_set.wc, M)
    d_vals = np.abs(delta)
    order = np.argsort(d_vals, kind="stable")
    ranked = [
        PrivacyLoss(
            neighbor_index=int(i),
            loss=beta * float(delta[i]),
            abs_loss=beta * float(d_vals[i]),
            d_xyM=float(d_vals[i]),
            beta=beta,
        )
        for i in order
    ]
    return PrivacyProfile(
        model_point=np.asarray(M, dtype=np.float64),
        beta=beta,
        ranked_losses=ranked,
        ranking=order,
    )


def empirical_coverage(
    center: ModelPoint,
    params: MechanismParams,
    M: ModelPoint,
    cutoff: float,
    samples: int,
    rng: np.random.Generator,
) -> CoverageEstimate:
    """Fraction of mechanism draws landing within `cutoff` of M.

    No default cutoff is provided; callers must choose one.  The density
    form (mechanism.log_pdf_unnormalized) is the zero-cutoff limit and is
    what every non-validation path uses.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    center = np.asarray(center, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    b, _ = sample_noise_batch(params, samples, rng)
    dist = np.linalg.norm((center + b) - M, axis=1)
    hits = int((dist < cutoff).sum())
    p = hits / samples
    stderr = float(np.sqrt(p * (1.0 - p) / samples))
    return CoverageEstimate(coverage=p, stderr=stderr, hits=hits, samples=samples)


@dataclass(eq=False)
class HeatmapGrid:
    """Privacy-loss field over a 2-D slab of hypothetical neighbor positions.

    `field[iy, ix]` is |l| for a neighbor model point at (xs[ix], ys[iy]);
    `star_abs_loss[i]` is |l| of actual neighbor i (positions in `stars`).
    """

    xs: np.ndarray
    ys: np.ndarray
    field: np.ndarray
    stars: np.ndarray
    star_abs_loss: np.ndarray
    model_point: ModelPoint
    beta: float


def heatmap_grid(
    base_point: ModelPoint,
    neighbor_set: NeighborSet,
    M: ModelPoint,
    beta: float,
    extent: tuple[float, float, float, float] | None = None,
    resolution: int = 200,
) -> HeatmapGrid:
    """Loss field plus per-neighbor losses for 2-D visualization.

    Only d = 2 is supported (the field is a plane); the per-neighbor loss
    export for other dimensions is `privacy_profile`.  Default extent is
    the bounding box of the neighbor points, base point, and M, padded 20%.
    """
    base_point = np.asarray(base_point, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if base_point.shape != (2,):
        raise ValueError("heatmap_grid supports d = 2 only")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")

    stars = neighbor_set.wc
    if extent is None:
        pts = np.vstack([stars, base_point[None, :], M[None, :]])
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        pad = 0.2 * np.maximum(hi - lo, 1e-12)
        extent = (lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])

    xs = np.linspace(extent[0], extent[1], resolution)
    ys = np.linspace(extent[2], extent[3], resolution)
    gx, gy = np.meshgrid(xs, ys)
    grid_pts = np.column_stack([gx.ravel(), gy.ravel()])
    field = beta * np.abs(delta_distances(base_point, grid_pts, M))
    star_abs = beta * np.abs(delta_distances(base_point, stars, M))
    return HeatmapGrid(
        xs=xs,
        ys=ys,
        field=field.reshape(resolution, resolution),
        stars=stars,
        star_abs_loss=star_abs,
        model_point=M,
        beta=beta,
    )
