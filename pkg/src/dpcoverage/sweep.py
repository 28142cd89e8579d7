"""Noise-scale sweeps: typical profiles, per-neighbor loss curves, regimes.

A sweep draws model points M from the base mechanism at every epsilon on a
logarithmic grid and aggregates two families of curves:

* Typical profiles: per-M privacy profiles sorted by |l|, then averaged
  rank-wise over the M draws.  Normalized by beta these converge to fixed
  shapes at both ends of the grid; the band between the two fixed shapes
  is the epsilon range in which the noise scale actually matters.

* Neighbor curves: for selected neighbors, the Monte Carlo mean of the
  signed loss (an estimate of the KL divergence between the base and
  neighbor mechanisms) and of |l|.  The normalized mean |l| of a neighbor
  sits on a low-beta plateau and departs at an onset beta that scales
  inversely with the neighbor's distance from the base model, so the
  products onset * distance collapse to a constant.

Plateau detection runs on mean |l| / beta.  The signed mean / beta tends
to zero at small beta, so a "relative departure from the low-beta plateau"
rule is only meaningful for the absolute version; the signed mean is kept
on each curve as the KL estimate.

One set of scale-free noise draws (directions and unit-rate radii) is
shared by every grid point and rescaled by 1/beta.  Comparisons between
grid points therefore see no fresh Monte Carlo noise, which is what makes
plateau levels and regime agreement stable at moderate sample counts.
Grid points remain independently computable from the shared read-only
draws, and rank-wise means use NumPy's pairwise summation, so results do
not depend on evaluation order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .erm import BaseSolution, ModelPoint
from .errors import NumericalError
from .mechanism import (
    MechanismParams,
    beta_of,
    sample_noise_batch,
    standard_noise_draws,
    stream_rng,
)
from .neighbors import NeighborSet

DEFAULT_TAU = 0.05
DEFAULT_PERSISTENCE = 2
DEFAULT_SAMPLES = 1000
DEFAULT_CURVE_COUNT = 12


def log_epsilon_grid(
    eps_min: float, eps_max: float, points_per_decade: int = 8
) -> tuple[float, ...]:
    """Strictly increasing log-spaced epsilon grid over [eps_min, eps_max]."""
    if eps_min <= 0 or eps_max <= eps_min:
        raise ValueError("need 0 < eps_min < eps_max")
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be >= 1")
    lo = np.log10(eps_min)
    hi = np.log10(eps_max)
    count = int(round((hi - lo) * points_per_decade)) + 1
    count = max(count, 2)
    return tuple(float(v) for v in 10.0 ** np.linspace(lo, hi, count))


@dataclass(frozen=True)
class SweepConfig:
    """Fully determines a sweep: grid, sample count, master seed, selections."""

    epsilon_grid: tuple[float, ...]
    seed: int
    samples_per_eps: int = DEFAULT_SAMPLES
    rank_indices_of_interest: tuple[int, ...] = ()
    neighbor_indices: tuple[int, ...] = ()
    tau: float = DEFAULT_TAU
    persistence: int = DEFAULT_PERSISTENCE

    def __post_init__(self):
        grid = tuple(float(e) for e in self.epsilon_grid)
        object.__setattr__(self, "epsilon_grid", grid)
        if len(grid) < 1 or any(e <= 0 for e in grid):
            raise ValueError("epsilon grid must be non-empty and positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("epsilon grid must be strictly increasing")
        if self.samples_per_eps < 1:
            raise ValueError("samples_per_eps must be >= 1")


@dataclass(eq=False)
class TypicalProfile:
    """Rank-wise average of per-M sorted |l| at one epsilon."""

    epsilon: float
    beta: float
    mean_abs_loss_by_rank: np.ndarray
    normalized: np.ndarray  # mean_abs_loss_by_rank / beta
    stderr_by_rank: np.ndarray


@dataclass(frozen=True)
class PlateauOnset:
    """Grid cell bracketing the departure from the low-beta plateau."""

    index: int  # first departed grid index
    beta_lo: float
    beta_hi: float

    @property
    def beta(self) -> float:
        """Geometric midpoint of the bracketing cell."""
        return float(np.sqrt(self.beta_lo * self.beta_hi))


@dataclass(eq=False)
class NeighborCurve:
    """Per-grid-point loss statistics for one neighbor."""

    neighbor_index: int
    distance: float  # |A(x) - A_wc(y_i)|
    mean_loss: np.ndarray  # signed Monte Carlo E[l]; the KL estimate
    stderr: np.ndarray
    mean_abs_loss: np.ndarray
    normalized_abs: np.ndarray  # mean_abs_loss / beta
    onset: PlateauOnset | None = None

    @property
    def plateau_onset_beta(self) -> float | None:
        return self.onset.beta if self.onset is not None else None


@dataclass(eq=False)
class SweepResult:
    config: SweepConfig
    epsilon_grid: np.ndarray
    beta_grid: np.ndarray
    profiles: list[TypicalProfile]
    curves: list[NeighborCurve]
    n: int  # neighbor count


@dataclass(frozen=True)
class MeanLossEstimate:
    mean: float
    stderr: float


def _profile_stats(
    base_point: np.ndarray,
    wc: np.ndarray,
    M: np.ndarray,
    dist_base: np.ndarray,
    beta: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-rank and per-neighbor delta statistics for a batch of M draws.

    Returns (sorted_d_mean, sorted_d_stderr, delta_mean, delta_stderr)
    where delta is the signed distance difference, (samples, neighbors).
    """
    K = M.shape[0]
    d_nbr = np.linalg.norm(M[:, None, :] - wc[None, :, :], axis=2)
    delta = d_nbr - dist_base[:, None]
    d_abs = np.abs(delta)
    d_sorted = np.sort(d_abs, axis=1)
    if K > 1:
        sort_se = d_sorted.std(axis=0, ddof=1) / np.sqrt(K)
        delta_se = delta.std(axis=0, ddof=1) / np.sqrt(K)
    else:
        sort_se = np.zeros(d_sorted.shape[1])
        delta_se = np.zeros(delta.shape[1])
    return d_sorted.mean(axis=0), sort_se, delta.mean(axis=0), delta_se


def typical_profile(
    base_point: ModelPoint,
    neighbor_set: NeighborSet,
    params: MechanismParams,
    samples: int,
    rng: np.random.Generator,
) -> TypicalProfile:
    """Rank-wise mean of sorted |l| over `samples` draws M from the mechanism."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    base_point = np.asarray(base_point, dtype=np.float64)
    b, radii = sample_noise_batch(params, samples, rng)
    M = base_point + b
    beta = params.beta
    d_mean, d_se, _, _ = _profile_stats(base_point, neighbor_set.wc, M, radii, beta)
    mean_abs = beta * d_mean
    return TypicalProfile(
        epsilon=params.epsilon,
        beta=beta,
        mean_abs_loss_by_rank=mean_abs,
        normalized=mean_abs / beta,
        stderr_by_rank=beta * d_se,
    )


def neighbor_mean_loss(
    base_point: ModelPoint,
    neighbor_point: ModelPoint,
    params: MechanismParams,
    samples: int,
    rng: np.random.Generator,
) -> MeanLossEstimate:
    """Monte Carlo mean of the signed loss of one neighbor over M draws.

    The expectation it estimates is the KL divergence between the base and
    neighbor mechanisms, hence nonnegative up to Monte Carlo error.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2 for a standard error")
    base_point = np.asarray(base_point, dtype=np.float64)
    neighbor_point = np.asarray(neighbor_point, dtype=np.float64)
    b, radii = sample_noise_batch(params, samples, rng)
    M = base_point + b
    delta = np.linalg.norm(M - neighbor_point, axis=1) - radii
    beta = params.beta
    return MeanLossEstimate(
        mean=beta * float(delta.mean()),
        stderr=beta * float(delta.std(ddof=1) / np.sqrt(samples)),
    )


def select_spectrum_indices(distances: np.ndarray, count: int) -> np.ndarray:
    """Neighbor indices at evenly spaced positions of the sorted distances.

    Always includes the closest and farthest neighbors; returned in
    ascending-distance order.  Fewer than `count` come back when the
    spectrum has fewer rows.
    """
    distances = np.asarray(distances)
    if count < 1:
        raise ValueError("count must be >= 1")
    order = np.argsort(distances, kind="stable")
    positions = np.unique(
        np.round(np.linspace(0, distances.size - 1, min(count, distances.size)))
        .astype(int)
    )
    return order[positions]


def run_sweep(
    base: BaseSolution, neighbor_set: NeighborSet, config: SweepConfig
) -> SweepResult:
    """Typical profiles and neighbor curves over the whole epsilon grid.

    Deterministic for a given config: draws come from the stream
    (seed, path=(0,)) and are shared across grid points (rescaled per
    beta), so the result is bit-reproducible.
    """
    eps_grid = np.asarray(config.epsilon_grid)
    beta_grid = np.array([beta_of(e, base.n, base.lam) for e in eps_grid])
    K = config.samples_per_eps
    wc = neighbor_set.wc
    n = neighbor_set.n
    base_point = base.model

    if config.neighbor_indices:
        selected = np.asarray(config.neighbor_indices, dtype=int)
        if np.any((selected < 0) | (selected >= n)):
            raise IndexError("neighbor index out of range")
    else:
        selected = select_spectrum_indices(
            neighbor_set.distances, min(DEFAULT_CURVE_COUNT, n)
        )

    directions, raw_radii = standard_noise_draws(
        base.d, K, stream_rng(config.seed, 0)
    )

    profiles: list[TypicalProfile] = []
    sel_mean = np.empty((len(selected), eps_grid.size))
    sel_se = np.empty_like(sel_mean)
    sel_abs = np.empty_like(sel_mean)
    for g, beta in enumerate(beta_grid):
        radii = raw_radii / beta
        M = base_point + directions * radii[:, None]
        d_mean, d_se, delta_mean, delta_se = _profile_stats(
            base_point, wc, M, radii, beta
        )
        mean_abs = beta * d_mean
        profiles.append(
            TypicalProfile(
                epsilon=float(eps_grid[g]),
                beta=float(beta),
                mean_abs_loss_by_rank=mean_abs,
                normalized=mean_abs / beta,
                stderr_by_rank=beta * d_se,
            )
        )
        # Per-neighbor statistics reuse the same M draws.
        d_nbr = np.linalg.norm(M[:, None, :] - wc[None, selected, :], axis=2)
        delta_sel = d_nbr - radii[:, None]
        sel_mean[:, g] = beta * delta_sel.mean(axis=0)
        sel_se[:, g] = beta * delta_sel.std(axis=0, ddof=1) / np.sqrt(K) if K > 1 else 0.0
        sel_abs[:, g] = np.abs(delta_sel).mean(axis=0)

    distances = neighbor_set.distances
    curves: list[NeighborCurve] = []
    for row, i in enumerate(selected):
        normalized_abs = sel_abs[row]
        onset = None
        if eps_grid.size >= 4:
            onset = detect_plateau(
                normalized_abs, beta_grid, tau=config.tau,
                persistence=config.persistence,
            )
        curves.append(
            NeighborCurve(
                neighbor_index=int(i),
                distance=float(distances[i]),
                mean_loss=sel_mean[row],
                stderr=sel_se[row],
                mean_abs_loss=beta_grid * normalized_abs,
                normalized_abs=normalized_abs,
                onset=onset,
            )
        )
    return SweepResult(
        config=config,
        epsilon_grid=eps_grid,
        beta_grid=beta_grid,
        profiles=profiles,
        curves=curves,
        n=n,
    )


def detect_plateau(
    values,
    betas,
    tau: float = DEFAULT_TAU,
    persistence: int = DEFAULT_PERSISTENCE,
) -> PlateauOnset | None:
    """First sustained relative departure from the low-beta plateau level.

    The plateau level is the first grid value; a departure counts when
    |v - level| exceeds tau * |level| (any nonzero value when the level is
    zero) at `persistence` consecutive grid points.  Returns the
    bracketing grid cell of the first such point, or None.
    """
    values = np.asarray(values, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    if values.shape != betas.shape or values.ndim != 1:
        raise ValueError("values and betas must be 1-D arrays of equal length")
    if values.size < 4:
        raise ValueError("need at least 4 grid points to detect a plateau")
    if np.any(np.diff(betas) <= 0):
        raise ValueError("beta grid must be strictly increasing")
    if persistence < 1:
        raise ValueError("persistence must be >= 1")

    level = values[0]
    if level == 0.0:
        departed = values != 0.0
    else:
        departed = np.abs(values - level) > tau * abs(level)
    for j in range(1, values.size - persistence + 1):
        if departed[j : j + persistence].all():
            return PlateauOnset(
                index=j, beta_lo=float(betas[j - 1]), beta_hi=float(betas[j])
            )
    return None


@dataclass(frozen=True)
class CollapseRow:
    neighbor_index: int
    onset_lo: float
    onset_hi: float
    onset: float
    distance: float
    product: float


@dataclass(eq=False)
class CollapseResult:
    """Onset * distance products; their max/min ratio is the collapse quality."""

    rows: list[CollapseRow]
    product_ratio: float


def scaling_collapse(curves: list[NeighborCurve]) -> CollapseResult:
    """Products onset_beta * distance over curves with a detected onset.

    Curves without an onset are excluded with a warning.  A family of
    curves that are all one shared function of beta * distance produces
    equal products up to grid resolution.
    """
    rows: list[CollapseRow] = []
    for curve in curves:
        if curve.onset is None:
            warnings.warn(
                f"neighbor {curve.neighbor_index}: no plateau onset in grid; excluded",
                stacklevel=2,
            )
            continue
        onset = curve.onset.beta
        rows.append(
            CollapseRow(
                neighbor_index=curve.neighbor_index,
                onset_lo=curve.onset.beta_lo,
                onset_hi=curve.onset.beta_hi,
                onset=onset,
                distance=curve.distance,
                product=onset * curve.distance,
            )
        )
    if not rows:
        raise NumericalError("no plateau onsets detected on any curve")
    products = np.array([r.product for r in rows])
    return CollapseResult(rows=rows, product_ratio=float(products.max() / products.min()))


@dataclass(frozen=True)
class EpsilonRange:
    """Transition band between the full-privacy and no-privacy regimes."""

    eps_low: float
    eps_high: float
    index_low: int
    index_high: int


def profiles_match(a: np.ndarray, b: np.ndarray, tau: float) -> bool:
    """True when the profiles differ by at most tau of their height, rank-wise.

    The comparison scale is the larger profile maximum, not each rank's own
    value: the bottom ranks of a normalized profile sit orders of magnitude
    below the top and never stop drifting on any finite grid, so a
    rank-local relative test would reject profiles that are identical at
    every scale that matters.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(), np.abs(b).max())
    return bool(np.all(np.abs(a - b) <= tau * scale))


def epsilon_range(result: SweepResult, tau: float | None = None) -> EpsilonRange:
    """Edges of the transition band from a sweep's normalized profiles.

    eps_low is the largest epsilon still matching the lowest-epsilon
    profile at every rank (no privacy gain below it); eps_high the
    smallest epsilon matching the highest-epsilon profile (no further
    privacy loss above it).  Raises NumericalError when either regime is
    not captured by the grid, with advice to extend it.
    """
    if tau is None:
        tau = result.config.tau
    profiles = [p.normalized for p in result.profiles]
    if len(profiles) < 4:
        raise NumericalError("grid too short to identify regimes; extend it")
    low_limit = profiles[0]
    high_limit = profiles[-1]
    if not profiles_match(profiles[1], low_limit, tau):
        raise NumericalError(
            "low-epsilon regime not captured: the two lowest grid profiles "
            "disagree; extend the grid to smaller epsilon"
        )
    if not profiles_match(profiles[-2], high_limit, tau):
        raise NumericalError(
            "high-epsilon regime not captured: the two highest grid profiles "
            "disagree; extend the grid to larger epsilon"
        )
    index_low = 0
    while index_low + 1 < len(profiles) and profiles_match(
        profiles[index_low + 1], low_limit, tau
    ):
        index_low += 1
    index_high = len(profiles) - 1
    while index_high - 1 >= 0 and profiles_match(
        profiles[index_high - 1], high_limit, tau
    ):
        index_high -= 1
    if index_low >= index_high:
        raise NumericalError(
            "low and high regimes overlap at this tolerance; the transition "
            "is not resolved by the grid"
        )
    return EpsilonRange(
        eps_low=float(result.epsilon_grid[index_low]),
        eps_high=float(result.epsilon_grid[index_high]),
        index_low=index_low,
        index_high=index_high,
    )
