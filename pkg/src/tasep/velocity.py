"""Closed-form average velocities, the obstacle extension, Monte Carlo
velocity estimation, fundamental diagrams and stochastic-stability sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .configuration import (
    Configuration,
    ProcessParams,
    Ring,
    density,
    even_lattice_ring,
    evenly_spaced_ring,
    scale_shift,
)
from .dynamics import CoinStream, ObstacleField, TrajectorySummary, coupled_run, run
from .measures import build_invariant_matrix, cylinder_measure, sample_ring_configuration

__all__ = [
    "FundamentalDiagramRow",
    "SimilarityReport",
    "StabilityRow",
    "VelocityEstimate",
    "diagram_point",
    "estimate_velocity",
    "extend_obstacles",
    "fundamental_diagram",
    "initial_ring",
    "lattice_density",
    "measure_distance",
    "similarity_check",
    "stability_sweep",
    "theoretical_velocity",
    "theoretical_velocity_obstacles",
]


def _free_velocity(rho: float, p: float, v: float) -> float:
    # [1 + v*rho - sqrt((1 + v*rho)^2 - 4*p*v*rho)] / (2*rho), written in the
    # cancellation-free form; the radicand is (1 - v*rho)^2 + 4*v*rho*(1-p) >= 0
    # but can round a hair below zero near v*rho = p = 1.
    a = 1 + v * rho
    return 2 * p * v / (a + math.sqrt(max(a * a - 4 * p * v * rho, 0.0)))


def theoretical_velocity(rho: float, p: float, v: float = 1.0, r: float = 0.0) -> float:
    """Stationary average velocity at density rho for jump v and ball radius r.

    Radius enters only through the gap-preserving change to point particles at
    the free density rho/(1 - 2*r*rho); a fully packed ring returns 0.
    """
    if rho <= 0:
        raise ValueError("density must be positive")
    if not 0 < p <= 1:
        raise ValueError(f"movement probability p={p} outside (0, 1]")
    if v <= 0 or r < 0:
        raise ValueError("need v > 0 and r >= 0")
    packing = 2 * r * rho
    if packing > 1:
        raise ValueError(f"2*r*rho = {packing} > 1 is denser than close packing")
    if packing == 1:
        return 0.0
    return _free_velocity(rho / (1 - packing), p, v)


def theoretical_velocity_obstacles(rho_particles: float, rho_extended: float, p: float) -> float:
    """Average velocity among obstacles, from the two densities only.

    ``rho_extended`` is the density of the obstacle configuration after
    inserting virtual obstacles every v; with rho_extended = 1/v this reduces
    algebraically to the obstacle-free formula.
    """
    if rho_particles <= 0 or rho_extended <= 0:
        raise ValueError("densities must be positive")
    if not 0 < p <= 1:
        raise ValueError(f"movement probability p={p} outside (0, 1]")
    s = rho_particles + rho_extended
    return 2 * p / (s + math.sqrt(max(s * s - 4 * p * rho_particles * rho_extended, 0.0)))


def extend_obstacles(field: ObstacleField, v: float) -> ObstacleField:
    """Insert floor(gap/v) virtual obstacles at spacing v into every gap.

    A virtual obstacle falling exactly onto the next real one is dropped, so
    exact-multiple gaps do not create duplicates.  On a ring the wrap gap is
    extended as well.
    """
    if v <= 0:
        raise ValueError("need v > 0")
    z = field.positions
    if len(z) == 0:
        return field
    is_ring = isinstance(field.geometry, Ring)
    if is_ring:
        succ = np.append(z[1:], z[0] + field.geometry.circumference)
    else:
        succ = z[1:]
    pieces = [z]
    for i in range(len(succ)):
        gap = succ[i] - z[i]
        k = int(math.floor(gap / v + 1e-9))
        if k < 1:
            continue
        cand = z[i] + v * np.arange(1, k + 1)
        cand = cand[np.abs(cand - succ[i]) > 1e-9 * max(v, 1.0)]
        pieces.append(cand)
    merged = np.concatenate(pieces)
    if is_ring:
        L = field.geometry.circumference
        merged = np.where(merged >= L, merged - L, merged)
    return ObstacleField(field.geometry, np.sort(merged))


@dataclass(frozen=True)
class VelocityEstimate:
    """Post-burn-in mean displacement per particle per step, with batch stderr."""

    value: float
    stderr: float
    n_particles: int
    steps: int
    burn_in: int


def estimate_velocity(
    summary: TrajectorySummary, burn_in: int | None = None, batches: int = 20
) -> VelocityEstimate:
    """Velocity and batch-means standard error from a trajectory summary."""
    steps = summary.steps
    if burn_in is None:
        burn_in = steps // 4
    if not 0 <= burn_in < steps:
        raise ValueError(f"burn_in={burn_in} must leave at least one step of {steps}")
    if batches < 2:
        raise ValueError("need at least 2 batches")
    post = summary.step_total_displacement[burn_in:] / max(summary.n_particles, 1)
    if len(post) < batches:
        raise ValueError(f"{len(post)} post-burn-in steps cannot fill {batches} batches")
    value = float(post.mean())
    batch_means = np.array([chunk.mean() for chunk in np.array_split(post, batches)])
    stderr = float(batch_means.std(ddof=1) / math.sqrt(batches))
    return VelocityEstimate(value, stderr, summary.n_particles, steps, burn_in)


def initial_ring(rho: float, v: float, r: float, n_particles: int) -> tuple[Configuration, str]:
    """Deterministic exact-density ring start and the matching space tag.

    Hard-core radii 1/2 with integer v get an integer-lattice occupancy spread
    as evenly as possible; anything else gets an evenly spaced continuum ring.
    """
    if r == 0.5 and float(v).is_integer():
        n_sites = int(round(n_particles / rho))
        k = int(round(rho * n_sites))
        return even_lattice_ring(n_sites, k), "lattice"
    return evenly_spaced_ring(n_particles, rho, radius=r), "continuum"


@dataclass(frozen=True)
class FundamentalDiagramRow:
    rho: float
    p: float
    v: float
    r: float
    v_theory: float
    v_hat: float
    stderr: float
    flux: float


def _measure_one(rho, p, v, r, n_particles, steps, coins, burn_in):
    cfg, space = initial_ring(rho, v, r, n_particles)
    summary = run(cfg, ProcessParams(p=p, v=v, space=space), steps, coins)
    return estimate_velocity(summary, burn_in=burn_in)


def diagram_point(
    rho: float,
    p: float,
    v: float,
    r: float,
    n_particles: int,
    steps: int,
    seed: int,
    index: int = 0,
    burn_in: int | None = None,
    initial: str = "even",
) -> FundamentalDiagramRow:
    """One grid point of the fundamental diagram; ``index`` keys the substream.

    ``initial="even"`` starts from an evenly spaced exact-density ring;
    ``initial="sampled"`` draws the start from the transported invariant
    measure, whose particle count fluctuates, so the row then reports the
    realized density and the theory value at that density.
    """
    if r > 0 and 2 * r * rho >= 1:
        raise ValueError(f"grid point rho={rho} has 2*r*rho >= 1")
    coins = CoinStream(seed).derive(index)
    if initial == "even":
        est = _measure_one(rho, p, v, r, n_particles, steps, coins, burn_in)
        rho_run = float(rho)
    elif initial == "sampled":
        rho_lat = lattice_density(rho, v, r)
        n_sites = max(2, int(round(n_particles / rho_lat)))
        cfg = sample_ring_configuration(
            rho, p, v=v, r=r, n_sites=n_sites,
            seed=np.random.default_rng(np.random.SeedSequence((seed, index))),
        )
        space = "lattice" if cfg.is_lattice and float(v).is_integer() else "continuum"
        summary = run(cfg, ProcessParams(p=p, v=v, space=space), steps, coins)
        est = estimate_velocity(summary, burn_in=burn_in)
        rho_run = density(cfg)
    else:
        raise ValueError(f"unknown initial condition kind {initial!r}")
    theory = theoretical_velocity(rho_run, p, v, r)
    return FundamentalDiagramRow(
        rho=rho_run, p=p, v=v, r=r,
        v_theory=theory, v_hat=est.value, stderr=est.stderr,
        flux=rho_run * est.value,
    )


def fundamental_diagram(
    rho_grid,
    p: float,
    v: float,
    r: float,
    n_particles: int = 10_000,
    steps: int = 20_000,
    seed: int = 0,
    burn_in: int | None = None,
    initial: str = "even",
) -> list[FundamentalDiagramRow]:
    """Theory and simulation velocity across a density grid, one row per rho."""
    return [
        diagram_point(rho, p, v, r, n_particles, steps, seed, k, burn_in, initial)
        for k, rho in enumerate(rho_grid)
    ]


def lattice_density(rho: float, v: float, r: float) -> float:
    """Density of the unit-jump hard-core lattice image of a (rho, v, r) process."""
    rho_free = rho / (1 - 2 * r * rho)
    return v * rho_free / (1 + v * rho_free)


def measure_distance(rho_lat: float, p: float, max_length: int = 4) -> float:
    """Max cylinder-measure gap to the deterministic measure, words up to max_length."""
    m_p = build_invariant_matrix(rho_lat, p)
    m_1 = build_invariant_matrix(rho_lat, 1.0)
    worst = 0.0
    for n in range(1, max_length + 1):
        for bits in product("01", repeat=n):
            word = "".join(bits)
            worst = max(worst, abs(cylinder_measure(m_p, word) - cylinder_measure(m_1, word)))
    return worst


@dataclass(frozen=True)
class StabilityRow:
    p: float
    v_theory: float
    v_hat: float
    stderr: float
    measure_dist: float


def stability_sweep(
    rho: float,
    v: float,
    r: float,
    p_values,
    n_particles: int = 2_000,
    steps: int = 4_000,
    seed: int = 0,
    burn_in: int | None = None,
) -> list[StabilityRow]:
    """Velocities and measure distances along a p -> 1 sequence at fixed density."""
    rho_lat = lattice_density(rho, v, r)
    root = CoinStream(seed)
    rows = []
    for k, p in enumerate(p_values):
        theory = theoretical_velocity(rho, p, v, r)
        est = _measure_one(rho, p, v, r, n_particles, steps, root.derive(k), burn_in)
        dist = measure_distance(rho_lat, p) if p < 1 else 0.0
        rows.append(StabilityRow(p=float(p), v_theory=theory, v_hat=est.value,
                                 stderr=est.stderr, measure_dist=dist))
    return rows


@dataclass(frozen=True)
class SimilarityReport:
    """Coupled check of the spatial similarity x -> u*x, v -> u*v."""

    u: float
    steps: int
    density: float
    density_scaled: float
    max_displacement_error: float
    max_gap_error: float


def similarity_check(
    cfg: Configuration, params: ProcessParams, u: float, steps: int, seed
) -> SimilarityReport:
    """Run (x, v) against (u*x, u*v) on shared coins; displacements must scale by u."""
    if cfg.n and np.any(cfg.radii != 0):
        raise ValueError("the similarity transform applies to radius-0 particles")
    if u <= 0:
        raise ValueError("need u > 0")
    scaled = scale_shift(cfg, u, 0.0)
    params_scaled = ProcessParams(p=params.p, v=u * params.v, space="continuum")
    params_plain = ProcessParams(p=params.p, v=params.v, space="continuum")
    cfg_plain = Configuration(cfg.geometry, cfg.positions.astype(np.float64), cfg.radii, cfg.winding)
    result = coupled_run(
        cfg_plain, scaled, params_plain, params_scaled, steps, seed, displacement_scale=u
    )
    return SimilarityReport(
        u=u,
        steps=steps,
        density=density(cfg) if cfg.n else 0.0,
        density_scaled=density(scaled) if cfg.n else 0.0,
        max_displacement_error=float(result.max_displacement_divergence.max()),
        max_gap_error=float(result.max_gap_divergence.max()),
    )
