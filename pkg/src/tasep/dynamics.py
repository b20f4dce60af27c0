"""Synchronous one-step updates, trajectory runs and statically coupled runs.

Every particle draws an independent coin each step; a successful coin moves
the particle to min(x_i + v, bound_i) where the bound comes entirely from the
time-t state, so the update is a pure synchronous map.  Coins are produced by
a counter-based generator keyed by (seed, stream, t) with the i-th variate of
a step belonging to particle i, which makes runs reproducible and lets two
processes share their randomness exactly (static coupling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .configuration import (
    Configuration,
    LineWindow,
    ProcessParams,
    Ring,
    _successor_bounds_arrays,
    density,
    gaps,
)

__all__ = [
    "CoinStream",
    "CoupledRun",
    "ObstacleField",
    "TrajectorySummary",
    "coupled_run",
    "run",
    "step",
    "step_obstacles",
]

_UINT64 = 2**64


@dataclass(frozen=True)
class CoinStream:
    """Reproducible Bernoulli coin source: coin(i, t) = uniforms(t, n)[i] < p."""

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not 0 <= int(v) < _UINT64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def uniforms(self, t: int, n: int) -> np.ndarray:
        """The n uniform variates of step t, independent across (i, t)."""
        if t < 0:
            raise ValueError("time index must be nonnegative")
        bit_gen = Philox(counter=[0, t, 0, 0], key=[self.seed, self.stream])
        return Generator(bit_gen).random(n)

    def derive(self, *ids: int) -> "CoinStream":
        """Independent substream for an (experiment, replica, ...) tuple."""
        entropy = (self.seed, self.stream) + tuple(int(i) for i in ids)
        child = int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
        return CoinStream(self.seed, child)


def _as_coins(coins_or_seed) -> CoinStream:
    if isinstance(coins_or_seed, CoinStream):
        return coins_or_seed
    return CoinStream(int(coins_or_seed))


@dataclass(frozen=True)
class ObstacleField:
    """Static stopping points; sorted positions, on a ring within [0, L)."""

    geometry: Ring | LineWindow
    positions: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 1:
            raise ValueError("obstacle positions must be a 1-d sequence")
        if len(pos) > 1 and np.any(np.diff(pos) <= 0):
            raise ValueError("obstacle positions must be strictly increasing")
        if isinstance(self.geometry, Ring) and len(pos):
            L = self.geometry.circumference
            if pos[0] < 0 or pos[-1] >= L:
                raise ValueError(f"ring obstacles must lie in [0, {L})")
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return len(self.positions)

    def density(self) -> float:
        if isinstance(self.geometry, Ring):
            return self.n / self.geometry.circumference
        if self.n < 2:
            raise ValueError("line obstacle density needs at least 2 obstacles")
        return (self.n - 1) / float(self.positions[-1] - self.positions[0])


def _tiled_obstacles(field: ObstacleField) -> np.ndarray:
    """Obstacles extended over the ring window [0, 2L) particles can occupy."""
    z = field.positions
    if isinstance(field.geometry, Ring):
        L = field.geometry.circumference
        return np.concatenate([z, z + L, z + 2 * L])
    return z


def _next_obstacle(x: np.ndarray, tiled: np.ndarray) -> np.ndarray:
    """First obstacle strictly beyond each position (inf when none remains)."""
    idx = np.searchsorted(tiled, x, side="right")
    out = np.full(len(x), np.inf)
    inside = idx < len(tiled)
    out[inside] = tiled[idx[inside]]
    return out


def _validate_lattice(cfg: Configuration, params: ProcessParams) -> None:
    if params.space != "lattice":
        return
    if cfg.positions.dtype.kind not in "iu":
        raise ValueError("lattice process requires integer positions")
    if cfg.is_ring and not float(cfg.circumference).is_integer():
        raise ValueError("lattice ring requires an integer circumference")
    rr = 2.0 * cfg.radii
    if cfg.n and not np.all(rr == np.rint(rr)):
        raise ValueError("lattice process requires radii with integral diameters")


def _jump(v: float, dtype) -> float | int:
    """v as an int for pure-integer arithmetic, else as a float (promoting)."""
    if dtype.kind in "iu" and float(v).is_integer():
        return int(v)
    return float(v)


def _advance(x, bounds, v, p, u, znext=None):
    """One synchronous update on raw arrays; returns (new positions, displacements)."""
    target = np.minimum(x + v, bounds)
    if znext is not None:
        target = np.minimum(target, znext)
    # never move left: an ulp-scale overlap exposed by a window shift must not
    # turn into backward motion
    target = np.maximum(target, x)
    moved = np.where(u < p, target, x)
    return moved, moved - x


def step(cfg: Configuration, params: ProcessParams, coins: CoinStream, t: int) -> Configuration:
    """One synchronous step of the exclusion process."""
    _validate_lattice(cfg, params)
    gaps(cfg)  # rejects inadmissible input
    L = cfg.circumference if cfg.is_ring else None
    bounds = _successor_bounds_arrays(cfg.positions, cfg.radii, L)
    v = _jump(params.v, bounds.dtype)
    u = coins.uniforms(t, cfg.n)
    newx, disp = _advance(cfg.positions, bounds, v, params.p, u)
    if L is not None and cfg.n and newx[0] >= L:
        newx = newx - (int(L) if newx.dtype.kind in "iu" else L)
    return Configuration(cfg.geometry, newx, cfg.radii, cfg.winding + disp)


def step_obstacles(
    cfg: Configuration,
    field: ObstacleField,
    params: ProcessParams,
    coins: CoinStream,
    t: int,
) -> Configuration:
    """One synchronous step with static obstacles (point particles only).

    Each particle also stops at the first obstacle strictly beyond it, so an
    obstacle costs exactly one step to pass.
    """
    if cfg.n and np.any(cfg.radii != 0):
        raise ValueError("obstacle dynamics is defined for radius-0 particles")
    if field.geometry != cfg.geometry:
        raise ValueError("obstacle field geometry must match the configuration")
    gaps(cfg)
    L = cfg.circumference if cfg.is_ring else None
    x = cfg.positions.astype(np.float64)
    bounds = _successor_bounds_arrays(x, cfg.radii, L)
    znext = _next_obstacle(x, _tiled_obstacles(field))
    u = coins.uniforms(t, cfg.n)
    newx, disp = _advance(x, bounds, float(params.v), params.p, u, znext)
    if L is not None and cfg.n and newx[0] >= L:
        newx = newx - L
    return Configuration(cfg.geometry, newx, cfg.radii, cfg.winding + disp)


@dataclass(frozen=True)
class TrajectorySummary:
    """What a run records: totals, a per-step series and sampled snapshots."""

    steps: int
    n_particles: int
    displacement: np.ndarray
    step_total_displacement: np.ndarray
    snapshots: tuple[tuple[int, Configuration], ...]
    snapshot_densities: np.ndarray
    final: Configuration


def run(
    cfg: Configuration,
    params: ProcessParams,
    steps: int,
    coins_or_seed,
    field: ObstacleField | None = None,
    snapshot_stride: int | None = None,
) -> TrajectorySummary:
    """Iterate the one-step map, recording displacement totals and snapshots.

    Snapshots are taken at t = 0, stride, 2*stride, ... and after the final
    step; ``snapshot_stride=None`` keeps only the initial and final states.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    coins = _as_coins(coins_or_seed)
    _validate_lattice(cfg, params)
    if field is not None:
        if cfg.n and np.any(cfg.radii != 0):
            raise ValueError("obstacle dynamics is defined for radius-0 particles")
        if field.geometry != cfg.geometry:
            raise ValueError("obstacle field geometry must match the configuration")
    gaps(cfg)
    n = cfg.n
    L = cfg.circumference if cfg.is_ring else None
    x = cfg.positions.copy()
    if field is not None:
        x = x.astype(np.float64)
    rad = cfg.radii
    v = _jump(params.v, x.dtype)
    tiled = _tiled_obstacles(field) if field is not None else None
    wind = cfg.winding.copy()
    wind0 = cfg.winding
    totals = np.zeros(steps)
    snaps: list[tuple[int, Configuration]] = []

    def snapshot(t: int, xa: np.ndarray) -> None:
        snaps.append((t, Configuration(cfg.geometry, xa, rad, wind)))

    snapshot(0, x)
    for t in range(steps):
        bounds = _successor_bounds_arrays(x, rad, L)
        znext = _next_obstacle(x, tiled) if tiled is not None else None
        u = coins.uniforms(t, n)
        x, disp = _advance(x, bounds, v, params.p, u, znext)
        wind = wind + disp
        totals[t] = disp.sum()
        if L is not None and n and x[0] >= L:
            x = x - (int(L) if x.dtype.kind in "iu" else L)
        if snapshot_stride and (t + 1) % snapshot_stride == 0:
            snapshot(t + 1, x)
    if not snaps or snaps[-1][0] != steps:
        snapshot(steps, x)
    final = snaps[-1][1]
    densities = np.array([density(c) for _, c in snaps]) if n else np.zeros(len(snaps))
    return TrajectorySummary(
        steps=steps,
        n_particles=n,
        displacement=wind - wind0,
        step_total_displacement=totals,
        snapshots=tuple(snaps),
        snapshot_densities=densities,
        final=final,
    )


@dataclass(frozen=True)
class CoupledRun:
    """Two runs driven by identical coins, with per-step divergence tracking."""

    a: TrajectorySummary
    b: TrajectorySummary
    max_gap_divergence: np.ndarray
    max_displacement_divergence: np.ndarray


def coupled_run(
    cfg_a: Configuration,
    cfg_b: Configuration,
    params_a: ProcessParams,
    params_b: ProcessParams,
    steps: int,
    coins_or_seed,
    displacement_scale: float = 1.0,
) -> CoupledRun:
    """Advance two equal-size processes on one coin stream, comparing each step.

    Divergences track max_i |gap_b - scale*gap_a| and
    max_i |disp_b - scale*disp_a| per step (scale 1 for conjugate couplings,
    scale u for spatial similarity checks).
    """
    if cfg_a.n != cfg_b.n:
        raise ValueError("statically coupled runs need equal particle counts")
    if steps < 1:
        raise ValueError("need at least one step")
    coins = _as_coins(coins_or_seed)
    for cfg, params in ((cfg_a, params_a), (cfg_b, params_b)):
        _validate_lattice(cfg, params)
        gaps(cfg)
    n = cfg_a.n
    states = []
    for cfg, params in ((cfg_a, params_a), (cfg_b, params_b)):
        L = cfg.circumference if cfg.is_ring else None
        x = cfg.positions.copy()
        states.append([x, cfg.radii, L, _jump(params.v, x.dtype), params.p, cfg.winding.copy()])
    gap_div = np.zeros(steps)
    disp_div = np.zeros(steps)
    totals = [np.zeros(steps), np.zeros(steps)]
    scale = float(displacement_scale)
    for t in range(steps):
        u = coins.uniforms(t, n)
        disps = []
        gap_arrays = []
        for k, st in enumerate(states):
            x, rad, L, v, p, wind = st
            bounds = _successor_bounds_arrays(x, rad, L)
            x, disp = _advance(x, bounds, v, p, u)
            wind = wind + disp
            if L is not None and n and x[0] >= L:
                x = x - (int(L) if x.dtype.kind in "iu" else L)
            st[0], st[5] = x, wind
            totals[k][t] = disp.sum()
            disps.append(disp)
            gap_arrays.append(_successor_bounds_arrays(x, rad, L) - x)
        if n:
            ga, gb = gap_arrays
            if not isinstance(cfg_a.geometry, Ring):
                ga, gb = ga[:-1], gb[:-1]
            gap_div[t] = np.abs(gb - scale * ga).max() if len(ga) else 0.0
            disp_div[t] = np.abs(disps[1] - scale * disps[0]).max()
    summaries = []
    for (cfg, params), st, tot in zip(((cfg_a, params_a), (cfg_b, params_b)), states, totals):
        final = Configuration(cfg.geometry, st[0], cfg.radii, st[5])
        summaries.append(
            TrajectorySummary(
                steps=steps,
                n_particles=n,
                displacement=st[5] - cfg.winding,
                step_total_displacement=tot,
                snapshots=((steps, final),),
                snapshot_densities=np.array([density(final)]) if n else np.zeros(1),
                final=final,
            )
        )
    return CoupledRun(summaries[0], summaries[1], gap_div, disp_div)
