"""Uniform grids, Wiener paths, geometric Brownian motion and the Asian payoff."""
import logging
import math
from pathlib import Path
from typing import Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from models.domain import MarketParams, RngSeed, TimeGrid
from models.response import MomentEstimate
from stochastic import rng

logger = logging.getLogger("asianhedge.paths")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)

Quadrature = Literal["left", "trapezoid"]


class WienerPath(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: TimeGrid
    values: np.ndarray

    @model_validator(mode="after")
    def check_values(self) -> "WienerPath":
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError("one value per grid node expected")
        if self.values[0] != 0.0:
            raise ValueError("W_0 must be 0")
        return self


class AssetPath(BaseModel):
    """Asset prices S_j and running integral xi_j = int_0^{t_j} S du on one grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: TimeGrid
    s_values: np.ndarray
    xi_values: np.ndarray
    sigma: float
    s0: float

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def make_grid(n: int) -> TimeGrid:
    return TimeGrid(n=n)


def sample_wiener(grid: TimeGrid, seed: RngSeed) -> WienerPath:
    increments = rng.generator(seed).standard_normal(grid.n) * math.sqrt(grid.dt)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return WienerPath(grid=grid, values=values)


def sample_wiener_batch(
    grid: TimeGrid,
    seed: int,
    count: int,
    base_stream: int = rng.PATH_STREAMS,
    chunk: Optional[int] = None,
    threads: Optional[int] = None,
) -> np.ndarray:
    """``count`` Wiener paths as rows of a (count, n+1) array."""
    scale = math.sqrt(grid.dt)

    def draw(gen: np.random.Generator, size: int, _stream: int) -> np.ndarray:
        w = np.zeros((size, grid.n + 1))
        np.cumsum(gen.standard_normal((size, grid.n)) * scale, axis=1, out=w[:, 1:])
        return w

    blocks = rng.map_streams(draw, seed, count, base_stream=base_stream, chunk=chunk, threads=threads)
    return np.vstack(blocks)


def refine_wiener(w: WienerPath, seed: RngSeed) -> WienerPath:
    """Insert Brownian-bridge midpoints: grid 2n, even nodes unchanged."""
    n = w.grid.n
    noise = rng.generator(seed).standard_normal(n) * math.sqrt(1.0 / (4 * n))
    values = np.empty(2 * n + 1)
    values[0::2] = w.values
    values[1::2] = 0.5 * (w.values[:-1] + w.values[1:]) + noise
    return WienerPath(grid=make_grid(2 * n), values=values)


def running_integral(s: np.ndarray, dt: float, quadrature: Quadrature = "left") -> np.ndarray:
    """xi along the last axis of ``s``; xi_0 = 0."""
    if quadrature == "left":
        cells = s[..., :-1]
    elif quadrature == "trapezoid":
        cells = 0.5 * (s[..., :-1] + s[..., 1:])
    else:
        raise ValueError(f"unknown quadrature: {quadrature}")
    xi = np.zeros_like(s)
    np.cumsum(cells * dt, axis=-1, out=xi[..., 1:])
    return xi


def gbm_batch(
    sigma: float, s0: float, w: np.ndarray, quadrature: Quadrature = "left"
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized S and xi for Wiener rows on a uniform grid."""
    n = w.shape[-1] - 1
    t = np.arange(n + 1) / n
    s = s0 * np.exp(sigma * w - 0.5 * sigma * sigma * t)
    return s, running_integral(s, 1.0 / n, quadrature)


def gbm_path(params: MarketParams, w: WienerPath, quadrature: Quadrature = "left") -> AssetPath:
    s, xi = gbm_batch(params.sigma, params.s0, w.values, quadrature)
    return AssetPath(grid=w.grid, s_values=s, xi_values=xi, sigma=params.sigma, s0=params.s0)


def asian_payoff(path: AssetPath, strike: float) -> float:
    return max(float(path.xi_values[-1]) - strike, 0.0)


def abs_increment_moment(samples: int, seed: int, threads: Optional[int] = None) -> MomentEstimate:
    """Monte Carlo estimate of E|Z| (= sqrt(2/pi)) with its standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")

    def partial(gen: np.random.Generator, size: int, _stream: int) -> Tuple[float, float]:
        z = np.abs(gen.standard_normal(size))
        return float(z.sum()), float(np.dot(z, z))

    sums = rng.map_streams(partial, seed, samples, base_stream=rng.MOMENT_STREAMS, threads=threads)
    s1 = math.fsum(s for s, _ in sums)
    s2 = math.fsum(q for _, q in sums)
    mean = s1 / samples
    if samples == 1:
        return MomentEstimate(value=mean, se=0.0, samples=1)
    var = max(s2 - samples * mean * mean, 0.0) / (samples - 1)
    return MomentEstimate(value=mean, se=math.sqrt(var / samples), samples=samples)


def export_path_csv(path: AssetPath, wiener: WienerPath, file: Union[str, Path]) -> None:
    frame = pd.DataFrame(
        {"t": path.times, "W": wiener.values, "S": path.s_values, "xi": path.xi_values}
    )
    frame.to_csv(file, index=False, lineterminator="\n")


def eta_from_brownian(
    b: np.ndarray, v: float, sigma: float, quadrature: Quadrature = "left"
) -> np.ndarray:
    """eta_v = int_0^v exp(sigma W_u - sigma^2 u / 2) du from standard Brownian rows on [0, 1].

    Uses W_{v s} = sqrt(v) B_s, so one set of rows serves every v and sigma.
    """
    n = b.shape[-1] - 1
    s = np.arange(n + 1) / n
    x = np.exp(sigma * math.sqrt(v) * b - 0.5 * sigma * sigma * v * s)
    if quadrature == "left":
        return v * x[..., :-1].mean(axis=-1)
    if quadrature == "trapezoid":
        return v * (0.5 * (x[..., :-1] + x[..., 1:])).mean(axis=-1)
    raise ValueError(f"unknown quadrature: {quadrature}")
