"""Density q(v, z) of the exponential functional via the Brownian-bridge change of variables."""
import logging
import math
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from numba import config as numba_config
from numba import set_num_threads
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.stats import norm

from config import env
from density import kernels
from models.domain import TimeGrid
from models.response import DensityEstimate, ImplicitRoot, MomentEstimate
from stochastic import rng
from stochastic.errors import EstimatorError, SampleQualityError
from stochastic.paths import Quadrature, WienerPath, eta_from_brownian, make_grid, sample_wiener_batch

logger = logging.getLogger("asianhedge.density")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)

DEFAULT_NODES = 512
ROOT_TOL = 1e-10
MAX_ITER = 200
MAX_DISCARD_FRACTION = 1e-3


class BridgePath(BaseModel):
    """W~_u = W_u - u W_1 on a grid of [0, 1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: TimeGrid
    values: np.ndarray

    @model_validator(mode="after")
    def pinned(self) -> "BridgePath":
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError("one value per grid node expected")
        if self.values[0] != 0.0 or self.values[-1] != 0.0:
            raise ValueError("bridge must vanish at both ends")
        return self


def bridge_from_wiener(w: WienerPath) -> BridgePath:
    t = w.grid.times
    if t[-1] != 1.0:
        raise ValueError("Wiener path must reach t = 1")
    values = w.values - t * w.values[-1]
    values[0] = 0.0
    values[-1] = 0.0
    return BridgePath(grid=w.grid, values=values)


def quadrature_weights(m: int, v: float) -> Tuple[np.ndarray, np.ndarray, int, int]:
    """Weights w_k(v), nodes u_k, the count of weighted nodes and the node whose cell holds v."""
    if not 0.0 < v <= 1.0:
        raise ValueError(f"v must lie in (0, 1], got {v}")
    if v * m <= 1.0:
        raise ValueError(f"v must exceed one bridge cell (1/{m}), got {v}")
    u = np.arange(m, dtype=np.float64) / m
    w = np.clip(v - u, 0.0, 1.0 / m)
    kmax = int(np.count_nonzero(w > 0.0))
    return w, u, kmax, kmax - 1


def exponent_base(values: np.ndarray, sigma: float) -> np.ndarray:
    """sigma W~_k - sigma^2 u_k / 2 on the left nodes k = 0..m-1."""
    m = values.shape[-1] - 1
    u = np.arange(m, dtype=np.float64) / m
    return np.ascontiguousarray(sigma * values[..., :m] - 0.5 * sigma * sigma * u)


def _bridge_setup(bridge: BridgePath, v: float, sigma: float):
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    w, u, kmax, kstar = quadrature_weights(bridge.grid.n, v)
    return exponent_base(bridge.values, sigma), w, u, kmax, kstar


def _checked_functionals(bridge: BridgePath, v: float, a: float, sigma: float):
    base, w, u, kmax, kstar = _bridge_setup(bridge, v, sigma)
    f, k, ka, overflow = kernels.functionals(base, w, u, sigma, a, kmax)
    if overflow:
        raise EstimatorError(f"exponent overflow at a={a}")
    return f, k, ka, base, u, kstar


def functional_F(bridge: BridgePath, v: float, a: float, sigma: float) -> float:
    return float(_checked_functionals(bridge, v, a, sigma)[0])


def functional_K(bridge: BridgePath, v: float, a: float, sigma: float) -> float:
    return float(_checked_functionals(bridge, v, a, sigma)[1])


def functional_P(bridge: BridgePath, v: float, a: float, sigma: float) -> float:
    """Integrand at the node whose cell contains v; equals dF/dv for the discretized F."""
    _, _, _, base, u, kstar = _checked_functionals(bridge, v, a, sigma)
    return math.exp(base[kstar] + sigma * u[kstar] * a)


def solve_a(bridge: BridgePath, v: float, z: float, sigma: float, tol: float = ROOT_TOL) -> ImplicitRoot:
    """Root of F(v, a) = z with the final bracket as certificate."""
    if z <= 0 or tol <= 0:
        raise ValueError("z and tol must be positive")
    base, w, u, kmax, _ = _bridge_setup(bridge, v, sigma)
    status, a, f, _, _, lo, hi = kernels.solve_root(base, w, u, sigma, v, z, tol, MAX_ITER, kmax)
    if status == kernels.BELOW_FLOOR:
        raise EstimatorError(f"z={z} lies below the quadrature floor {w[0] * math.exp(base[0]):.6g}")
    if status != kernels.OK:
        raise EstimatorError(f"root solver did not converge for z={z}")
    return ImplicitRoot(v=v, z=z, a=a, residual=abs(f - z), bracket_lo=lo, bracket_hi=hi)


def default_z_grid(v: float, sigma: float, points: int = 120, width: float = 8.0) -> np.ndarray:
    """Log-spaced grid covering +-width lognormal scales around v."""
    scale = sigma * math.sqrt(v / 3.0)
    return v * np.exp(np.linspace(-width * scale, width * scale, points))


def _mean_se(s1: np.ndarray, s2: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    mean = s1 / n
    if n < 2:
        return mean, np.zeros_like(mean)
    var = np.maximum(s2 - n * mean * mean, 0.0) / (n - 1)
    return mean, np.sqrt(var / n)


class DensityEngine:
    """Bridge-sampled estimator of q(v, .) and its z and v derivatives."""

    def __init__(
        self,
        sigma: float,
        nodes: int = DEFAULT_NODES,
        tol: float = ROOT_TOL,
        threads: Optional[int] = None,
        chunk: Optional[int] = None,
    ):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        if nodes < 2:
            raise ValueError("nodes must be >= 2")
        self.sigma = sigma
        self.nodes = nodes
        self.tol = tol
        self.chunk = chunk or env.STREAM_CHUNK
        self.threads = threads or env.THREADS

    def _bases(self, seed: int, count: int) -> Iterator[np.ndarray]:
        grid = make_grid(self.nodes)
        t = grid.times
        for k, size in enumerate(rng.chunk_sizes(count, self.chunk)):
            w = sample_wiener_batch(
                grid, seed, size, base_stream=rng.BRIDGE_STREAMS + k, chunk=size, threads=1
            )
            yield exponent_base(w - t * w[:, -1:], self.sigma)

    def _use_threads(self) -> None:
        set_num_threads(max(1, min(self.threads, numba_config.NUMBA_NUM_THREADS)))

    def _check_discards(self, discarded: int, total: int) -> None:
        if discarded > MAX_DISCARD_FRACTION * total:
            raise SampleQualityError("density estimate rejected", discarded, total)
        if discarded:
            logger.warning(f"[DensityEngine] discarded {discarded}/{total} bridges")

    def estimate(
        self, v: float, z_grid: Sequence[float], samples: int, seed: int, derivatives: bool = False
    ) -> DensityEstimate:
        z = np.ascontiguousarray(z_grid, dtype=np.float64)
        if z.ndim != 1 or z.size == 0 or np.any(z <= 0) or np.any(np.diff(z) <= 0):
            raise ValueError("z_grid must be positive and strictly increasing")
        if samples < 1:
            raise ValueError("samples must be >= 1")
        w, u, kmax, kstar = quadrature_weights(self.nodes, v)
        sigma = self.sigma

        self._use_threads()

        n_z = z.size
        sums = {key: np.zeros(n_z) for key in ("q", "q2", "qz", "qz2", "qv", "qv2")}
        used = 0
        discarded = 0
        for base in self._bases(seed, samples):
            rows = base.shape[0]
            a = np.full((rows, n_z), np.nan)
            k = np.full((rows, n_z), np.nan)
            ka = np.full((rows, n_z), np.nan)
            p = np.full((rows, n_z), np.nan)
            status = np.zeros((rows, n_z), dtype=np.int64)
            kernels.solve_batch(base, w, u, sigma, v, kmax, kstar, z, self.tol, MAX_ITER,
                                a, k, ka, p, status)

            bad = np.any(status == kernels.DISCARDED, axis=1)
            discarded += int(bad.sum())
            keep = ~bad
            ok = (status == kernels.OK) & keep[:, None]
            used += int(keep.sum())

            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                phi = norm.pdf(a)
                q_i = np.where(ok, phi / k, 0.0)[keep]
                sums["q"] += q_i.sum(axis=0)
                sums["q2"] += (q_i * q_i).sum(axis=0)
                if derivatives:
                    ak_ka = a * k + ka
                    qz_i = np.where(ok, -phi * ak_ka / k**3, 0.0)[keep]
                    kv = sigma * u[kstar] * p
                    qv_i = np.where(ok, phi / k**2 * (p * ak_ka / k - kv), 0.0)[keep]
                    sums["qz"] += qz_i.sum(axis=0)
                    sums["qz2"] += (qz_i * qz_i).sum(axis=0)
                    sums["qv"] += qv_i.sum(axis=0)
                    sums["qv2"] += (qv_i * qv_i).sum(axis=0)

        self._check_discards(discarded, samples)
        if used == 0:
            raise EstimatorError("no usable bridge samples")
        q, se = _mean_se(sums["q"], sums["q2"], used)
        extra = {}
        if derivatives:
            extra["q_z"], extra["q_z_se"] = _mean_se(sums["qz"], sums["qz2"], used)
            extra["q_v"], extra["q_v_se"] = _mean_se(sums["qv"], sums["qv2"], used)
        logger.info(
            f"[DensityEngine] v={v} sigma={sigma} L={samples} m={self.nodes} "
            f"z_points={n_z} discarded={discarded}"
        )
        return DensityEstimate(
            v=v, sigma=sigma, z_grid=z, q=np.maximum(q, 0.0), se=se, L=used, discarded=discarded, **extra
        )

    def partial_moment(self, v: float, b: float, samples: int, seed: int) -> MomentEstimate:
        """E[eta_v 1{eta_v > b}] = int_b^inf z q(v, z) dz, bridge by bridge."""
        w, u, kmax, _ = quadrature_weights(self.nodes, v)
        self._use_threads()
        s1 = 0.0
        s2 = 0.0
        used = 0
        discarded = 0
        for base in self._bases(seed, samples):
            out = np.empty(base.shape[0])
            status = np.zeros(base.shape[0], dtype=np.int64)
            kernels.partial_moment_batch(base, w, u, self.sigma, v, kmax, float(b), self.tol, MAX_ITER,
                                         out, status)
            keep = status == kernels.OK
            discarded += int((~keep).sum())
            vals = out[keep]
            used += vals.size
            s1 += float(vals.sum())
            s2 += float(np.dot(vals, vals))
        self._check_discards(discarded, samples)
        mean, se = _mean_se(np.array(s1), np.array(s2), used)
        return MomentEstimate(value=float(mean), se=float(se), samples=used)


def density_q(
    v: float, z_grid: Sequence[float], sigma: float, samples: int, seed: int,
    nodes: int = DEFAULT_NODES, threads: Optional[int] = None,
) -> DensityEstimate:
    return DensityEngine(sigma, nodes=nodes, threads=threads).estimate(v, z_grid, samples, seed)


def density_derivatives(
    v: float, z_grid: Sequence[float], sigma: float, samples: int, seed: int,
    nodes: int = DEFAULT_NODES, threads: Optional[int] = None,
) -> DensityEstimate:
    return DensityEngine(sigma, nodes=nodes, threads=threads).estimate(
        v, z_grid, samples, seed, derivatives=True
    )


def partial_moment(
    v: float, b: float, sigma: float, samples: int, seed: int,
    nodes: int = DEFAULT_NODES, threads: Optional[int] = None,
) -> MomentEstimate:
    return DensityEngine(sigma, nodes=nodes, threads=threads).partial_moment(v, b, samples, seed)


def direct_eta_samples(
    v: float, sigma: float, samples: int, n_inner: int, seed: int,
    quadrature: Quadrature = "left", threads: Optional[int] = None,
) -> np.ndarray:
    """Independent samples of eta_v from Brownian paths on an n_inner grid."""
    if not 0.0 < v <= 1.0:
        raise ValueError(f"v must lie in (0, 1], got {v}")

    def draw(gen: np.random.Generator, size: int, _stream: int) -> np.ndarray:
        b = np.zeros((size, n_inner + 1))
        np.cumsum(gen.standard_normal((size, n_inner)) * math.sqrt(1.0 / n_inner), axis=1, out=b[:, 1:])
        return eta_from_brownian(b, v, sigma, quadrature)

    return np.concatenate(
        rng.map_streams(draw, seed, samples, base_stream=rng.DIRECT_STREAMS, threads=threads)
    )
