"""
Hide and seek on a flat torus: a Brownian seeker with generator Delta starts at
a fixed point and stops on entering the epsilon-ball of a uniformly random
target. Its mean stopping time is m - (1/2pi) log epsilon in the continuum;
the discrete walk adds an overshoot bias which is measured once on the square
torus and then held fixed.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from .conf import ToleranceModel, setting
from .exceptions import ConvergenceError
from .flat_trace import ztilde_flat
from .greens import robin_mass
from .lattice import TorusShape, injectivity_radius, reduced_basis, square_torus
from .result_cache import cached

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
# step_dt <= epsilon^2 * STEP_GUARD
STEP_GUARD = 0.1


class McConfig(ToleranceModel):
    epsilon: float = Field(gt=0)
    n_trials: int = Field(ge=100)
    seed: int = Field(default=0, ge=0)
    step_dt: Optional[float] = Field(default=None, gt=0)
    start: Tuple[float, float] = (0.0, 0.0)
    block_size: int = Field(default_factory=lambda: setting('MC_BLOCK_SIZE'), ge=1)
    max_time: float = Field(default_factory=lambda: setting('MC_MAX_TIME'), gt=0)
    workers: int = Field(default_factory=lambda: setting('WORKERS'), ge=1)

    @model_validator(mode='before')
    @classmethod
    def default_step(cls, data):
        if isinstance(data, dict) and data.get('step_dt') is None and data.get('epsilon'):
            data = {**data, 'step_dt': setting('MC_STEP_FRACTION') * float(data['epsilon']) ** 2}
        return data

    @model_validator(mode='after')
    def check_resolution(self):
        bound = STEP_GUARD * self.epsilon ** 2
        if self.step_dt > bound * (1.0 + 1e-12):
            raise ValueError(f"step_dt {self.step_dt:g} exceeds epsilon^2/10 = {bound:g}")
        return self

    def cache_key(self) -> dict:
        """Everything that changes the simulated times; workers does not"""
        return self.model_dump(exclude={'workers'})


@dataclass(frozen=True)
class HitTimeEstimate:
    mean: float
    std_err: float
    n: int


@dataclass(frozen=True)
class Calibration:
    offset: float
    std_err: float
    n: int


@dataclass(frozen=True)
class TraceEstimate:
    value: float
    std_err: float
    offset: float
    n: int


class _Wrapper:
    """Shortest displacement to the target, with the reduced basis computed once"""

    def __init__(self, shape: TorusShape):
        self.reduced, _ = reduced_basis(shape)
        self.inverse = np.linalg.inv(self.reduced)
        self.shifts = np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)

    def distance(self, delta: np.ndarray) -> np.ndarray:
        coeffs = delta @ self.inverse
        coeffs = coeffs - np.round(coeffs)
        candidates = (coeffs[:, None, :] + self.shifts[None, :, :]) @ self.reduced
        return np.sqrt(np.min(np.sum(candidates * candidates, axis=-1), axis=1))


def _run_block(shape: TorusShape, cfg: McConfig, block: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, block]))
    wrapper = _Wrapper(shape)
    targets = rng.random((size, 2)) @ shape.basis
    position = np.broadcast_to(np.asarray(cfg.start, dtype=float), (size, 2)).copy()
    times = np.zeros(size)
    active = np.flatnonzero(wrapper.distance(targets - position) > cfg.epsilon)
    sigma = math.sqrt(2.0 * cfg.step_dt)
    t = 0.0

    while active.size:
        if t >= cfg.max_time:
            raise ConvergenceError(
                f"{active.size} seekers still searching after time {cfg.max_time}",
                details={'block': block, 'epsilon': cfg.epsilon, 'max_time': cfg.max_time}
            )
        t += cfg.step_dt
        position[active] += rng.normal(0.0, sigma, size=(active.size, 2))
        found = wrapper.distance(targets[active] - position[active]) <= cfg.epsilon
        times[active[found]] = t
        active = active[~found]

    logger.debug(f"Block {block} done", extra={'trials': size, 'longest': float(times.max())})
    return times


def simulate_hitting(shape: TorusShape, cfg: McConfig) -> HitTimeEstimate:
    """
    Mean hitting time over cfg.n_trials seekers.

    Trials run in blocks of block_size; block k draws from
    SeedSequence([seed, k]) so the result does not depend on the worker count.
    """
    if cfg.epsilon >= 0.5 * injectivity_radius(shape):
        logger.warning(f"epsilon {cfg.epsilon} is not small against the injectivity radius", extra={
            'shape': shape.describe(),
            'injectivity_radius': injectivity_radius(shape),
        })

    sizes = [min(cfg.block_size, cfg.n_trials - start) for start in range(0, cfg.n_trials, cfg.block_size)]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        blocks = list(pool.map(lambda item: _run_block(shape, cfg, *item), enumerate(sizes)))
    times = np.concatenate(blocks)

    n = int(times.size)
    mean = float(np.mean(times))
    std_err = float(np.std(times, ddof=1) / math.sqrt(n))
    logger.info(f"Hitting time on {shape.describe()}: {mean:.6g} +- {std_err:.2g}", extra={
        'epsilon': cfg.epsilon,
        'n_trials': n,
        'step_dt': cfg.step_dt,
    })
    return HitTimeEstimate(mean=mean, std_err=std_err, n=n)


def green_prediction(shape: TorusShape, epsilon: float) -> float:
    """Continuum mean hitting time m - (1/2pi) log epsilon"""
    return robin_mass(shape) - math.log(epsilon) / TWO_PI


@cached('mc_calibration', key_func=lambda cfg: cfg.cache_key())
def calibrate_offset(cfg: McConfig) -> Calibration:
    """
    Mean hitting time + log(epsilon)/(2pi) - ztilde_flat on the square torus.

    The value is frozen in the result cache per configuration.
    """
    square = square_torus()
    estimate = simulate_hitting(square, cfg)
    offset = estimate.mean + math.log(cfg.epsilon) / TWO_PI - ztilde_flat(square)
    logger.info(f"Calibrated hitting-time offset {offset:.6g}", extra={'std_err': estimate.std_err})
    return Calibration(offset=offset, std_err=estimate.std_err, n=estimate.n)


def trace_estimate(shape: TorusShape, cfg: McConfig, estimate: Optional[HitTimeEstimate] = None) -> TraceEstimate:
    """
    Mean hitting time + log(epsilon)/(2pi) - calibrated offset. A hitting-time
    estimate already simulated with the same cfg may be passed in.
    """
    calibration = calibrate_offset(cfg)
    estimate = estimate or simulate_hitting(shape, cfg)
    value = estimate.mean + math.log(cfg.epsilon) / TWO_PI - calibration.offset
    std_err = math.hypot(estimate.std_err, calibration.std_err)
    return TraceEstimate(value=value, std_err=std_err, offset=calibration.offset, n=estimate.n)
