"""
Green's function of the flat unit-area torus, its split into
(-1/2pi) log d + H, Robin's mass and the identity tying the integrated mass to
the regularized trace.

The production evaluator is the theta closed form

    G = -(1/2pi) log|theta_1(w|tau) / eta(tau)| + (Im w)^2 / (2 Im tau)

in the frame of the reduced basis (w = displacement / first basis vector).
``greens_spectral_sum`` is the eigenfunction expansion used as an oracle.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .conf import setting
from .exceptions import DomainError, validate_positive
from .flat_trace import ztilde_flat
from .lattice import TorusShape, dual_basis, eigenvalues, minimal_displacement, reduced_basis
from .specfun import SeriesConfig, euler_gamma, jacobi_theta1, jacobi_theta1_prime0, log_abs_dedekind_eta

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi

# Displacements shorter than this are treated as coincident points
COINCIDENCE_TOL = 1e-14


@dataclass(frozen=True)
class GreensEval:
    """G(x, y) with its parametrix split"""
    g: float
    log_part: float
    h: float
    dist: float


@dataclass(frozen=True)
class RobinMassField:
    points: np.ndarray
    mass: np.ndarray

    @property
    def spread(self) -> float:
        return float(np.max(self.mass) - np.min(self.mass)) if self.mass.size else 0.0


@dataclass(frozen=True)
class _Frame:
    """Reduced basis seen as complex numbers"""
    first: complex
    tau: complex
    log_abs_eta: float = field(default=0.0)


def _frame(shape: TorusShape, cfg: Optional[SeriesConfig]) -> _Frame:
    reduced, _ = reduced_basis(shape)
    first = complex(*reduced[0])
    tau = complex(*reduced[1]) / first
    return _Frame(first=first, tau=tau, log_abs_eta=log_abs_dedekind_eta(tau, cfg))


def greens_values(shape: TorusShape, displacements, cfg: Optional[SeriesConfig] = None) -> np.ndarray:
    """
    Vectorized closed form on an array of displacements of shape (..., 2).

    Displacements are first replaced by their shortest lattice representative.
    """
    frame = _frame(shape, cfg)
    delta = minimal_displacement(shape, np.zeros(2), displacements)
    w = (delta[..., 0] + 1j * delta[..., 1]) / frame.first
    theta = np.asarray(jacobi_theta1(w, frame.tau, cfg))
    log_ratio = np.log(np.abs(theta)) - frame.log_abs_eta
    return -log_ratio / TWO_PI + w.imag ** 2 / (2.0 * frame.tau.imag)


def greens_flat(shape: TorusShape, x, y, cfg: Optional[SeriesConfig] = None) -> GreensEval:
    """G(x, y) from the theta closed form, split as (-1/2pi) log d + H"""
    delta = minimal_displacement(shape, x, y)
    dist = float(np.linalg.norm(delta))
    if dist < COINCIDENCE_TOL:
        raise DomainError(
            "Green's function is singular at coincident points; use robin_mass for the diagonal",
            field='y',
            details={'x': list(map(float, np.ravel(x))), 'y': list(map(float, np.ravel(y)))}
        )
    g = float(greens_values(shape, delta, cfg))
    log_part = -math.log(dist) / TWO_PI
    return GreensEval(g=g, log_part=log_part, h=g - log_part, dist=dist)


def robin_mass(shape: TorusShape, x=None, cfg: Optional[SeriesConfig] = None) -> float:
    """
    m(x) = lim_{y->x} [G(x,y) + (1/2pi) log d(x,y)], read off the closed form:
    -(1/2pi) log|theta_1'(0|tau) / eta(tau)| + (1/2pi) log|first basis vector|.

    Flat tori are homogeneous, so x only has to be a valid point.
    """
    if x is not None and np.shape(x) != (2,):
        raise DomainError("A torus point has two coordinates", field='x', details={'shape': list(np.shape(x))})
    frame = _frame(shape, cfg)
    log_prime = math.log(abs(jacobi_theta1_prime0(frame.tau, cfg)))
    return -(log_prime - frame.log_abs_eta) / TWO_PI + math.log(abs(frame.first)) / TWO_PI


def robin_mass_field(shape: TorusShape, points, cfg: Optional[SeriesConfig] = None) -> RobinMassField:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    mass = np.array([robin_mass(shape, point, cfg) for point in points])
    return RobinMassField(points=points, mass=mass)


def scaled_robin_mass(shape: TorusShape, c: float, cfg: Optional[SeriesConfig] = None) -> float:
    """Robin's mass after g -> c g: distances scale by sqrt(c), G does not change"""
    c = validate_positive(c, 'c')
    return robin_mass(shape, cfg=cfg) + math.log(c) / FOUR_PI


def mass_trace_check(shape: TorusShape, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Residual of  int m dV - 2 log 2 + 2 gamma = Z(1)  at volume 4 pi.

    The metric is scaled by c = 4 pi. The mass gains log(c)/(4pi) and integrates
    against volume c. The trace becomes c Z(1) + c log(c)/(4pi), from
    Z_c(s) = c^s Z(s) with the residue at s = 1 going from 1/(4pi) to 1.
    """
    c = FOUR_PI
    mass_integral = c * scaled_robin_mass(shape, c, cfg)
    lhs = mass_integral - 2.0 * math.log(2.0) + 2.0 * euler_gamma()
    rhs = c * ztilde_flat(shape, cfg) + c * math.log(c) / FOUR_PI
    residual = lhs - rhs
    logger.debug(f"Mass/trace residual {residual:.3e} for {shape.describe()}")
    return residual


def _lattice_images(shape: TorusShape, delta: np.ndarray, radius: float) -> np.ndarray:
    """delta - l for every lattice vector l with |delta - l| <= radius"""
    reduced, _ = reduced_basis(shape)
    reach = radius + float(np.linalg.norm(delta))
    inverse = np.linalg.inv(reduced)
    i_max = int(math.ceil(reach * np.linalg.norm(inverse[:, 0]))) + 1
    j_max = int(math.ceil(reach * np.linalg.norm(inverse[:, 1]))) + 1
    i, j = np.meshgrid(np.arange(-i_max, i_max + 1), np.arange(-j_max, j_max + 1), indexing='ij')
    images = delta - np.stack([i.ravel(), j.ravel()], axis=-1) @ reduced
    return images[np.sum(images * images, axis=-1) <= radius * radius]


def greens_spectral_sum(shape: TorusShape, x, y, cutoff: Optional[float] = None,
                        smoothing_time: Optional[float] = None, tol: float = 1e-15,
                        count_limit: Optional[int] = None) -> float:
    """
    Eigenfunction expansion sum' e^{2 pi i xi.(x-y)} / (4 pi^2 |xi|^2).

    With smoothing_time t = 0 this is the bare truncated sum over eigenvalues
    <= cutoff. With t > 0 each term is damped by e^{-t lambda} and the
    short-time part is restored from the periodized heat kernel,
    (1/4pi) sum_l E1(|x-y-l|^2 / 4t) - t, so both halves converge exponentially.
    """
    t = setting('GREENS_SPECTRAL_TIME') if smoothing_time is None else float(smoothing_time)
    if t < 0:
        raise DomainError("smoothing_time must be nonnegative", field='smoothing_time', details={'received': t})
    if cutoff is None:
        if t == 0:
            raise DomainError("The bare spectral sum needs an explicit cutoff", field='cutoff')
        cutoff = math.log(1.0 / tol) / t

    delta = minimal_displacement(shape, x, y)
    spectrum = eigenvalues(shape, cutoff, count_limit)
    xi = spectrum.indices @ dual_basis(shape)
    phases = np.cos(TWO_PI * (xi @ delta))
    total = float(np.sum(np.exp(-t * spectrum.values) * phases / spectrum.values))

    if t > 0:
        if float(np.linalg.norm(delta)) < COINCIDENCE_TOL:
            raise DomainError("Spectral oracle is singular at coincident points", field='y')
        radius = math.sqrt(4.0 * t * (math.log(1.0 / tol) + 5.0))
        images = _lattice_images(shape, delta, radius)
        heat = special.exp1(np.sum(images * images, axis=-1) / (4.0 * t))
        total += float(np.sum(heat)) / FOUR_PI - t
    return total
