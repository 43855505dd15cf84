"""
Unit-area flat tori, their dual lattices, Laplace eigenvalues and the
skinny/fat classification.

A shape is stored by its modulus tau = x + iy. Its lattice is spanned by the
rows of ``basis``: (1/sqrt(y), 0) and (x/sqrt(y), sqrt(y)), which has co-area 1.
Eigenvalues of the positive Laplacian are 4 pi^2 |xi|^2 over the nonzero
vectors xi of the dual lattice.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .conf import setting
from .exceptions import DomainError, ResourceLimitError, validate_modulus, validate_positive
from .specfun import ComplexModulus

logger = logging.getLogger(__name__)

SKINNY_THRESHOLD = 8.0 * math.pi
FOUR_PI_SQ = 4.0 * math.pi ** 2


class ShapeClass(Enum):
    """Position of the first eigenvalue relative to 8 pi"""
    SKINNY = "skinny"
    FAT = "fat"
    BORDERLINE = "borderline"


@dataclass(frozen=True)
class TorusShape:
    """A unit-area flat torus"""
    tau_re: float
    tau_im: float
    rect_param: Optional[float] = None
    label: str = ""
    twist: Optional[float] = None

    def __post_init__(self):
        validate_modulus(self.tau_re, self.tau_im)

    @property
    def tau(self) -> complex:
        return complex(self.tau_re, self.tau_im)

    @property
    def modulus(self) -> ComplexModulus:
        return ComplexModulus(self.tau_re, self.tau_im)

    @property
    def basis(self) -> np.ndarray:
        root = math.sqrt(self.tau_im)
        basis = np.array([[1.0 / root, 0.0], [self.tau_re / root, root]])
        basis.setflags(write=False)
        return basis

    @property
    def co_area(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.rect_param is not None and self.twist is not None:
            return f"twisted-rect(a={self.rect_param:g}, twist={self.twist:g})"
        if self.rect_param is not None:
            return f"rect(a={self.rect_param:g})"
        return f"tau={self.tau_re:g}+{self.tau_im:g}i"


@dataclass(frozen=True)
class EigenvalueList:
    """Laplace eigenvalues up to a cutoff, with multiplicity"""
    values: np.ndarray
    indices: np.ndarray
    cutoff: float
    count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'count', int(self.values.size))
        self.values.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def first(self) -> float:
        return float(self.values[0]) if self.count else math.inf


def make_torus(tau_re: float, tau_im: float, label: str = "") -> TorusShape:
    """Unit-area torus with modulus tau_re + i*tau_im"""
    validate_modulus(tau_re, tau_im)
    return TorusShape(float(tau_re), float(tau_im), label=label)


def make_rect_torus(a: float) -> TorusShape:
    """
    The rectangle [-a, a] x [0, 2 pi] with metric (1/(4 pi a)) * Euclidean.

    Its sides are sqrt(a/pi) x sqrt(pi/a) and its modulus is i*pi/a.
    """
    a = validate_positive(a, 'a')
    return TorusShape(0.0, math.pi / a, rect_param=a)


def make_twisted_rect(a: float, twist: float) -> TorusShape:
    """
    A cylinder of circumference sqrt(pi/a) and length sqrt(a/pi) glued with a
    meridional shift of ``twist`` circumferences. twist = 0 is isometric to
    make_rect_torus(a).
    """
    a = validate_positive(a, 'a')
    if not math.isfinite(twist):
        raise DomainError("twist must be finite", field='twist', details={'received': twist})
    return TorusShape(float(twist), a / math.pi, rect_param=a, twist=float(twist))


def square_torus() -> TorusShape:
    return make_torus(0.0, 1.0, label="square")


def hexagonal_torus() -> TorusShape:
    return make_torus(0.5, math.sqrt(3.0) / 2.0, label="hexagonal")


def dual_basis(shape: TorusShape) -> np.ndarray:
    """Rows d_j with d_j . omega_i = delta_ij"""
    return np.linalg.inv(shape.basis).T


def _gauss_reduce(basis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction; returns (reduced rows, integer U with reduced = U @ basis)"""
    u, v = basis[0].astype(float), basis[1].astype(float)
    cu, cv = np.array([1, 0]), np.array([0, 1])
    for _ in range(10_000):
        if u @ u > v @ v:
            u, v, cu, cv = v, u, cv, cu
        mu = int(round((u @ v) / (u @ u)))
        if mu == 0:
            break
        v = v - mu * u
        cv = cv - mu * cu
    else:
        raise DomainError("Lattice reduction did not terminate", field='basis')
    if u[0] * v[1] - u[1] * v[0] < 0:
        v, cv = -v, -cv
    reduced = np.vstack([u, v])
    transform = np.vstack([cu, cv]).astype(int)
    return reduced, transform


def reduced_basis(shape: TorusShape) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reduced basis of the same lattice, in the same coordinates.

    The first row is a shortest vector; the modulus v/u of the rows lies in the
    fundamental domain. The integer matrix records the change of basis.
    """
    return _gauss_reduce(shape.basis)


def reduced_modulus(shape: TorusShape) -> complex:
    """Modulus of the reduced basis, |Re| <= 1/2 and |tau| >= 1"""
    reduced, _ = reduced_basis(shape)
    u = complex(*reduced[0])
    v = complex(*reduced[1])
    return v / u


def shortest_vector(shape: TorusShape) -> np.ndarray:
    return reduced_basis(shape)[0][0]


def injectivity_radius(shape: TorusShape) -> float:
    return 0.5 * float(np.linalg.norm(shortest_vector(shape)))


def minimal_displacement(shape: TorusShape, x, y) -> np.ndarray:
    """
    Shortest representative of y - x modulo the lattice.

    Works on arrays of points of shape (..., 2); the minimum runs over the 9
    nearest translates in the reduced basis.
    """
    reduced, _ = reduced_basis(shape)
    delta = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    coeffs = delta @ np.linalg.inv(reduced)
    coeffs = coeffs - np.round(coeffs)
    best = coeffs @ reduced
    best_norm = np.sum(best * best, axis=-1)
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            if i == 0 and j == 0:
                continue
            candidate = (coeffs + np.array([i, j])) @ reduced
            norm = np.sum(candidate * candidate, axis=-1)
            closer = norm < best_norm
            best = np.where(closer[..., None], candidate, best)
            best_norm = np.where(closer, norm, best_norm)
    return best


def torus_distance(shape: TorusShape, x, y):
    """Flat geodesic distance between torus points"""
    distance = np.linalg.norm(minimal_displacement(shape, x, y), axis=-1)
    return float(distance) if np.ndim(distance) == 0 else distance


def rect_to_plane(shape: TorusShape, x1, x2) -> np.ndarray:
    """Map rectangle coordinates (x1, x2) in [-a, a] x [0, 2 pi] to the unit-area plane"""
    if shape.rect_param is None or shape.twist is not None:
        raise DomainError("Rectangle coordinates need a shape built by make_rect_torus", field='shape')
    scale = 1.0 / math.sqrt(4.0 * math.pi * shape.rect_param)
    return np.stack(np.broadcast_arrays(np.asarray(x1, float) * scale, np.asarray(x2, float) * scale), axis=-1)


def eigenvalue_of(shape: TorusShape, indices) -> np.ndarray:
    """4 pi^2 |m d1 + n d2|^2 for integer dual indices (m, n)"""
    indices = np.asarray(indices, dtype=float)
    xi = indices @ dual_basis(shape)
    return FOUR_PI_SQ * np.sum(xi * xi, axis=-1)


def eigenvalues(shape: TorusShape, cutoff: float, count_limit: Optional[int] = None) -> EigenvalueList:
    """
    All nonzero eigenvalues <= cutoff with multiplicity, ordered by value and
    then by dual index (m, n) with respect to the shape's own dual basis.
    """
    cutoff = validate_positive(cutoff, 'cutoff')
    count_limit = count_limit or setting('EIGENVALUE_COUNT_LIMIT')

    reduced, transform = reduced_basis(shape)
    reduced_dual = np.linalg.inv(reduced).T
    radius = math.sqrt(cutoff / FOUR_PI_SQ)
    # |m| <= R |d2| / det and |n| <= R |d1| / det, with det = 1
    m_max = int(math.floor(radius * np.linalg.norm(reduced_dual[1]))) + 1
    n_max = int(math.floor(radius * np.linalg.norm(reduced_dual[0]))) + 1
    box = (2 * m_max + 1) * (2 * n_max + 1)
    if box > count_limit:
        raise ResourceLimitError(
            f"Eigenvalue enumeration needs {box} dual vectors, limit is {count_limit}",
            limit=count_limit,
            requested=box
        )

    m, n = np.meshgrid(np.arange(-m_max, m_max + 1), np.arange(-n_max, n_max + 1), indexing='ij')
    reduced_idx = np.stack([m.ravel(), n.ravel()], axis=-1)
    # reduced dual = U^{-T} D, so coefficients map by U^{-T}
    to_shape = np.rint(np.linalg.inv(transform).T).astype(int)
    idx = reduced_idx @ to_shape
    idx = idx[np.any(idx != 0, axis=1)]

    values = eigenvalue_of(shape, idx)
    keep = values <= cutoff
    values, idx = values[keep], idx[keep]
    order = np.lexsort((idx[:, 1], idx[:, 0], values))

    logger.debug(f"Enumerated {order.size} eigenvalues below {cutoff}", extra={
        'shape': shape.describe(),
        'box': box,
        'cutoff': cutoff,
    })
    return EigenvalueList(values=values[order].copy(), indices=idx[order].copy(), cutoff=cutoff)


def first_eigenvalue(shape: TorusShape) -> float:
    """4 pi^2 times the squared length of the shortest dual vector"""
    reduced, _ = reduced_basis(shape)
    dual_short, _ = _gauss_reduce(np.linalg.inv(reduced).T)
    return FOUR_PI_SQ * float(dual_short[0] @ dual_short[0])


def classify(shape: TorusShape, tol: Optional[float] = None) -> ShapeClass:
    """Skinny iff lambda_1 < 8 pi - tol, fat iff lambda_1 > 8 pi + tol"""
    tol = setting('CLASSIFY_TOL') if tol is None else tol
    lambda1 = first_eigenvalue(shape)
    if lambda1 < SKINNY_THRESHOLD - tol:
        return ShapeClass.SKINNY
    if lambda1 > SKINNY_THRESHOLD + tol:
        return ShapeClass.FAT
    return ShapeClass.BORDERLINE


def weyl_ratio(shape: TorusShape, cutoff: float) -> float:
    """N(cutoff) / (cutoff / 4 pi); tends to 1 on a unit-area torus"""
    return eigenvalues(shape, cutoff).count / (cutoff / (4.0 * math.pi))


def longitudinal_length(shape: TorusShape) -> float:
    """
    Length of the closed geodesics along x1 on a rectangle or twisted rectangle.

    The meridian is the second basis vector of make_rect_torus and the first of
    make_twisted_rect; the longitudinal period is area / |meridian|.
    """
    if shape.rect_param is None:
        raise DomainError("Longitudinal coordinates need a rectangle-type shape", field='shape')
    meridian = shape.basis[0] if shape.twist is not None else shape.basis[1]
    return 1.0 / float(np.linalg.norm(meridian))
