"""
Closed-form spectral invariants of unit-area flat tori: the regularized trace,
log det of the Laplacian, their linear relation, the large-a asymptotics of
rectangles and the twist comparison for skinny cylinders.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .exceptions import DomainError, validate_positive
from .lattice import ShapeClass, TorusShape, classify, first_eigenvalue, make_torus, reduced_modulus
from .specfun import ComplexModulus, SeriesConfig, euler_gamma, log_abs_dedekind_eta

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi

# -2log2/(2pi) - log(pi)/(2pi) + gamma/(2pi): the part shared by trace and log det
_TRACE_DET_SHIFT = -2.0 * math.log(2.0) / TWO_PI - math.log(math.pi) / TWO_PI + euler_gamma() / TWO_PI


@dataclass(frozen=True)
class SpectralReport:
    """Spectral summary of a flat torus"""
    lambda1: float
    shape_class: ShapeClass
    ztilde1: float
    logdet: float
    modulus: ComplexModulus
    reduced_modulus: ComplexModulus


@dataclass(frozen=True)
class TwistRow:
    x: float
    ztilde: float
    gap: float
    decreased: bool


@dataclass(frozen=True)
class TwistTable:
    y: float
    rows: List[TwistRow] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        """True when the trace never increases along the listed twists"""
        ordered = sorted(self.rows, key=lambda row: row.x)
        return all(b.ztilde <= a.ztilde for a, b in zip(ordered, ordered[1:]))


def ztilde_flat(shape: TorusShape, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Regularized trace at area 1:
    (1/4pi)(-log((2pi)^2 y |eta(z)|^4)) + 2log(2pi)/(4pi) - 2log2/(2pi) - log(pi)/(2pi) + gamma/(2pi)
    with z the reduced modulus.
    """
    z = reduced_modulus(shape)
    y = z.imag
    log_eta = log_abs_dedekind_eta(z, cfg)
    kronecker = 2.0 * math.log(TWO_PI) + math.log(y) + 4.0 * log_eta
    return -kronecker / FOUR_PI + 2.0 * math.log(TWO_PI) / FOUR_PI + _TRACE_DET_SHIFT


def logdet_flat(shape: TorusShape, cfg: Optional[SeriesConfig] = None) -> float:
    """log det of the Laplacian, by inverting the trace/determinant relation"""
    return -FOUR_PI * (ztilde_flat(shape, cfg) - _TRACE_DET_SHIFT)


def trace_det_residual(ztilde1: float, logdet: float) -> float:
    """Z(1) + logdet/(4pi) + 2log2/(2pi) + log(pi)/(2pi) - gamma/(2pi)"""
    return ztilde1 + logdet / FOUR_PI - _TRACE_DET_SHIFT


def spectral_report(shape: TorusShape, cfg: Optional[SeriesConfig] = None,
                    classify_tol: Optional[float] = None) -> SpectralReport:
    ztilde1 = ztilde_flat(shape, cfg)
    reduced = reduced_modulus(shape)
    return SpectralReport(
        lambda1=first_eigenvalue(shape),
        shape_class=classify(shape, classify_tol),
        ztilde1=ztilde1,
        logdet=-FOUR_PI * (ztilde1 - _TRACE_DET_SHIFT),
        modulus=shape.modulus,
        reduced_modulus=ComplexModulus(reduced.real, reduced.imag),
    )


def rect_asymptotic(a: float) -> float:
    """
    a/(12pi) - log(a/pi)/(4pi) + constant: ztilde_flat(make_rect_torus(a)) up to
    O(e^{-2a}) for a > pi.
    """
    a = validate_positive(a, 'a')
    return a / (12.0 * math.pi) - math.log(a / math.pi) / FOUR_PI + _TRACE_DET_SHIFT


def _log_abs_one_minus(q: complex) -> float:
    return 0.5 * math.log1p(-2.0 * q.real + abs(q) ** 2)


def _twist_gap(x: float, y: float) -> float:
    """Z(x+iy) - Z(iy) from the eta products directly"""
    q_twisted = cmath.exp(2j * math.pi * complex(x, y))
    q_plain = math.exp(-2.0 * math.pi * y)
    gap = 0.0
    qt, qp = q_twisted, q_plain
    while abs(qt) > q_plain * 1e-17:
        gap += _log_abs_one_minus(qt) - _log_abs_one_minus(complex(qp))
        qt *= q_twisted
        qp *= q_plain
    return -gap / math.pi


def twist_comparison(y: float, x_values: Sequence[float], cfg: Optional[SeriesConfig] = None) -> TwistTable:
    """
    Regularized trace of tau = x + iy for each twist x in [0, 1/2], y > 1.

    Each row carries the gap to the untwisted torus; ``decreased`` flags rows
    with x > 0 whose trace is strictly below the x = 0 value.
    """
    if not y > 1.0:
        raise DomainError(f"Twist comparison needs y > 1, got {y}", field='y', details={'received': y})
    for x in x_values:
        if not 0.0 <= x <= 0.5:
            raise DomainError(
                f"Twist must lie in [0, 1/2], got {x}",
                field='x_values',
                details={'received': x}
            )

    base = ztilde_flat(make_torus(0.0, y), cfg)
    rows = []
    for x in x_values:
        gap = _twist_gap(float(x), y) if x > 0 else 0.0
        rows.append(TwistRow(x=float(x), ztilde=base + gap, gap=gap, decreased=x > 0 and gap < 0))

    logger.debug(f"Twist comparison at y={y}", extra={'x_values': list(x_values)})
    return TwistTable(y=float(y), rows=rows)


def sphere_constant() -> float:
    """(1/4pi)(2 gamma - 1 - log 4pi), the round sphere of area 4pi"""
    return (2.0 * euler_gamma() - 1.0 - math.log(FOUR_PI)) / FOUR_PI
