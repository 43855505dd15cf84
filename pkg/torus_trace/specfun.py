"""
Special functions behind the closed-form torus formulas.

Dedekind eta and Jacobi theta_1 are evaluated from their q-series after
modular reduction; the dilogarithm uses scipy's Spence function on [-1, 1] and
the inversion formula below -1.
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np
from pydantic import Field
from scipy import special

from .conf import ToleranceModel, setting
from .exceptions import ConvergenceError, DomainError, validate_modulus

logger = logging.getLogger(__name__)

# Moduli below this imaginary part are mapped to the fundamental domain first
REDUCTION_THRESHOLD = 0.5


class SeriesConfig(ToleranceModel):
    """Truncation controls shared by every q-series"""

    abs_tol: float = Field(default_factory=lambda: setting('SERIES_ABS_TOL'), gt=0)
    max_terms: int = Field(default_factory=lambda: setting('SERIES_MAX_TERMS'), ge=1)


@dataclass(frozen=True)
class ComplexModulus:
    """A point of the upper half-plane"""
    re: float
    im: float

    def __post_init__(self):
        validate_modulus(self.re, self.im)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def of(cls, z: 'ModulusLike') -> 'ComplexModulus':
        if isinstance(z, ComplexModulus):
            return z
        z = complex(z)
        return cls(z.real, z.imag)


ModulusLike = Union[ComplexModulus, complex, float]


def _as_complex(z: ModulusLike) -> complex:
    return ComplexModulus.of(z).value


def reduce_modulus(z: ModulusLike) -> Tuple[complex, List[Tuple[str, int]], complex]:
    """
    Map z into the fundamental domain |Re z| <= 1/2, |z| >= 1.

    Returns the reduced modulus, the word of moves applied (('T', n) for
    z -> z - n, ('S', 0) for z -> -1/z) and log of the eta multiplier, so that
    log eta(z) = multiplier + log eta(reduced).
    """
    z = _as_complex(z)
    word: List[Tuple[str, int]] = []
    log_multiplier = 0j
    for _ in range(10_000):
        shift = math.floor(z.real + 0.5)
        if shift:
            # eta(z) = e^{i pi n / 12} eta(z - n)
            log_multiplier += 1j * math.pi * shift / 12.0
            z -= shift
            word.append(('T', shift))
        if abs(z) < 1.0 - 1e-15:
            w = -1.0 / z
            # eta(-1/w) = sqrt(-i w) eta(w)
            log_multiplier += 0.5 * cmath.log(-1j * w)
            z = w
            word.append(('S', 0))
            continue
        return z, word, log_multiplier
    raise ConvergenceError("Modular reduction did not terminate", details={'z': str(z)})


def _log_eta_product(z: complex, cfg: SeriesConfig) -> complex:
    """log(q^{1/24} prod (1 - q^n)) for an unreduced z, q = e^{2 pi i z}"""
    q = cmath.exp(2j * math.pi * z)
    abs_q = abs(q)
    total = 1j * math.pi * z / 12.0
    qn = q
    for n in range(1, cfg.max_terms + 1):
        total += cmath.log(1.0 - qn)
        abs_qn = abs_q ** n
        if abs_qn / (1.0 - abs_q) < cfg.abs_tol:
            return total
        qn *= q
    raise ConvergenceError(
        f"Eta product did not converge within {cfg.max_terms} terms",
        details={'z': str(z), 'abs_q': abs_q}
    )


def _log_abs_eta_product(z: complex, cfg: SeriesConfig) -> float:
    """Real part of _log_eta_product using log1p for the small-q factors"""
    q = cmath.exp(2j * math.pi * z)
    abs_q = abs(q)
    total = -math.pi * z.imag / 12.0
    qn = q
    for n in range(1, cfg.max_terms + 1):
        total += 0.5 * math.log1p(-2.0 * qn.real + abs(qn) ** 2)
        if abs_q ** n / (1.0 - abs_q) < cfg.abs_tol:
            return total
        qn *= q
    raise ConvergenceError(
        f"Eta product did not converge within {cfg.max_terms} terms",
        details={'z': str(z), 'abs_q': abs_q}
    )


def _prepare(z: ModulusLike, reduce: bool):
    z = _as_complex(z)
    if reduce and z.imag < REDUCTION_THRESHOLD:
        reduced, word, log_multiplier = reduce_modulus(z)
        logger.debug(f"Reduced modulus {z} -> {reduced}", extra={'word': word})
        return reduced, log_multiplier
    return z, 0j


def dedekind_eta(z: ModulusLike, cfg: SeriesConfig = None, reduce: bool = True) -> complex:
    """Dedekind eta(z) = q^{1/24} prod_{n>=1} (1 - q^n), q = e^{2 pi i z}"""
    cfg = cfg or SeriesConfig()
    z, log_multiplier = _prepare(z, reduce)
    return cmath.exp(log_multiplier + _log_eta_product(z, cfg))


def log_abs_dedekind_eta(z: ModulusLike, cfg: SeriesConfig = None) -> float:
    """log|eta(z)|, safe for moduli whose eta underflows"""
    cfg = cfg or SeriesConfig()
    z, log_multiplier = _prepare(z, True)
    return log_multiplier.real + _log_abs_eta_product(z, cfg)


def dedekind_eta_pentagonal(z: ModulusLike, cfg: SeriesConfig = None) -> complex:
    """Eta from Euler's pentagonal-number series, no reduction"""
    cfg = cfg or SeriesConfig()
    z = _as_complex(z)
    q = cmath.exp(2j * math.pi * z)
    log_abs_q = -2.0 * math.pi * z.imag
    total = 1.0 + 0j
    for k in range(1, cfg.max_terms + 1):
        sign = -1.0 if k % 2 else 1.0
        for exponent in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            total += sign * q ** exponent
        if log_abs_q * (k * (3 * k - 1) // 2) < math.log(cfg.abs_tol):
            return cmath.exp(1j * math.pi * z / 12.0) * total
    raise ConvergenceError(
        f"Pentagonal series did not converge within {cfg.max_terms} terms",
        details={'z': str(z)}
    )


def _theta_terms(z: complex, peak: float, cfg: SeriesConfig):
    """Yield (n, q^{(n+1/2)^2}) until the alternating tail is below abs_tol"""
    y = z.imag
    log_tol = math.log(cfg.abs_tol)
    for n in range(cfg.max_terms):
        half = n + 0.5
        yield n, cmath.exp(1j * math.pi * z * half * half)
        log_bound = -math.pi * y * half * half + (2 * n + 1) * math.pi * peak + math.log(2.0)
        if half > peak / y and log_bound < log_tol:
            return
    raise ConvergenceError(
        f"Theta series did not converge within {cfg.max_terms} terms",
        details={'z': str(z), 'peak_imag_w': peak}
    )


def jacobi_theta1(w, z: ModulusLike, cfg: SeriesConfig = None):
    """
    theta_1(w|z) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) pi w), q = e^{i pi z}.

    Accepts a scalar or an array of w and returns the same shape.
    """
    cfg = cfg or SeriesConfig()
    z = _as_complex(z)
    w_arr = np.asarray(w, dtype=complex)
    peak = float(np.max(np.abs(w_arr.imag))) if w_arr.size else 0.0
    total = np.zeros_like(w_arr)
    for n, qpow in _theta_terms(z, peak, cfg):
        sign = -1.0 if n % 2 else 1.0
        total = total + sign * qpow * np.sin((2 * n + 1) * math.pi * w_arr)
    result = 2.0 * total
    return complex(result) if np.ndim(w) == 0 else result


def jacobi_theta1_prime0(z: ModulusLike, cfg: SeriesConfig = None) -> complex:
    """theta_1'(0|z) = 2 pi sum (-1)^n (2n+1) q^{(n+1/2)^2}"""
    cfg = cfg or SeriesConfig()
    z = _as_complex(z)
    total = 0j
    for n, qpow in _theta_terms(z, 0.0, cfg):
        sign = -1.0 if n % 2 else 1.0
        total += sign * (2 * n + 1) * qpow
    return 2.0 * math.pi * total


def dilog(x: float) -> float:
    """Real dilogarithm Li_2(x) for x <= 1"""
    x = float(x)
    if not x <= 1.0:
        raise DomainError(
            f"Real dilogarithm is defined for x <= 1, got {x}",
            field='x',
            details={'received': x}
        )
    if x >= -1.0:
        # scipy's spence(z) is Li_2(1 - z)
        return float(special.spence(1.0 - x))
    # Li_2(-u) + Li_2(-1/u) = -pi^2/6 - log(u)^2 / 2
    log_u = math.log(-x)
    return -math.pi ** 2 / 6.0 - 0.5 * log_u * log_u - float(special.spence(1.0 - 1.0 / x))


def euler_gamma() -> float:
    """Euler-Mascheroni constant"""
    return float(np.euler_gamma)
