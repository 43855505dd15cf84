"""
Tolerance and size defaults for torus_trace.

Every default lives in DEFAULTS. A project may override entries through
``settings.TORUS_TRACE``; a command may further override them from a
``key = value`` file passed with ``--config``. Environment variables are never
consulted for tolerances.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from decouple import RepositoryEnv
from pydantic import BaseModel, ConfigDict, ValidationError
from django.conf import settings

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


DEFAULTS: Dict[str, Any] = {
    # specfun
    'SERIES_ABS_TOL': 1e-14,
    'SERIES_MAX_TERMS': 1_000_000,
    # lattice
    'CLASSIFY_TOL': 1e-9,
    'EIGENVALUE_COUNT_LIMIT': 2_000_000,
    # conformal
    'QUADRATURE_PANELS': 2 ** 14,
    'QUADRATURE_RULE': 'simpson',
    'QUADRATURE_REL_TOL': 1e-10,
    'POTENTIAL_RESIDUAL_TOL': 1e-6,
    'AREA_TOL': 1e-8,
    # greens
    'GREENS_SPECTRAL_TIME': 0.02,
    # hideseek
    'MC_STEP_FRACTION': 0.1,
    'MC_BLOCK_SIZE': 500,
    'MC_MAX_TIME': 50.0,
    # execution and output
    'WORKERS': 4,
    'OUTPUT_DIGITS': 12,
}


def _project_overrides() -> Mapping[str, Any]:
    if not settings.configured:
        return {}
    return getattr(settings, 'TORUS_TRACE', {}) or {}


def setting(name: str, overrides: Optional[Mapping[str, Any]] = None) -> Any:
    """Resolve one tolerance: overrides > settings.TORUS_TRACE > DEFAULTS"""
    if name not in DEFAULTS:
        raise ConfigurationError(f"Unknown setting '{name}'", details={'known': sorted(DEFAULTS)})
    if overrides and name in overrides:
        return overrides[name]
    return _project_overrides().get(name, DEFAULTS[name])


def resolve(overrides: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Return the full effective tolerance table"""
    return {name: setting(name, overrides) for name in DEFAULTS}


def _cast(name: str, raw: str) -> Any:
    default = DEFAULTS[name]
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ('1', 'true', 'yes', 'on')
        if isinstance(default, int):
            # accept 2**14 style values written as 16384 or 1.6384e4
            value = float(raw)
            if not value.is_integer():
                raise ValueError(raw)
            return int(value)
        return type(default)(raw.strip())
    except (TypeError, ValueError):
        raise ConfigurationError(
            f"Invalid value for {name}: {raw!r}",
            details={'key': name, 'expected_type': type(default).__name__}
        )


def load_config_file(path) -> Dict[str, Any]:
    """
    Read a ``key = value`` tolerance file.

    Keys are case-insensitive and must name an entry of DEFAULTS.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}", details={'path': str(path)})

    repository = RepositoryEnv(str(path))
    overrides: Dict[str, Any] = {}
    for key in repository.data:
        name = key.strip().upper()
        if name not in DEFAULTS:
            raise ConfigurationError(
                f"Unknown key '{key}' in {path}",
                details={'key': key, 'known': sorted(DEFAULTS)}
            )
        overrides[name] = _cast(name, repository[key])

    logger.info(f"Loaded {len(overrides)} tolerance overrides from {path}", extra={
        'config_path': str(path),
        'keys': sorted(overrides),
    })
    return overrides


class ToleranceModel(BaseModel):
    """Frozen pydantic base for the validated configuration objects"""

    model_config = ConfigDict(frozen=True, extra='forbid')

    @classmethod
    def from_options(cls, **options):
        """Build a config, turning pydantic validation failures into ConfigurationError"""
        options = {key: value for key, value in options.items() if value is not None}
        try:
            return cls(**options)
        except ValidationError as exc:
            errors = [
                {'field': '.'.join(str(part) for part in error['loc']), 'message': error['msg']}
                for error in exc.errors()
            ]
            raise ConfigurationError(
                f"Invalid {cls.__name__}: {errors[0]['message'] if errors else exc}",
                details={'errors': errors}
            ) from exc
