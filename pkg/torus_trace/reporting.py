"""
Writers for command output: aligned text, CSV, JSON and the run manifest that
accompanies every written file as ``<file>.manifest.json``.
"""
import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from rest_framework.utils.encoders import JSONEncoder

from . import __version__
from .conf import resolve
from .exceptions import DomainError
from .serializers import RunManifestSerializer

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = '.manifest.json'


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, Any] = field(default_factory=dict)
    library_version: str = __version__
    timestamp: str = ''

    @classmethod
    def build(cls, command: str, parameters: Mapping[str, Any],
              overrides: Optional[Mapping[str, Any]] = None) -> 'RunManifest':
        return cls(
            command=command,
            parameters={key: value for key, value in parameters.items() if value is not None},
            tolerances=resolve(overrides),
            timestamp=datetime.now(timezone.utc).isoformat(timespec='seconds'),
        )


def format_value(value: Any, digits: int) -> str:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return str(value)
    return f"{value:.{digits}g}"


def format_table(rows: Iterable[Tuple[str, Any]], digits: int) -> List[str]:
    """``label  value`` lines with the labels padded to one width"""
    rows = list(rows)
    width = max((len(label) for label, _ in rows), default=0)
    return [f"{label:<{width}}  {format_value(value, digits)}" for label, value in rows]


def format_columns(columns: Sequence[str], rows: Iterable[Mapping[str, Any]], digits: int) -> List[str]:
    rendered = [[format_value(row[name], digits) for name in columns] for row in rows]
    widths = [max([len(name)] + [len(line[i]) for line in rendered]) for i, name in enumerate(columns)]
    lines = ['  '.join(name.rjust(w) for name, w in zip(columns, widths))]
    lines += ['  '.join(cell.rjust(w) for cell, w in zip(line, widths)) for line in rendered]
    return lines


def _target(path) -> Path:
    path = Path(path)
    if not path.parent.exists():
        raise DomainError(f"Output directory does not exist: {path.parent}", field='out',
                          details={'path': str(path)})
    return path


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + MANIFEST_SUFFIX)


def write_manifest(path, manifest: RunManifest) -> Path:
    target = manifest_path(path)
    payload = RunManifestSerializer(asdict(manifest)).data
    target.write_text(json.dumps(payload, cls=JSONEncoder, indent=2) + '\n')
    return target


def write_json(path, payload: Any, manifest: RunManifest) -> Path:
    target = _target(path)
    try:
        target.write_text(json.dumps(payload, cls=JSONEncoder, indent=2) + '\n')
    except OSError as e:
        raise DomainError(f"Cannot write {target}: {e}", field='json', details={'path': str(target)})
    write_manifest(target, manifest)
    logger.info(f"Wrote JSON to {target}", extra={'command': manifest.command})
    return target


def write_csv(path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]], manifest: RunManifest) -> Path:
    """Floats as .17g so values survive the round trip; no timestamp inside the CSV"""
    target = _target(path)
    try:
        with open(target, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([f"{row[name]:.17g}" if isinstance(row[name], float) else row[name]
                                 for name in columns])
    except OSError as e:
        raise DomainError(f"Cannot write {target}: {e}", field='out', details={'path': str(target)})
    write_manifest(target, manifest)
    logger.info(f"Wrote CSV to {target}", extra={'command': manifest.command, 'columns': list(columns)})
    return target
