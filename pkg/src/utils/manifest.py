import os
import json
import subprocess
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from typing import Dict, Any, Optional

from src.utils.constants import ARTIFACT_VERSION, SCHEMAS_DIR, PROJECT_DIR


@dataclass
class RunManifest:
    command: str
    parameters: Dict[str, Any]
    seed: Optional[int]
    artifact_version: str = ARTIFACT_VERSION
    timestamp: str = field(default_factory=lambda: compute_timestamp())
    code_revision: Optional[str] = field(default_factory=lambda: get_git_hash())

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def compute_timestamp() -> str:
    """
    Uses SOURCE_DATE_EPOCH when it is set, so that re-running a manifest is byte-identical
    """
    if 'SOURCE_DATE_EPOCH' in os.environ:
        moment = datetime.fromtimestamp(int(os.environ['SOURCE_DATE_EPOCH']), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)

    return moment.strftime('%Y-%m-%dT%H:%M:%SZ')


def get_git_hash() -> Optional[str]:
    try:
        return subprocess \
            .check_output(['git', 'rev-parse', '--short', 'HEAD'], cwd=PROJECT_DIR, stderr=subprocess.DEVNULL) \
            .decode("utf-8") \
            .strip()
    except (OSError, subprocess.CalledProcessError):
        return None


def to_json(record: Dict[str, Any]) -> str:
    return json.dumps(sanitize(record), indent=2, sort_keys=True)


def sanitize(value: Any) -> Any:
    """Converts numpy scalars/arrays and infinities into plain JSON values"""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    elif isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    elif hasattr(value, 'tolist'):
        return sanitize(value.tolist())
    elif isinstance(value, float) and (value != value or value in (float('inf'), float('-inf'))):
        return str(value)
    else:
        return value


def write_manifest(manifest: RunManifest, path: os.PathLike):
    with open(path, 'w') as f:
        f.write(to_json(manifest.to_dict()))
        f.write('\n')


def load_schema(name: str) -> Dict[str, Any]:
    with open(os.path.join(SCHEMAS_DIR, f'{name}.v1.json')) as f:
        return json.load(f)


def check_required_fields(record: Dict[str, Any], schema: Dict[str, Any], path: str='') -> None:
    """
    Checks that `record` has every field the schema requires (recursively for nested objects).
    Only the subset of JSON schema which our schemas use is supported: type=object, required, properties.
    """
    for key in schema.get('required', []):
        if key not in record:
            raise AssertionError(f'Missing field `{path}{key}`')

    for key, sub_schema in schema.get('properties', {}).items():
        if key not in record or record[key] is None:
            continue

        if sub_schema.get('type') == 'object':
            check_required_fields(record[key], sub_schema, path=f'{path}{key}.')
        elif sub_schema.get('type') == 'array' and sub_schema.get('items', {}).get('type') == 'object':
            for i, item in enumerate(record[key]):
                check_required_fields(item, sub_schema['items'], path=f'{path}{key}[{i}].')
