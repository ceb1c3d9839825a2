import hashlib
import os
import re
from pathlib import Path
from typing import Optional, Union

OUTPUT_DIR_ENV = 'STATARB_OUTPUT_DIR'


def create_directory_unless_exist(path: Union[str, Path]) -> Path:
    path = path if isinstance(path, Path) else Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def resolve(path: Union[str, Path], relative_to: Optional[Path]) -> Path:
    path = Path(path)
    if path.is_absolute() or relative_to is None:
        return path
    return relative_to / path


def output_directory(configured: Path) -> Path:
    override = os.environ.get(OUTPUT_DIR_ENV, '').strip()
    return Path(override) if len(override) > 0 else configured


def safe_name(label: str) -> str:
    name = re.sub(r'[^A-Za-z0-9]+', '_', label).strip('_')
    return name or 'strategy'


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as file:
        for chunk in iter(lambda: file.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()
