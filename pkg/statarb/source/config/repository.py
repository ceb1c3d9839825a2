from pathlib import Path
from typing import Any, Dict, List

from statarb.io.file import JsonHandler
from statarb.source.gateway import ISourceRepository


class JsonConfigRepository(ISourceRepository[Dict[str, Any]]):

    def __init__(self, file_handler: JsonHandler) -> None:
        super().__init__()
        self.file_handler = file_handler
        self.file_path: Path = Path()
        self.content: Dict[str, Any] = {}

    def can_read(self, path: Path) -> bool:
        self.file_handler.extension = path.suffix
        return self.file_handler.can_read(path)

    def read(self, path: Path) -> None:
        self.file_handler.extension = path.suffix
        self.content = self.file_handler.read(path)
        self.file_path = path

    def get_value(self, key: str, default: Any) -> Any:
        return self.content.get(key, default)

    def section(self, key: str) -> Dict[str, Any]:
        return self.content.get(key, {})

    def strategies(self) -> List[Dict[str, Any]]:
        return self.content.get('strategies', [])

    @property
    def folder(self) -> Path:
        return self.file_path.parent
