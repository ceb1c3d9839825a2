from pathlib import Path
from typing import Any, Dict, List, Protocol, TypeVar

from statarb.models.config import RunConfig

TModel = TypeVar('TModel', covariant=True)
TContent = TypeVar('TContent', contravariant=True)


class IBuilder(Protocol[TModel, TContent]):

    def can_build(self, content: TContent, **kwargs) -> bool:
        ...

    def build(self, content: TContent, **kwargs) -> TModel:
        ...


TSource = TypeVar('TSource', covariant=False)


class ISourceRepository(Protocol[TSource]):
    file_path: Path
    content: TSource

    def can_read(self, path: Path) -> bool:
        """Return True if the path can be read, otherwise False"""
        ...

    def read(self, path: Path) -> None:
        """Read and store the content of file path."""
        ...

    def get_value(self, key: str, default: Any) -> Any:
        ...

    def section(self, key: str) -> Dict[str, Any]:
        ...

    def strategies(self) -> List[Dict[str, Any]]:
        ...


class IConfigFactory(Protocol):

    def can_create(self, path: Path) -> bool:
        ...

    def run_config(self, path: Path) -> RunConfig:
        ...
