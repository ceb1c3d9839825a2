import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Dict, Protocol, TextIO, TypeVar

import pandas as pd

TUri = TypeVar("TUri", bound=Path, contravariant=True)
TContent = TypeVar("TContent")

FLOAT_FORMAT = "%.10g"


class IoHandler(Protocol[TUri, TContent]):
    extension: str

    def can_read(self, path: TUri, **kwargs) -> bool:
        ...

    def read(self, path: TUri, **kwargs) -> TContent:
        ...

    def write(self, path: TUri, content: TContent, **kwargs) -> None:
        ...


class FileHandler(ABC, IoHandler[Path, TContent]):
    def __init__(self, extension: str, encoding: str = "utf-8") -> None:
        super().__init__()
        self.encoding = encoding
        self.extension = extension

    def _as_path(self, value: Path) -> Path:
        return value if value.suffix == self.extension else value.with_suffix(self.extension)

    def can_read(self, path: Path, **kwargs) -> bool:
        return self._as_path(path).is_file()

    def _open(self, path: Path, callback: Callable[..., Any], mode: str, **kwargs) -> Any:
        with open(self._as_path(path), mode=mode, encoding=self.encoding, newline="") as file:
            return callback(file, **kwargs)

    def read(self, path: Path, **kwargs) -> TContent:
        if not self.can_read(path):
            raise FileNotFoundError(f"{self._as_path(path)} does not exist")
        return self._open(path, self._read, "r", **kwargs)

    def write(self, path: Path, content: TContent, **kwargs) -> None:
        self._as_path(path).parent.mkdir(parents=True, exist_ok=True)
        self._open(path, lambda file, **args: self._write(file, content, **args), "w", **kwargs)

    @abstractmethod
    def _read(self, file: TextIO, **kwargs) -> TContent:
        pass

    @abstractmethod
    def _write(self, file: TextIO, content: TContent, **kwargs) -> None:
        pass


class CsvHandler(FileHandler[pd.DataFrame]):
    """Reads every cell as text so callers validate and convert with line numbers."""

    def __init__(self, extension: str = ".csv", encoding: str = "utf-8") -> None:
        super().__init__(extension, encoding)

    def _read(self, file: TextIO, **kwargs) -> pd.DataFrame:
        args: Dict[str, Any] = {"dtype": str, "keep_default_na": False, "skipinitialspace": True}
        args.update(kwargs)
        return pd.read_csv(file, **args)

    def _write(self, file: TextIO, content: pd.DataFrame, **kwargs) -> None:
        args: Dict[str, Any] = {"index": False, "float_format": FLOAT_FORMAT, "lineterminator": "\n"}
        args.update(kwargs)
        content.to_csv(file, **args)


class JsonHandler(FileHandler[Dict[str, Any]]):
    def __init__(self, extension: str = ".json", encoding: str = "utf-8") -> None:
        super().__init__(extension, encoding)

    def can_read(self, path: Path, **kwargs) -> bool:
        if not super().can_read(path, **kwargs):
            return False
        with open(self._as_path(path), encoding=self.encoding) as file:
            return file.read().lstrip().startswith("{")

    def _read(self, file: TextIO, **kwargs) -> Dict[str, Any]:
        return json.loads(file.read())

    def _write(self, file: TextIO, content: Dict[str, Any], **kwargs) -> None:
        args = {"indent": 4, "ensure_ascii": False, "sort_keys": True}
        args.update(**kwargs)
        json.dump(content, file, **args)
        file.write("\n")
