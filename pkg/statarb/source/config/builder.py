from abc import ABC, abstractmethod
from pathlib import Path
from typing import (Any, Callable, Dict, List, Optional, Tuple, Type,
                    TypeVar)

from statarb.models.config import DataConfig, OutputConfig, StrategySpec
from statarb.models.panel import SyntheticSpec
from statarb.source.gateway import IBuilder
from statarb.utils.paths import resolve

TModel = TypeVar('TModel')
TConverter = Callable[[Any, Optional[Path]], Any]

REQUIRED = object()


def as_bool(value: Any, _: Optional[Path] = None) -> bool:
    if not isinstance(value, bool):
        raise TypeError('expected true or false')
    return value


def as_int(value: Any, _: Optional[Path] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError('expected an integer')
    return value


def as_float(value: Any, _: Optional[Path] = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError('expected a number')
    return float(value)


def as_floats(value: Any, _: Optional[Path] = None) -> Any:
    if isinstance(value, list):
        return [as_float(item) for item in value]
    return as_float(value)


def as_str(value: Any, _: Optional[Path] = None) -> str:
    if not isinstance(value, str):
        raise TypeError('expected a string')
    return value


def as_str_list(value: Any, _: Optional[Path] = None) -> List[str]:
    if not isinstance(value, list):
        raise TypeError('expected a list of strings')
    return [as_str(item) for item in value]


def as_int_list(value: Any, _: Optional[Path] = None) -> List[int]:
    if not isinstance(value, list):
        raise TypeError('expected a list of integers')
    return [as_int(item) for item in value]


def as_path(value: Any, folder: Optional[Path] = None) -> Path:
    return resolve(as_str(value), folder)


class ASectionBuilder(ABC, IBuilder[TModel, Dict[str, Any]]):
    """Maps one JSON object onto a dataclass and collects every violation instead of stopping at the first."""

    @classmethod
    @abstractmethod
    def attr_src_map(cls) -> Dict[str, Tuple[str, Any, TConverter]]:
        """Dict with model attr as key and (content key, default, converter) as value"""
        pass

    def __init__(self, model_type: Type[TModel], section: str) -> None:
        super().__init__()
        self.model_type = model_type
        self.section = section
        self.violations: List[str] = []

    def _known_keys(self) -> List[str]:
        return [key for key, _, _ in self.attr_src_map().values()]

    def get_attributes(self, content: Dict[str, Any], folder: Optional[Path]) -> Dict[str, Any]:
        attributes = {}
        for key in content:
            if key not in self._known_keys():
                self.violations.append(f'{self.section}: unknown key "{key}"')
        for attr, (key, default, converter) in self.attr_src_map().items():
            if key not in content:
                if default is REQUIRED:
                    self.violations.append(f'{self.section}: missing required key "{key}"')
                elif default is not None:
                    attributes[attr] = default
                continue
            if content[key] is None:
                continue
            try:
                attributes[attr] = converter(content[key], folder)
            except (TypeError, ValueError) as exc:
                self.violations.append(f'{self.section}.{key}: {exc}, got {content[key]!r}')
        return attributes

    def can_build(self, content: Any, **kwargs) -> bool:
        return isinstance(content, dict)

    def check(self, model: TModel) -> List[str]:
        return []

    def build(self, content: Dict[str, Any], **kwargs) -> Optional[TModel]:
        self.violations = []
        if not self.can_build(content):
            self.violations.append(f'{self.section}: expected an object, got {type(content).__name__}')
            return None
        attributes = self.get_attributes(content, kwargs.get('folder'))
        attributes.update(self.get_builder_attributes(content, **kwargs))
        if self.violations:
            return None
        try:
            model = self.model_type(**attributes)
        except ValueError as exc:
            self.violations.append(f'{self.section}: {exc}')
            return None
        self.violations.extend(self.check(model))
        return model

    def get_builder_attributes(self, content: Dict[str, Any], **kwargs) -> Dict[str, Any]:
        return {}


class SyntheticSpecBuilder(ASectionBuilder[SyntheticSpec]):

    @classmethod
    def attr_src_map(cls) -> Dict[str, Tuple[str, Any, TConverter]]:
        return {
            'n_stocks': ('n_stocks', None, as_int),
            'n_days': ('n_days', None, as_int),
            'n_factors': ('n_factors', None, as_int),
            'loadings': ('loadings', None, lambda value, _: [as_floats(row) for row in value]),
            'factor_vol': ('factor_vol', None, as_floats),
            'kappa': ('kappa', None, as_floats),
            'mean_level': ('mean_level', None, as_floats),
            'sigma': ('sigma', None, as_floats),
            'seed': ('seed', None, as_int),
            'start': ('start', None, as_str),
            'low_price': ('low_price', None, as_int_list),
            'small_cap': ('small_cap', None, as_int_list),
            'illiquid': ('illiquid', None, as_int_list),
        }

    def __init__(self) -> None:
        super().__init__(SyntheticSpec, 'data.synthetic')

    def check(self, model: SyntheticSpec) -> List[str]:
        return [f'{self.section}: {violation}' for violation in model.violations()]


class DataConfigBuilder(ASectionBuilder[DataConfig]):
    sources = ('csv', 'synthetic')

    @classmethod
    def attr_src_map(cls) -> Dict[str, Tuple[str, Any, TConverter]]:
        return {
            'source': ('source', REQUIRED, as_str),
            'path': ('path', None, as_path),
            'factors': ('factors', None, as_path),
            'universe': ('universe', None, as_bool),
            'subtract_rf': ('subtract_rf', None, as_bool),
            'synthetic': ('synthetic', None, lambda value, _: value),
        }

    def __init__(self, synthetic: SyntheticSpecBuilder) -> None:
        super().__init__(DataConfig, 'data')
        self.synthetic_builder = synthetic

    def get_builder_attributes(self, content: Dict[str, Any], **kwargs) -> Dict[str, Any]:
        if content.get('synthetic') is None:
            return {'synthetic': SyntheticSpec()} if content.get('source') == 'synthetic' else {}
        spec = self.synthetic_builder.build(content['synthetic'])
        self.violations.extend(self.synthetic_builder.violations)
        return {'synthetic': spec}

    def check(self, model: DataConfig) -> List[str]:
        violations = []
        if model.source not in self.sources:
            violations.append(f'data.source must be one of {list(self.sources)}, got "{model.source}"')
        if model.source == 'csv' and model.path is None:
            violations.append('data.path is required for a csv source')
        if model.subtract_rf and model.factors is None and model.source == 'csv':
            violations.append('data.subtract_rf needs data.factors')
        return violations


class StrategySpecBuilder(ASectionBuilder[StrategySpec]):

    @classmethod
    def attr_src_map(cls) -> Dict[str, Tuple[str, Any, TConverter]]:
        return {
            'model': ('model', REQUIRED, as_str),
            'label': ('label', None, as_str),
            'factors': ('factors', None, as_str_list),
            'k': ('k', None, as_int),
            'variant': ('variant', None, as_int),
            'option': ('option', None, as_int),
            'latent_dim': ('latent_dim', None, as_int),
            'gearing': ('lambda', None, as_float),
            'epochs': ('epochs', None, as_int),
            'lr': ('lr', None, as_float),
            'batch_size': ('batch_size', None, as_int),
            'warm_start': ('warm_start', None, as_bool),
            'start': ('start', None, as_str),
            'end': ('end', None, as_str),
        }

    def __init__(self) -> None:
        super().__init__(StrategySpec, 'strategies')

    def build(self, content: Dict[str, Any], **kwargs) -> Optional[StrategySpec]:
        self.section = f'strategies[{kwargs.get("index", 0)}]'
        return super().build(content, **kwargs)

    def check(self, model: StrategySpec) -> List[str]:
        return model.violations()


class OutputConfigBuilder(ASectionBuilder[OutputConfig]):

    @classmethod
    def attr_src_map(cls) -> Dict[str, Tuple[str, Any, TConverter]]:
        return {
            'directory': ('directory', None, as_path),
            'export_intermediate': ('export_intermediate', None, as_bool),
            'diagnostics': ('diagnostics', None, as_bool),
        }

    def __init__(self) -> None:
        super().__init__(OutputConfig, 'output')
