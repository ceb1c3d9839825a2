from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from statarb.models.errors import InvalidParameterError
from statarb.models.panel import SyntheticSpec

FF_OU = 'FF-OU'
PCA_OU = 'PCA-OU'
AE_OU = 'AE-OU'
FF_OU_FFN = 'FF-OU+FFN'
PCA_OU_FFN = 'PCA-OU+FFN'
AE_OU_FFN = 'AE-OU+FFN'
AE_POLICY = 'AE-Policy'

MODELS = (FF_OU, PCA_OU, AE_OU, FF_OU_FFN, PCA_OU_FFN, AE_OU_FFN, AE_POLICY)
FFN_MODELS = (FF_OU_FFN, PCA_OU_FFN, AE_OU_FFN)


@dataclass(frozen=True)
class PolicyConfig:
    latent_dim: int = 10
    gearing: float = 0.5
    epochs: int = 10
    lr: float = 1e-3
    window: int = 252
    cap: float = 3.0
    seed: int = 0
    warm_start: bool = False

    def __post_init__(self):
        violations = self.violations()
        if violations:
            raise InvalidParameterError('; '.join(violations))

    def violations(self) -> List[str]:
        violations = []
        if not 0.0 <= self.gearing <= 1.0:
            violations.append(f'lambda must lie in [0, 1], got {self.gearing}')
        if self.latent_dim < 1:
            violations.append(f'latent_dim must be >= 1, got {self.latent_dim}')
        if self.epochs < 1:
            violations.append(f'epochs must be >= 1, got {self.epochs}')
        if self.lr < 0:
            violations.append(f'lr must be >= 0, got {self.lr}')
        if self.window < 3:
            violations.append(f'window must be >= 3, got {self.window}')
        if self.cap <= 0:
            violations.append(f'cap must be > 0, got {self.cap}')
        return violations


@dataclass
class StrategySpec:
    model: str
    label: str = field(default='')
    factors: Optional[List[str]] = field(default=None)
    k: Optional[int] = field(default=None)
    variant: Optional[int] = field(default=None)
    option: Optional[int] = field(default=None)
    latent_dim: Optional[int] = field(default=None)
    gearing: float = field(default=0.5)
    epochs: Optional[int] = field(default=None)
    lr: float = field(default=1e-3)
    batch_size: Optional[int] = field(default=None)
    warm_start: bool = field(default=False)
    start: Optional[str] = field(default=None)
    end: Optional[str] = field(default=None)

    def __post_init__(self):
        if not self.label and self.model in MODELS:
            self.label = f'{self.model} {self.variant_name}'.strip()

    @property
    def family(self) -> str:
        if self.model == AE_POLICY:
            return 'policy'
        return self.model.split('-')[0].lower()

    @property
    def uses_ffn(self) -> bool:
        return self.model in FFN_MODELS

    @property
    def variant_name(self) -> str:
        if self.family == 'ff':
            return '+'.join(self.factors) if self.factors else 'all factors'
        if self.family == 'pca':
            return f'k={self.k}'
        if self.family == 'ae':
            return f'variant {self.variant} option {self.option}'
        return f'l={self.latent_dim or PolicyConfig.latent_dim}'

    def violations(self) -> List[str]:
        prefix = f'strategy {self.label or self.model}'
        if self.model not in MODELS:
            return [f'{prefix}: unknown model "{self.model}", expected one of {list(MODELS)}']
        violations = []
        if self.family == 'pca' and (self.k is None or self.k < 1):
            violations.append(f'{prefix}: PCA models need k >= 1')
        if self.family == 'ae':
            if self.variant is None or not 0 <= self.variant <= 9:
                violations.append(f'{prefix}: variant must be 0..9, got {self.variant}')
            if self.option is None or self.option not in (1, 2, 3):
                violations.append(f'{prefix}: option must be 1, 2 or 3, got {self.option}')
        if self.family == 'ff' and self.factors is not None and len(self.factors) == 0:
            violations.append(f'{prefix}: factors must not be empty')
        if self.latent_dim is not None and self.latent_dim < 1:
            violations.append(f'{prefix}: latent_dim must be >= 1')
        if self.epochs is not None and self.epochs < 1:
            violations.append(f'{prefix}: epochs must be >= 1')
        if self.batch_size is not None and self.batch_size < 1:
            violations.append(f'{prefix}: batch_size must be >= 1')
        if not 0.0 <= self.gearing <= 1.0:
            violations.append(f'{prefix}: lambda must lie in [0, 1], got {self.gearing}')
        if self.lr < 0:
            violations.append(f'{prefix}: lr must be >= 0')
        return violations

    def policy_config(self, seed: int) -> PolicyConfig:
        return PolicyConfig(latent_dim=self.latent_dim or PolicyConfig.latent_dim,
                            gearing=self.gearing,
                            epochs=self.epochs or PolicyConfig.epochs,
                            lr=self.lr, seed=seed, warm_start=self.warm_start)


@dataclass
class DataConfig:
    source: str = field(default='synthetic')
    path: Optional[Path] = field(default=None)
    factors: Optional[Path] = field(default=None)
    universe: bool = field(default=True)
    subtract_rf: bool = field(default=False)
    synthetic: Optional[SyntheticSpec] = field(default=None, repr=False)


@dataclass
class OutputConfig:
    directory: Path = field(default=Path('results'))
    export_intermediate: bool = field(default=False)
    diagnostics: bool = field(default=True)


@dataclass
class RunConfig:
    data: DataConfig
    strategies: List[StrategySpec]
    output: OutputConfig
    seed: int = field(default=0)
    parallelism: int = field(default=1)
    content: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)
    source_path: Optional[Path] = field(default=None, compare=False)
