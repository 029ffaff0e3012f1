"""Validated experiment configuration."""
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from models.comb import AomPulseTrainSpec, CombSpec, FrequencyGrid
from models.lockin import LockInConfig
from models.pathway import DelayGrid
from models.system import LevelSystem, Projection

# вид эксперимента -> требуемое число гребёнок
REQUIRED_COMBS: Dict[str, int] = {
    "dual_linear": 2,
    "quad_third": 4,
    "dual_third": 2,
    "oracle_check": 1,
}

# вид эксперимента -> требуемое число AOM-цугов
REQUIRED_TRAINS: Dict[str, int] = {
    "aom_fluorescence": 4,
}

EXPERIMENT_KINDS = tuple(REQUIRED_COMBS) + tuple(REQUIRED_TRAINS)

DUAL_THIRD_VARIANTS = ("third", "two_by_two")


@dataclass(frozen=True)
class TimeSampling:
    """Временная сетка для синтеза сигнала: samples отсчётов с шагом dt от t0."""
    dt: float
    samples: int
    t0: float = 0.0
    prefilter: bool = True


@dataclass(frozen=True)
class InversionSettings:
    """Параметры обращения; runs - наборы смещений δω_j для дополнительных прогонов."""
    enabled: bool = False
    lam: float = 0.0
    runs: Tuple[Tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class OracleSettings:
    """Прогон прямого интегрирования для конечного цуга гребёнки."""
    comb: int = 1
    n_pulses: int = 50
    dt: float = 0.01
    scales: Tuple[float, ...] = (1e-3, 1e-4, 1e-5)
    padding: Optional[float] = None


@dataclass
class ExperimentConfig:
    """
    Полностью проверенная конфигурация эксперимента.

    combs и trains нумеруются с 1 в файле конфигурации (comb.1, comb.2, ...),
    здесь хранятся по порядку номеров. settings - нормализованный словарь
    конфигурации с подставленными значениями по умолчанию (для хеша и
    вывода validate).
    """
    kind: str
    system: LevelSystem
    combs: List[CombSpec] = field(default_factory=list)
    trains: List[AomPulseTrainSpec] = field(default_factory=list)
    grid: Optional[FrequencyGrid] = None
    variant: str = "third"
    detect: int = 1
    projection: Projection = "full"
    time: Optional[TimeSampling] = None
    lowpass: Optional[float] = None
    max_order: Optional[int] = None
    max_terms: int = 2_000_000
    lockin: Optional[LockInConfig] = None
    shots: int = 4096
    unmix: bool = False
    delays: Optional[DelayGrid] = None
    inversion: InversionSettings = field(default_factory=InversionSettings)
    oracle: OracleSettings = field(default_factory=OracleSettings)
    output_dir: Path = Path("output")
    write_terms: bool = True
    threads: int = 1
    seed: Optional[int] = None
    settings: Dict = field(default_factory=dict)

    @property
    def budget(self) -> Dict[str, object]:
        """Ограничения перебора для третьего порядка."""
        return {"max_order": self.max_order, "max_terms": self.max_terms}

    def with_inversion(self) -> "ExperimentConfig":
        """Копия с принудительно включённым обращением."""
        settings = dict(self.settings)
        settings["inversion"] = {**settings.get("inversion", {}), "enabled": True}
        inversion = InversionSettings(True, self.inversion.lam, self.inversion.runs)
        return replace(self, inversion=inversion, settings=settings)

    def to_dict(self) -> Dict:
        return dict(self.settings)
