"""Comb, tooth and pulse-train data models."""
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from models.errors import CombSpecError, CombSpecWarning, IncommensurateGridError

# |δ|/Δω выше этого порога считается выходом из режима δω ≪ Δω
OFFSET_REGIME_LIMIT = 1e-2

# допуск при проверке кратности частоты шагу сетки (в долях шага)
GRID_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FrequencyGrid:
    """Равномерная частотная сетка с шагом step (рад/время)."""
    step: float

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise CombSpecError(f"grid step must be > 0, got {self.step!r}")

    def index_of(self, frequency: float, label: str = "") -> int:
        """
        Целочисленный индекс частоты на сетке.

        Raises:
            IncommensurateGridError: если частота не кратна шагу
        """
        ratio = frequency / self.step
        index = round(ratio)
        if abs(ratio - index) > GRID_TOLERANCE * max(1.0, abs(ratio)):
            raise IncommensurateGridError(
                f"{label or 'frequency'} {frequency!r} is not an integer multiple "
                f"of grid step {self.step!r} (ratio {ratio!r})"
            )
        return int(index)

    def frequency_of(self, index: int) -> float:
        """Частота по индексу сетки."""
        return index * self.step

    @property
    def window(self) -> float:
        """Длина временного окна T_win = 2π/step."""
        return 2 * math.pi / self.step


@dataclass(frozen=True)
class CombSpec:
    """Одна частотная гребёнка (один импульсный цуг)."""
    rep_spacing: float  # Δω, базовый межмодовый интервал
    carrier: float  # ω_c
    width: float  # σ гауссовой огибающей
    offset: float = 0.0  # δω_j относительно опорной гребёнки
    amplitude: float = 1.0  # A
    ce_offset: float = 0.0  # ω_ce
    global_phase: float = 0.0  # φ_j
    tooth_floor: float = 1e-8  # ε_tooth
    label: str = ""

    def __post_init__(self):
        name = self.label or "comb"
        if not self.rep_spacing > 0:
            raise CombSpecError(f"{name}: rep_spacing must be > 0")
        if not self.rep_spacing + self.offset > 0:
            raise CombSpecError(f"{name}: rep_spacing + offset must be > 0")
        if not self.width > 0:
            raise CombSpecError(f"{name}: envelope width must be > 0")
        if not self.amplitude >= 0:
            raise CombSpecError(f"{name}: amplitude must be >= 0")
        if not 0 < self.tooth_floor < 1:
            raise CombSpecError(f"{name}: tooth_floor must lie in (0, 1)")
        if abs(self.offset) / self.rep_spacing > OFFSET_REGIME_LIMIT:
            warnings.warn(
                f"{name}: |offset|/rep_spacing = {abs(self.offset) / self.rep_spacing:.3g} "
                "is outside the down-conversion regime",
                CombSpecWarning,
            )

    @property
    def spacing(self) -> float:
        """Фактический интервал гребёнки Δω_j = Δω + δω_j."""
        return self.rep_spacing + self.offset

    @property
    def period(self) -> float:
        """Период повторения T_j = 2π/Δω_j."""
        return 2 * math.pi / self.spacing

    @property
    def ce_phase(self) -> float:
        """Сдвиг фазы φ_ce = ω_ce/Δω_j за период."""
        return self.ce_offset / self.spacing

    def envelope(self, detuning):
        """Ẽ(ω) = A·exp(−ω²/(2σ²))."""
        return self.amplitude * np.exp(-np.square(detuning) / (2 * self.width ** 2))

    def tooth_frequency(self, n: int) -> float:
        """ω_n = nΔω_j + ω_ce."""
        return n * self.spacing + self.ce_offset

    def with_offset(self, offset: float) -> "CombSpec":
        """Копия гребёнки с другим δω_j."""
        return replace(self, offset=offset)


@dataclass(frozen=True)
class CombTooth:
    """Зубец гребёнки: индекс, частота, комплексная амплитуда."""
    index: int
    frequency: float
    amplitude: complex


@dataclass(frozen=True)
class AomPulseTrainSpec:
    """Цуг импульсов с фазовой модуляцией АОМ."""
    rep_period: float  # T_j
    aom_freq: float  # φ_j, рад/время
    carrier: float = 0.0  # ω
    delay: float = 0.0  # t_j
    amplitude: float = 1.0
    duration: Optional[float] = None  # τ_p гауссовой огибающей; None = импульсный предел
    pulse_count: int = 1

    def __post_init__(self):
        if not self.rep_period > 0:
            raise CombSpecError("rep_period must be > 0")
        if self.pulse_count < 1:
            raise CombSpecError("pulse_count must be >= 1")
        if self.duration is not None and not self.duration > 0:
            raise CombSpecError("pulse duration must be > 0 (or None for impulsive)")

    @property
    def impulsive(self) -> bool:
        """Огибающая трактуется как δ-функция."""
        return self.duration is None

    def envelope(self, tau: float) -> float:
        """Ẽ_j(τ): гауссова огибающая или дискретная δ-функция."""
        if self.impulsive:
            return self.amplitude if abs(tau) <= GRID_TOLERANCE * self.rep_period else 0.0
        return self.amplitude * math.exp(-tau * tau / (2 * self.duration ** 2))
