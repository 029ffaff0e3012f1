"""Density-matrix propagation models."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from models.errors import CombSpecError
from models.system import LevelSystem


@dataclass(frozen=True, eq=False)
class PropagationRun:
    """
    Прогон уравнения Лиувилля для заданного поля.

    field содержит E(t) на сетке с шагом dt/2 (2N+1 отсчётов), чтобы
    метод Рунге-Кутты 4-го порядка брал поле в середине шага.
    field_derivative - Ė(t) на той же сетке (если None, считается
    численно). Допуски проверяются на каждом шаге: дрейф следа,
    max|ρ − ρ†| и выход населённостей за [0, 1].
    """
    system: LevelSystem
    field: np.ndarray
    dt: float
    t0: float = 0.0
    field_derivative: Optional[np.ndarray] = None
    trace_tolerance: float = 1e-10
    hermiticity_tolerance: float = 1e-12
    population_tolerance: float = 1e-10

    def __post_init__(self):
        if not self.dt > 0:
            raise CombSpecError("propagation step must be > 0")
        field = np.asarray(self.field, dtype=float)
        if field.ndim != 1 or field.size < 3 or field.size % 2 == 0:
            raise CombSpecError("field must be sampled on 2N+1 half-step points")
        object.__setattr__(self, "field", field)
        if self.field_derivative is not None:
            derivative = np.asarray(self.field_derivative, dtype=float)
            if derivative.shape != field.shape:
                raise CombSpecError("field derivative must match the field samples")
            object.__setattr__(self, "field_derivative", derivative)

    @property
    def steps(self) -> int:
        return (self.field.size - 1) // 2

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    @property
    def field_at_steps(self) -> np.ndarray:
        return self.field[::2]

    @property
    def derivative_at_steps(self) -> np.ndarray:
        if self.field_derivative is not None:
            return self.field_derivative[::2]
        return np.gradient(self.field, self.dt / 2)[::2]


@dataclass(frozen=True, eq=False)
class Trajectories:
    """Результаты прогона на целых шагах."""
    times: np.ndarray
    dipole: np.ndarray  # ⟨V̂⟩(t)
    populations: np.ndarray  # (шаги, уровни)
    emitting_population: np.ndarray  # ⟨P̂_e⟩(t)
    emitting_dipole: np.ndarray  # ⟨P̂_e V̂⟩(t), комплексное
    signal: np.ndarray  # S(t) = −Ė⟨V̂⟩
    emitting_signal: np.ndarray  # S_e(t) = d⟨P̂_e⟩/dt = Σ_e (Lρ)_ee
    field: np.ndarray
    work: np.ndarray  # ∫S dt
    energy: np.ndarray  # ⟨Ĥ₀⟩(t)
    trace_error: float
    hermiticity_error: float
    min_population: float
    max_population: float
