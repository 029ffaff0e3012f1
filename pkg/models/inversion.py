"""Inversion problem and result models."""
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from models.errors import CombSpecError

ChiKey = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class LinearInversion:
    """Восстановленные отсчёты χ⁽¹⁾ и отчёт об обусловленности."""
    table: pd.DataFrame  # tooth, frequency, re, imag, constraint_count, residual, recoverable
    report: Dict[str, float] = field(default_factory=dict)

    @property
    def recoverable(self) -> pd.DataFrame:
        return self.table[self.table["recoverable"]]


@dataclass(frozen=True, eq=False)
class FoldingSystem:
    """
    Вещественная линейная система A·x = b для отсчётов χ⁽³⁾.

    Неизвестные: пары (Re, Im) для каждого канонического набора
    аргументов keys[k] (индексы сетки по возрастанию). Строки: Re и Im
    каждого наблюдаемого пика каждого прогона.
    """
    matrix: np.ndarray
    rhs: np.ndarray
    keys: List[ChiKey]
    rows: pd.DataFrame  # run, index, part
    constraint_counts: np.ndarray
    unconstrained: List[ChiKey] = field(default_factory=list)
    step: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise CombSpecError("regularisation weight must be >= 0")
        matrix = np.asarray(self.matrix, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        if matrix.shape != (rhs.size, 2 * len(self.keys)):
            raise CombSpecError("design matrix shape does not match rhs/unknowns")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "rhs", rhs)

    @property
    def unknown_count(self) -> int:
        return len(self.keys)

    def rank(self) -> int:
        if self.matrix.size == 0:
            return 0
        return int(np.linalg.matrix_rank(self.matrix))

    def with_lambda(self, lam: float) -> "FoldingSystem":
        return FoldingSystem(
            self.matrix, self.rhs, self.keys, self.rows, self.constraint_counts,
            self.unconstrained, self.step, lam,
        )


@dataclass(frozen=True, eq=False)
class FoldingSolution:
    """Решение системы свёртки."""
    values: Dict[ChiKey, complex]
    table: pd.DataFrame  # key, frequencies, re, imag, constraint_count
    residuals: np.ndarray  # по строкам системы
    condition: float
    rank: int
    unconstrained: List[ChiKey] = field(default_factory=list)
