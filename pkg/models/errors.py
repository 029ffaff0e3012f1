"""Exceptions and warnings shared by all modules."""
from typing import List, Sequence, Tuple


class CombSpecError(ValueError):
    """Базовая ошибка симулятора."""


class IncommensurateGridError(CombSpecError):
    """Частота зубца не кратна шагу сетки."""


class NyquistError(CombSpecError):
    """Шаг по времени не разрешает самую быструю гармонику."""


class BudgetExceededError(CombSpecError):
    """Комбинаторный бюджет (число троек m, p, q) превышен."""


class RankDeficiencyError(CombSpecError):
    """Система свёртки вырождена при λ = 0; unresolved - неразрешимые наборы аргументов."""

    def __init__(self, message: str, unresolved: Sequence[Tuple[int, ...]] = ()):
        self.unresolved = list(unresolved)
        super().__init__(message)


class LockInWindowError(CombSpecError):
    """Окно интегрирования lock-in короче 5·τ."""


class PropagationError(CombSpecError):
    """Нарушен допуск шага: след, эрмитовость или границы населённостей."""


class ConfigValidationError(CombSpecError):
    """Ошибка конфигурации со списком всех нарушений."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class CombSpecWarning(UserWarning):
    """Предупреждение о выходе за рекомендуемый режим."""
