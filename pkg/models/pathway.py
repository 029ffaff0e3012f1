"""Liouville pathway, delay grid and shot record models."""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from models.errors import CombSpecError
from models.signal import TimeSeries

# Ku/Kd: кет вверх/вниз, Bu/Bd: бра вверх/вниз
INTERACTIONS = ("Ku", "Kd", "Bu", "Bd")

# знак фазы АОМ: "левые" стрелки дают −φ_j, "правые" дают +φ_j
AOM_SIGN = {"Ku": -1, "Bd": -1, "Bu": +1, "Kd": +1}
ARROW = {"Ku": "left", "Bd": "left", "Bu": "right", "Kd": "right"}
CONJUGATE = {"Ku": "Bu", "Bu": "Ku", "Kd": "Bd", "Bd": "Kd"}


@dataclass(frozen=True)
class PathwaySignature:
    """Лиувиллев путь: последовательность взаимодействий и знаки модуляции."""
    diagram_id: int
    interactions: Tuple[str, ...]
    levels: Tuple[Tuple[int, int], ...]  # (кет, бра) после каждого взаимодействия
    manifolds: Tuple[Tuple[int, int], ...]  # номера многообразий тех же состояний
    detection: str = "fluorescence"
    family: str = ""  # k_I / k_II / k_III для гетеродинных путей
    relaxed: Tuple[int, ...] = ()  # (g, g), если населённость за t₂ распалась в основное состояние

    def __post_init__(self):
        if any(label not in INTERACTIONS for label in self.interactions):
            raise CombSpecError(f"unknown interaction label in {self.interactions}")
        if len(self.levels) != len(self.interactions) or len(self.manifolds) != len(self.interactions):
            raise CombSpecError("levels/manifolds must match the interaction count")
        if self.relaxed and (len(self.relaxed) != 2 or self.relaxed[0] != self.relaxed[1]):
            raise CombSpecError("relaxed state must be a population (a, a)")

    @property
    def signs(self) -> Tuple[int, ...]:
        """(s₁, ..., s_n) ∈ {+1, −1}ⁿ."""
        return tuple(AOM_SIGN[label] for label in self.interactions)

    @property
    def arrows(self) -> Tuple[str, ...]:
        return tuple(ARROW[label] for label in self.interactions)

    @property
    def bra_count(self) -> int:
        return sum(label.startswith("B") for label in self.interactions)

    @property
    def involves_f(self) -> bool:
        """Путь заходит в дважды возбуждённое многообразие."""
        return any(max(pair) >= 2 for pair in self.manifolds)

    def net_modulation(self, phases: Sequence[float]) -> float:
        """Σ s_j·φ_j."""
        if len(phases) != len(self.interactions):
            raise CombSpecError(f"need {len(self.interactions)} AOM frequencies")
        return float(sum(s * p for s, p in zip(self.signs, phases)))

    def conjugate(self) -> "PathwaySignature":
        """Комплексно-сопряжённый путь: кет и бра меняются местами."""
        return PathwaySignature(
            diagram_id=self.diagram_id,
            interactions=tuple(CONJUGATE[label] for label in self.interactions),
            levels=tuple((b, a) for a, b in self.levels),
            manifolds=tuple((b, a) for a, b in self.manifolds),
            detection=self.detection,
            family=self.family,
            relaxed=self.relaxed,
        )

    @property
    def label(self) -> str:
        label = "-".join(self.interactions)
        return f"{label}:relaxed" if self.relaxed else label


@dataclass(frozen=True, eq=False)
class DelayGrid:
    """Сетка задержек t₁, t₂, t₃ между импульсами."""
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray

    def __post_init__(self):
        for name in ("t1", "t2", "t3"):
            values = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if values.ndim != 1 or values.size == 0:
                raise CombSpecError(f"{name} must be a non-empty 1-D array")
            if np.any(values < 0):
                raise CombSpecError(f"{name} delays must be >= 0")
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def uniform(cls, t1_max: float, t3_max: float, steps: int, t2: float = 0.0) -> "DelayGrid":
        """t₁, t₃ ∈ [0, t_max] по steps точек, t₂ фиксировано."""
        if steps < 1:
            raise CombSpecError("delay steps must be > 0")
        return cls(
            t1=np.linspace(0.0, t1_max, steps),
            t2=np.array([t2]),
            t3=np.linspace(0.0, t3_max, steps),
        )

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.t1.size, self.t2.size, self.t3.size)

    def step(self, axis: str) -> float:
        values = getattr(self, axis)
        if values.size < 2:
            raise CombSpecError(f"axis {axis} has a single point")
        return float(values[1] - values[0])


@dataclass(frozen=True, eq=False)
class ShotRecord:
    """
    Запись флуоресценции по выстрелам лазера.

    responses[i] - отклики R_i пути i на сетке задержек (форма сетки),
    modulation[i] - его частота Φ_i = Σ s_j φ_j. Отсчёт выстрела m:
    S_m = 2 Re Σ_i R_i·e^{iΦ_i·mT}.
    """
    grid: DelayGrid
    pathways: Tuple[PathwaySignature, ...]
    responses: np.ndarray
    modulation: np.ndarray
    rep_period: float
    shots: int
    aom_phases: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        responses = np.asarray(self.responses, dtype=complex)
        if responses.shape != (len(self.pathways),) + self.grid.shape:
            raise CombSpecError("responses must have shape (pathways,) + delay grid shape")
        if self.shots < 1:
            raise CombSpecError("shot count must be >= 1")
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "modulation", np.asarray(self.modulation, dtype=float))

    @property
    def shot_times(self) -> np.ndarray:
        """t′ = m·T."""
        return self.rep_period * np.arange(self.shots)

    def tones(self, shots: slice = slice(None)) -> np.ndarray:
        """e^{iΦ_i·mT}, форма (пути, выстрелы)."""
        times = self.rep_period * np.arange(*shots.indices(self.shots))
        return np.exp(1j * np.outer(self.modulation, times))

    def samples(self, point: Optional[Tuple[int, int, int]] = None, shots: slice = slice(None)) -> np.ndarray:
        """Отсчёты по выстрелам в одной точке сетки или для всей сетки (форма сетки + (выстрелы,))."""
        tones = self.tones(shots)
        if point is None:
            values = np.tensordot(self.responses, tones, axes=([0], [0]))
        else:
            values = self.responses[(slice(None),) + tuple(point)] @ tones
        return 2 * values.real

    def series(self, point: Tuple[int, int, int]) -> TimeSeries:
        return TimeSeries(dt=self.rep_period, samples=self.samples(point))
