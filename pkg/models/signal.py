"""Sampled signal models: spike spectra and time series."""
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd

from models.errors import CombSpecError

# базовые колонки таблицы вкладов; для каждого слота s добавляются
# comb{s}, order{s}, arg{s} (гребёнка, ν зубца, индекс частоты на сетке)
TERM_COLUMNS = [
    "index",  # индекс пика на сетке
    "detect",  # гребёнка, дающая Ė (нумерация с 1)
    "detect_order",  # ν детектирующего зубца
    "detect_index",  # индекс его частоты на сетке
    "weight",  # iω_a·E_a·ΠE_b
    "chi",  # значение χ
]


def empty_terms() -> pd.DataFrame:
    return pd.DataFrame({name: pd.Series(dtype=float) for name in TERM_COLUMNS})


def slot_count(terms: pd.DataFrame) -> int:
    """Число взаимодействий с материалом в таблице вкладов."""
    return sum(1 for name in terms.columns if name.startswith("arg"))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Спектр из пиков Кронекера на равномерной сетке.

    amplitudes хранит комплексные коэффициенты ряда Фурье C(Ω) сигнала
    S(t) = Σ C(Ω)·e^{−iΩt}, Ω = index·step. terms хранит все слагаемые,
    попавшие в каждый пик.
    """
    step: float
    indices: np.ndarray
    amplitudes: np.ndarray
    terms: pd.DataFrame = field(default_factory=empty_terms)
    min_rep_spacing: float = math.inf  # min Δω_j участвующих гребёнок
    filter_cutoff: Optional[float] = None
    kind: str = ""

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if indices.shape != amplitudes.shape or indices.ndim != 1:
            raise CombSpecError("indices and amplitudes must be 1-D arrays of equal length")
        if indices.size and np.any(np.diff(indices) <= 0):
            raise CombSpecError("spectrum indices must be strictly increasing")
        if not np.all(np.isfinite(amplitudes)):
            raise CombSpecError("spectrum amplitudes must be finite")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def accumulate(cls, step: float, indices, values, terms: Optional[pd.DataFrame] = None, **meta) -> "Spectrum":
        """Сложить вклады с совпадающими индексами (детерминированно, по сортировке)."""
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=complex)
        if indices.size == 0:
            return cls(step, indices, values, terms if terms is not None else empty_terms(), **meta)
        unique, inverse = np.unique(indices, return_inverse=True)
        real = np.bincount(inverse, weights=values.real, minlength=unique.size)
        imag = np.bincount(inverse, weights=values.imag, minlength=unique.size)
        return cls(step, unique, real + 1j * imag, terms if terms is not None else empty_terms(), **meta)

    @classmethod
    def zero(cls, step: float, **meta) -> "Spectrum":
        return cls(step, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex), **meta)

    @property
    def frequencies(self) -> np.ndarray:
        return self.indices * self.step

    @property
    def size(self) -> int:
        return self.indices.size

    def absorptive(self) -> np.ndarray:
        """(1/2π)·Im-проекция сигнала: Re C / 2π."""
        return self.amplitudes.real / (2 * math.pi)

    def amplitude_at(self, index: int) -> complex:
        """Амплитуда пика с данным индексом (0, если пика нет)."""
        pos = np.searchsorted(self.indices, index)
        if pos < self.indices.size and self.indices[pos] == index:
            return complex(self.amplitudes[pos])
        return 0j

    def term_counts(self) -> np.ndarray:
        if self.terms.empty:
            return np.zeros(self.size, dtype=np.int64)
        counts = self.terms.groupby("index").size()
        return counts.reindex(self.indices, fill_value=0).to_numpy(dtype=np.int64)

    def with_terms(self, terms: pd.DataFrame) -> "Spectrum":
        return replace(self, terms=terms)

    def to_frame(self) -> pd.DataFrame:
        """Таблица пиков: m, frequency, re, imag, term_count."""
        return pd.DataFrame({
            "m": self.indices,
            "frequency": self.frequencies,
            "re": self.amplitudes.real,
            "imag": self.amplitudes.imag,
            "term_count": self.term_counts(),
        })


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Вещественный сигнал на равномерной временной сетке."""
    dt: float
    samples: np.ndarray
    t0: float = 0.0
    min_rep_spacing: float = math.inf
    filter_cutoff: Optional[float] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise CombSpecError("time step must be > 0")
        samples = np.asarray(self.samples)
        if np.iscomplexobj(samples):
            scale = max(1.0, float(np.max(np.abs(samples), initial=0.0)))
            if np.max(np.abs(samples.imag), initial=0.0) > 1e-12 * scale:
                raise CombSpecError("time series samples must be real")
            samples = samples.real
        object.__setattr__(self, "samples", np.asarray(samples, dtype=float))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def window(self) -> float:
        """Длина окна T_win = N·Δt."""
        return self.samples.size * self.dt

    @property
    def frequency_step(self) -> float:
        """Шаг сопряжённой частотной сетки 2π/T_win."""
        return 2 * math.pi / self.window

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "value": self.samples})
