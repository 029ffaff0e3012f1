"""Frequency-comb and AOM pulse-train fields."""
import math
import warnings
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from models.comb import AomPulseTrainSpec, CombSpec, CombTooth, FrequencyGrid
from models.errors import CombSpecWarning
from models.signal import Spectrum


class FieldSpikes(NamedTuple):
    """Пики поля одной гребёнки на сетке (обе ветви: +ω_n и −ω_n)."""
    index: np.ndarray  # индекс на сетке
    amplitude: np.ndarray  # a_n или a_n*
    order: np.ndarray  # ν = ±n


class CombField:
    """Построение поля частотных гребёнок."""

    @staticmethod
    def tooth_range(comb: CombSpec) -> Tuple[int, int]:
        """
        Диапазон индексов n, при которых огибающая не ниже порога.

        Формула: |ω_n − ω_c| ≤ σ·√(2·ln(1/ε))
        """
        reach = comb.width * math.sqrt(2 * math.log(1 / comb.tooth_floor))
        centre = comb.carrier - comb.ce_offset
        return (
            math.ceil((centre - reach) / comb.spacing),
            math.floor((centre + reach) / comb.spacing),
        )

    @staticmethod
    def enumerate_teeth(comb: CombSpec) -> List[CombTooth]:
        """
        Все зубцы гребёнки с |Ẽ(ω_n − ω_c)| ≥ ε·A, по возрастанию n.

        Формула: a_n = e^{iφ}·A·exp(−(ω_n − ω_c)²/(2σ²)), ω_n = n(Δω + δ) + ω_ce
        """
        if comb.amplitude == 0:
            warnings.warn(f"{comb.label or 'comb'}: zero amplitude, no teeth", CombSpecWarning)
            return []
        low, high = CombField.tooth_range(comb)
        # границы диапазона проверяются прямым сканированием ±1
        orders = np.arange(low - 1, high + 2)
        frequencies = orders * comb.spacing + comb.ce_offset
        magnitudes = comb.envelope(frequencies - comb.carrier)
        keep = magnitudes >= comb.tooth_floor * comb.amplitude
        phase = np.exp(1j * comb.global_phase)
        teeth = [
            CombTooth(index=int(n), frequency=float(w), amplitude=complex(phase * a))
            for n, w, a in zip(orders[keep], frequencies[keep], magnitudes[keep])
        ]
        if not teeth:
            warnings.warn(f"{comb.label or 'comb'}: no tooth clears the floor", CombSpecWarning)
        return teeth

    @staticmethod
    def field_spikes(comb: CombSpec, grid: FrequencyGrid) -> FieldSpikes:
        """
        Пики E(ω) гребёнки на сетке.

        Ветви +ω_n и −ω_n с совпадающими индексом и порядком ν
        складываются в один пик.

        Raises:
            IncommensurateGridError: если частота зубца не кратна шагу
        """
        teeth = CombField.enumerate_teeth(comb)
        name = comb.label or "comb"
        index = np.array(
            [grid.index_of(t.frequency, f"{name} tooth n={t.index}") for t in teeth],
            dtype=np.int64,
        )
        amplitude = np.array([t.amplitude for t in teeth], dtype=complex)
        order = np.array([t.index for t in teeth], dtype=np.int64)
        keys = np.stack([np.concatenate([index, -index]), np.concatenate([order, -order])], axis=1)
        values = np.concatenate([amplitude, amplitude.conj()])
        if keys.shape[0] == 0:
            return FieldSpikes(np.zeros(0, np.int64), np.zeros(0, complex), np.zeros(0, np.int64))
        unique, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        real = np.bincount(inverse, weights=values.real, minlength=unique.shape[0])
        imag = np.bincount(inverse, weights=values.imag, minlength=unique.shape[0])
        return FieldSpikes(index=unique[:, 0], amplitude=real + 1j * imag, order=unique[:, 1])

    @staticmethod
    def eval_field_freq(combs: Sequence[CombSpec], grid: FrequencyGrid) -> Spectrum:
        """
        E(ω) как сумма пиков Кронекера всех гребёнок.

        Включает отражение на отрицательные частоты: E(−ω) = E*(ω).
        """
        if not combs:
            return Spectrum.zero(grid.step, kind="field")
        spikes = [CombField.field_spikes(comb, grid) for comb in combs]
        return Spectrum.accumulate(
            grid.step,
            np.concatenate([s.index for s in spikes]),
            np.concatenate([s.amplitude for s in spikes]),
            min_rep_spacing=min(c.spacing for c in combs),
            kind="field",
        )

    @staticmethod
    def eval_field_time(spec: AomPulseTrainSpec, t):
        """
        Комплексная амплитуда цуга с фазой АОМ.

        Формула: E_j(t) = Σ_n Ẽ_j(t − t_j − nT_j)·e^{iω(t − t_j − nT_j) + iφ_j·nT_j}
        """
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        envelope = np.vectorize(spec.envelope, otypes=[float])
        for n in range(spec.pulse_count):
            tau = t - spec.delay - n * spec.rep_period
            total = total + envelope(tau) * np.exp(
                1j * spec.carrier * tau + 1j * spec.aom_freq * n * spec.rep_period
            )
        return total if total.ndim else complex(total)

    @staticmethod
    def pulse_train_samples(comb: CombSpec, n_pulses: int, times) -> Tuple[np.ndarray, np.ndarray]:
        """
        Вещественное поле конечного цуга из n_pulses импульсов и его производная.

        Формула (суммирование Пуассона по зубцам):
            f_k(t) = (A·σ·√(2π)/Δω_j)·e^{iφ}·e^{−iω_ce·t}·e^{−i(ω_c − ω_ce)(t − kT)}·e^{−σ²(t − kT)²/2}
            E(t) = Σ_k 2·Re f_k(t)
        """
        times = np.asarray(times, dtype=float)
        scale = comb.amplitude * comb.width * math.sqrt(2 * math.pi) / comb.spacing
        field = np.zeros(times.shape)
        derivative = np.zeros(times.shape)
        for k in range(n_pulses):
            tau = times - k * comb.period
            pulse = scale * np.exp(
                1j * comb.global_phase
                - 1j * comb.ce_offset * times
                - 1j * (comb.carrier - comb.ce_offset) * tau
                - comb.width ** 2 * tau ** 2 / 2
            )
            field += 2 * pulse.real
            derivative += 2 * (pulse * (-1j * comb.carrier - comb.width ** 2 * tau)).real
        return field, derivative
