"""Digital lock-in amplifier with exponential low-pass."""
import math
from typing import Optional

import numpy as np

from models.errors import CombSpecError, LockInWindowError
from models.lockin import LockInConfig
from models.signal import TimeSeries

# окно интегрирования в единицах τ_LI (e^{−5} ≈ 0.7%)
WINDOW_FACTOR = 5.0


class LockIn:
    """Синхронный детектор: опорный сигнал, умножение, экспоненциальный фильтр."""

    @staticmethod
    def reference_waveform(cfg: LockInConfig, sign: int, t3, t1, t_prime):
        """
        Опорный сигнал R_±.

        Формула: R_± = cos(ω̄₄₃·t₃ ± ω̄₂₁·t₁ − (φ₄₃ ± φ₂₁)·t′ − θ)
        """
        if sign not in (1, -1):
            raise CombSpecError("reference sign must be +1 or -1")
        return np.cos(
            cfg.wbar43 * np.asarray(t3) + sign * cfg.wbar21 * np.asarray(t1)
            - cfg.beat(sign) * np.asarray(t_prime) - cfg.theta
        )

    @staticmethod
    def kernel(times: np.ndarray, tau: float) -> np.ndarray:
        """Весовая функция e^{−t′/τ}/τ от начала окна."""
        return np.exp(-(times - times[0]) / tau) / tau

    @staticmethod
    def check_window(window: float, tau: float, factor: float = WINDOW_FACTOR):
        """
        Raises:
            LockInWindowError: если окно короче factor·τ
        """
        if window < factor * tau * (1 - 1e-12):
            raise LockInWindowError(
                f"integration window {window!r} is shorter than {factor}*tau = {factor * tau!r}; "
                f"kernel is attenuated only to {math.exp(-window / tau):.3g} instead of "
                f"{math.exp(-factor):.3g}"
            )

    @staticmethod
    def window_weights(times: np.ndarray, tau: float) -> np.ndarray:
        """
        Коэффициенты c_m квадратуры трапеций с ядром, Σc_m = 1.

        Σ c_m·f(t′_m) = ∫ w·f dt′ / ∫ w dt′ (трапеции по сетке times).
        """
        times = np.asarray(times, dtype=float)
        spacing = np.diff(times)
        coefficients = np.zeros(times.size)
        coefficients[:-1] += spacing / 2
        coefficients[1:] += spacing / 2
        coefficients *= LockIn.kernel(times, tau)
        return coefficients / coefficients.sum()

    @staticmethod
    def lockin_demodulate(signal: TimeSeries, reference, tau: float) -> float:
        """
        Выход синхронного детектора.

        Формула: S_LI = (1/τ)·∫ S(t′)·R(t′)·e^{−t′/τ} dt′ (трапеции),
            нормированная на дискретный интеграл ядра (единичное усиление на DC)

        Raises:
            LockInWindowError: если окно короче 5·τ
        """
        if not tau > 0:
            raise CombSpecError("lock-in time constant must be > 0")
        reference = np.asarray(reference, dtype=float)
        if reference.shape != signal.samples.shape:
            raise CombSpecError("signal and reference must share the sampling grid")
        times = signal.times
        LockIn.check_window(times[-1] - times[0], tau)
        return float(np.sum(LockIn.window_weights(times, tau) * signal.samples * reference))

    @staticmethod
    def iq_demodulate(signal: TimeSeries, cfg: LockInConfig, sign: int, t3: float = 0.0, t1: float = 0.0) -> complex:
        """Комплексный выход X(θ=0) + i·X(θ=π/2)."""
        values = []
        for theta in (0.0, math.pi / 2):
            reference = LockIn.reference_waveform(cfg.with_theta(theta), sign, t3, t1, signal.times)
            values.append(LockIn.lockin_demodulate(signal, reference, cfg.tau))
        return complex(values[0], values[1])

    @staticmethod
    def tone_gain(frequencies, dt: float, tau: float, factor: float = WINDOW_FACTOR,
                  samples: Optional[int] = None) -> np.ndarray:
        """
        Отклик детектора на тон e^{iΩt′}, дискретизированный с шагом dt.

        Формула: G(Ω) = Σ c_m·e^{iΩt′_m} по окну factor·τ (или по samples отсчётам)
        """
        count = LockIn.window_samples(dt, tau, factor) if samples is None else int(samples)
        times = dt * np.arange(count)
        coefficients = LockIn.window_weights(times, tau)
        frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
        return np.exp(1j * np.outer(frequencies, times)) @ coefficients

    @staticmethod
    def window_samples(dt: float, tau: float, factor: float = WINDOW_FACTOR) -> int:
        """Число отсчётов окна, на котором считается tone_gain."""
        return int(math.ceil(factor * tau / dt)) + 1

    @staticmethod
    def downshift_map(omega_material: float, omega_reference: float) -> float:
        """Понижение частоты перехода опорной: ω − ω̄."""
        return omega_material - omega_reference
