"""Tests for LockIn."""
import math

import numpy as np
import pytest

from analyzer.lockin import LockIn
from models.errors import CombSpecError, CombSpecWarning, LockInWindowError
from models.lockin import LockInConfig
from models.signal import TimeSeries


def test_window_shorter_than_five_tau_rejected():
    """Окно интегрирования короче 5τ."""
    series = TimeSeries(dt=1e-3, samples=np.ones(500))
    with pytest.raises(LockInWindowError, match="shorter than"):
        LockIn.lockin_demodulate(series, np.ones(500), tau=0.2)


def test_unit_gain_at_dc():
    """Постоянный сигнал с единичной опорой проходит без изменений."""
    series = TimeSeries(dt=1e-3, samples=np.full(2000, 3.0))
    assert LockIn.lockin_demodulate(series, np.ones(2000), tau=0.2) == pytest.approx(3.0, rel=1e-12)


def test_reference_shape_validated():
    """Опора должна лежать на той же сетке, что и сигнал."""
    series = TimeSeries(dt=1e-3, samples=np.ones(2000))
    with pytest.raises(CombSpecError):
        LockIn.lockin_demodulate(series, np.ones(10), tau=0.2)


def test_tone_gain_matches_exponential_filter():
    """G(Ω) = (1 − e^{(iΩ − 1/τ)W}) / ((1 − iΩτ)·(1 − e^{−W/τ}))."""
    dt, tau = 1e-4, 0.2
    window = (LockIn.window_samples(dt, tau) - 1) * dt
    omegas = np.array([0.0, 5.0, 100.0])
    gain = LockIn.tone_gain(omegas, dt, tau)
    expected = (1 - np.exp((1j * omegas - 1 / tau) * window)) / (
        (1 - 1j * omegas * tau) * (1 - math.exp(-window / tau))
    )

    assert gain[0] == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(gain, expected, rtol=1e-4)


def test_reference_waveform():
    """R_+ при t₁ = t₃ = 0 и θ = 0: cos((φ₄₃ + φ₂₁)·t′)."""
    cfg = LockInConfig(phi21=2.0, phi43=5.0)
    times = np.linspace(0.0, 1.0, 11)

    np.testing.assert_allclose(LockIn.reference_waveform(cfg, 1, 0.0, 0.0, times), np.cos(7.0 * times))
    np.testing.assert_allclose(LockIn.reference_waveform(cfg, -1, 0.0, 0.0, times), np.cos(3.0 * times))
    with pytest.raises(CombSpecError):
        LockIn.reference_waveform(cfg, 0, 0.0, 0.0, times)


def test_iq_demodulate_recovers_complex_amplitude():
    """Сигнал 2·Re(A·e^{iFt′}) даёт X(0) + iX(π/2) ≈ A."""
    amplitude = 0.3 + 0.4j
    beat = 2 * math.pi * 5000
    dt = 1e-5
    times = dt * np.arange(100_200)
    series = TimeSeries(dt=dt, samples=2 * (amplitude * np.exp(1j * beat * times)).real)
    cfg = LockInConfig(phi21=0.0, phi43=beat, tau=0.2)

    assert LockIn.iq_demodulate(series, cfg, 1) == pytest.approx(amplitude, abs=1e-3)


def test_downshift_map():
    """Переход 2π·384 с опорой 2π·381 переносится на 2π·3."""
    shifted = LockIn.downshift_map(2 * math.pi * 384, 2 * math.pi * 381)
    assert shifted == pytest.approx(2 * math.pi * 3)


def test_lockin_config_validation():
    """τ_LI > 0; θ вне {0, π/2} даёт предупреждение."""
    with pytest.raises(CombSpecError):
        LockInConfig(phi21=1.0, phi43=2.0, tau=0.0)
    with pytest.warns(CombSpecWarning):
        LockInConfig(phi21=1.0, phi43=2.0, theta=0.3)


def window_grid(dt=1e-3, tau=0.2):
    return dt * np.arange(LockIn.window_samples(dt, tau))


@pytest.mark.parametrize("alpha", [0.0, 0.7, math.pi / 2, 2.5])
def test_matched_tone_gives_half_cosine_of_phase(alpha):
    """S = cos(Ωt′ + α), R = cos(Ωt′): выход cos(α)/2 с точностью O(1/(Ωτ))."""
    times, omega, tau = window_grid(), 2 * math.pi * 50, 0.2
    series = TimeSeries(dt=1e-3, samples=np.cos(omega * times + alpha))
    output = LockIn.lockin_demodulate(series, np.cos(omega * times), tau)

    assert abs(output - math.cos(alpha) / 2) <= 1 / (omega * tau)


def test_demodulation_is_linear():
    """lockin(aS₁ + bS₂, R) = a·lockin(S₁, R) + b·lockin(S₂, R)."""
    times = window_grid()
    rng = np.random.default_rng(3)
    first, second = rng.normal(size=(2, times.size))
    reference = np.cos(2 * math.pi * 13 * times)
    combined = LockIn.lockin_demodulate(TimeSeries(dt=1e-3, samples=2.5 * first - 0.5 * second), reference, 0.2)
    separate = (
        2.5 * LockIn.lockin_demodulate(TimeSeries(dt=1e-3, samples=first), reference, 0.2)
        - 0.5 * LockIn.lockin_demodulate(TimeSeries(dt=1e-3, samples=second), reference, 0.2)
    )

    assert combined == pytest.approx(separate, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("offset_hz", [2, 5, 10, 20, 40])
def test_offset_tone_rejected(offset_hz):
    """Тон со сдвигом Δ от опоры ослаблен до |выход| ≤ 1/(Δ·τ)."""
    times, tau = window_grid(), 0.2
    matched = 2 * math.pi * 50
    offset = 2 * math.pi * offset_hz
    series = TimeSeries(dt=1e-3, samples=np.cos((matched + offset) * times))
    output = LockIn.lockin_demodulate(series, np.cos(matched * times), tau)

    assert abs(output) <= 1 / (offset * tau)


def test_zero_signal_gives_zero():
    times = window_grid()
    series = TimeSeries(dt=1e-3, samples=np.zeros(times.size))
    assert LockIn.lockin_demodulate(series, np.cos(times), 0.2) == 0.0
