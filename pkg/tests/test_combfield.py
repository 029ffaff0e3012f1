"""Tests for CombField."""
import math

import numpy as np
import pytest

from analyzer.combfield import CombField
from models.comb import AomPulseTrainSpec, CombSpec, FrequencyGrid
from models.errors import CombSpecError, CombSpecWarning, IncommensurateGridError


def reference_comb(**overrides):
    params = dict(rep_spacing=1.0, carrier=100.0, width=20.0)
    params.update(overrides)
    return CombSpec(**params)


def test_tooth_count_matches_envelope_reach():
    """Число зубцов: 2⌊σ√(2 ln(1/ε))⌋ + 1 = 243 при σ = 20, ε = 1e-8."""
    teeth = CombField.enumerate_teeth(reference_comb())

    assert len(teeth) == 243
    assert teeth[0].index == -21
    assert teeth[-1].index == 221
    assert all(abs(t.amplitude) >= 1e-8 for t in teeth)


def test_teeth_ordered_with_spacing_and_phase():
    """Зубцы идут по возрастанию n с шагом Δω + δ и несут фазу φ."""
    comb = reference_comb(offset=1e-3, global_phase=0.3)
    teeth = CombField.enumerate_teeth(comb)

    frequencies = np.array([t.frequency for t in teeth])
    np.testing.assert_allclose(np.diff(frequencies), 1.001, rtol=1e-12)
    centre = min(teeth, key=lambda t: abs(t.frequency - 100.0))
    assert np.angle(centre.amplitude) == pytest.approx(0.3)
    assert abs(centre.amplitude) == pytest.approx(math.exp(-(centre.frequency - 100.0) ** 2 / 800))


def test_zero_amplitude_warns_and_returns_nothing():
    """A = 0: предупреждение и пустой список."""
    with pytest.warns(CombSpecWarning):
        teeth = CombField.enumerate_teeth(reference_comb(amplitude=0.0))
    assert teeth == []


def test_large_offset_warns():
    """|δ|/Δω вне режима понижения частоты даёт предупреждение."""
    with pytest.warns(CombSpecWarning):
        reference_comb(offset=0.05)


def test_invalid_comb_rejected():
    """Нулевая ширина огибающей недопустима."""
    with pytest.raises(CombSpecError):
        reference_comb(width=0.0)


def test_incommensurate_tooth_raises():
    """Частота зубца не кратна шагу сетки."""
    comb = reference_comb(offset=1.5e-3)
    with pytest.raises(IncommensurateGridError):
        CombField.field_spikes(comb, FrequencyGrid(1e-3))


def test_field_spectrum_is_hermitian():
    """E(−ω) = E(ω)* для каждого пика."""
    combs = [reference_comb(), reference_comb(offset=1e-3, global_phase=0.7)]
    spectrum = CombField.eval_field_freq(combs, FrequencyGrid(1e-3))

    # ветви ±: 443 пика на гребёнку (ν от −221 до 221), общий пик на нуле
    assert spectrum.size == 2 * 443 - 1
    for index in spectrum.indices[::37]:
        assert spectrum.amplitude_at(-index) == pytest.approx(spectrum.amplitude_at(index).conjugate())


def test_dc_tooth_merges_both_branches():
    """Зубец n = 0 складывает ветви +ω и −ω: амплитуда 2·Re a₀."""
    comb = CombSpec(rep_spacing=1.0, carrier=2.0, width=3.0, global_phase=0.4)
    spikes = CombField.field_spikes(comb, FrequencyGrid(1e-3))

    dc = np.flatnonzero(spikes.index == 0)
    assert dc.size == 1
    expected = 2 * math.cos(0.4) * math.exp(-4.0 / 18.0)
    assert spikes.amplitude[dc[0]] == pytest.approx(expected)


def test_pulse_train_peak_and_derivative():
    """Пик одиночного импульса 2Aσ√(2π)/Δω и аналитическая производная."""
    comb = CombSpec(rep_spacing=1.0, carrier=1.0, width=1.0)
    times = np.linspace(-6.0, 6.0, 4801)
    field, derivative = CombField.pulse_train_samples(comb, 1, times)

    assert field[2400] == pytest.approx(2 * math.sqrt(2 * math.pi))
    numeric = np.gradient(field, times[1] - times[0])
    np.testing.assert_allclose(derivative[10:-10], numeric[10:-10], atol=1e-3)


def test_pulse_train_repeats_with_period():
    """Следующий импульс цуга сдвинут на T = 2π/Δω."""
    comb = CombSpec(rep_spacing=1.0, carrier=3.0, width=2.0)
    period = comb.period
    field, _ = CombField.pulse_train_samples(comb, 2, np.array([0.0, period]))

    assert field[1] == pytest.approx(field[0])


def test_impulsive_train_carries_aom_phase():
    """Импульсный цуг: A·e^{iφnT} в моменты импульсов и ноль между ними."""
    spec = AomPulseTrainSpec(rep_period=1.0, aom_freq=0.5, pulse_count=3)
    values = CombField.eval_field_time(spec, [0.0, 1.0, 2.0, 0.5])

    np.testing.assert_allclose(values[:3], np.exp(0.5j * np.arange(3)))
    assert values[3] == 0


def test_gaussian_train_envelope():
    """Гауссова огибающая τ_p."""
    spec = AomPulseTrainSpec(rep_period=10.0, aom_freq=0.0, duration=0.5)
    assert abs(CombField.eval_field_time(spec, 0.5)) == pytest.approx(math.exp(-0.5))
