"""Tests for CombSignals: linear and third-order comb signals."""
import math
from dataclasses import replace

import numpy as np
import pytest

from analyzer.comb_signals import CombSignals
from analyzer.combfield import CombField
from analyzer.material import Material
from models.comb import CombSpec, FrequencyGrid
from models.errors import BudgetExceededError, CombSpecError, CombSpecWarning, NyquistError
from models.signal import TimeSeries
from models.system import ladder, two_level

STEP = 1e-3


def linear_combs():
    return [
        CombSpec(rep_spacing=1.0, carrier=100.0, width=20.0, label="comb.1"),
        CombSpec(rep_spacing=1.0, offset=STEP, carrier=100.0, width=20.0, label="comb.2"),
    ]


def small_combs():
    return [
        CombSpec(rep_spacing=1.0, carrier=5.0, width=1.0),
        CombSpec(rep_spacing=1.0, offset=0.01, carrier=5.0, width=1.0),
    ]


def quad_combs(offsets=(3, 7, 13), unit=1e-4):
    combs = [CombSpec(rep_spacing=1.0, carrier=2.0, width=3.0)]
    combs += [CombSpec(rep_spacing=1.0, offset=k * unit, carrier=2.0, width=3.0) for k in offsets]
    return combs


def ladder_system():
    return ladder(omega_eg=2.0, omega_fg=4.0, gamma=0.1, decay=(0.0, 0.05, 0.05))


def amplitude_of(spikes, order):
    position = np.flatnonzero(spikes.order == order)
    return spikes.amplitude[position[0]] if position.size else 0j


def full_window_times(step, samples):
    dt = 2 * math.pi / step / samples
    return dt * np.arange(samples)


def test_linear_spikes_follow_tooth_arithmetic():
    """Пик m: C = iω_a·E₁(−mΔω)·χ⁽¹⁾(mΔω₂)·E₂(mΔω₂), ω_a = −mΔω."""
    combs = linear_combs()
    system = two_level(omega_eg=100.0, gamma=1.0)
    grid = FrequencyGrid(STEP)
    spectrum = CombSignals.linear_signal_freq(combs, system, grid, detect=1)

    detector = CombField.field_spikes(combs[0], grid)
    material = CombField.field_spikes(combs[1], grid)
    for m in (1, 37, 100, 150, 221):
        omega_b = (1001 * m) * STEP
        expected = (
            1j * (-1000 * m * STEP) * amplitude_of(detector, -m)
            * Material.chi1(system, omega_b) * amplitude_of(material, m)
        )
        assert spectrum.amplitude_at(m) == pytest.approx(expected, rel=1e-9)
        assert spectrum.amplitude_at(-m) == pytest.approx(expected.conjugate(), rel=1e-9)


def test_linear_spectrum_tracks_absorption_profile():
    """Нормированный Im-профиль по m повторяет Im χ⁽¹⁾·вес огибающих."""
    combs = linear_combs()
    system = two_level(omega_eg=100.0, gamma=1.0)
    grid = FrequencyGrid(STEP)
    spectrum = CombSignals.linear_signal_freq(combs, system, grid, detect=1)

    detector = CombField.field_spikes(combs[0], grid)
    material = CombField.field_spikes(combs[1], grid)
    orders = np.arange(60, 141)
    weights = np.array([
        m * amplitude_of(detector, -m) * amplitude_of(material, m) for m in orders
    ])
    chi = Material.chi1(system, (1001 * orders) * STEP)
    # Re C = m·E₁E₂·Im χ для вещественных огибающих
    expected = (weights * chi.imag).real
    observed = np.array([spectrum.amplitude_at(int(m)).real for m in orders])
    np.testing.assert_allclose(observed / observed.max(), expected / expected.max(), rtol=1e-9)
    assert spectrum.absorptive()[spectrum.indices == 100][0] == pytest.approx(observed[40] / (2 * math.pi))


def test_term_table_records_each_contribution():
    """Таблица вкладов: одна пара зубцов на пик m ≠ 0, детектор - гребёнка 1."""
    spectrum = CombSignals.linear_signal_freq(
        linear_combs(), two_level(100.0, 1.0), FrequencyGrid(STEP), detect=1
    )
    terms = spectrum.terms

    assert set(terms["detect"]) == {1}
    assert (terms["detect_order"] == -terms["order1"]).all()
    counts = dict(zip(spectrum.indices, spectrum.term_counts()))
    assert counts[100] == 1
    frame = spectrum.to_frame()
    assert list(frame.columns) == ["m", "frequency", "re", "imag", "term_count"]


def test_time_and_frequency_paths_agree():
    """ДПФ временного сигнала совпадает с аналитическим спектром."""
    combs = linear_combs()
    system = two_level(omega_eg=100.0, gamma=1.0)
    grid = FrequencyGrid(STEP)
    spectrum = CombSignals.linear_signal_freq(combs, system, grid, detect=1)
    series = CombSignals.linear_signal_time(combs, system, grid, full_window_times(STEP, 8192), detect=1)
    recovered = CombSignals.spectrum_from_time(series, step=STEP)

    scale = np.max(np.abs(spectrum.amplitudes))
    for index, value in zip(spectrum.indices, spectrum.amplitudes):
        assert abs(recovered.amplitude_at(int(index)) - value) <= 1e-9 * scale
    outside = ~np.isin(recovered.indices, spectrum.indices)
    assert np.max(np.abs(recovered.amplitudes[outside])) <= 1e-9 * scale


def test_unfiltered_signal_with_lowpass_equals_selection():
    """Все пары зубцов + идеальный фильтр = отбор n′ = 0."""
    combs = linear_combs()
    system = two_level(omega_eg=100.0, gamma=1.0)
    grid = FrequencyGrid(STEP)
    selected = CombSignals.linear_signal_freq(combs, system, grid, detect=1)
    unfiltered = CombSignals.linear_signal_unfiltered(combs, system, grid, detect=1)
    filtered = CombSignals.apply_lowpass(unfiltered, 0.5)

    assert unfiltered.size > selected.size
    np.testing.assert_array_equal(filtered.indices, selected.indices)
    scale = np.max(np.abs(selected.amplitudes))
    np.testing.assert_allclose(filtered.amplitudes, selected.amplitudes, rtol=0, atol=1e-12 * scale)
    assert filtered.filter_cutoff == 0.5


def test_product_path_with_lowpass_matches_prefiltered_series():
    """−Ė·⟨V̂⟩ оптических полей после фильтра равно сумме биений."""
    combs = small_combs()
    system = two_level(omega_eg=5.0, gamma=0.5)
    grid = FrequencyGrid(0.01)
    times = full_window_times(0.01, 8192)
    beats = CombSignals.linear_signal_time(combs, system, grid, times, detect=1)
    product = CombSignals.linear_signal_time(combs, system, grid, times, detect=1, prefilter=False)
    filtered = CombSignals.apply_lowpass(product, 0.5)

    scale = np.max(np.abs(beats.samples))
    np.testing.assert_allclose(filtered.samples, beats.samples, rtol=0, atol=1e-9 * scale)


def test_coarse_time_grid_raises_nyquist():
    """Шаг по времени не разрешает самый быстрый пик."""
    combs = small_combs()
    system = two_level(omega_eg=5.0, gamma=0.5)
    times = np.arange(0.0, 100.0, 0.5)
    with pytest.raises(NyquistError):
        CombSignals.linear_signal_time(combs, system, FrequencyGrid(0.01), times, prefilter=False)


def test_lowpass_cutoff_validated():
    """Частота среза должна быть положительной и меньше Δω."""
    spectrum = CombSignals.linear_signal_freq(small_combs(), two_level(5.0, 0.5), FrequencyGrid(0.01))
    with pytest.raises(CombSpecError):
        CombSignals.apply_lowpass(spectrum, 0.0)
    with pytest.raises(CombSpecError):
        CombSignals.apply_lowpass(spectrum, 1.5)


def test_projection_parts_add_up():
    """Сигналы с проекциями ground и emitting в сумме дают полный."""
    combs = small_combs()
    system = two_level(omega_eg=5.0, gamma=0.5)
    grid = FrequencyGrid(0.01)
    full = CombSignals.linear_signal_freq(combs, system, grid, projection="full")
    ground = CombSignals.linear_signal_freq(combs, system, grid, projection="ground")
    emitting = CombSignals.linear_signal_freq(combs, system, grid, projection="emitting")

    np.testing.assert_allclose(ground.amplitudes + emitting.amplitudes, full.amplitudes, atol=1e-12)


def test_unknown_detector_rejected():
    """Номер детектирующей гребёнки вне 1..N."""
    with pytest.raises(CombSpecError, match="unknown comb index"):
        CombSignals.linear_signal_freq(small_combs(), two_level(5.0, 0.5), FrequencyGrid(0.01), detect=3)


def test_quad_comb_spike_positions():
    """Пики на {3m + 7p + 13q}·δω₀ при |m|, |p|, |q| ≤ 5."""
    spectrum = CombSignals.quad_comb_signal(
        quad_combs(), ladder_system(), FrequencyGrid(1e-4), max_order=5,
    )
    expected = {
        3 * m + 7 * p + 13 * q
        for m in range(-5, 6) for p in range(-5, 6) for q in range(-5, 6)
    }

    assert set(spectrum.indices.tolist()) == expected
    assert set(spectrum.terms["comb1"]) == {2}
    assert set(spectrum.terms["comb3"]) == {4}


def test_quad_comb_is_independent_of_threads():
    """Результат не зависит от числа потоков."""
    combs = quad_combs((1, 5, 25))
    single = CombSignals.quad_comb_signal(combs, ladder_system(), FrequencyGrid(1e-4), max_order=2)
    pooled = CombSignals.quad_comb_signal(combs, ladder_system(), FrequencyGrid(1e-4), max_order=2, threads=4)

    np.testing.assert_array_equal(single.indices, pooled.indices)
    np.testing.assert_array_equal(single.amplitudes, pooled.amplitudes)


def test_budget_exceeded_reports_admissible_order():
    """Превышение бюджета троек называет допустимый max_order."""
    with pytest.raises(BudgetExceededError, match="max_order <= 4"):
        CombSignals.quad_comb_signal(
            quad_combs(), ladder_system(), FrequencyGrid(1e-4), max_terms=1000,
        )


def test_arity_errors():
    """Число гребёнок для частных случаев третьего порядка."""
    combs = quad_combs()
    with pytest.raises(CombSpecError, match="quad_third requires 4 combs"):
        CombSignals.quad_comb_signal(combs[:3], ladder_system(), FrequencyGrid(1e-4))
    with pytest.raises(CombSpecError, match="dual_third requires 2 combs"):
        CombSignals.dual_comb_third_order(combs[:3], ladder_system(), FrequencyGrid(1e-4))


def test_dual_comb_third_order_confined_to_offset_multiples():
    """Двухгребёночный третий порядок: пики только на (m + p + q)·δω."""
    combs = quad_combs((3,))
    spectrum = CombSignals.dual_comb_third_order(combs, ladder_system(), FrequencyGrid(1e-4), max_order=3)

    assert spectrum.size > 0
    assert np.all(spectrum.indices % 3 == 0)
    assert set(spectrum.terms["comb1"]) == {2}


def test_two_by_two_sums_three_orderings():
    """Два взаимодействия с гребёнкой 2, одно с гребёнкой 1, три порядка слотов."""
    combs = quad_combs((3,))
    spectrum = CombSignals.dual_comb_two_by_two(combs, ladder_system(), FrequencyGrid(1e-4), max_order=2)
    terms = spectrum.terms
    slots = set(zip(terms["comb1"], terms["comb2"], terms["comb3"]))

    assert slots == {(1, 2, 2), (2, 1, 2), (2, 2, 1)}
    assert np.all(spectrum.indices % 3 == 0)


def test_third_order_time_series_is_real():
    """Временной сигнал третьего порядка синтезируется из пиков."""
    spectrum = CombSignals.quad_comb_signal(
        quad_combs((1, 5, 25)), ladder_system(), FrequencyGrid(1e-4), max_order=2,
    )
    series = CombSignals.signal_time(spectrum, full_window_times(1e-4, 1024))
    back = CombSignals.spectrum_from_time(series, step=1e-4)

    assert series.samples.dtype == float
    scale = np.max(np.abs(spectrum.amplitudes))
    assert abs(back.amplitude_at(31) - spectrum.amplitude_at(31)) <= 1e-9 * scale


def test_two_level_third_order_with_population_decay():
    """Двухуровневая система с Γ_e > 0: оба двухгребёночных варианта считаются."""
    combs = quad_combs((3,))
    system = two_level(omega_eg=2.0, gamma=0.1, decay=0.05)
    third = CombSignals.dual_comb_third_order(combs, system, FrequencyGrid(1e-4), max_order=3)
    two_by_two = CombSignals.dual_comb_two_by_two(combs, system, FrequencyGrid(1e-4), max_order=3)

    assert third.size > 0 and two_by_two.size > 0
    assert np.all(np.isfinite(third.amplitudes)) and np.all(np.isfinite(two_by_two.amplitudes))


def test_undamped_population_rejected_before_computation():
    """Пара зубцов ω + (−ω) = 0 при Γ_e = 0: ошибка называет уровень и гребёнки."""
    with pytest.raises(CombSpecError, match="population of e at zero frequency.*decay rate for e"):
        CombSignals.dual_comb_third_order(quad_combs((3,)), two_level(2.0, 0.1), FrequencyGrid(1e-4), max_order=3)


def test_two_photon_resonance_is_local_maximum():
    """ω_fg = 4Δω₂: пик p′ = 4 выше соседних p′ = 3 и 5."""
    combs = quad_combs((3,))
    spectrum = CombSignals.dual_comb_two_by_two(combs, ladder_system(), FrequencyGrid(1e-4), max_order=5)
    peak = {p: abs(spectrum.amplitude_at(3 * p)) for p in (3, 4, 5)}

    assert peak[4] > peak[3] and peak[4] > peak[5]


def test_raman_term_dominates_for_two_level():
    """Двухуровневая система: наибольший пик - разностный, p′ = 0."""
    combs = quad_combs((3,))
    system = two_level(omega_eg=2.0, gamma=0.1, decay=0.05)
    spectrum = CombSignals.dual_comb_two_by_two(combs, system, FrequencyGrid(1e-4), max_order=5)

    assert spectrum.indices[np.argmax(np.abs(spectrum.amplitudes))] == 0


def test_equal_offsets_collapse_to_dc():
    """δω_j = 0 для всех гребёнок: все вклады попадают в DC."""
    spectrum = CombSignals.quad_comb_signal(quad_combs((0, 0, 0)), ladder_system(), FrequencyGrid(1e-4), max_order=2)

    assert spectrum.indices.tolist() == [0]
    assert len(spectrum.terms) > 1


def test_linear_peak_at_tooth_nearest_resonance():
    """Максимум |C| приходится на зубец mΔω₂, ближайший к ω_eg."""
    combs = linear_combs()
    omega_eg = 103.2
    spectrum = CombSignals.linear_signal_freq(combs, two_level(omega_eg, 1.0), FrequencyGrid(STEP), detect=1)
    nearest = round(omega_eg / combs[1].spacing)

    positive = spectrum.indices > 0
    assert spectrum.indices[positive][np.argmax(np.abs(spectrum.amplitudes[positive]))] == nearest


def test_far_detuned_signal_suppressed():
    """Переход далеко за огибающей гребёнок почти не даёт сигнала."""
    combs = linear_combs()
    times = full_window_times(STEP, 8192)
    resonant = CombSignals.linear_signal_time(combs, two_level(100.0, 1.0), FrequencyGrid(STEP), times, detect=1)
    detuned = CombSignals.linear_signal_time(combs, two_level(1.0e4, 1.0), FrequencyGrid(STEP), times, detect=1)

    assert np.max(np.abs(detuned.samples)) < 1e-2 * np.max(np.abs(resonant.samples))


def test_zero_field_gives_zero_signal():
    """A = 0: зубцов нет, сигнал тождественно равен нулю."""
    combs = [replace(c, amplitude=0.0) for c in linear_combs()]
    with pytest.warns(CombSpecWarning, match="zero amplitude"):
        series = CombSignals.linear_signal_time(
            combs, two_level(100.0, 1.0), FrequencyGrid(STEP), full_window_times(STEP, 1024), detect=1,
        )

    np.testing.assert_array_equal(series.samples, 0.0)


def test_lowpass_is_idempotent():
    """Повторный фильтр с той же частотой среза ничего не меняет."""
    unfiltered = CombSignals.linear_signal_unfiltered(linear_combs(), two_level(100.0, 1.0), FrequencyGrid(STEP), detect=1)
    once = CombSignals.apply_lowpass(unfiltered, 0.5)
    twice = CombSignals.apply_lowpass(once, 0.5)

    np.testing.assert_array_equal(twice.indices, once.indices)
    np.testing.assert_array_equal(twice.amplitudes, once.amplitudes)
    assert twice.filter_cutoff == once.filter_cutoff


def test_lowpass_tone_gain_is_brick_wall():
    """Тон на 0.9·ω_cut проходит без изменений, тон на 1.1·ω_cut подавлен."""
    dt, samples = 0.01, 1000
    base = 2 * math.pi / (dt * samples)
    cutoff = 10 * base
    times = dt * np.arange(samples)
    below = TimeSeries(dt=dt, samples=np.cos(9 * base * times))
    above = TimeSeries(dt=dt, samples=np.cos(11 * base * times))

    np.testing.assert_allclose(CombSignals.apply_lowpass(below, cutoff).samples, below.samples, rtol=0, atol=1e-12)
    np.testing.assert_allclose(CombSignals.apply_lowpass(above, cutoff).samples, 0.0, rtol=0, atol=1e-12)
