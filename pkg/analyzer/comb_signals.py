"""Linear and third-order comb signals in frequency and time domain."""
import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import fft

from analyzer.combfield import CombField, FieldSpikes
from analyzer.material import Material
from analyzer.workers import chunks, map_rows
from models.comb import CombSpec, FrequencyGrid
from models.errors import BudgetExceededError, CombSpecError, NyquistError
from models.signal import Spectrum, TimeSeries, empty_terms
from models.system import LevelSystem, Projection

DEFAULT_MAX_TERMS = 2_000_000

# слоты гребёнок для частных случаев третьего порядка (нумерация с 1)
QUAD_SLOTS = (2, 3, 4)
DUAL_SLOTS = (2, 2, 2)
TWO_BY_TWO_SLOTS = ((1, 2, 2), (2, 1, 2), (2, 2, 1))


class CombSignals:
    """
    Сигналы гребёнок: S(t) = −Ė(t)·⟨V̂⟩(t) и его коэффициенты Фурье.

    Для пары «детектирующий пик a, пики материала b...» вклад в
    коэффициент на частоте Ω = ω_a + Σω_b равен iω_a·E_a·χ(ω_b...)·ΠE_b.
    Гребёнки нумеруются с 1.
    """

    @staticmethod
    def _spikes(combs: Sequence[CombSpec], grid: FrequencyGrid) -> List[FieldSpikes]:
        return [CombField.field_spikes(comb, grid) for comb in combs]

    @staticmethod
    def _check_comb(number: int, count: int) -> int:
        if not 1 <= int(number) <= count:
            raise CombSpecError(f"unknown comb index {number} (have {count} combs)")
        return int(number)

    @staticmethod
    def _detectors(detect: Optional[int], count: int) -> List[int]:
        if detect is None:
            return list(range(1, count + 1))
        return [CombSignals._check_comb(detect, count)]

    @staticmethod
    def _match_orders(left: np.ndarray, right: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Пары позиций (i, j) с left[i] == right[j], по возрастанию (i, j)."""
        merged = pd.DataFrame({"order": left, "i": np.arange(left.size)}).merge(
            pd.DataFrame({"order": right, "j": np.arange(right.size)}), on="order"
        )
        merged = merged.sort_values(["i", "j"], kind="mergesort")
        return merged["i"].to_numpy(dtype=np.int64), merged["j"].to_numpy(dtype=np.int64)

    @staticmethod
    def _concat(parts: List[pd.DataFrame]) -> pd.DataFrame:
        parts = [p for p in parts if not p.empty]
        return pd.concat(parts, ignore_index=True) if parts else empty_terms()

    @staticmethod
    def _assemble(grid: FrequencyGrid, terms: pd.DataFrame, combs: Sequence[CombSpec],
                  kind: str, record_terms: bool = True) -> Spectrum:
        """Сложить вклады в пики; таблица вкладов сортируется по индексу пика."""
        spacing = min((c.spacing for c in combs), default=math.inf)
        if terms.empty:
            return Spectrum.zero(grid.step, terms=terms, min_rep_spacing=spacing, kind=kind)
        terms = terms.sort_values("index", kind="mergesort").reset_index(drop=True)
        values = terms["weight"].to_numpy() * terms["chi"].to_numpy()
        return Spectrum.accumulate(
            grid.step,
            terms["index"].to_numpy(),
            values,
            terms if record_terms else empty_terms(),
            min_rep_spacing=spacing,
            kind=kind,
        )

    # ------------------------------------------------------------------
    # линейный сигнал

    @staticmethod
    def _linear_terms(system: LevelSystem, grid: FrequencyGrid, j: int, detector: FieldSpikes,
                      a: np.ndarray, k: int, material: FieldSpikes, b: np.ndarray,
                      projection: Projection) -> pd.DataFrame:
        chi = Material.chi1(system, material.index * grid.step, projection)
        omega_a = detector.index[a] * grid.step
        return pd.DataFrame({
            "index": detector.index[a] + material.index[b],
            "detect": j,
            "detect_order": detector.order[a],
            "detect_index": detector.index[a],
            "comb1": k,
            "order1": material.order[b],
            "arg1": material.index[b],
            "weight": 1j * omega_a * detector.amplitude[a] * material.amplitude[b],
            "chi": np.asarray(chi)[b],
        })

    @staticmethod
    def linear_signal_freq(combs: Sequence[CombSpec], system: LevelSystem, grid: FrequencyGrid,
                           detect: Optional[int] = None, projection: Projection = "full",
                           record_terms: bool = True) -> Spectrum:
        """
        Линейный сигнал после отбора n′ = 0 (аналитический путь).

        Формула: C(Ω) = Σ_{j,k} Σ_m iω_a·E_j(ω_a)·χ⁽¹⁾(ω_b)·E_k(ω_b),
            ν_a = −ν_b, Ω = ω_a + ω_b ≈ m(δ_k − δ_j)

        Args:
            detect: номер гребёнки, дающей Ė (None - все гребёнки)
            projection: "full", "ground", "emitting" или индекс уровня
        """
        spikes = CombSignals._spikes(combs, grid)
        parts = []
        for j in CombSignals._detectors(detect, len(combs)):
            for k in range(1, len(combs) + 1):
                a, b = CombSignals._match_orders(spikes[j - 1].order, -spikes[k - 1].order)
                parts.append(CombSignals._linear_terms(
                    system, grid, j, spikes[j - 1], a, k, spikes[k - 1], b, projection
                ))
        terms = CombSignals._concat(parts)
        return CombSignals._assemble(grid, terms, combs, "linear", record_terms)

    @staticmethod
    def linear_signal_unfiltered(combs: Sequence[CombSpec], system: LevelSystem, grid: FrequencyGrid,
                                 detect: Optional[int] = None,
                                 projection: Projection = "full") -> Spectrum:
        """Полный линейный сигнал: все пары зубцов, без отбора n′ = 0."""
        spikes = CombSignals._spikes(combs, grid)
        parts = []
        for j in CombSignals._detectors(detect, len(combs)):
            for k in range(1, len(combs) + 1):
                a, b = np.meshgrid(
                    np.arange(spikes[j - 1].index.size), np.arange(spikes[k - 1].index.size),
                    indexing="ij",
                )
                parts.append(CombSignals._linear_terms(
                    system, grid, j, spikes[j - 1], a.ravel(), k, spikes[k - 1], b.ravel(), projection
                ))
        terms = CombSignals._concat(parts)
        return CombSignals._assemble(grid, terms, combs, "linear_unfiltered")

    # ------------------------------------------------------------------
    # временная область

    @staticmethod
    def _uniform_step(times: np.ndarray) -> float:
        if times.ndim != 1 or times.size < 2:
            raise CombSpecError("time grid needs at least two points")
        dt = float(times[1] - times[0])
        if not dt > 0 or not np.allclose(np.diff(times), dt, rtol=1e-9, atol=0):
            raise CombSpecError("time grid must be uniform and increasing")
        return dt

    @staticmethod
    def check_nyquist(dt: float, max_frequency: float):
        """
        Raises:
            NyquistError: если Δt·Ω_max ≥ π
        """
        if max_frequency > 0 and dt * max_frequency >= math.pi:
            raise NyquistError(
                f"time step {dt!r} cannot resolve frequency {max_frequency!r}; "
                f"need dt < {math.pi / max_frequency!r}"
            )

    @staticmethod
    def synthesise(indices: np.ndarray, values: np.ndarray, step: float, times: np.ndarray) -> np.ndarray:
        """
        Σ values·e^{−i·index·step·t} на сетке времени.

        Если сетка начинается с 0 и покрывает ровно окно 2π/step,
        используется БПФ (без наложения частот при N > 2·max|index|).
        """
        times = np.asarray(times, dtype=float)
        dt = CombSignals._uniform_step(times)
        n = times.size
        full_window = math.isclose(n * dt * step, 2 * math.pi, rel_tol=1e-12)
        if times[0] == 0 and full_window and (indices.size == 0 or n > 2 * np.max(np.abs(indices))):
            spectrum = np.zeros(n, dtype=complex)
            np.add.at(spectrum, np.mod(indices, n), values)
            return fft.fft(spectrum)
        result = np.zeros(n, dtype=complex)
        omegas = indices * step
        for part in chunks(n, max(1, 2_000_000 // max(1, indices.size))):
            result[part] = np.exp(-1j * np.outer(times[part], omegas)) @ values
        return result

    @staticmethod
    def signal_time(spectrum: Spectrum, times) -> TimeSeries:
        """
        Временной сигнал S(t) = Σ C(Ω)·e^{−iΩt} по пикам спектра.

        Raises:
            NyquistError: если сетка не разрешает самый быстрый пик
        """
        times = np.asarray(times, dtype=float)
        dt = CombSignals._uniform_step(times)
        CombSignals.check_nyquist(dt, float(np.max(np.abs(spectrum.frequencies), initial=0.0)))
        samples = CombSignals.synthesise(spectrum.indices, spectrum.amplitudes, spectrum.step, times)
        return TimeSeries(
            dt=dt, samples=samples, t0=float(times[0]),
            min_rep_spacing=spectrum.min_rep_spacing, filter_cutoff=spectrum.filter_cutoff,
        )

    @staticmethod
    def linear_signal_time(combs: Sequence[CombSpec], system: LevelSystem, grid: FrequencyGrid,
                           times, detect: Optional[int] = None, projection: Projection = "full",
                           prefilter: bool = True) -> TimeSeries:
        """
        Линейный сигнал во временной области.

        prefilter=True: сумма биений e^{−imδω·t} после отбора n′ = 0.
        prefilter=False: произведение −Ė(t)·⟨V̂⟩(t) оптических полей;
        требует шага, разрешающего сумму максимальных частот, и
        последующего apply_lowpass.
        """
        times = np.asarray(times, dtype=float)
        if prefilter:
            spectrum = CombSignals.linear_signal_freq(combs, system, grid, detect, projection, record_terms=False)
            return CombSignals.signal_time(spectrum, times)

        dt = CombSignals._uniform_step(times)
        spikes = CombSignals._spikes(combs, grid)
        detectors = [spikes[j - 1] for j in CombSignals._detectors(detect, len(combs))]
        d_index = np.concatenate([s.index for s in detectors]) if detectors else np.zeros(0, np.int64)
        d_amp = np.concatenate([s.amplitude for s in detectors]) if detectors else np.zeros(0, complex)
        m_index = np.concatenate([s.index for s in spikes]) if spikes else np.zeros(0, np.int64)
        m_amp = np.concatenate([s.amplitude for s in spikes]) if spikes else np.zeros(0, complex)
        highest = (np.max(np.abs(d_index), initial=0) + np.max(np.abs(m_index), initial=0)) * grid.step
        CombSignals.check_nyquist(dt, float(highest))

        e_dot = CombSignals.synthesise(d_index, -1j * d_index * grid.step * d_amp, grid.step, times)
        chi = np.asarray(Material.chi1(system, m_index * grid.step, projection)) if m_index.size else m_amp
        dipole = CombSignals.synthesise(m_index, chi * m_amp, grid.step, times)
        spacing = min((c.spacing for c in combs), default=math.inf)
        return TimeSeries(dt=dt, samples=-e_dot * dipole, t0=float(times[0]), min_rep_spacing=spacing)

    @staticmethod
    def spectrum_from_time(series: TimeSeries, step: Optional[float] = None) -> Spectrum:
        """
        ДПФ временного сигнала в коэффициенты C(Ω) на сетке 2π/T_win.

        Формула: C_k = (1/N)·Σ_n S_n·e^{+2πikn/N}·e^{iΩ_k·t₀}
        """
        n = series.samples.size
        if step is not None and not math.isclose(step, series.frequency_step, rel_tol=1e-9):
            raise CombSpecError(
                f"window {series.window!r} does not match grid step {step!r} (need 2π/step)"
            )
        step = series.frequency_step if step is None else step
        coefficients = fft.ifft(series.samples)
        indices = np.rint(fft.fftfreq(n, 1.0 / n)).astype(np.int64)
        order = np.argsort(indices, kind="mergesort")
        indices = indices[order]
        amplitudes = coefficients[order] * np.exp(1j * indices * step * series.t0)
        return Spectrum(
            step, indices, amplitudes,
            min_rep_spacing=series.min_rep_spacing, filter_cutoff=series.filter_cutoff, kind="dft",
        )

    @staticmethod
    def apply_lowpass(signal: Union[Spectrum, TimeSeries], cutoff: float) -> Union[Spectrum, TimeSeries]:
        """
        Идеальный фильтр нижних частот: пропускает |Ω| ≤ ω_cut.

        Raises:
            CombSpecError: если ω_cut ≤ 0 или ω_cut ≥ min Δω_j
        """
        if not cutoff > 0:
            raise CombSpecError("low-pass cutoff must be > 0")
        if cutoff >= signal.min_rep_spacing:
            raise CombSpecError(
                f"low-pass cutoff {cutoff!r} must be below the smallest comb spacing "
                f"{signal.min_rep_spacing!r}"
            )
        applied = cutoff if signal.filter_cutoff is None else min(cutoff, signal.filter_cutoff)
        if isinstance(signal, Spectrum):
            keep = np.abs(signal.indices) * signal.step <= cutoff
            terms = signal.terms
            if not terms.empty:
                terms = terms[np.abs(terms["index"].to_numpy()) * signal.step <= cutoff].reset_index(drop=True)
            return replace(
                signal, indices=signal.indices[keep], amplitudes=signal.amplitudes[keep],
                terms=terms, filter_cutoff=applied,
            )
        transform = fft.fft(signal.samples)
        omegas = 2 * math.pi * fft.fftfreq(signal.samples.size, signal.dt)
        transform[np.abs(omegas) > cutoff] = 0
        return replace(signal, samples=fft.ifft(transform).real, filter_cutoff=applied)

    # ------------------------------------------------------------------
    # третий порядок

    @staticmethod
    def admissible_order(material: Sequence[FieldSpikes], max_terms: int) -> int:
        """Наибольший max_order, при котором число троек не превышает max_terms."""
        top = max((int(np.max(np.abs(s.order), initial=0)) for s in material), default=0)
        for bound in range(top, -1, -1):
            count = int(np.prod([np.count_nonzero(np.abs(s.order) <= bound) for s in material]))
            if count <= max_terms:
                return bound
        return -1

    @staticmethod
    def _truncate(spikes: FieldSpikes, max_order: int) -> FieldSpikes:
        keep = np.abs(spikes.order) <= max_order
        return FieldSpikes(spikes.index[keep], spikes.amplitude[keep], spikes.order[keep])

    @staticmethod
    def slots_for(kind: str, variant: str = "third") -> List[Tuple[int, int, int]]:
        """Тройки гребёнок материала для вида эксперимента третьего порядка."""
        if kind == "quad_third":
            return [QUAD_SLOTS]
        if kind == "dual_third":
            return list(TWO_BY_TWO_SLOTS) if variant == "two_by_two" else [DUAL_SLOTS]
        raise CombSpecError(f"{kind!r} is not a third-order experiment")

    @staticmethod
    def population_singularity(spikes: List[FieldSpikes], system: LevelSystem, grid: FrequencyGrid,
                               slots: Sequence[Sequence[int]],
                               max_order: Optional[int] = None) -> Optional[str]:
        """
        Проверка до расчёта: пара зубцов материала с ω_a + ω_b = 0 возбуждает
        населённость уровня без распада (Γ_a = 0), и χ⁽³⁾ расходится.

        Returns:
            описание первой такой пары или None
        """
        undamped = system.undamped_levels()
        if not undamped:
            return None
        for triple in slots:
            material = [spikes[s - 1] for s in triple]
            if max_order is not None:
                material = [CombSignals._truncate(s, max_order) for s in material]
            for i, j in ((0, 1), (0, 2), (1, 2)):
                common = np.intersect1d(material[i].index, -material[j].index)
                if common.size:
                    frequency = float(common[0] * grid.step)
                    labels = ", ".join(system.labels[a] for a in undamped)
                    return (
                        f"teeth at {frequency!r} (comb.{triple[i]}) and {-frequency!r} (comb.{triple[j]}) "
                        f"drive the population of {labels} at zero frequency, but it has no decay; "
                        f"set a positive decay rate for {labels}"
                    )
        return None

    @staticmethod
    def _third_order_terms(spikes: List[FieldSpikes], system: LevelSystem, grid: FrequencyGrid,
                           slots: Sequence[int], detect: int, projection: Projection,
                           max_order: Optional[int], max_terms: int, threads: int) -> pd.DataFrame:
        material = [spikes[s - 1] for s in slots]
        if max_order is not None:
            material = [CombSignals._truncate(s, max_order) for s in material]
        count = int(np.prod([s.index.size for s in material]))
        if count > max_terms:
            bound = CombSignals.admissible_order(material, max_terms)
            raise BudgetExceededError(
                f"{count} tooth triples exceed the budget of {max_terms}; "
                f"truncate with max_order <= {bound}"
            )
        if count == 0:
            return empty_terms()

        p1, p2, p3 = (g.ravel() for g in np.meshgrid(
            *(np.arange(s.index.size) for s in material), indexing="ij"
        ))
        positions = (p1, p2, p3)
        total_order = sum(s.order[p] for s, p in zip(material, positions))
        detector = spikes[detect - 1]
        a, t = CombSignals._match_orders(detector.order, -total_order)
        args = np.stack([s.index[p[t]] for s, p in zip(material, positions)], axis=1)

        # χ⁽³⁾ симметрична: считаем по уникальным наборам аргументов
        keys = np.sort(args, axis=1)
        if keys.shape[0]:
            unique, inverse = np.unique(keys, axis=0, return_inverse=True)
            chi = map_rows(
                lambda rows: Material.chi3_batch(system, rows * grid.step, projection),
                unique, threads,
            )[inverse.reshape(-1)]
        else:
            chi = np.zeros(0, dtype=complex)

        weight = 1j * detector.index[a] * grid.step * detector.amplitude[a]
        for s, p in zip(material, positions):
            weight = weight * s.amplitude[p[t]]
        frame = {
            "index": detector.index[a] + args.sum(axis=1),
            "detect": detect,
            "detect_order": detector.order[a],
            "detect_index": detector.index[a],
        }
        for slot, (comb, s, p) in enumerate(zip(slots, material, positions), start=1):
            frame[f"comb{slot}"] = comb
            frame[f"order{slot}"] = s.order[p[t]]
            frame[f"arg{slot}"] = s.index[p[t]]
        frame["weight"] = weight
        frame["chi"] = chi
        return pd.DataFrame(frame)

    @staticmethod
    def third_order_signal(combs: Sequence[CombSpec], system: LevelSystem, grid: FrequencyGrid,
                           slots: Sequence[Sequence[int]], detect: int = 1,
                           projection: Projection = "full", max_order: Optional[int] = None,
                           max_terms: int = DEFAULT_MAX_TERMS, threads: int = 1,
                           kind: str = "third", record_terms: bool = True) -> Spectrum:
        """
        Сигнал третьего порядка после отбора n′ = 0.

        Формула: C(Ω) = Σ iω_a·E_j(ω_a)·χ⁽³⁾(ω_b1, ω_b2, ω_b3)·ΠE(ω_b),
            ν_a = −(ν₁ + ν₂ + ν₃), Ω = ω_a + Σω_b

        Args:
            slots: набор троек гребёнок материала; вклады всех троек суммируются
            max_order: ограничение |ν| для зубцов материала
            max_terms: допустимое число троек зубцов на одну тройку гребёнок

        Raises:
            BudgetExceededError: если число троек превышает max_terms
            CombSpecError: если пара зубцов с ω_a + ω_b = 0 возбуждает уровень без распада
        """
        detect = CombSignals._check_comb(detect, len(combs))
        spikes = CombSignals._spikes(combs, grid)
        for triple in slots:
            if len(triple) != 3:
                raise CombSpecError(f"third-order slot set {triple} must name 3 combs")
            for number in triple:
                CombSignals._check_comb(number, len(combs))
        problem = CombSignals.population_singularity(spikes, system, grid, slots, max_order)
        if problem is not None:
            raise CombSpecError(problem)
        parts = []
        for triple in slots:
            parts.append(CombSignals._third_order_terms(
                spikes, system, grid, triple, detect, projection, max_order, max_terms, threads
            ))
        terms = CombSignals._concat(parts)
        return CombSignals._assemble(grid, terms, combs, kind, record_terms)

    @staticmethod
    def quad_comb_signal(combs: Sequence[CombSpec], system: LevelSystem, grid: FrequencyGrid,
                         detect: int = 1, projection: Projection = "full", **budget) -> Spectrum:
        """
        Четырёхгребёночный сигнал: Ė от гребёнки 1, материал - гребёнки 2, 3, 4.

        Пики лежат на Ω = mδω₂ + pδω₃ + qδω₄.
        """
        if len(combs) != 4:
            raise CombSpecError(f"quad_third requires 4 combs, got {len(combs)}")
        return CombSignals.third_order_signal(
            combs, system, grid, [QUAD_SLOTS], detect, projection, kind="quad_third", **budget
        )

    @staticmethod
    def dual_comb_third_order(combs: Sequence[CombSpec], system: LevelSystem, grid: FrequencyGrid,
                              detect: int = 1, projection: Projection = "full", **budget) -> Spectrum:
        """Двухгребёночный третий порядок: все три взаимодействия с гребёнкой 2."""
        if len(combs) != 2:
            raise CombSpecError(f"dual_third requires 2 combs, got {len(combs)}")
        return CombSignals.third_order_signal(
            combs, system, grid, [DUAL_SLOTS], detect, projection, kind="dual_third", **budget
        )

    @staticmethod
    def dual_comb_two_by_two(combs: Sequence[CombSpec], system: LevelSystem, grid: FrequencyGrid,
                             detect: int = 1, projection: Projection = "full", **budget) -> Spectrum:
        """
        Два взаимодействия с гребёнкой 2 и одно с гребёнкой 1.

        Сумма трёх порядков (1,2,2), (2,1,2), (2,2,1); пик на p′δω,
        где p′ - сумма порядков зубцов гребёнки 2.
        """
        if len(combs) != 2:
            raise CombSpecError(f"dual_third requires 2 combs, got {len(combs)}")
        return CombSignals.third_order_signal(
            combs, system, grid, TWO_BY_TWO_SLOTS, detect, projection, kind="dual_two_by_two", **budget
        )
