"""Four-train AOM fluorescence experiment in the impulsive limit."""
import math
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from analyzer.lockin import LockIn
from analyzer.workers import chunks, ordered_map
from models.comb import AomPulseTrainSpec
from models.errors import CombSpecError, CombSpecWarning, NyquistError
from models.lockin import LockInConfig
from models.pathway import DelayGrid, PathwaySignature, ShotRecord
from models.system import LevelSystem

# многообразия (кет, бра) после каждого взаимодействия для диаграмм 1..8
DIAGRAM_TABLE: Dict[int, Tuple[Tuple[int, int], ...]] = {
    1: ((1, 0), (1, 1), (1, 0), (1, 1)),
    2: ((1, 0), (1, 1), (0, 1), (1, 1)),
    3: ((1, 0), (0, 0), (0, 1), (1, 1)),
    4: ((1, 0), (0, 0), (1, 0), (1, 1)),
    5: ((1, 0), (1, 1), (1, 2), (1, 1)),
    6: ((1, 0), (1, 1), (2, 1), (1, 1)),
    7: ((1, 0), (1, 1), (1, 2), (2, 2)),
    8: ((1, 0), (1, 1), (2, 1), (2, 2)),
}

# знаки волновых векторов гетеродинных сигналов (Ku, Bd: +; Kd, Bu: −)
HETERODYNE_FAMILIES = {
    (-1, 1, 1): "k_I",
    (1, -1, 1): "k_II",
    (1, 1, -1): "k_III",
}
K_SIGN = {"Ku": 1, "Bd": 1, "Kd": -1, "Bu": -1}

# группы путей, выделяемые опорами R_+ и R_−
GROUPS = {"plus": 1, "minus": -1}

# отсчётов (точки сетки × выстрелы) в одном блоке детектирования
SAMPLE_BUDGET = 2_000_000


class AomExperiment:
    """Флуоресцентный эксперимент с четырьмя цугами и фазовой меткой АОМ."""

    @staticmethod
    def _steps(system: LevelSystem, state: Tuple[int, int]) -> List[Tuple[str, Tuple[int, int]]]:
        """Все дипольно разрешённые переходы из (кет, бра)."""
        ket, bra = state
        moves = []
        for b in np.flatnonzero(system.dipoles[ket]):
            b = int(b)
            label = "Ku" if system.energies[b] > system.energies[ket] else "Kd"
            moves.append((label, (b, bra)))
        for b in np.flatnonzero(system.dipoles[bra]):
            b = int(b)
            label = "Bu" if system.energies[b] > system.energies[bra] else "Bd"
            moves.append((label, (ket, b)))
        return moves

    @staticmethod
    def _relaxes(system: LevelSystem, state: Tuple[int, int]) -> bool:
        ket, bra = state
        return ket == bra and ket != system.ground and system.decay[ket] > 0

    @staticmethod
    def _sequences(system: LevelSystem, length: int):
        """
        Последовательности (метки, состояния, relaxed).

        После второго взаимодействия населённость с Γ_a > 0 порождает
        дополнительный путь, распавшийся за t₂ в |g⟩⟨g|.
        """
        ground = (system.ground, system.ground)
        sequences = [((), (ground,), ())]
        for step in range(length):
            if step == 2:
                sequences = sequences + [
                    (labels, states, ground)
                    for labels, states, _ in sequences
                    if AomExperiment._relaxes(system, states[-1])
                ]
            sequences = [
                (labels + (label,), states + (state,), relaxed)
                for labels, states, relaxed in sequences
                for label, state in AomExperiment._steps(system, relaxed if step == 2 and relaxed else states[-1])
            ]
        return [(labels, states[1:], relaxed) for labels, states, relaxed in sequences]

    @staticmethod
    def enumerate_pathways(system: LevelSystem, detection: str = "fluorescence") -> List[PathwaySignature]:
        """
        Лиувиллевы пути из |g⟩⟨g|, по одному представителю на сопряжённую пару.

        fluorescence: 4 взаимодействия, итог - населённость излучающего уровня.
        heterodyne: 3 взаимодействия, итог - когерентность с кетом на одно
        многообразие выше бра (только метаданные k_I/k_II/k_III).
        Представитель пары начинается с взаимодействия на кете.
        """
        manifolds = system.manifolds()
        if detection == "fluorescence":
            length = 4
        elif detection == "heterodyne":
            length = 3
        else:
            raise CombSpecError(f"unknown detection {detection!r}")

        pathways = []
        next_id = max(DIAGRAM_TABLE) + 1
        extra_ids: Dict[Tuple, int] = {}
        for labels, states, relaxed in AomExperiment._sequences(system, length):
            pattern = tuple((manifolds[k], manifolds[b]) for k, b in states)
            key = (pattern, bool(relaxed))
            ket, bra = states[-1]
            if detection == "fluorescence":
                if ket != bra or ket not in system.emitting or labels[0] != "Ku":
                    continue
                diagram_id = None if relaxed else next(
                    (i for i, p in DIAGRAM_TABLE.items() if p == pattern), None
                )
                if diagram_id is None:
                    if key not in extra_ids:
                        extra_ids[key] = next_id
                        next_id += 1
                    diagram_id = extra_ids[key]
                pathways.append(PathwaySignature(diagram_id, labels, states, pattern, relaxed=relaxed))
            else:
                if manifolds[ket] != manifolds[bra] + 1:
                    continue
                family = HETERODYNE_FAMILIES.get(tuple(K_SIGN[label] for label in labels))
                if family is None:
                    continue
                if key not in extra_ids:
                    extra_ids[key] = len(extra_ids) + 1
                pathways.append(PathwaySignature(
                    extra_ids[key], labels, states, pattern, detection="heterodyne", family=family,
                    relaxed=relaxed,
                ))
        return pathways

    @staticmethod
    def _transition_dipole(system: LevelSystem, label: str, before: Tuple[int, int], after: Tuple[int, int]) -> float:
        if label.startswith("K"):
            return float(system.dipoles[after[0], before[0]])
        return float(system.dipoles[before[1], after[1]])

    @staticmethod
    def impulsive_response(system: LevelSystem, pathway: PathwaySignature, t3, t2, t1):
        """
        Отклик пути в импульсном пределе.

        Формула: R = (−1)^{#бра}·Πμ·Π_k exp((−iω_ab − γ_ab)·t_k),
            (a, b) - состояние в интервале k после k-го взаимодействия.
        Для распавшегося за t₂ пути множитель интервала t₂ равен
        1 − e^{−Γ_a t₂}, а третье взаимодействие действует из |g⟩⟨g|.
        """
        t1, t2, t3 = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (t1, t2, t3)))
        if np.any(t1 < 0) or np.any(t2 < 0) or np.any(t3 < 0):
            raise CombSpecError("delays must be >= 0")
        amplitude = (-1.0) ** pathway.bra_count
        state = (system.ground, system.ground)
        for k, (label, after) in enumerate(zip(pathway.interactions, pathway.levels)):
            amplitude *= AomExperiment._transition_dipole(system, label, state, after)
            state = pathway.relaxed if k == 1 and pathway.relaxed else after
        response = np.full(t1.shape, amplitude, dtype=complex)
        for k, ((a, b), delay) in enumerate(zip(pathway.levels, (t1, t2, t3))):
            if k == 1 and pathway.relaxed:
                target = pathway.relaxed[0]
                response = response * system.population_propagator(delay)[..., target, a]
                continue
            rate = 1j * system.transitions[a, b] + system.dephasing[a, b]
            response = response * np.exp(-rate * delay)
        return response if response.ndim else complex(response)

    @staticmethod
    def shot_sequence(system: LevelSystem, trains: Sequence[AomPulseTrainSpec], grid: DelayGrid,
                      shots: int, pathways: Optional[Sequence[PathwaySignature]] = None,
                      threads: int = 1) -> ShotRecord:
        """
        Запись флуоресценции по выстрелам для всех точек сетки задержек.

        Формула: S_m(t₃, t₂, t₁) = 2·Re Σ_i R_i(t₃, t₂, t₁)·e^{iΦ_i·mT}, Φ_i = Σ s_j·φ_j

        Raises:
            NyquistError: если |Φ_i| ≥ π/T
        """
        if len(trains) != 4:
            raise CombSpecError(f"aom_fluorescence requires 4 pulse trains, got {len(trains)}")
        if not all(train.impulsive for train in trains):
            raise CombSpecError("shot_sequence needs impulsive pulse trains")
        period = trains[0].rep_period
        if any(not math.isclose(train.rep_period, period, rel_tol=1e-12) for train in trains):
            raise CombSpecError("all pulse trains must share the repetition period")
        if pathways is None:
            pathways = AomExperiment.enumerate_pathways(system)
        phases = tuple(train.aom_freq for train in trains)
        modulation = np.array([p.net_modulation(phases) for p in pathways])
        fastest = float(np.max(np.abs(modulation), initial=0.0))
        if fastest >= math.pi / period:
            raise NyquistError(
                f"pathway modulation {fastest!r} rad/s exceeds the shot Nyquist limit "
                f"{math.pi / period!r}; need rep_period < {math.pi / fastest!r}"
            )
        t1, t2, t3 = np.meshgrid(grid.t1, grid.t2, grid.t3, indexing="ij")
        responses = ordered_map(
            lambda pathway: AomExperiment.impulsive_response(system, pathway, t3, t2, t1),
            pathways, threads,
        )
        stacked = np.array(responses, dtype=complex).reshape((len(pathways),) + grid.shape)
        return ShotRecord(
            grid=grid, pathways=tuple(pathways), responses=stacked, modulation=modulation,
            rep_period=period, shots=shots, aom_phases=phases,
        )

    @staticmethod
    def _reference_phase(grid: DelayGrid, cfg: LockInConfig, sign: int) -> np.ndarray:
        t1, _, t3 = np.meshgrid(grid.t1, grid.t2, grid.t3, indexing="ij")
        return cfg.wbar43 * t3 + sign * cfg.wbar21 * t1

    @staticmethod
    def group_amplitude(record: ShotRecord, cfg: LockInConfig, sign: int) -> np.ndarray:
        """
        Идеальная амплитуда группы: e^{ia}·(Σ_{Φ_i=F} R_i + Σ_{Φ_i=−F} R_i*), F = φ₄₃ ± φ₂₁.
        """
        beat = cfg.beat(sign)
        total = np.zeros(record.grid.shape, dtype=complex)
        for response, frequency in zip(record.responses, record.modulation):
            if math.isclose(frequency, beat, rel_tol=1e-9):
                total += response
            elif math.isclose(frequency, -beat, rel_tol=1e-9):
                total += response.conj()
        return np.exp(1j * AomExperiment._reference_phase(record.grid, cfg, sign)) * total

    @staticmethod
    def _check_frequencies(record: ShotRecord, cfg: LockInConfig):
        if len(record.aom_phases) != 4:
            return
        phi1, phi2, phi3, phi4 = record.aom_phases
        measured = (phi2 - phi1, phi4 - phi3)
        if not (math.isclose(measured[0], cfg.phi21, rel_tol=1e-9)
                and math.isclose(measured[1], cfg.phi43, rel_tol=1e-9)):
            warnings.warn(
                f"lock-in frequencies (phi21={cfg.phi21!r}, phi43={cfg.phi43!r}) differ from the "
                f"train beats (phi21={measured[0]!r}, phi43={measured[1]!r})",
                CombSpecWarning,
            )

    @staticmethod
    def demodulate_groups(record: ShotRecord, cfg: LockInConfig) -> Dict[str, np.ndarray]:
        """
        Синхронное детектирование отсчётов записи во всех точках сетки.

        Отсчёты S_m строятся блоками по выстрелам и сворачиваются с
        весами окна: Y_± = Σ_m c_m·S_m·e^{−iF_±·t′_m}, F_± = φ₄₃ ± φ₂₁.
        Комплексный выход Z_± = X(θ=0) + i·X(θ=π/2) = e^{ia_±}·Y_±.

        Raises:
            LockInWindowError: если запись короче 5·τ
        """
        times = record.shot_times
        LockIn.check_window(times[-1] - times[0], cfg.tau)
        coefficients = LockIn.window_weights(times, cfg.tau)
        beats = np.array([cfg.beat(sign) for sign in GROUPS.values()])
        points = int(np.prod(record.grid.shape))
        total = np.zeros((points, beats.size), dtype=complex)
        for part in chunks(record.shots, max(1, SAMPLE_BUDGET // points)):
            samples = record.samples(shots=part).reshape(points, -1)
            total += samples @ (coefficients[part, None] * np.exp(-1j * np.outer(times[part], beats)))
        return {
            name: total[:, i].reshape(record.grid.shape) for i, name in enumerate(GROUPS)
        }

    @staticmethod
    def extract_pathway_groups(record: ShotRecord, cfg: LockInConfig, unmix: bool = False) -> Dict[str, np.ndarray]:
        """
        Выделить группы путей опорами R_+ и R_−.

        Основной путь - детектирование самих отсчётов записи
        (demodulate_groups); утечка соседней группы и зеркальных членов
        на 2F остаётся в результате. unmix=True дополнительно исключает
        её точным решением системы 4×4 по усилениям детектора.

        Returns:
            {"plus": Z_+, "minus": Z_−} на сетке задержек
        """
        AomExperiment._check_frequencies(record, cfg)
        raw = AomExperiment.demodulate_groups(record, cfg)
        phases = {name: AomExperiment._reference_phase(record.grid, cfg, sign) for name, sign in GROUPS.items()}
        if not unmix:
            return {name: np.exp(1j * phases[name]) * raw[name] for name in GROUPS}

        # Y_s = Σ_g [G(F_g − F_s)·A_g + G(−F_g − F_s)·A_g*]
        beats = {name: cfg.beat(sign) for name, sign in GROUPS.items()}
        names = list(GROUPS)
        coupling = np.zeros((4, 4))
        for row, target in enumerate(names):
            for col, source in enumerate(names):
                direct, mirror = LockIn.tone_gain(
                    [beats[source] - beats[target], -beats[source] - beats[target]],
                    record.rep_period, cfg.tau, samples=record.shots,
                )
                # (Re, Im) выхода через (Re, Im) амплитуды группы
                coupling[2 * row:2 * row + 2, 2 * col:2 * col + 2] = [
                    [direct.real + mirror.real, -direct.imag + mirror.imag],
                    [direct.imag + mirror.imag, direct.real - mirror.real],
                ]
        observed = np.stack([part for name in names for part in (raw[name].real, raw[name].imag)])
        solved = np.linalg.solve(coupling, observed.reshape(4, -1)).reshape(observed.shape)
        return {
            name: np.exp(1j * phases[name]) * (solved[2 * i] + 1j * solved[2 * i + 1])
            for i, name in enumerate(names)
        }

    @staticmethod
    def demodulate_record(record: ShotRecord, cfg: LockInConfig, sign: int, point: Tuple[int, int, int]) -> complex:
        """Прямая демодуляция отсчётов записи в одной точке сетки (нужно окно ≥ 5τ)."""
        i1, _, i3 = point
        return LockIn.iq_demodulate(
            record.series(point), cfg, sign, t3=record.grid.t3[i3], t1=record.grid.t1[i1],
        )

    @staticmethod
    def fit_oscillation(values, dt: float, components: int = 2) -> float:
        """
        Частота основной компоненты z ∝ e^{−iωt} методом матричного пучка.

        Отсчёты раскладываются на components затухающих экспонент
        z_k^n; возвращается ω = −arg(z_k)/Δt компоненты с наибольшей
        амплитудой. Для двух отсчётов совпадает с ω = −arg(z₁·z₀*)/Δt.
        """
        values = np.asarray(values, dtype=complex)
        if values.size < 2:
            raise CombSpecError("need at least two samples to fit a frequency")
        pencil = values.size // 2
        hankel = linalg.hankel(values[:values.size - pencil], values[values.size - pencil - 1:])
        left, singular, right = linalg.svd(hankel[:, :-1], full_matrices=False)
        rank = max(1, min(components, int(np.count_nonzero(singular > singular[0] * 1e-10))))
        left, singular, right = left[:, :rank], singular[:rank], right[:rank]
        reduced = (left.conj().T @ hankel[:, 1:] @ right.conj().T) / singular[:, None]
        poles = linalg.eigvals(reduced)
        basis = np.power.outer(poles, np.arange(values.size)).T
        amplitudes = linalg.lstsq(basis, values)[0]
        dominant = int(np.argmax(np.abs(amplitudes)))
        return float(-np.angle(poles[dominant]) / dt)
