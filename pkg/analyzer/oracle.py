"""Nonperturbative density-matrix propagation used as a reference check."""
import math
import warnings
from dataclasses import replace
from itertools import product
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import linalg

from analyzer.combfield import CombField
from models.comb import CombSpec
from models.errors import CombSpecError, CombSpecWarning, PropagationError
from models.propagation import PropagationRun, Trajectories
from models.system import LevelSystem

# Δt ≤ RESOLUTION·2π/max|ε_a|
RESOLUTION = 0.01


class Oracle:
    """
    Интегрирование уравнения Лиувилля dρ/dt = −i[Ĥ₀ − E(t)V̂, ρ] + D(ρ).

    D: чистая дефазировка γ_ab когерентностей и распад населённостей
    Γ_a в основное состояние. Векторизация ρ построчная:
    vec(AρB) = (A ⊗ Bᵀ)·vec(ρ).
    """

    @staticmethod
    def liouvillian(system: LevelSystem):
        """Генераторы L₀ (свободная эволюция с релаксацией) и L_V (i[V̂, ·])."""
        n = system.size
        eye = np.eye(n)
        h0 = system.hamiltonian
        v = system.dipole_operator
        free = -1j * (np.kron(h0, eye) - np.kron(eye, h0.T))
        coupling = 1j * (np.kron(v, eye) - np.kron(eye, v.T))

        relaxation = np.zeros((n * n, n * n), dtype=complex)
        for a in range(n):
            for b in range(n):
                if a != b:
                    relaxation[a * n + b, a * n + b] = -system.dephasing[a, b]
        diagonal = np.arange(n) * (n + 1)
        relaxation[np.ix_(diagonal, diagonal)] = system.population_generator()
        return free + relaxation, coupling

    @staticmethod
    def _check_step(run: PropagationRun):
        fastest = float(np.max(np.abs(run.system.energies)))
        if fastest > 0 and run.dt > RESOLUTION * 2 * math.pi / fastest:
            raise PropagationError(
                f"time step {run.dt!r} too coarse; need dt <= {RESOLUTION * 2 * math.pi / fastest!r}"
            )

    @staticmethod
    def check_state(run: PropagationRun, rho: np.ndarray, step: int):
        """
        Допуски одного шага: след, эрмитовость, населённости в [0, 1].

        Returns:
            (дрейф следа, max|ρ − ρ†|)

        Raises:
            PropagationError: если хотя бы один допуск превышен
        """
        drift = float(abs(np.trace(rho) - 1))
        asymmetry = float(np.max(np.abs(rho - rho.conj().T)))
        populations = np.diagonal(rho).real
        hint = f"at step {step}; reduce dt (now {run.dt!r}) or the field amplitude"
        if drift > run.trace_tolerance:
            raise PropagationError(f"trace drift {drift:.3g} {hint}")
        if asymmetry > run.hermiticity_tolerance:
            raise PropagationError(f"Hermiticity error {asymmetry:.3g} {hint}")
        low, high = float(populations.min()), float(populations.max())
        if low < -run.population_tolerance or high > 1 + run.population_tolerance:
            raise PropagationError(f"population outside [0, 1] (min {low:.3g}, max {high:.3g}) {hint}")
        return drift, asymmetry

    @staticmethod
    def _trajectories(run: PropagationRun, states: np.ndarray, rates: np.ndarray, work: np.ndarray,
                      trace_error: float, hermiticity_error: float) -> Trajectories:
        """rates - dvec(ρ)/dt = Lvec(ρ) на тех же шагах."""
        system = run.system
        n = system.size
        rho = states.reshape(-1, n, n)
        vrho = system.dipole_operator @ rho
        dipole = np.trace(vrho, axis1=1, axis2=2).real
        populations = np.diagonal(rho, axis1=1, axis2=2).real
        emitting = list(system.emitting)
        emitting_population = populations[:, emitting].sum(axis=1)
        emitting_dipole = np.diagonal(vrho, axis1=1, axis2=2)[:, emitting].sum(axis=1)
        emitting_signal = np.diagonal(rates.reshape(-1, n, n), axis1=1, axis2=2)[:, emitting].sum(axis=1).real
        energy = populations @ system.energies
        return Trajectories(
            times=run.times,
            dipole=dipole,
            populations=populations,
            emitting_population=emitting_population,
            emitting_dipole=emitting_dipole,
            signal=-run.derivative_at_steps * dipole,
            emitting_signal=emitting_signal,
            field=run.field_at_steps,
            work=work,
            energy=energy,
            trace_error=trace_error,
            hermiticity_error=hermiticity_error,
            min_population=float(populations.min()),
            max_population=float(populations.max()),
        )

    @staticmethod
    def propagate(run: PropagationRun) -> Trajectories:
        """
        Метод Рунге-Кутты 4-го порядка для vec(ρ) и работы поля W = ∫S dt.

        Поле берётся на сетке полушагов. След, эрмитовость и
        населённости проверяются на каждом шаге (check_state).

        Raises:
            PropagationError: превышен допуск или слишком крупный шаг
        """
        Oracle._check_step(run)
        system = run.system
        n = system.size
        free, coupling = Oracle.liouvillian(system)
        v_row = system.dipole_operator.T.reshape(-1)  # Tr(Vρ) = v_row·vec(ρ)
        field = run.field
        derivative = run.field_derivative if run.field_derivative is not None else np.gradient(field, run.dt / 2)
        dt = run.dt

        def rate(state, k):
            rho = state[:-1]
            drho = free @ rho + field[k] * (coupling @ rho)
            power = -derivative[k] * (v_row @ rho).real
            return np.append(drho, power)

        state = np.append(system.ground_state().reshape(-1), 0.0)
        states = np.empty((run.steps + 1, n * n), dtype=complex)
        work = np.empty(run.steps + 1)
        states[0], work[0] = state[:-1], 0.0
        trace_error = hermiticity_error = 0.0
        for step in range(run.steps):
            k = 2 * step
            k1 = rate(state, k)
            k2 = rate(state + dt / 2 * k1, k + 1)
            k3 = rate(state + dt / 2 * k2, k + 1)
            k4 = rate(state + dt * k3, k + 2)
            state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

            drift, asymmetry = Oracle.check_state(run, state[:-1].reshape(n, n), step + 1)
            trace_error = max(trace_error, drift)
            hermiticity_error = max(hermiticity_error, asymmetry)
            states[step + 1], work[step + 1] = state[:-1], state[-1].real
        rates = states @ free.T + run.field_at_steps[:, None] * (states @ coupling.T)
        return Oracle._trajectories(run, states, rates, work, trace_error, hermiticity_error)

    @staticmethod
    def propagate_linear(run: PropagationRun) -> Trajectories:
        """
        Первый порядок теории возмущений тем же методом Рунге-Кутты.

        dρ⁰/dt = L₀ρ⁰, dρ¹/dt = L₀ρ¹ + E(t)·L_Vρ⁰; выход для ρ⁰ + ρ¹.
        """
        Oracle._check_step(run)
        system = run.system
        n = system.size
        free, coupling = Oracle.liouvillian(system)
        field, dt = run.field, run.dt
        size = n * n

        def rate(state, k):
            zeroth, first = state[:size], state[size:]
            return np.concatenate([free @ zeroth, free @ first + field[k] * (coupling @ zeroth)])

        state = np.concatenate([system.ground_state().reshape(-1), np.zeros(size, dtype=complex)])
        history = np.empty((run.steps + 1, 2 * size), dtype=complex)
        history[0] = state
        for step in range(run.steps):
            k = 2 * step
            k1 = rate(state, k)
            k2 = rate(state + dt / 2 * k1, k + 1)
            k3 = rate(state + dt / 2 * k2, k + 1)
            k4 = rate(state + dt * k3, k + 2)
            state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            history[step + 1] = state
        zeroth, first = history[:, :size], history[:, size:]
        rates = (zeroth + first) @ free.T + run.field_at_steps[:, None] * (zeroth @ coupling.T)
        trajectories = Oracle._trajectories(run, zeroth + first, rates, np.zeros(run.steps + 1), 0.0, 0.0)
        signal = trajectories.signal
        work = np.concatenate([[0.0], np.cumsum((signal[1:] + signal[:-1]) / 2) * dt])
        return replace(trajectories, work=work)

    @staticmethod
    def population_flux_check(run: PropagationRun, trajectories: Optional[Trajectories] = None) -> Dict[str, object]:
        """
        Сравнить d⟨P̂_e⟩/dt = Σ_e (Lρ)_ee с потоком населённости.

        Формула: d⟨P̂_e⟩/dt = −2·E(t)·Im⟨P̂_e V̂⟩ − Σ_e Γ_e·P_e

        Returns:
            residual (макс. абсолютная невязка), relative, modified -
            при Γ > 0 или γ > 0 тождество замкнутой системы изменено
        """
        if trajectories is None:
            trajectories = Oracle.propagate(run)
        system = run.system
        emitting = list(system.emitting)
        outflow = trajectories.populations[:, emitting] @ system.decay[emitting]
        predicted = -2 * trajectories.field * trajectories.emitting_dipole.imag - outflow
        difference = np.abs(trajectories.emitting_signal - predicted)
        residual = float(difference.max(initial=0.0))
        scale = float(np.max(np.abs(predicted), initial=0.0))
        off = ~np.eye(system.size, dtype=bool)
        modified = bool(np.any(system.decay > 0) or np.any(system.dephasing[off] > 0))
        if modified:
            warnings.warn("population flux identity is modified by relaxation", CombSpecWarning)
        return {
            "residual": residual,
            "relative": residual / scale if scale > 0 else residual,
            "modified": modified,
        }

    @staticmethod
    def energy_balance(trajectories: Trajectories) -> Dict[str, float]:
        """
        Баланс энергии: ∫S dt против ⟨Ĥ₀⟩(t) − ⟨Ĥ₀⟩(t₀) в конце прогона.

        Совпадение ожидается только при Γ = γ = 0 и E(t_end) ≈ 0.
        """
        absorbed = float(trajectories.energy[-1] - trajectories.energy[0])
        work = float(trajectories.work[-1])
        residual = abs(work - absorbed)
        return {
            "work": work,
            "energy_change": absorbed,
            "residual": residual,
            "relative": residual / abs(absorbed) if absorbed != 0 else residual,
        }

    @staticmethod
    def scaling_slope(scales: Sequence[float], deviations: Sequence[float]) -> float:
        """Наклон log(отклонение) от log|E| по методу наименьших квадратов."""
        return float(np.polyfit(np.log(scales), np.log(deviations), 1)[0])

    @staticmethod
    def free_evolution(system: LevelSystem, rho: np.ndarray, delay: float) -> np.ndarray:
        """Точная свободная эволюция с дефазировкой и распадом в основное состояние."""
        if delay < 0:
            raise CombSpecError("delays must be >= 0")
        factors = np.exp((-1j * system.transitions - system.dephasing) * delay)
        evolved = rho * factors
        np.fill_diagonal(evolved, system.population_propagator(delay) @ np.diagonal(rho))
        return evolved

    @staticmethod
    def kick_sequence(system: LevelSystem, areas: Sequence[float], delays: Sequence[float]) -> np.ndarray:
        """
        Импульсные «удары» U = exp(iA_j·V̂) с точной свободной эволюцией между ними.

        delays[j] - интервал после j-го удара (len(delays) = len(areas) − 1).
        """
        if len(delays) != len(areas) - 1:
            raise CombSpecError("need one delay between consecutive kicks")
        rho = system.ground_state()
        v = system.dipole_operator
        for j, area in enumerate(areas):
            unitary = linalg.expm(1j * area * v)
            rho = unitary @ rho @ unitary.conj().T
            if j < len(delays):
                rho = Oracle.free_evolution(system, rho, delays[j])
        return rho

    @staticmethod
    def impulsive_fourth_order(system: LevelSystem, t3: float, t2: float, t1: float,
                               area: float = 0.02) -> float:
        """
        Коэффициент при A₁A₂A₃A₄ в ⟨P̂_e⟩ после четырёх ударов.

        Члены, нечётные по каждой площади, выделяются суммой по знакам
        (±1)⁴; поправка O(A²) убирается экстраполяцией Ричардсона по A и A/2.
        """
        def coefficient(amplitude: float) -> float:
            total = 0.0
            for signs in product((1, -1), repeat=4):
                rho = Oracle.kick_sequence(system, [s * amplitude for s in signs], [t1, t2, t3])
                population = float(sum(rho[c, c].real for c in system.emitting))
                total += np.prod(signs) * population
            return total / (16 * amplitude ** 4)

        return (4 * coefficient(area / 2) - coefficient(area)) / 3

    @staticmethod
    def comb_run(system: LevelSystem, comb: CombSpec, n_pulses: int, dt: float,
                 scale: float = 1.0, padding: Optional[float] = None) -> PropagationRun:
        """Прогон для конечного цуга из n_pulses импульсов гребёнки (поле умножается на scale)."""
        padding = 8.0 / comb.width if padding is None else padding
        start = -padding
        stop = (n_pulses - 1) * comb.period + padding
        steps = int(math.ceil((stop - start) / dt))
        times = start + (dt / 2) * np.arange(2 * steps + 1)
        field, derivative = CombField.pulse_train_samples(comb, n_pulses, times)
        return PropagationRun(
            system=system, field=scale * field, dt=dt, t0=start,
            field_derivative=scale * derivative,
        )
