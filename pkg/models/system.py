"""Few-level quantum system models."""
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from models.errors import CombSpecError

Projection = Union[str, int]

PROJECTIONS = ("full", "ground", "emitting")


@dataclass(frozen=True, eq=False)
class LevelSystem:
    """
    Многоуровневая система: Ĥ₀ = Σ ε_a |a⟩⟨a|, V̂ = Σ μ_ab |a⟩⟨b|.

    dephasing задаёт γ_ab для когерентностей (a ≠ b), decay задаёт Γ_a
    распада населённости a в основное состояние (у основного уровня
    Γ_g = 0, след сохраняется). ground - индекс основного состояния, emitting -
    излучающие состояния (по умолчанию все, кроме основного).
    """
    energies: np.ndarray
    dipoles: np.ndarray
    dephasing: np.ndarray
    decay: Optional[np.ndarray] = None
    ground: int = 0
    emitting: Tuple[int, ...] = ()
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        n = energies.size
        if energies.ndim != 1 or n < 2:
            raise CombSpecError("LevelSystem needs at least 2 levels")
        if not np.all(np.isfinite(energies)):
            raise CombSpecError("level energies must be finite")

        dipoles = np.asarray(self.dipoles, dtype=float)
        if dipoles.shape != (n, n):
            raise CombSpecError(f"dipole matrix must be {n}x{n}")
        if not np.allclose(dipoles, dipoles.T, rtol=0, atol=0):
            raise CombSpecError("dipole matrix must be symmetric")

        dephasing = np.asarray(self.dephasing, dtype=float)
        if dephasing.ndim == 0:
            dephasing = np.full((n, n), float(dephasing))
        if dephasing.shape != (n, n):
            raise CombSpecError(f"dephasing must be a scalar or {n}x{n}")
        if not np.array_equal(dephasing, dephasing.T):
            raise CombSpecError("dephasing matrix must be symmetric")
        off = ~np.eye(n, dtype=bool)
        if np.any(dephasing[off] < 0):
            raise CombSpecError("coherence dephasing rates must be >= 0")

        decay = np.zeros(n) if self.decay is None else np.asarray(self.decay, dtype=float)
        if decay.shape != (n,) or np.any(decay < 0):
            raise CombSpecError(f"decay must hold {n} non-negative rates")

        if not 0 <= self.ground < n:
            raise CombSpecError(f"ground index {self.ground} out of range")
        if decay[self.ground] != 0:
            raise CombSpecError("the ground level cannot decay: set its decay rate to 0")
        if energies[self.ground] != energies.min():
            raise CombSpecError("ground level must have the lowest energy")

        emitting = tuple(int(e) for e in self.emitting) or tuple(
            a for a in range(n) if a != self.ground
        )
        if self.ground in emitting:
            raise CombSpecError("emitting set must exclude the ground level")
        if any(not 0 <= e < n for e in emitting):
            raise CombSpecError("emitting index out of range")

        labels = tuple(self.labels) or tuple(f"L{a}" for a in range(n))
        if len(labels) != n:
            raise CombSpecError(f"expected {n} level labels")

        # γ_aa = Γ_a: убыль населённости a без учёта прихода в основное состояние
        dephasing = dephasing.copy()
        np.fill_diagonal(dephasing, decay)
        for name, value in (
            ("energies", energies), ("dipoles", dipoles), ("dephasing", dephasing),
            ("decay", decay), ("emitting", emitting), ("labels", labels),
        ):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def size(self) -> int:
        """Число уровней."""
        return self.energies.size

    @property
    def transitions(self) -> np.ndarray:
        """Матрица частот переходов ω_ab = ε_a − ε_b."""
        return self.energies[:, None] - self.energies[None, :]

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    @property
    def dipole_operator(self) -> np.ndarray:
        return self.dipoles.astype(complex)

    def ground_state(self) -> np.ndarray:
        """ρ = |g⟩⟨g|."""
        rho = np.zeros((self.size, self.size), dtype=complex)
        rho[self.ground, self.ground] = 1.0
        return rho

    def manifolds(self) -> Dict[int, int]:
        """
        Номер многообразия (число возбуждений) каждого уровня.

        Считается обходом в ширину по ненулевым дипольным связям от
        основного состояния; недостижимые уровни получают -1.
        """
        result = {a: -1 for a in range(self.size)}
        result[self.ground] = 0
        queue = deque([self.ground])
        while queue:
            a = queue.popleft()
            for b in np.flatnonzero(self.dipoles[a]):
                b = int(b)
                if result[b] < 0:
                    result[b] = result[a] + 1
                    queue.append(b)
        return result

    def has_doubly_excited(self) -> bool:
        return any(m >= 2 for m in self.manifolds().values())

    def population_generator(self) -> np.ndarray:
        """
        Матрица K уравнения населённостей dP/dt = K·P.

        K_aa = −Γ_a, K_ga = Γ_a: распавшаяся населённость приходит в |g⟩,
        поэтому столбцы K суммируются в ноль.
        """
        generator = np.diag(-self.decay)
        generator[self.ground] += self.decay
        return generator

    def population_propagator(self, delay) -> np.ndarray:
        """
        exp(K·t) для задержки t (скаляр или массив), форма (..., d, d).

        Формула: P_aa = e^{−Γ_a t}, P_ga = 1 − e^{−Γ_a t}, P_gg = 1
        """
        delay = np.asarray(delay, dtype=float)
        survived = np.exp(-np.multiply.outer(delay, self.decay))
        propagator = survived[..., None, :] * np.eye(self.size)
        propagator[..., self.ground, :] += 1.0 - survived
        return propagator

    def undamped_levels(self) -> Tuple[int, ...]:
        """
        Возбуждённые уровни с дипольной связью с |g⟩ и Γ_a = 0.

        Их населённость второго порядка не релаксирует: отклик на
        нулевой частоте Ω₂ = 0 для них не определён.
        """
        coupled = np.flatnonzero(self.dipoles[self.ground])
        return tuple(int(a) for a in coupled if self.decay[a] == 0)

    def to_dict(self) -> dict:
        """Описание системы для манифеста запуска."""
        return {
            "energies": self.energies.tolist(),
            "dipoles": self.dipoles.tolist(),
            "dephasing": self.dephasing.tolist(),
            "decay": self.decay.tolist(),
            "ground": self.ground,
            "emitting": list(self.emitting),
            "labels": list(self.labels),
        }


@dataclass(frozen=True)
class SusceptibilityQuery:
    """Запрос χ: порядок, частоты ω₁..ω_n и проекция."""
    order: int
    frequencies: Tuple[float, ...]
    projection: Projection = "full"

    def __post_init__(self):
        if self.order not in (1, 3):
            raise CombSpecError(f"susceptibility order must be 1 or 3, got {self.order}")
        freqs = tuple(float(w) for w in self.frequencies)
        if len(freqs) != self.order:
            raise CombSpecError(f"order {self.order} needs {self.order} frequencies")
        if not all(np.isfinite(freqs)):
            raise CombSpecError("susceptibility arguments must be finite")
        object.__setattr__(self, "frequencies", freqs)

    @property
    def output_frequency(self) -> float:
        """ω = ω₁ + ... + ω_n (первый аргумент χ равен −ω)."""
        return sum(self.frequencies)


def two_level(omega_eg: float, gamma: float, mu: float = 1.0, decay: float = 0.0) -> LevelSystem:
    """Двухуровневая система g–e."""
    return LevelSystem(
        energies=[0.0, omega_eg],
        dipoles=[[0.0, mu], [mu, 0.0]],
        dephasing=gamma,
        decay=[0.0, decay],
        labels=("g", "e"),
    )


def ladder(
    omega_eg: float,
    omega_fg: float,
    gamma: float,
    mu_eg: float = 1.0,
    mu_fe: float = 1.0,
    decay: Sequence[float] = (0.0, 0.0, 0.0),
) -> LevelSystem:
    """Трёхуровневая лестница g–e–f (переход g–f дипольно запрещён)."""
    return LevelSystem(
        energies=[0.0, omega_eg, omega_fg],
        dipoles=[[0.0, mu_eg, 0.0], [mu_eg, 0.0, mu_fe], [0.0, mu_fe, 0.0]],
        dephasing=gamma,
        decay=list(decay),
        labels=("g", "e", "f"),
    )


def random_system(size: int, seed: int = 0) -> LevelSystem:
    """Случайная система для проверки тождеств (энергии 1..10, γ 0.5..1.5)."""
    rng = np.random.default_rng(seed)
    energies = np.concatenate([[0.0], np.sort(rng.uniform(1.0, 10.0, size - 1))])
    dipoles = rng.normal(size=(size, size))
    dipoles = np.triu(dipoles, 1)
    dipoles = dipoles + dipoles.T
    dephasing = rng.uniform(0.5, 1.5, size=(size, size))
    dephasing = (dephasing + dephasing.T) / 2
    decay = np.concatenate([[0.0], rng.uniform(0.1, 0.5, size - 1)])
    return LevelSystem(energies=energies, dipoles=dipoles, dephasing=dephasing, decay=decay)
