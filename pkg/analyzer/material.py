"""Sum-over-states susceptibilities of few-level systems."""
from itertools import permutations

import numpy as np

from models.errors import CombSpecError
from models.system import LevelSystem, Projection, SusceptibilityQuery


class Material:
    """
    Восприимчивости χ⁽¹⁾, χ⁽³⁾ и их проекции χ_c.

    Цепочка Лиувилля: ρ⁽⁰⁾ = |g⟩⟨g|, ρ⁽ᵏ⁾ = [V̂, ρ⁽ᵏ⁻¹⁾] ∘ G(Ω_k),
    G_ab(Ω) = 1/(ω_ab − Ω − iγ_ab), Ω_k = ω₁ + ... + ω_k.
    χ = Tr(V̂ρ⁽ⁿ⁾), χ_c = (V̂ρ⁽ⁿ⁾)_cc.
    """

    @staticmethod
    def _as_rows(frequencies, order: int) -> np.ndarray:
        rows = np.asarray(frequencies, dtype=float).reshape(-1, order)
        if not np.all(np.isfinite(rows)):
            raise CombSpecError("susceptibility arguments must be finite")
        return rows

    @staticmethod
    def density_chain(system: LevelSystem, rows: np.ndarray) -> np.ndarray:
        """
        ρ⁽ⁿ⁾ для каждой строки частот (ω₁, ..., ω_n), форма (N, d, d).

        Когерентности: ρ_ab = [V̂, ρ]_ab/(ω_ab − Ω − iγ_ab). Населённости
        возбуждённых уровней: ρ_aa = [V̂, ρ]_aa/(−Ω − iΓ_a); распад идёт в
        |g⟩, поэтому ρ_gg = −Σ_{a≠g} ρ_aa (поправки бесследовые).

        Raises:
            CombSpecError: знаменатель равен нулю при ненулевом коммутаторе
        """
        count, order = rows.shape
        v = system.dipole_operator
        g = system.ground
        excited = [a for a in range(system.size) if a != g]
        rho = np.broadcast_to(system.ground_state(), (count, system.size, system.size)).copy()
        cumulative = np.cumsum(rows, axis=1)
        for k in range(order):
            commutator = v @ rho - rho @ v
            denominator = (
                system.transitions[None, :, :]
                - cumulative[:, k, None, None]
                - 1j * system.dephasing[None, :, :]
            )
            singular = (denominator == 0) & (commutator != 0)
            singular[:, g, g] = False
            if np.any(singular):
                row, a, b = (int(i) for i in np.argwhere(singular)[0])
                rate = "population decay" if a == b else "dephasing"
                raise CombSpecError(
                    f"zero resonance denominator for ({system.labels[a]}, {system.labels[b]}) "
                    f"at arguments {rows[row].tolist()}; set a positive {rate} rate"
                )
            rho = np.divide(
                commutator, denominator,
                out=np.zeros_like(commutator), where=denominator != 0,
            )
            rho[:, g, g] = -rho[:, excited, excited].sum(axis=1)
        return rho

    @staticmethod
    def project(system: LevelSystem, rho: np.ndarray, projection: Projection) -> np.ndarray:
        """Свёртка V̂ρ с проектором: след, |g⟩⟨g|, Σ|e⟩⟨e| или |c⟩⟨c|."""
        vrho = system.dipole_operator @ rho
        diagonal = np.diagonal(vrho, axis1=-2, axis2=-1)
        if projection == "full":
            return diagonal.sum(axis=-1)
        if projection == "ground":
            return diagonal[..., system.ground]
        if projection == "emitting":
            return diagonal[..., list(system.emitting)].sum(axis=-1)
        if isinstance(projection, (int, np.integer)) and 0 <= projection < system.size:
            return diagonal[..., int(projection)]
        raise CombSpecError(f"unknown projection {projection!r}")

    @staticmethod
    def ordered(system: LevelSystem, rows, order: int, projection: Projection = "full") -> np.ndarray:
        """χ для одного порядка взаимодействий (без симметризации)."""
        rows = Material._as_rows(rows, order)
        return Material.project(system, Material.density_chain(system, rows), projection)

    @staticmethod
    def chi1(system: LevelSystem, omega, projection: Projection = "full"):
        """
        Линейная восприимчивость χ⁽¹⁾(−ω; ω).

        Формула: χ = Σ_a μ_ga²·[1/(ω_ag − ω − iγ_ag) + 1/(ω_ag + ω + iγ_ag)]
        """
        shape = np.shape(omega)
        values = Material.ordered(system, np.ravel(omega), 1, projection)
        return values.reshape(shape) if shape else complex(values[0])

    @staticmethod
    def chi3_batch(system: LevelSystem, rows, projection: Projection = "full") -> np.ndarray:
        """
        χ⁽³⁾ для строк (ω₁, ω₂, ω₃), симметризованная по 6 перестановкам.
        """
        rows = Material._as_rows(rows, 3)
        total = np.zeros(rows.shape[0], dtype=complex)
        for perm in permutations(range(3)):
            total += Material.ordered(system, rows[:, perm], 3, projection)
        return total / 6

    @staticmethod
    def chi3(system: LevelSystem, omega3, omega2, omega1, projection: Projection = "full"):
        """
        Нелинейная восприимчивость χ⁽³⁾(−ω; ω₃, ω₂, ω₁), ω = ω₁ + ω₂ + ω₃.
        """
        w3, w2, w1 = np.broadcast_arrays(
            np.asarray(omega3, dtype=float), np.asarray(omega2, dtype=float), np.asarray(omega1, dtype=float)
        )
        rows = np.stack([w1.ravel(), w2.ravel(), w3.ravel()], axis=1)
        values = Material.chi3_batch(system, rows, projection)
        return values.reshape(w1.shape) if w1.shape else complex(values[0])

    @staticmethod
    def evaluate(system: LevelSystem, query: SusceptibilityQuery) -> complex:
        """χ по запросу."""
        if query.order == 1:
            return Material.chi1(system, query.frequencies[0], query.projection)
        w1, w2, w3 = query.frequencies
        return Material.chi3(system, w3, w2, w1, query.projection)

    @staticmethod
    def projection_sum_check(system: LevelSystem, query: SusceptibilityQuery) -> float:
        """
        Невязка правила сумм |Σ_{c≠g} χ_c + χ_g − χ|.
        """
        full = Material.evaluate(system, query)
        parts = sum(
            Material.evaluate(system, SusceptibilityQuery(query.order, query.frequencies, c))
            for c in range(system.size)
        )
        return float(abs(parts - full))
