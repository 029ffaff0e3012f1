"""Lock-in amplifier configuration."""
import math
import warnings
from dataclasses import dataclass, replace

from models.errors import CombSpecError, CombSpecWarning


@dataclass(frozen=True)
class LockInConfig:
    """Параметры опорного сигнала и фильтра синхронного детектора."""
    phi21: float  # φ₂ − φ₁, рад/с
    phi43: float  # φ₄ − φ₃, рад/с
    wbar21: float = 0.0  # ω̄₂₁ для понижения частоты по t₁
    wbar43: float = 0.0  # ω̄₄₃ для понижения частоты по t₃
    theta: float = 0.0
    tau: float = 0.2  # τ_LI, с

    def __post_init__(self):
        if not self.tau > 0:
            raise CombSpecError("lock-in time constant must be > 0")
        if not any(math.isclose(self.theta, ref, abs_tol=1e-12) for ref in (0.0, math.pi / 2)):
            warnings.warn(f"lock-in phase theta={self.theta} is neither 0 nor pi/2", CombSpecWarning)

    def with_theta(self, theta: float) -> "LockInConfig":
        return replace(self, theta=theta)

    def beat(self, sign: int) -> float:
        """Частота опоры по t′: φ₄₃ ± φ₂₁."""
        return self.phi43 + sign * self.phi21
