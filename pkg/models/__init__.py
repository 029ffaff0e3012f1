"""Data models module."""
from .comb import AomPulseTrainSpec, CombSpec, CombTooth, FrequencyGrid
from .experiment import ExperimentConfig
from .inversion import FoldingSolution, FoldingSystem, LinearInversion
from .lockin import LockInConfig
from .pathway import DelayGrid, PathwaySignature, ShotRecord
from .propagation import PropagationRun, Trajectories
from .signal import Spectrum, TimeSeries
from .system import LevelSystem, SusceptibilityQuery, ladder, random_system, two_level

__all__ = [
    'AomPulseTrainSpec', 'CombSpec', 'CombTooth', 'FrequencyGrid',
    'ExperimentConfig',
    'FoldingSolution', 'FoldingSystem', 'LinearInversion',
    'LockInConfig',
    'DelayGrid', 'PathwaySignature', 'ShotRecord',
    'PropagationRun', 'Trajectories',
    'Spectrum', 'TimeSeries',
    'LevelSystem', 'SusceptibilityQuery', 'ladder', 'random_system', 'two_level',
]
