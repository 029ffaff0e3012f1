"""Computation modules: fields, susceptibilities, signals, lock-in, inversion, oracle."""
from .aom import AomExperiment
from .comb_signals import CombSignals
from .combfield import CombField
from .inversion import Inversion
from .lockin import LockIn
from .material import Material
from .oracle import Oracle

__all__ = ['AomExperiment', 'CombSignals', 'CombField', 'Inversion', 'LockIn', 'Material', 'Oracle']
