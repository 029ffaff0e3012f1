"""Export module."""
from .export import Exporter

__all__ = ['Exporter']