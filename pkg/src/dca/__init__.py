"""Dendritic cell algorithm for host anomaly detection."""

from .core import (
    Antigen,
    CellState,
    CellStateError,
    Context,
    DendriticCell,
    PresentedAntigen,
    SignalVector,
    ValidationError,
    WeightMatrix,
)
from .tissue import Tissue, TissueConfig

__version__ = "0.1.0"
