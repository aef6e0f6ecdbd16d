"""Exact Fedosov star products of Weyl and Wick type on chart models."""

from .fedosov import FedosovContext, StarSeries
from .galg import Caps, PairingTensor, Section
from .geometry import ChartModel, flat_kaehler, flat_symplectic, fubini_study, poincare_disc, validate
from .jets import BudgetUnderflow, Frame, Jet, JetError, Scalar, SingularityError, StructuralError

__all__ = [
    "BudgetUnderflow", "Caps", "ChartModel", "FedosovContext", "Frame", "Jet", "JetError",
    "PairingTensor", "Scalar", "Section", "SingularityError", "StarSeries", "StructuralError",
    "flat_kaehler", "flat_symplectic", "fubini_study", "poincare_disc", "validate",
]
