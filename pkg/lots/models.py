"""
=============================================================================
MODELS.PY - Types de l'application Lots
=============================================================================

Types du modèle de taille de lot maximale :
    - BatchCoeffs : coefficients C0 (mise à l'échelle) et C1 (coefficient MoE)
    - ResiduLot : une observation confrontée à sa prédiction
    - CalibrationReport : résultat d'une calibration

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from catalogue.validation import exiger_fraction, exiger_positif

if TYPE_CHECKING:
    from catalogue.models import BatchObservation


@dataclass(frozen=True)
class BatchCoeffs:
    """
    Coefficients du modèle de taille de lot maximale.

    Attributs:
        c0 (float): Coefficient de mise à l'échelle, > 0
        c1 (float): Coefficient MoE, dans [0, 1]
    """
    c0: float
    c1: float

    def __post_init__(self):
        exiger_positif('c0', self.c0)
        exiger_fraction('c1', self.c1)


@dataclass(frozen=True)
class ResiduLot:
    observation: BatchObservation
    predicted: int
    residual: int


@dataclass(frozen=True)
class CalibrationReport:
    """
    Résultat de calibrate_batch_coeffs.

    Attributs:
        coeffs (BatchCoeffs): Coefficients retenus
        residuals (tuple[ResiduLot]): residual = predicted - observed
        max_abs_residual (int): max |residual|
        exact_matches (int): Nombre d'observations reproduites exactement
    """
    coeffs: BatchCoeffs
    residuals: tuple[ResiduLot, ...]
    max_abs_residual: int
    exact_matches: int

    @property
    def score(self):
        """Somme des |résidus| (critère minimisé)."""
        return sum(abs(r.residual) for r in self.residuals)
