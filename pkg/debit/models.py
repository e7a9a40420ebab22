"""
=============================================================================
MODELS.PY - Types de l'application Débit
=============================================================================

Types du modèle de débit logarithmique :
    - Forme : forme littérale ou forme "puissance" de l'équation
    - ThroughputCoeffs : coefficients C2, C3, C4
    - ResiduDebit / FitReport : résultat d'un ajustement

Forme littérale : T = C2 * ln(bs / (s * C3)) + C4
Forme puissance : T = C2 * ln(bs / s^C3) + C4

Dans la forme littérale, C3 et C4 ne se distinguent que par une
ordonnée à l'origine commune : l'ajustement fixe donc C3 = 1.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from django.db import models

from catalogue.validation import exiger, exiger_fini, exiger_positif

if TYPE_CHECKING:
    from catalogue.models import ProfileSample


class Forme(models.TextChoices):
    LITERAL = 'literal', 'Littérale'
    POWER = 'power', 'Puissance'


@dataclass(frozen=True)
class ThroughputCoeffs:
    """
    Coefficients du modèle de débit.

    Attributs:
        c2 (float): Coefficient de mise à l'échelle (> 0 pour un ajustement
            physiquement cohérent, sans être exigé)
        c3 (float): Coefficient d'atténuation MoE, > 0
        c4 (float): Ordonnée à l'origine (débit à bs = 1 en forme puissance)
        form (Forme): Forme de l'équation
    """
    c2: float
    c3: float
    c4: float
    form: Forme = Forme.LITERAL

    def __post_init__(self):
        exiger_fini('c2', self.c2)
        exiger_positif('c3', self.c3)
        exiger_fini('c4', self.c4)
        exiger(self.form in Forme.values, 'form',
               f"forme inconnue {self.form!r} (attendu : {', '.join(Forme.values)})")
        # Normalise une chaîne brute en membre de l'énumération
        object.__setattr__(self, 'form', Forme(self.form))


@dataclass(frozen=True)
class ResiduDebit:
    sample: ProfileSample
    predicted: float
    residual: float


@dataclass(frozen=True)
class FitReport:
    """
    Résultat de fit_throughput.

    Attributs:
        coeffs (ThroughputCoeffs): Coefficients ajustés
        rmse (float): Racine de l'erreur quadratique moyenne (requêtes/s)
        residuals (tuple[ResiduDebit]): residual = predicted - measured
        sample_count (int): Nombre de mesures ajustées
    """
    coeffs: ThroughputCoeffs
    rmse: float
    residuals: tuple[ResiduDebit, ...]
    sample_count: int

    @property
    def cle(self):
        """(gpu, model, dataset) commun aux mesures ajustées."""
        premier = self.residuals[0].sample
        return premier.gpu, premier.model, premier.dataset
