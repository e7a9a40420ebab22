"""
=============================================================================
MODELS.PY - Types de l'application Routage
=============================================================================

Types de la simulation du routeur MoE (sélection top-k) :
    - RouterInput       : logits du routeur (tokens x experts) et k
    - TokenAssignment   : experts choisis pour un token et leurs poids
    - ExpertLoad        : répartition des affectations entre experts
    - ComparaisonCharge : écart entre deux répartitions (avant/après)

Les parts sont exprimées en pourcentage du total des affectations ;
la variance est la variance de population de ces pourcentages.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
from dataclasses import dataclass

import numpy as np

from catalogue.exceptions import ErreurValidation
from catalogue.validation import exiger, exiger_entier, exiger_fini


# Tolérance sur la somme des parts (en points de pourcentage)
TOLERANCE_PARTS = 1e-9


@dataclass(frozen=True, eq=False)
class RouterInput:
    """
    Logits produits par le routeur pour un lot de tokens.

    Attributs:
        logits (ndarray): Matrice num_tokens x num_experts de réels finis
        top_k (int): Experts activés par token, 1 <= k <= num_experts
    """
    logits: np.ndarray
    top_k: int

    def __post_init__(self):
        try:
            logits = np.array(self.logits, dtype=float)
        except (TypeError, ValueError):
            raise ErreurValidation('logits', "matrice de réels attendue") from None
        exiger(logits.ndim == 2, 'logits', f"matrice attendue, reçu {logits.ndim} dimension(s)")
        exiger(logits.shape[0] >= 1, 'logits', "au moins un token requis")
        exiger(logits.shape[1] >= 1, 'logits', "au moins un expert requis")
        exiger(bool(np.isfinite(logits).all()), 'logits', "logits non finis")
        exiger_entier('top_k', self.top_k, minimum=1)
        exiger(self.top_k <= logits.shape[1], 'top_k',
               f"k={self.top_k} dépasse le nombre d'experts ({logits.shape[1]})")
        logits.flags.writeable = False
        object.__setattr__(self, 'logits', logits)

    @property
    def num_tokens(self):
        return self.logits.shape[0]

    @property
    def num_experts(self):
        return self.logits.shape[1]


@dataclass(frozen=True)
class TokenAssignment:
    """Experts d'un token, par score décroissant, et poids de routage renormalisés."""
    experts: tuple[int, ...]
    weights: tuple[float, ...]


@dataclass(frozen=True)
class ExpertLoad:
    """
    Répartition des affectations entre experts.

    Attributs:
        counts (tuple[int]): Affectations par expert
        shares_pct (tuple[float]): Part de chaque expert (%), somme = 100
        variance_pct (float): Variance de population des parts
        imbalance_factor (float): Affectations max / affectations moyennes (>= 1)

    La variance n'est pas recalculée à la construction : une répartition
    mesurée ailleurs peut être saisie telle quelle pour comparaison.
    """
    counts: tuple[int, ...]
    shares_pct: tuple[float, ...]
    variance_pct: float
    imbalance_factor: float

    def __post_init__(self):
        exiger(len(self.counts) >= 1, 'counts', "au moins un expert requis")
        exiger(len(self.shares_pct) == len(self.counts), 'shares_pct',
               f"{len(self.counts)} parts attendues, {len(self.shares_pct)} reçues")
        for i, nombre in enumerate(self.counts):
            exiger_entier(f'counts[{i}]', nombre, minimum=0)
        for i, part in enumerate(self.shares_pct):
            exiger_fini(f'shares_pct[{i}]', part)
        exiger(abs(sum(self.shares_pct) - 100.0) <= TOLERANCE_PARTS, 'shares_pct',
               f"la somme des parts vaut {sum(self.shares_pct)!r}, 100 attendu")
        exiger_fini('variance_pct', self.variance_pct)
        exiger(self.variance_pct >= 0, 'variance_pct', "variance négative")
        exiger_fini('imbalance_factor', self.imbalance_factor)
        exiger(self.imbalance_factor >= 1 - 1e-12, 'imbalance_factor',
               f"doit être >= 1, reçu {self.imbalance_factor!r}")

    @property
    def num_experts(self):
        return len(self.counts)


@dataclass(frozen=True)
class ComparaisonCharge:
    """
    Écart entre deux répartitions (after - before).

    Attributs:
        variance_delta (float): Variation de la variance des parts
        share_deltas (tuple[float]): Variation de la part de chaque expert
        dominant_expert (int): Expert le plus sollicité dans la répartition after
    """
    variance_delta: float
    share_deltas: tuple[float, ...]
    dominant_expert: int
