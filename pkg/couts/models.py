"""
=============================================================================
MODELS.PY - Types de l'application Coûts
=============================================================================

Types :
    - CostQuery    : une demande d'estimation (modèle, jeu, GPU, sparsité, époques)
    - CostEstimate : taille de lot, débit, durée et coût prédits

Invariants de CostEstimate :
    wall_seconds = requêtes x époques / débit
    total_usd    = wall_seconds / 3600 x prix horaire

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
from dataclasses import dataclass

from catalogue.validation import exiger, exiger_entier, exiger_positif_ou_nul, exiger_sparsite


@dataclass(frozen=True)
class CostQuery:
    """
    Demande d'estimation de coût.

    Attributs:
        model, dataset, gpu (str): Noms dans le catalogue
        sparsity (float): Sparsité dans (0, 1]
        epochs (int): Nombre d'époques >= 1
        override_queries (int | None): Remplace le nombre de requêtes du jeu
        seq_len_override (int | None): Remplace la longueur médiane des séquences
        form (str | None): Forme des coefficients de débit à utiliser
            (par défaut : puissance si disponible, sinon littérale)
    """
    model: str
    dataset: str
    gpu: str
    sparsity: float
    epochs: int = 1
    override_queries: int | None = None
    seq_len_override: int | None = None
    form: str | None = None

    def __post_init__(self):
        exiger_sparsite('sparsity', self.sparsity)
        exiger_entier('epochs', self.epochs, minimum=1)
        if self.override_queries is not None:
            exiger_entier('override_queries', self.override_queries, minimum=1)
        if self.seq_len_override is not None:
            exiger_entier('seq_len_override', self.seq_len_override, minimum=1)


@dataclass(frozen=True)
class CostEstimate:
    """Estimation de durée et de coût d'un fine-tuning sur un GPU."""
    max_batch_size: int
    throughput_qps: float
    wall_seconds: float
    total_usd: float
    hourly_price_usd: float

    def __post_init__(self):
        exiger_entier('max_batch_size', self.max_batch_size, minimum=0)
        for champ in ('throughput_qps', 'wall_seconds', 'total_usd', 'hourly_price_usd'):
            exiger_positif_ou_nul(champ, getattr(self, champ))
        exiger(self.throughput_qps > 0 or self.wall_seconds == 0, 'throughput_qps',
               "débit nul pour une durée non nulle")

    @property
    def wall_hours(self):
        return self.wall_seconds / 3600.0
