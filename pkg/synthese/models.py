"""
=============================================================================
MODELS.PY - Types de l'application Synthèse
=============================================================================

Types :
    - RooflineParams   : paramètres du générateur de débit (modèle roofline)
    - StageShares      : parts des étapes d'un pas d'entraînement
    - StageBreakdown   : temps par étape et par type de couche
    - PointSequence    : une ligne de l'étude de sensibilité à seq_len

Unités : débits crête en TFLOP/s et GB/s (puissances de 10), volumes
en octets, temps en secondes.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
from dataclasses import dataclass

from catalogue.validation import (
    exiger, exiger_entier, exiger_fraction, exiger_positif, exiger_positif_ou_nul,
)

TOLERANCE_PARTS = 1e-9


@dataclass(frozen=True)
class RooflineParams:
    """
    Paramètres du modèle roofline d'un pas de fine-tuning.

    Attributs:
        peak_compute_tflops (float): Calcul crête du GPU
        mem_bandwidth_gbs (float): Bande passante mémoire
        weight_bytes (float): Octets de poids lus à chaque pas
        flops_per_token (float): FLOPs par token du modèle dense
        activation_bytes_per_token (float): Trafic d'activations par token
        seq_len (int): Tokens par requête
        moe_flop_fraction (float): Part des FLOPs dans les experts, [0, 1]
        fixed_overhead_s (float): Coût fixe par pas (lancement, synchronisation)
    """
    peak_compute_tflops: float
    mem_bandwidth_gbs: float
    weight_bytes: float
    flops_per_token: float
    activation_bytes_per_token: float
    seq_len: int
    moe_flop_fraction: float
    fixed_overhead_s: float = 0.0

    def __post_init__(self):
        exiger_positif('peak_compute_tflops', self.peak_compute_tflops)
        exiger_positif('mem_bandwidth_gbs', self.mem_bandwidth_gbs)
        exiger_positif_ou_nul('weight_bytes', self.weight_bytes)
        exiger_positif('flops_per_token', self.flops_per_token)
        exiger_positif_ou_nul('activation_bytes_per_token', self.activation_bytes_per_token)
        exiger_entier('seq_len', self.seq_len, minimum=1)
        exiger_fraction('moe_flop_fraction', self.moe_flop_fraction)
        exiger_positif_ou_nul('fixed_overhead_s', self.fixed_overhead_s)

    @property
    def flops_par_seconde(self):
        return self.peak_compute_tflops * 1e12

    @property
    def octets_par_seconde(self):
        return self.mem_bandwidth_gbs * 1e9


@dataclass(frozen=True)
class StageShares:
    """
    Répartition du temps d'un pas entre forward, backward et optimiseur.

    moe_layer_share est la part de forward + backward passée dans les
    couches MoE. En fine-tuning complet, le backward dure au moins autant
    que le forward.
    """
    forward: float
    backward: float
    optimizer: float
    moe_layer_share: float
    full_finetuning: bool = False

    def __post_init__(self):
        for champ in ('forward', 'backward', 'optimizer', 'moe_layer_share'):
            exiger_fraction(champ, getattr(self, champ))
        somme = self.forward + self.backward + self.optimizer
        exiger(abs(somme - 1.0) <= TOLERANCE_PARTS, 'forward',
               f"forward + backward + optimizer = {somme!r}, 1 attendu")
        if self.full_finetuning:
            exiger(self.backward >= self.forward, 'backward',
                   "le backward d'un fine-tuning complet ne peut pas être plus court que le forward")


@dataclass(frozen=True)
class StageBreakdown:
    """Temps d'un pas (secondes) par étape et par type de couche."""
    forward_s: float
    backward_s: float
    optimizer_s: float
    moe_layers_s: float
    other_layers_s: float
    total_s: float

    @property
    def etapes(self):
        return [('forward', self.forward_s), ('backward', self.backward_s),
                ('optimizer', self.optimizer_s)]

    @property
    def couches(self):
        return [('moe', self.moe_layers_s), ('other', self.other_layers_s),
                ('optimizer', self.optimizer_s)]


@dataclass(frozen=True)
class PointSequence:
    seq_len: int
    max_batch: int
    throughput_qps: float
    tokens_per_batch: int
