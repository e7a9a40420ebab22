"""
=============================================================================
MODELS.PY - Modèles de l'application Catalogue
=============================================================================

Ce fichier définit le vocabulaire commun de l'estimateur : GPU, modèles
de langage, jeux de données et mesures. Tous les types sont des
dataclasses immuables : un catalogue chargé peut être partagé en lecture
entre plusieurs appelants.

Types :
    - GpuSpec         : mémoire, crêtes de calcul/bande passante, prix horaire
    - ModelSpec       : taille, mémoire résidente, forme MoE, coefficients
    - DatasetSpec     : nombre de requêtes et longueur médiane des séquences
    - ProfileSample   : une mesure (taille de lot, sparsité) -> débit
    - BatchObservation: une taille de lot maximale observée
    - Catalog         : l'ensemble, avec recherche par nom

Unités : GiB, tokens, requêtes/seconde, USD/heure, secondes.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
from dataclasses import dataclass, field, replace

from debit.models import Forme
from lots.models import BatchCoeffs

from .exceptions import ReferenceManquante
from .validation import (
    exiger, exiger_entier, exiger_positif, exiger_sparsite,
)


def _exiger_nom(valeur):
    exiger(isinstance(valeur, str) and valeur.strip() != '', 'name', "nom vide")


@dataclass(frozen=True)
class GpuSpec:
    """
    Modèle représentant un GPU louable.

    Attributs:
        name (str): Identifiant unique dans le catalogue
        memory_gib (float): Capacité mémoire du GPU
        hourly_price_usd (float | None): Prix de location horaire
        peak_compute_tflops (float | None): Crête de calcul (synthèse uniquement)
        mem_bandwidth_gbs (float | None): Bande passante (synthèse uniquement)
    """
    name: str
    memory_gib: float
    hourly_price_usd: float | None = None
    peak_compute_tflops: float | None = None
    mem_bandwidth_gbs: float | None = None

    def __post_init__(self):
        _exiger_nom(self.name)
        exiger_positif('memory_gib', self.memory_gib)
        for champ in ('hourly_price_usd', 'peak_compute_tflops', 'mem_bandwidth_gbs'):
            valeur = getattr(self, champ)
            if valeur is not None:
                exiger_positif(champ, valeur)


@dataclass(frozen=True)
class ModelSpec:
    """
    Modèle représentant un LLM (éventuellement MoE).

    Attributs:
        name (str): Identifiant unique
        param_count (int): Nombre de paramètres
        resident_memory_gib (float): Mémoire occupée par le modèle (model_mem)
        num_layers (int): Nombre de couches
        num_moe_layers (int): Nombre de couches MoE (<= num_layers)
        num_experts (int): Nombre d'experts E
        default_top_k (int): Experts activés par défaut k (1 <= k <= E)
        batch_coeffs (BatchCoeffs | None): Coefficients calibrés du modèle de lot
        throughput_coeffs (dict): (dataset, gpu, forme) -> ThroughputCoeffs
        published_batch_coeffs (BatchCoeffs | None): Valeurs publiées,
            conservées pour mémoire mais jamais utilisées pour prédire

    Note:
        Le dictionnaire throughput_coeffs ne doit pas être modifié en
        place : with_throughput_coeffs() retourne un nouveau ModelSpec.
    """
    name: str
    param_count: int
    resident_memory_gib: float
    num_layers: int
    num_moe_layers: int
    num_experts: int
    default_top_k: int
    batch_coeffs: BatchCoeffs | None = None
    throughput_coeffs: dict = field(default_factory=dict)
    published_batch_coeffs: BatchCoeffs | None = None

    def __post_init__(self):
        _exiger_nom(self.name)
        exiger_entier('param_count', self.param_count, minimum=1)
        exiger_positif('resident_memory_gib', self.resident_memory_gib)
        exiger_entier('num_layers', self.num_layers, minimum=1)
        exiger_entier('num_moe_layers', self.num_moe_layers, minimum=0)
        exiger(self.num_moe_layers <= self.num_layers, 'num_moe_layers',
               f"{self.num_moe_layers} couches MoE pour {self.num_layers} couches")
        exiger_entier('num_experts', self.num_experts, minimum=1)
        exiger_entier('default_top_k', self.default_top_k, minimum=1)
        exiger(self.default_top_k <= self.num_experts, 'default_top_k',
               f"k={self.default_top_k} dépasse E={self.num_experts}")
        for cle in self.throughput_coeffs:
            exiger(isinstance(cle, tuple) and len(cle) == 3 and cle[2] in Forme.values,
                   'throughput_coeffs', f"clé invalide {cle!r}, attendu (dataset, gpu, forme)")

    def coeffs_debit(self, dataset, gpu, form=None):
        """
        Retourne les coefficients de débit d'un couple (dataset, gpu).

        Sans forme demandée, la forme puissance est préférée si elle existe.
        Retourne None si le couple n'est pas calibré.
        """
        formes = [form] if form else [Forme.POWER, Forme.LITERAL]
        for forme in formes:
            coeffs = self.throughput_coeffs.get((dataset, gpu, str(forme)))
            if coeffs is not None:
                return coeffs
        return None

    def with_batch_coeffs(self, coeffs):
        return replace(self, batch_coeffs=coeffs)

    def with_throughput_coeffs(self, dataset, gpu, coeffs):
        table = dict(self.throughput_coeffs)
        table[(dataset, gpu, str(coeffs.form))] = coeffs
        return replace(self, throughput_coeffs=table)


@dataclass(frozen=True)
class DatasetSpec:
    """
    Jeu de données de fine-tuning.

    Attributs:
        name (str): Identifiant unique
        num_queries (int): Nombre de requêtes (prompt + réponse)
        median_seq_len (int): Longueur médiane des séquences, en tokens
        task_tag (str): Type de tâche (common-sense, math, ...)
    """
    name: str
    num_queries: int
    median_seq_len: int
    task_tag: str = ''

    def __post_init__(self):
        _exiger_nom(self.name)
        exiger_entier('num_queries', self.num_queries, minimum=1)
        exiger_entier('median_seq_len', self.median_seq_len, minimum=1)


@dataclass(frozen=True)
class ProfileSample:
    """Une mesure de débit pour un triplet (GPU, modèle, jeu de données)."""
    gpu: str
    model: str
    dataset: str
    sparsity: float
    batch_size: int
    throughput_qps: float

    def __post_init__(self):
        exiger_sparsite('sparsity', self.sparsity)
        exiger_entier('batch_size', self.batch_size, minimum=1)
        exiger_positif('throughput_qps', self.throughput_qps)

    @property
    def cle(self):
        return self.gpu, self.model, self.dataset


@dataclass(frozen=True)
class BatchObservation:
    """Une taille de lot maximale observée sur un GPU réel."""
    gpu: str
    model: str
    dataset: str
    sparsity: float
    observed_max_bs: int

    def __post_init__(self):
        exiger_sparsite('sparsity', self.sparsity)
        exiger_entier('observed_max_bs', self.observed_max_bs, minimum=0)


@dataclass(frozen=True)
class Catalog:
    """
    Catalogue complet chargé depuis un fichier JSON.

    Les listes sont des tuples dans l'ordre du fichier ; les recherches
    par nom lèvent ReferenceManquante si l'entité est absente.
    """
    gpus: tuple = ()
    models: tuple = ()
    datasets: tuple = ()
    samples: tuple = ()
    batch_observations: tuple = ()

    def _chercher(self, collection, entite, nom):
        for element in collection:
            if element.name == nom:
                return element
        raise ReferenceManquante(entite, nom)

    def gpu(self, nom):
        return self._chercher(self.gpus, 'GPU', nom)

    def model(self, nom):
        return self._chercher(self.models, 'Modèle', nom)

    def dataset(self, nom):
        return self._chercher(self.datasets, 'Jeu de données', nom)

    def with_model(self, modele):
        """Retourne un catalogue où le modèle de même nom est remplacé."""
        self.model(modele.name)
        models = tuple(modele if m.name == modele.name else m for m in self.models)
        return replace(self, models=models)

    def observations_for(self, nom_modele):
        return [o for o in self.batch_observations if o.model == nom_modele]
