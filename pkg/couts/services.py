"""
=============================================================================
SERVICES.PY - Estimation du coût d'un fine-tuning
=============================================================================

Ce module combine le modèle de lot, le modèle de débit et le prix horaire
des GPU pour estimer la durée et le coût d'une campagne de fine-tuning.

Fonctions principales :
    - estimate_from_throughput : Arithmétique durée/coût à partir d'un débit
    - estimate_cost            : Estimation complète pour un GPU
    - compare_gpus             : Classement de plusieurs GPU par coût
    - scale_by_dataset         : Extrapolation à un jeu de données plus grand

Charge de travail :
    N = requêtes x époques (requêtes-époques), débit en requêtes/seconde.
    Aucun arrondi de facturation (à la minute, à l'heure) n'est appliqué.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import logging
from dataclasses import replace

from catalogue.exceptions import (
    CoefficientsManquants, ErreurEstimateur, ErreurValidation, HorsDomaine, PrixManquant,
)
from catalogue.validation import exiger_entier, exiger_positif
from debit.services import predict_throughput
from lots.services import predict_max_batch

from .models import CostEstimate

logger = logging.getLogger(__name__)


def estimate_from_throughput(max_batch_size, throughput_qps, hourly_price_usd, query_epochs):
    """
    Durée et coût d'une charge de query_epochs requêtes à un débit donné.

    Exemple:
        >>> estimate_from_throughput(17, 4.90, 2.1, 150_000).total_usd
        17.857...
    """
    exiger_positif('throughput_qps', throughput_qps)
    exiger_entier('query_epochs', query_epochs, minimum=1)
    wall_seconds = query_epochs / throughput_qps
    return CostEstimate(
        max_batch_size=max_batch_size,
        throughput_qps=throughput_qps,
        wall_seconds=wall_seconds,
        total_usd=wall_seconds / 3600.0 * hourly_price_usd,
        hourly_price_usd=hourly_price_usd,
    )


def estimate_cost(catalog, query):
    """
    Estime la durée et le coût d'un fine-tuning.

    Étapes :
        1. Taille de lot maximale (modèle de lot, longueur médiane du jeu)
        2. Débit à cette taille de lot (modèle de débit du couple jeu/GPU)
        3. Durée = N / débit, coût = durée x prix horaire

    Args:
        catalog (Catalog): Catalogue avec coefficients calibrés et prix
        query (CostQuery): Demande d'estimation

    Returns:
        CostEstimate

    Raises:
        ReferenceManquante: nom inconnu dans le catalogue
        CoefficientsManquants: modèle ou couple (jeu, GPU) non calibré
        PrixManquant: GPU sans prix horaire
        HorsDomaine: le modèle ne tient pas en mémoire ou débit prédit <= 0
    """
    modele = catalog.model(query.model)
    jeu = catalog.dataset(query.dataset)
    gpu = catalog.gpu(query.gpu)

    if modele.batch_coeffs is None:
        raise CoefficientsManquants(
            f"modèle '{modele.name}' sans coefficients de taille de lot (lancer calibrate_batch)")
    coeffs_debit = modele.coeffs_debit(jeu.name, gpu.name, query.form)
    if coeffs_debit is None:
        raise CoefficientsManquants(
            f"couple non calibré : modèle '{modele.name}', jeu '{jeu.name}', GPU '{gpu.name}' "
            f"(lancer fit --save)")
    if gpu.hourly_price_usd is None:
        raise PrixManquant(f"GPU '{gpu.name}' sans prix horaire")

    seq_len = query.seq_len_override or jeu.median_seq_len
    taille_lot = predict_max_batch(modele.batch_coeffs, gpu.memory_gib,
                                   modele.resident_memory_gib, seq_len, query.sparsity)
    if taille_lot < 1:
        raise HorsDomaine(
            f"'{modele.name}' ne laisse aucune place pour un lot sur '{gpu.name}' "
            f"({gpu.memory_gib} GiB, séquences de {seq_len} tokens)")

    debit = predict_throughput(coeffs_debit, taille_lot, query.sparsity)
    if debit <= 0:
        raise HorsDomaine(
            f"débit prédit {debit:.4g} <= 0 pour '{modele.name}' sur '{gpu.name}' "
            f"(lot {taille_lot}) : coefficients hors domaine")

    requetes = query.override_queries or jeu.num_queries
    estimation = estimate_from_throughput(taille_lot, debit, gpu.hourly_price_usd,
                                          requetes * query.epochs)
    logger.info(
        f"{modele.name}/{jeu.name} sur {gpu.name} : lot {taille_lot}, "
        f"{debit:.4g} req/s, {estimation.total_usd:.2f} USD"
    )
    return estimation


def compare_gpus(catalog, query, gpus):
    """
    Classe des GPU du moins cher au plus cher pour une même demande.

    Args:
        catalog (Catalog): Catalogue
        query (CostQuery): Demande modèle ; son champ gpu est ignoré
        gpus (list[str]): GPU à comparer

    Returns:
        list[tuple[str, CostEstimate]]: Tri par coût, puis durée, puis nom

    Raises:
        ErreurValidation: liste de GPU vide
        Toute erreur d'estimate_cost, avec le nom du GPU en tête du message
    """
    gpus = list(gpus)
    if not gpus:
        raise ErreurValidation('gpus', "aucun GPU à comparer")

    resultats = []
    for nom in gpus:
        try:
            resultats.append((nom, estimate_cost(catalog, replace(query, gpu=nom))))
        except ErreurEstimateur as erreur:
            erreur.args = (f"GPU '{nom}' : {erreur}",)
            raise

    resultats.sort(key=lambda r: (r[1].total_usd, r[1].wall_seconds, r[0]))
    return resultats


def scale_by_dataset(estimate, original_queries, new_queries):
    """
    Extrapole une estimation à un nombre de requêtes différent.

    La taille de lot et le débit sont inchangés ; durée et coût sont
    multipliés par new_queries / original_queries.
    """
    exiger_entier('original_queries', original_queries, minimum=1)
    exiger_entier('new_queries', new_queries, minimum=1)
    rapport = new_queries / original_queries
    return replace(
        estimate,
        wall_seconds=estimate.wall_seconds * rapport,
        total_usd=estimate.total_usd * rapport,
    )
