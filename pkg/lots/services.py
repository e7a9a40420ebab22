"""
=============================================================================
SERVICES.PY - Modèle de taille de lot maximale
=============================================================================

Ce module prédit la plus grande taille de lot qui tient en mémoire GPU :

    Max_BSZ = floor( C0 * (GPU_mem - model_mem)
                     / (seq_len * ((1 - C1) + C1 * sparsity)) )

Fonctions principales :
    - predict_max_batch      : Évalue le modèle pour une configuration
    - calibrate_batch_coeffs : Trouve (C0, C1) à partir d'observations
    - project_max_batch      : Projette sur des capacités mémoire hypothétiques

Calibration :
    L'arrondi inférieur rend l'erreur constante par morceaux : pas de
    gradient exploitable. On parcourt donc une grille grossière de
    (C0, C1), puis une grille dix fois plus fine autour de la meilleure
    cellule. Critère : somme des |résidus| ; à égalité, plus petit résidu
    maximal, puis plus petit C0, puis plus petit C1.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import logging
import math

import numpy as np
from django.conf import settings

from catalogue.exceptions import ErreurCalibration
from catalogue.validation import exiger, exiger_fini, exiger_positif, exiger_sparsite

from .models import BatchCoeffs, CalibrationReport, ResiduLot

logger = logging.getLogger(__name__)


def _verifier_arguments(gpu_mem, model_mem, seq_len, sparsity):
    exiger_positif('gpu_mem', gpu_mem)
    exiger_fini('model_mem', model_mem)
    exiger(model_mem >= 0, 'model_mem', f"doit être >= 0, reçu {model_mem!r}")
    exiger(seq_len >= 1, 'seq_len', f"doit être >= 1, reçu {seq_len!r}")
    exiger_sparsite('sparsity', sparsity)


def predict_max_batch(coeffs, gpu_mem, model_mem, seq_len, sparsity):
    """
    Taille de lot maximale pour une configuration.

    Args:
        coeffs (BatchCoeffs): Coefficients calibrés
        gpu_mem (float): Mémoire du GPU (GiB)
        model_mem (float): Mémoire résidente du modèle (GiB)
        seq_len (int): Longueur de séquence (tokens)
        sparsity (float): Sparsité dans (0, 1]

    Returns:
        int: Taille de lot >= 0 ; 0 si le modèle ne laisse aucune mémoire libre

    Exemple:
        >>> predict_max_batch(BatchCoeffs(8, 0.93), 48, 23.35, 79, 1.0)
        2
    """
    _verifier_arguments(gpu_mem, model_mem, seq_len, sparsity)
    if gpu_mem <= model_mem:
        return 0
    c0, c1 = coeffs.c0, coeffs.c1
    return math.floor(c0 * (gpu_mem - model_mem) / (seq_len * ((1 - c1) + c1 * sparsity)))


def _predire_grille(c0, c1, gpu_mem, model_mem, seq_len, sparsity):
    """
    Même calcul que predict_max_batch sur une grille (c0 en lignes, c1 en
    colonnes). L'ordre des opérations est identique pour que les arrondis
    coïncident avec la version scalaire.
    """
    if gpu_mem <= model_mem:
        return np.zeros((c0.size, c1.size))
    libre = gpu_mem - model_mem
    return np.floor(c0[:, None] * libre / (seq_len * ((1 - c1[None, :]) + c1[None, :] * sparsity)))


def _axe(debut, fin, pas):
    """Valeurs régulières de debut à fin inclus, arrondies pour éviter la dérive."""
    nombre = int(round((fin - debut) / pas)) + 1
    return np.round(debut + pas * np.arange(nombre), 10)


def _meilleur_point(c0, c1, configurations):
    """
    Cherche le meilleur (c0, c1) d'une grille.

    Returns:
        tuple: (c0, c1, score, résidu maximal)
    """
    score = np.zeros((c0.size, c1.size))
    pire = np.zeros((c0.size, c1.size))
    for gpu_mem, model_mem, seq_len, sparsity, observe in configurations:
        ecart = np.abs(_predire_grille(c0, c1, gpu_mem, model_mem, seq_len, sparsity) - observe)
        score += ecart
        pire = np.maximum(pire, ecart)

    grille_c0, grille_c1 = np.meshgrid(c0, c1, indexing='ij')
    # np.lexsort trie sur la dernière clé d'abord
    ordre = np.lexsort((grille_c1.ravel(), grille_c0.ravel(), pire.ravel(), score.ravel()))
    meilleur = ordre[0]
    return (float(grille_c0.ravel()[meilleur]), float(grille_c1.ravel()[meilleur]),
            float(score.ravel()[meilleur]), float(pire.ravel()[meilleur]))


def _configurations(observations, catalog):
    """Traduit les observations en (GPU_mem, model_mem, seq_len, sparsité, observé)."""
    configurations = []
    for obs in observations:
        gpu = catalog.gpu(obs.gpu)
        modele = catalog.model(obs.model)
        jeu = catalog.dataset(obs.dataset)
        configurations.append((gpu.memory_gib, modele.resident_memory_gib,
                               jeu.median_seq_len, obs.sparsity, obs.observed_max_bs))
    return configurations


def calibrate_batch_coeffs(observations, catalog, grille_c0=None, grille_c1=None,
                           raffinement=None):
    """
    Calibre (C0, C1) sur des tailles de lot observées pour un modèle.

    Args:
        observations (list[BatchObservation]): Observations d'un même modèle
        catalog (Catalog): Fournit mémoires GPU/modèle et longueurs de séquence
        grille_c0, grille_c1 (tuple | None): (début, fin, pas) ; par défaut
            les valeurs de settings.ESTIMATEUR
        raffinement (int | None): Facteur de raffinement local

    Returns:
        CalibrationReport: Coefficients, résidus et nombre de prédictions exactes

    Raises:
        ErreurCalibration: liste vide ou observations de plusieurs modèles
        ReferenceManquante: observation visant une entité absente

    Note:
        Le résultat est déterministe : l'ordre de départage rend le
        minimum unique.
    """
    observations = list(observations)
    if not observations:
        raise ErreurCalibration("aucune observation de taille de lot à calibrer")
    modeles = sorted({o.model for o in observations})
    if len(modeles) > 1:
        raise ErreurCalibration(f"observations de plusieurs modèles : {', '.join(modeles)}")

    reglages = settings.ESTIMATEUR
    grille_c0 = grille_c0 or reglages['GRILLE_C0']
    grille_c1 = grille_c1 or reglages['GRILLE_C1']
    raffinement = raffinement or reglages['FACTEUR_RAFFINEMENT']

    configurations = _configurations(observations, catalog)
    distinctes = {(seq_len, sparsity) for _, _, seq_len, sparsity, _ in configurations}
    if len(distinctes) < 2:
        logger.warning(
            f"Calibration de '{modeles[0]}' sous-déterminée : "
            f"une seule configuration (seq_len, sparsité) observée"
        )

    # =========================================================================
    # ÉTAPE 1 : Grille grossière
    # =========================================================================
    c0, c1, score, pire = _meilleur_point(
        _axe(*grille_c0), _axe(*grille_c1), configurations)
    logger.debug(f"Grille grossière : c0={c0}, c1={c1}, score={score}, pire={pire}")

    # =========================================================================
    # ÉTAPE 2 : Raffinement autour de la meilleure cellule
    # =========================================================================
    pas_c0 = grille_c0[2] / raffinement
    pas_c1 = grille_c1[2] / raffinement
    fin_c0 = _axe(c0 - grille_c0[2], c0 + grille_c0[2], pas_c0)
    fin_c1 = _axe(c1 - grille_c1[2], c1 + grille_c1[2], pas_c1)
    fin_c0 = fin_c0[fin_c0 > 0]
    fin_c1 = fin_c1[(fin_c1 >= 0) & (fin_c1 <= 1)]
    c0, c1, score, pire = _meilleur_point(fin_c0, fin_c1, configurations)

    coeffs = BatchCoeffs(c0=c0, c1=c1)
    residus = []
    for obs, (gpu_mem, model_mem, seq_len, sparsity, observe) in zip(observations, configurations):
        predit = predict_max_batch(coeffs, gpu_mem, model_mem, seq_len, sparsity)
        residus.append(ResiduLot(observation=obs, predicted=predit, residual=predit - observe))

    rapport = CalibrationReport(
        coeffs=coeffs,
        residuals=tuple(residus),
        max_abs_residual=max(abs(r.residual) for r in residus),
        exact_matches=sum(1 for r in residus if r.residual == 0),
    )
    logger.info(
        f"Calibration de '{modeles[0]}' : c0={c0}, c1={c1}, "
        f"{rapport.exact_matches}/{len(residus)} exactes, résidu max {rapport.max_abs_residual}"
    )
    return rapport


def project_max_batch(coeffs, model_mem, seq_len, sparsity, mem_grid):
    """
    Projette la taille de lot maximale sur une liste de capacités mémoire.

    Returns:
        list[tuple[float, int]]: (capacité, taille de lot), dans l'ordre d'entrée
    """
    mem_grid = list(mem_grid)
    exiger(len(mem_grid) > 0, 'mem_grid', "liste de capacités vide")
    return [(mem, predict_max_batch(coeffs, mem, model_mem, seq_len, sparsity)) for mem in mem_grid]
