"""
=============================================================================
SERVICES.PY - Génération de charges synthétiques
=============================================================================

Générateur de courbes de débit sans GPU, pour alimenter l'ajustement
du modèle de débit et illustrer le passage d'un régime limité par la
mémoire à un régime limité par le calcul.

Fonctions principales :
    - simulate_throughput : Débit d'un pas selon le modèle roofline
    - crossover_batch     : Taille de lot où calcul et mémoire s'équilibrent
    - generate_samples    : Grille de mesures synthétiques bruitées
    - stage_breakdown     : Temps par étape et par type de couche
    - sweep_seq_len       : Sensibilité à la longueur de séquence

Modèle d'un pas de lot b, sparsité s :
    t_calcul  = b * seq_len * flops_per_token * (1 - f_moe * (1 - s)) / crête
    t_mémoire = (weight_bytes + b * seq_len * activation_bytes_per_token) / bande passante
    t         = max(t_calcul, t_mémoire) + fixed_overhead_s
    débit     = b / t

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import logging
from dataclasses import replace

import numpy as np

from catalogue.models import ProfileSample
from catalogue.validation import (
    exiger, exiger_entier, exiger_positif, exiger_positif_ou_nul, exiger_sparsite,
)
from lots.services import predict_max_batch

from .models import PointSequence, StageBreakdown

logger = logging.getLogger(__name__)


def _temps_calcul_par_requete(params, sparsity):
    facteur = 1 - params.moe_flop_fraction * (1 - sparsity)
    return params.seq_len * params.flops_per_token * facteur / params.flops_par_seconde


def _temps_pas(params, batch_size, sparsity):
    t_calcul = batch_size * _temps_calcul_par_requete(params, sparsity)
    t_memoire = (params.weight_bytes
                 + batch_size * params.seq_len * params.activation_bytes_per_token
                 ) / params.octets_par_seconde
    return max(t_calcul, t_memoire) + params.fixed_overhead_s


def simulate_throughput(params, batch_size, sparsity):
    """
    Débit (requêtes/s) d'un pas de fine-tuning.

    Args:
        params (RooflineParams): Paramètres du GPU et du modèle
        batch_size (int): Taille de lot >= 1
        sparsity (float): Sparsité dans (0, 1]

    Returns:
        float: Débit, croissant avec la taille de lot, plafonné par le
            calcul crête quand le lot devient grand
    """
    exiger_entier('batch_size', batch_size, minimum=1)
    exiger_sparsite('sparsity', sparsity)
    return batch_size / _temps_pas(params, batch_size, sparsity)


def crossover_batch(params, sparsity):
    """
    Taille de lot b* (réelle) où t_calcul = t_mémoire.

    En dessous de b*, le pas est limité par la mémoire ; au-delà, par le
    calcul.

    Returns:
        float | None: None si le calcul ne rattrape jamais la mémoire
    """
    exiger_sparsite('sparsity', sparsity)
    pente_calcul = _temps_calcul_par_requete(params, sparsity)
    pente_memoire = params.seq_len * params.activation_bytes_per_token / params.octets_par_seconde
    if pente_calcul <= pente_memoire:
        return None
    return params.weight_bytes / params.octets_par_seconde / (pente_calcul - pente_memoire)


def generate_samples(params, batch_grid, sparsity_grid, noise_sigma, seed,
                     gpu='synth', model='synth', dataset='synth'):
    """
    Mesures synthétiques sur une grille (taille de lot, sparsité).

    Chaque débit est multiplié par exp(N(0, noise_sigma)) tiré d'un
    générateur initialisé par seed. L'ordre de sortie suit la grille :
    taille de lot d'abord, puis sparsité.

    Args:
        params (RooflineParams): Paramètres du générateur
        batch_grid (list[int]): Tailles de lot
        sparsity_grid (list[float]): Sparsités
        noise_sigma (float): Écart-type du bruit log-normal, >= 0
        seed (int): Graine du générateur
        gpu, model, dataset (str): Étiquettes des mesures produites

    Returns:
        list[ProfileSample]
    """
    batch_grid = list(batch_grid)
    sparsity_grid = list(sparsity_grid)
    exiger(len(batch_grid) > 0, 'batch_grid', "grille vide")
    exiger(len(sparsity_grid) > 0, 'sparsity_grid', "grille vide")
    exiger_positif_ou_nul('noise_sigma', noise_sigma)
    exiger_entier('seed', seed)

    rng = np.random.default_rng(seed)
    mesures = []
    for batch_size in batch_grid:
        for sparsity in sparsity_grid:
            debit = simulate_throughput(params, batch_size, sparsity)
            if noise_sigma > 0:
                debit *= float(np.exp(rng.normal(0.0, noise_sigma)))
            mesures.append(ProfileSample(gpu=gpu, model=model, dataset=dataset,
                                         sparsity=sparsity, batch_size=batch_size,
                                         throughput_qps=debit))

    logger.info(f"{len(mesures)} mesures synthétiques générées (sigma={noise_sigma}, graine={seed})")
    return mesures


def stage_breakdown(shares, total_step_s):
    """
    Répartit la durée d'un pas entre étapes et types de couche.

    La part MoE s'applique à forward + backward ; l'optimiseur reste une
    ligne à part, si bien que chaque tableau somme à total_step_s.

    Exemple:
        Parts (0.3, 0.6, 0.1), part MoE 0.85, pas de 10 s :
        étapes (3, 6, 1) s, couches MoE 7.65 s, autres couches 1.35 s
    """
    exiger_positif('total_step_s', total_step_s)
    forward = shares.forward * total_step_s
    backward = shares.backward * total_step_s
    optimiseur = shares.optimizer * total_step_s
    moe = shares.moe_layer_share * (forward + backward)
    return StageBreakdown(
        forward_s=forward,
        backward_s=backward,
        optimizer_s=optimiseur,
        moe_layers_s=moe,
        other_layers_s=(forward + backward) - moe,
        total_s=total_step_s,
    )


def sweep_seq_len(params, seq_lens, coeffs, gpu_mem, model_mem, sparsity):
    """
    Débit à la taille de lot maximale pour plusieurs longueurs de séquence.

    Pour chaque longueur, le modèle de lot donne la taille maximale puis
    le générateur roofline le débit correspondant. Une taille maximale
    nulle donne un débit nul.

    Returns:
        list[PointSequence]: Dans l'ordre de seq_lens
    """
    seq_lens = list(seq_lens)
    exiger(len(seq_lens) > 0, 'seq_lens', "liste vide")
    points = []
    for seq_len in seq_lens:
        exiger_entier('seq_len', seq_len, minimum=1)
        taille = predict_max_batch(coeffs, gpu_mem, model_mem, seq_len, sparsity)
        debit = 0.0
        if taille >= 1:
            debit = simulate_throughput(replace(params, seq_len=seq_len), taille, sparsity)
        points.append(PointSequence(seq_len=seq_len, max_batch=taille,
                                    throughput_qps=debit, tokens_per_batch=taille * seq_len))
        logger.debug(f"seq_len={seq_len} : lot {taille}, {debit:.4g} req/s")
    return points
