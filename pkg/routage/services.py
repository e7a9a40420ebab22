"""
=============================================================================
SERVICES.PY - Simulation du routeur MoE
=============================================================================

Reproduit l'arithmétique d'une couche MoE : le routeur produit des
logits, un softmax par token, puis chaque token est envoyé à ses k
experts les plus probables. On mesure ensuite la répartition de la
charge entre experts.

Fonctions principales :
    - route_topk        : Sélection top-k par token
    - expert_load       : Comptes, parts, variance et facteur de déséquilibre
    - compare_loads     : Écart entre deux répartitions
    - synthetic_logits  : Logits gaussiens reproductibles, éventuellement biaisés
    - load_logits_csv   : Lecture de logits au format CSV

Départage : à score égal, l'expert d'indice le plus faible est choisi.
Pas de capacité par expert, pas d'abandon de tokens.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import csv
import logging
import math
from pathlib import Path

import numpy as np

from catalogue.exceptions import ErreurLecture
from catalogue.validation import exiger, exiger_entier, exiger_fini

from .models import ComparaisonCharge, ExpertLoad, TokenAssignment

logger = logging.getLogger(__name__)


def _softmax(logits):
    decale = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(decale)
    return exp / exp.sum(axis=1, keepdims=True)


def route_topk(router_input):
    """
    Choisit les k experts de chaque token.

    Args:
        router_input (RouterInput): Logits validés et k

    Returns:
        list[TokenAssignment]: Un élément par token, dans l'ordre des lignes.
            Les experts sont triés par probabilité décroissante ; les poids
            sont les probabilités retenues, renormalisées pour sommer à 1.

    Exemple:
        >>> route_topk(RouterInput([[2.0, 1.0, 0.5, 0.1]], 2))[0].experts
        (0, 1)
    """
    probabilites = _softmax(router_input.logits)
    # Tri stable sur l'opposé : ordre décroissant, indice le plus faible d'abord
    ordre = np.argsort(-router_input.logits, axis=1, kind='stable')[:, :router_input.top_k]
    retenues = np.take_along_axis(probabilites, ordre, axis=1)
    poids = retenues / retenues.sum(axis=1, keepdims=True)

    affectations = [
        TokenAssignment(experts=tuple(int(e) for e in experts),
                        weights=tuple(float(p) for p in ligne))
        for experts, ligne in zip(ordre, poids)
    ]
    logger.debug(f"{len(affectations)} tokens routés vers {router_input.top_k} "
                 f"experts sur {router_input.num_experts}")
    return affectations


def _charge_depuis_comptes(comptes):
    comptes = np.asarray(comptes, dtype=np.int64)
    total = int(comptes.sum())
    exiger(total > 0, 'assignments', "aucune affectation")
    parts = comptes / total * 100.0
    return ExpertLoad(
        counts=tuple(int(c) for c in comptes),
        shares_pct=tuple(float(p) for p in parts),
        variance_pct=float(np.var(parts)),
        imbalance_factor=float(comptes.max() / comptes.mean()),
    )


def expert_load(assignments, num_experts):
    """
    Statistiques de charge d'un routage.

    Args:
        assignments (list[TokenAssignment | Sequence[int]]): Experts de chaque token
        num_experts (int): Nombre d'experts de la couche

    Returns:
        ExpertLoad

    Raises:
        ErreurValidation: indice d'expert hors de [0, num_experts)

    Exemple:
        Comptes (2, 2, 1, 1) -> parts (33.3, 33.3, 16.7, 16.7),
        variance 69.44, déséquilibre 1.333
    """
    exiger_entier('num_experts', num_experts, minimum=1)
    indices = []
    for i, affectation in enumerate(assignments):
        for e in getattr(affectation, 'experts', affectation):
            exiger(0 <= e < num_experts, f'assignments[{i}]',
                   f"expert {e} hors de [0, {num_experts})")
            indices.append(int(e))
    exiger(len(indices) > 0, 'assignments', "aucune affectation")
    return _charge_depuis_comptes(np.bincount(indices, minlength=num_experts))


def compare_loads(before, after):
    """
    Compare deux répartitions d'un même nombre d'experts.

    Returns:
        ComparaisonCharge: after - before, et l'expert dominant de after

    Raises:
        ErreurValidation: nombres d'experts différents
    """
    exiger(before.num_experts == after.num_experts, 'after',
           f"{after.num_experts} experts contre {before.num_experts} avant")
    return ComparaisonCharge(
        variance_delta=after.variance_pct - before.variance_pct,
        share_deltas=tuple(a - b for a, b in zip(after.shares_pct, before.shares_pct)),
        dominant_expert=int(np.argmax(after.shares_pct)),
    )


def synthetic_logits(num_tokens, num_experts, seed, skew=0.0):
    """
    Logits gaussiens reproductibles.

    Un biais skew * (E-1-e) / (E-1) est ajouté à la colonne de l'expert e :
    skew = 0 donne un routage équilibré en moyenne, un skew positif
    favorise les premiers experts.

    Returns:
        ndarray: Matrice num_tokens x num_experts
    """
    exiger_entier('num_tokens', num_tokens, minimum=1)
    exiger_entier('num_experts', num_experts, minimum=1)
    exiger_entier('seed', seed)
    exiger_fini('skew', skew)
    rng = np.random.default_rng(seed)
    logits = rng.standard_normal((num_tokens, num_experts))
    if num_experts > 1:
        logits += skew * (num_experts - 1 - np.arange(num_experts)) / (num_experts - 1)
    return logits


def load_logits_csv(path):
    """
    Lit une matrice de logits : une ligne par token, sans en-tête.

    Raises:
        ErreurLecture: fichier absent, valeur non numérique ou non finie,
            longueurs de lignes différentes (numéro de ligne 1-based)
    """
    chemin = Path(path)
    try:
        with chemin.open(newline='', encoding='utf-8') as fichier:
            lignes = list(csv.reader(fichier))
    except OSError as erreur:
        raise ErreurLecture(f"lecture impossible ({erreur.strerror})", chemin) from None
    except UnicodeDecodeError as erreur:
        raise ErreurLecture(f"encodage invalide, UTF-8 attendu (octet {erreur.start})", chemin) from None

    matrice = []
    largeur = None
    for numero, ligne in enumerate(lignes, start=1):
        if not ligne:
            continue
        try:
            valeurs = [float(v) for v in ligne]
        except ValueError:
            raise ErreurLecture("valeur non numérique", chemin, ligne=numero) from None
        if not all(math.isfinite(v) for v in valeurs):
            raise ErreurLecture("logit non fini", chemin, ligne=numero)
        if largeur is None:
            largeur = len(valeurs)
        elif len(valeurs) != largeur:
            raise ErreurLecture(f"{largeur} colonnes attendues, {len(valeurs)} lues",
                                chemin, ligne=numero)
        matrice.append(valeurs)

    if not matrice:
        raise ErreurLecture("aucun logit", chemin)
    logger.info(f"{len(matrice)} tokens x {largeur} experts lus dans {chemin}")
    return np.array(matrice)
