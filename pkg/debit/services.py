"""
=============================================================================
SERVICES.PY - Modèle de débit de fine-tuning
=============================================================================

Le débit croît comme le logarithme de la taille de lot : linéaire tant
que le GPU est limité par la mémoire, puis saturé quand il devient
limité par le calcul.

Fonctions principales :
    - predict_throughput : Évalue le modèle (forme littérale ou puissance)
    - fit_throughput     : Ajuste C2, C3, C4 sur des mesures
    - fit_groups         : Ajuste chaque triplet (GPU, modèle, jeu) d'un lot de mesures
    - rmse               : Erreur quadratique moyenne d'un jeu de coefficients

Ajustement :
    Après passage au logarithme, les deux formes sont linéaires en leurs
    paramètres libres. On résout donc un moindre carrés linéaire par
    factorisation QR de la matrice de conception (pas d'optimiseur
    itératif, résultat déterministe).

        littérale : T = a * ln(bs / s) + c        -> C2 = a, C3 = 1, C4 = c
        puissance : T = a * ln(bs) + b * (-ln s) + c -> C2 = a, C3 = b / a, C4 = c

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import logging
import math
from itertools import groupby

import numpy as np
from django.conf import settings

from catalogue.exceptions import ErreurAjustement
from catalogue.validation import exiger, exiger_entier, exiger_sparsite

from .models import FitReport, Forme, ResiduDebit, ThroughputCoeffs

logger = logging.getLogger(__name__)


def predict_throughput(coeffs, batch_size, sparsity):
    """
    Débit prédit en requêtes par seconde.

    Args:
        coeffs (ThroughputCoeffs): Coefficients du modèle
        batch_size (int): Taille de lot >= 1
        sparsity (float): Sparsité dans (0, 1]

    Returns:
        float: Débit prédit. Peut être <= 0 pour des coefficients extrêmes :
            c'est à l'appelant d'interpréter ce cas.

    Exemple:
        >>> predict_throughput(ThroughputCoeffs(1, 1, 2), 1, 1.0)
        2.0
    """
    exiger_entier('batch_size', batch_size, minimum=1)
    exiger_sparsite('sparsity', sparsity)
    if coeffs.form == Forme.POWER:
        return coeffs.c2 * math.log(batch_size / sparsity ** coeffs.c3) + coeffs.c4
    return coeffs.c2 * math.log(batch_size / (sparsity * coeffs.c3)) + coeffs.c4


def _residus(coeffs, samples):
    residus = []
    for s in samples:
        predit = predict_throughput(coeffs, s.batch_size, s.sparsity)
        residus.append(ResiduDebit(sample=s, predicted=predit, residual=predit - s.throughput_qps))
    return residus


def _rmse_residus(residus):
    return math.sqrt(sum(r.residual ** 2 for r in residus) / len(residus))


def rmse(coeffs, samples):
    """
    Racine de l'erreur quadratique moyenne entre prédiction et mesure.

    Raises:
        ErreurValidation: liste de mesures vide
    """
    samples = list(samples)
    exiger(len(samples) > 0, 'samples', "aucune mesure")
    return _rmse_residus(_residus(coeffs, samples))


def _moindres_carres(conception, cibles, noms):
    """
    Résout min ||X p - y|| par QR.

    Args:
        conception (ndarray): Matrice X (mesures x paramètres)
        cibles (ndarray): Vecteur y
        noms (list[str]): Nom de la variation portée par chaque colonne,
            pour le message d'erreur

    Raises:
        ErreurAjustement: matrice de rang déficient
    """
    q, r = np.linalg.qr(conception)
    diagonale = np.abs(np.diag(r))
    seuil = settings.ESTIMATEUR['SEUIL_RANG'] * max(diagonale.max(), 1.0)
    for i, valeur in enumerate(diagonale):
        if valeur <= seuil:
            raise ErreurAjustement(f"matrice de rang déficient : aucune variation de {noms[i]}")
    return np.linalg.solve(r, q.T @ cibles)


def _cle_unique(samples):
    cles = sorted({s.cle for s in samples})
    if len(cles) > 1:
        raise ErreurAjustement(
            "mesures de plusieurs configurations (gpu, model, dataset) : "
            + '; '.join('/'.join(c) for c in cles)
        )


def fit_throughput(samples, form=Forme.POWER):
    """
    Ajuste les coefficients du modèle de débit.

    Args:
        samples (list[ProfileSample]): Mesures d'un même (gpu, model, dataset)
        form (Forme): 'literal' (C3 fixé à 1) ou 'power'

    Returns:
        FitReport: Coefficients, RMSE et résidus

    Raises:
        ErreurAjustement: mesures insuffisantes, variation manquante,
            configurations mélangées, ou atténuation C3 <= 0

    Conditions:
        - littérale : >= 2 mesures, >= 2 tailles de lot distinctes
        - puissance : >= 3 mesures, >= 2 tailles de lot et >= 2 sparsités distinctes
    """
    samples = list(samples)
    form = Forme(form)
    if not samples:
        raise ErreurAjustement("aucune mesure à ajuster")
    _cle_unique(samples)

    tailles = {s.batch_size for s in samples}
    sparsites = {s.sparsity for s in samples}
    minimum = 3 if form == Forme.POWER else 2
    if len(samples) < minimum:
        raise ErreurAjustement(
            f"forme {form.value} : au moins {minimum} mesures requises, {len(samples)} fournies")
    if len(tailles) < 2:
        raise ErreurAjustement("aucune variation de batch_size (au moins 2 valeurs distinctes)")
    if form == Forme.POWER and len(sparsites) < 2:
        raise ErreurAjustement("aucune variation de sparsity (au moins 2 valeurs distinctes)")

    bs = np.array([s.batch_size for s in samples], dtype=float)
    sp = np.array([s.sparsity for s in samples], dtype=float)
    debit = np.array([s.throughput_qps for s in samples], dtype=float)
    un = np.ones_like(bs)

    if form == Forme.LITERAL:
        conception = np.column_stack([np.log(bs / sp), un])
        a, c = _moindres_carres(conception, debit, ['ln(batch_size / sparsity)', 'constante'])
        coeffs = ThroughputCoeffs(c2=float(a), c3=1.0, c4=float(c), form=form)
    else:
        conception = np.column_stack([np.log(bs), -np.log(sp), un])
        a, b, c = _moindres_carres(conception, debit, ['batch_size', 'sparsity', 'constante'])
        if a == 0:
            raise ErreurAjustement("pente nulle en batch_size : C3 = b / a indéfini")
        c3 = float(b / a)
        if c3 <= 0:
            raise ErreurAjustement(
                f"atténuation MoE non positive (C3 = {c3:.4g}) : la sparsité n'améliore pas le débit")
        coeffs = ThroughputCoeffs(c2=float(a), c3=c3, c4=float(c), form=form)

    if coeffs.c2 <= 0:
        logger.warning(f"Ajustement {samples[0].cle} : C2 = {coeffs.c2:.4g} <= 0, "
                       f"le débit ne croît pas avec la taille de lot")

    residus = _residus(coeffs, samples)
    rapport = FitReport(coeffs=coeffs, rmse=_rmse_residus(residus),
                        residuals=tuple(residus), sample_count=len(samples))
    logger.info(f"Ajustement {form.value} de {'/'.join(samples[0].cle)} : "
                f"{len(samples)} mesures, RMSE {rapport.rmse:.4g}")
    return rapport


def fit_groups(samples, form=Forme.POWER):
    """
    Ajuste séparément chaque triplet (gpu, model, dataset).

    Returns:
        list[FitReport]: Un rapport par triplet, dans l'ordre trié des clés
    """
    tries = sorted(samples, key=lambda s: s.cle)
    return [fit_throughput(list(groupe), form) for _, groupe in groupby(tries, key=lambda s: s.cle)]
