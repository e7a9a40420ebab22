"""
=============================================================================
TESTS.PY - Tests de l'application Routage
=============================================================================

Tests couverts :
    - route_topk : exemple à la main, départage, cas dense, oracle exhaustif
    - Propriétés : conservation, équivariance par permutation, invariance
      par translation des logits
    - expert_load / compare_loads
    - synthetic_logits / load_logits_csv

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import itertools
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from catalogue.exceptions import ErreurLecture, ErreurValidation

from .models import ExpertLoad, RouterInput
from .services import (
    compare_loads, expert_load, load_logits_csv, route_topk, synthetic_logits,
)


# =============================================================================
# HELPERS
# =============================================================================

# Instances aléatoires de la comparaison avec l'énumération exhaustive
INSTANCES_ORACLE = 200

LOGITS_MAIN = [
    [2.0, 1.0, 0.5, 0.1],
    [0.1, 0.2, 3.0, 2.9],
    [1.0, 1.0, 0.0, 0.0],
]


def comptes(logits, top_k):
    entree = RouterInput(logits, top_k)
    return expert_load(route_topk(entree), entree.num_experts).counts


def instances_aleatoires(nombre, graine):
    rng = np.random.default_rng(graine)
    for _ in range(nombre):
        experts = int(rng.integers(1, 7))
        tokens = int(rng.integers(1, 21))
        top_k = int(rng.integers(1, experts + 1))
        yield rng.normal(size=(tokens, experts)), top_k, rng


def charge_depuis_parts(parts, variance):
    return ExpertLoad(counts=tuple(1 for _ in parts), shares_pct=tuple(parts),
                      variance_pct=variance, imbalance_factor=1.0)


# =============================================================================
# TESTS DU ROUTAGE
# =============================================================================

class RouteTopKTest(SimpleTestCase):

    def test_exemple_a_la_main(self):
        affectations = route_topk(RouterInput(LOGITS_MAIN, 2))
        self.assertEqual([a.experts for a in affectations], [(0, 1), (2, 3), (0, 1)])

    def test_poids_normalises_et_decroissants(self):
        for affectation in route_topk(RouterInput(LOGITS_MAIN, 2)):
            self.assertAlmostEqual(sum(affectation.weights), 1.0, places=12)
            self.assertGreaterEqual(affectation.weights[0], affectation.weights[1])

    def test_egalite_departagee_par_indice(self):
        affectations = route_topk(RouterInput(np.zeros((5, 4)), 2))
        self.assertTrue(all(a.experts == (0, 1) for a in affectations))

    def test_dense(self):
        affectations = route_topk(RouterInput(LOGITS_MAIN, 4))
        for affectation in affectations:
            self.assertEqual(sorted(affectation.experts), [0, 1, 2, 3])
        charge = expert_load(affectations, 4)
        self.assertEqual(charge.variance_pct, 0.0)
        self.assertEqual(charge.imbalance_factor, 1.0)

    def test_experts_distincts(self):
        for logits, top_k, _ in instances_aleatoires(50, 11):
            for affectation in route_topk(RouterInput(logits, top_k)):
                self.assertEqual(len(set(affectation.experts)), top_k)

    def test_logits_non_finis(self):
        with self.assertRaises(ErreurValidation) as ctx:
            RouterInput([[1.0, float('nan')]], 1)
        self.assertEqual(ctx.exception.champ, 'logits')

    def test_k_superieur_aux_experts(self):
        with self.assertRaises(ErreurValidation) as ctx:
            RouterInput(LOGITS_MAIN, 5)
        self.assertEqual(ctx.exception.champ, 'top_k')

    def test_k_nul(self):
        with self.assertRaises(ErreurValidation):
            RouterInput(LOGITS_MAIN, 0)

    def test_matrice_attendue(self):
        with self.assertRaises(ErreurValidation):
            RouterInput([1.0, 2.0], 1)


class RouteTopKProprietesTest(SimpleTestCase):
    """Oracle exhaustif et propriétés sur des instances aléatoires reproductibles."""

    def test_oracle_exhaustif(self):
        for logits, top_k, _ in instances_aleatoires(INSTANCES_ORACLE, 2024):
            affectations = route_topk(RouterInput(logits, top_k))
            for ligne, affectation in zip(logits, affectations):
                meilleur = max(itertools.combinations(range(len(ligne)), top_k),
                               key=lambda combinaison: sum(ligne[e] for e in combinaison))
                self.assertEqual(set(affectation.experts), set(meilleur))
                scores = [ligne[e] for e in affectation.experts]
                self.assertEqual(scores, sorted(scores, reverse=True))

    def test_conservation(self):
        for logits, top_k, _ in instances_aleatoires(INSTANCES_ORACLE, 7):
            self.assertEqual(sum(comptes(logits, top_k)), logits.shape[0] * top_k)

    def test_permutation_des_experts(self):
        for logits, top_k, rng in instances_aleatoires(100, 99):
            permutation = rng.permutation(logits.shape[1])
            attendu = comptes(logits, top_k)
            permutes = comptes(logits[:, permutation], top_k)
            self.assertEqual(permutes, tuple(attendu[j] for j in permutation))

    def test_translation_des_logits(self):
        for logits, top_k, rng in instances_aleatoires(100, 5):
            decale = logits + rng.uniform(-3, 3, size=(logits.shape[0], 1))
            self.assertEqual(
                [a.experts for a in route_topk(RouterInput(logits, top_k))],
                [a.experts for a in route_topk(RouterInput(decale, top_k))],
            )


# =============================================================================
# TESTS DES STATISTIQUES DE CHARGE
# =============================================================================

class ChargeExpertsTest(SimpleTestCase):

    def test_exemple_a_la_main(self):
        charge = expert_load(route_topk(RouterInput(LOGITS_MAIN, 2)), 4)
        self.assertEqual(charge.counts, (2, 2, 1, 1))
        self.assertAlmostEqual(charge.shares_pct[0], 100 / 3, places=9)
        self.assertAlmostEqual(charge.shares_pct[3], 100 / 6, places=9)
        self.assertAlmostEqual(charge.variance_pct, 625 / 9, delta=1e-6)
        self.assertAlmostEqual(charge.imbalance_factor, 4 / 3, places=12)

    def test_uniforme(self):
        charge = expert_load([(0,), (1,), (2,), (3,)], 4)
        self.assertEqual(charge.variance_pct, 0.0)
        self.assertEqual(charge.imbalance_factor, 1.0)

    def test_un_seul_expert(self):
        charge = expert_load([(0,)] * 10, 4)
        self.assertEqual(charge.shares_pct, (100.0, 0.0, 0.0, 0.0))
        self.assertEqual(charge.imbalance_factor, 4.0)
        self.assertAlmostEqual(charge.variance_pct, 1875.0)

    def test_indice_hors_limites(self):
        with self.assertRaises(ErreurValidation):
            expert_load([(0, 4)], 4)

    def test_parts_incoherentes(self):
        with self.assertRaises(ErreurValidation):
            ExpertLoad(counts=(1, 1), shares_pct=(50.0, 40.0), variance_pct=25.0,
                       imbalance_factor=1.0)


class ComparaisonChargesTest(SimpleTestCase):

    def test_identiques(self):
        charge = expert_load([(0, 1), (2, 3), (0, 1)], 4)
        ecart = compare_loads(charge, charge)
        self.assertEqual(ecart.variance_delta, 0.0)
        self.assertEqual(ecart.share_deltas, (0.0, 0.0, 0.0, 0.0))

    def test_variances_mesurees(self):
        avant = charge_depuis_parts([12.5] * 8, 55.0)
        apres = charge_depuis_parts([12.5] * 8, 112.0)
        self.assertEqual(compare_loads(avant, apres).variance_delta, 57.0)

    def test_expert_dominant(self):
        avant = expert_load([(0, 1), (2, 3), (0, 1)], 4)
        apres = expert_load([(0,), (0,), (0,), (0,), (1,), (2,)], 4)
        self.assertEqual(apres.counts, (4, 1, 1, 0))
        ecart = compare_loads(avant, apres)
        self.assertEqual(ecart.dominant_expert, 0)
        self.assertGreater(ecart.variance_delta, 0)

    def test_nombre_d_experts_different(self):
        with self.assertRaises(ErreurValidation):
            compare_loads(expert_load([(0,)], 4), expert_load([(0,)], 8))


# =============================================================================
# TESTS DES LOGITS SYNTHÉTIQUES ET CSV
# =============================================================================

class LogitsSynthetiquesTest(SimpleTestCase):

    def test_reproductibles(self):
        np.testing.assert_array_equal(synthetic_logits(50, 8, 3), synthetic_logits(50, 8, 3))

    def test_biais_favorise_les_premiers_experts(self):
        charge = comptes(synthetic_logits(2000, 8, 1, skew=3.0), 2)
        self.assertGreater(charge[0], charge[7])

    def test_sans_biais_quasi_equilibre(self):
        entree = RouterInput(synthetic_logits(4000, 8, 1), 2)
        charge = expert_load(route_topk(entree), 8)
        self.assertLess(charge.imbalance_factor, 1.2)


class LogitsCsvTest(SimpleTestCase):

    def setUp(self):
        temporaire = tempfile.TemporaryDirectory()
        self.addCleanup(temporaire.cleanup)
        self.dossier = Path(temporaire.name)

    def ecrire(self, contenu):
        chemin = self.dossier / 'logits.csv'
        chemin.write_text(contenu, encoding='utf-8')
        return chemin

    def test_lecture(self):
        chemin = self.ecrire('2.0,1.0,0.5,0.1\n0.1,0.2,3.0,2.9\n1.0,1.0,0.0,0.0\n')
        np.testing.assert_array_equal(load_logits_csv(chemin), np.array(LOGITS_MAIN))

    def test_largeur_variable(self):
        with self.assertRaises(ErreurLecture) as ctx:
            load_logits_csv(self.ecrire('1,2,3\n1,2\n'))
        self.assertEqual(ctx.exception.ligne, 2)

    def test_valeur_non_numerique(self):
        with self.assertRaises(ErreurLecture) as ctx:
            load_logits_csv(self.ecrire('1,2\nun,deux\n'))
        self.assertEqual(ctx.exception.ligne, 2)

    def test_fichier_vide(self):
        with self.assertRaises(ErreurLecture):
            load_logits_csv(self.ecrire(''))

    def test_encodage_invalide(self):
        chemin = self.dossier / 'latin1.csv'
        chemin.write_bytes(b'1.0,2.0\n3.0,4\xe9\n')
        with self.assertRaises(ErreurLecture) as ctx:
            load_logits_csv(chemin)
        self.assertIn(str(chemin), str(ctx.exception))
