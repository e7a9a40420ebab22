"""
=============================================================================
TESTS.PY - Tests de l'application Synthèse
=============================================================================

Tests couverts :
    - simulate_throughput : régime mémoire, régime calcul, effet de la sparsité
    - crossover_batch
    - generate_samples : déterminisme, ordre, ajustement du modèle de débit
    - stage_breakdown et StageShares
    - sweep_seq_len

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from catalogue.exceptions import ErreurValidation
from debit.models import Forme
from debit.services import fit_throughput
from lots.models import BatchCoeffs

from .models import RooflineParams, StageShares
from .services import (
    crossover_batch, generate_samples, simulate_throughput, stage_breakdown, sweep_seq_len,
)


# =============================================================================
# HELPERS
# =============================================================================

def params_defaut(**kwargs):
    valeurs = dict(settings.ESTIMATEUR['ROOFLINE_DEFAUT'])
    valeurs.update(kwargs)
    return RooflineParams(**valeurs)


def params_memoire(**kwargs):
    """Poids lourds et peu de calcul : limité par la mémoire jusqu'à b* ~ 8.2."""
    valeurs = dict(peak_compute_tflops=100.0, mem_bandwidth_gbs=1000.0, weight_bytes=20e9,
                   flops_per_token=2e9, activation_bytes_per_token=1e6, seq_len=128,
                   moe_flop_fraction=0.5)
    valeurs.update(kwargs)
    return RooflineParams(**valeurs)


TAILLES = (1, 2, 4, 8, 16)
SPARSITES = (0.25, 1.0)


# =============================================================================
# TESTS DU GÉNÉRATEUR ROOFLINE
# =============================================================================

class SimulationDebitTest(SimpleTestCase):

    def test_regime_memoire(self):
        params = params_memoire()
        rapport = simulate_throughput(params, 2, 1.0) / simulate_throughput(params, 1, 1.0)
        self.assertGreaterEqual(rapport, 1.5)
        self.assertLessEqual(rapport, 2.0)

    def test_regime_calcul(self):
        params = params_memoire()
        debut = math.ceil(crossover_batch(params, 1.0))
        for b in range(debut, debut + 20):
            rapport = simulate_throughput(params, 2 * b, 1.0) / simulate_throughput(params, b, 1.0)
            self.assertLessEqual(rapport, 1.2)

    def test_sparsite_sans_effet_en_regime_memoire(self):
        params = params_memoire()
        self.assertEqual(simulate_throughput(params, 1, 0.25), simulate_throughput(params, 1, 1.0))

    def test_sparsite_accelere_en_regime_calcul(self):
        params = params_memoire()
        self.assertGreater(simulate_throughput(params, 64, 0.25),
                           simulate_throughput(params, 64, 1.0))

    def test_croissant_avec_le_lot(self):
        params = params_defaut()
        for s in SPARSITES:
            debits = [simulate_throughput(params, b, s) for b in range(1, 257)]
            self.assertEqual(debits, sorted(debits))

    def test_sparsite_plus_faible_jamais_plus_lente(self):
        for params in (params_defaut(), params_memoire()):
            for b in TAILLES:
                self.assertGreaterEqual(simulate_throughput(params, b, 0.25),
                                        simulate_throughput(params, b, 1.0))

    def test_surcout_fixe(self):
        sans = params_defaut(fixed_overhead_s=0.0)
        self.assertGreater(simulate_throughput(sans, 4, 1.0),
                           simulate_throughput(params_defaut(), 4, 1.0))

    def test_entrees_invalides(self):
        with self.assertRaises(ErreurValidation):
            simulate_throughput(params_defaut(), 0, 1.0)
        with self.assertRaises(ErreurValidation):
            simulate_throughput(params_defaut(), 1, 1.5)
        with self.assertRaises(ErreurValidation) as ctx:
            params_defaut(moe_flop_fraction=1.5)
        self.assertEqual(ctx.exception.champ, 'moe_flop_fraction')


class TailleDeBasculeTest(SimpleTestCase):

    def test_valeur(self):
        self.assertAlmostEqual(crossover_batch(params_memoire(), 1.0), 0.02 / 0.002432, places=9)

    def test_sparsite_repousse_la_bascule(self):
        params = params_memoire()
        self.assertGreater(crossover_batch(params, 0.25), crossover_batch(params, 1.0))

    def test_calcul_jamais_limitant(self):
        self.assertIsNone(crossover_batch(params_memoire(activation_bytes_per_token=1e8), 1.0))


# =============================================================================
# TESTS DES MESURES SYNTHÉTIQUES
# =============================================================================

class MesuresSynthetiquesTest(SimpleTestCase):

    def test_sans_bruit_exact(self):
        params = params_defaut()
        for mesure in generate_samples(params, TAILLES, SPARSITES, 0.0, 0):
            self.assertEqual(mesure.throughput_qps,
                             simulate_throughput(params, mesure.batch_size, mesure.sparsity))

    def test_ordre_de_la_grille(self):
        mesures = generate_samples(params_defaut(), TAILLES, SPARSITES, 0.0, 0)
        self.assertEqual([(m.batch_size, m.sparsity) for m in mesures],
                         [(b, s) for b in TAILLES for s in SPARSITES])

    def test_meme_graine_memes_mesures(self):
        premier = generate_samples(params_defaut(), TAILLES, SPARSITES, 0.05, 42)
        second = generate_samples(params_defaut(), TAILLES, SPARSITES, 0.05, 42)
        self.assertEqual(premier, second)

    def test_graines_differentes(self):
        premier = generate_samples(params_defaut(), TAILLES, SPARSITES, 0.05, 1)
        second = generate_samples(params_defaut(), TAILLES, SPARSITES, 0.05, 2)
        self.assertNotEqual(premier, second)

    def test_etiquettes(self):
        mesure = generate_samples(params_defaut(), [1], [1.0], 0.0, 0, gpu='A40',
                                  model='Mixtral', dataset='CS')[0]
        self.assertEqual((mesure.gpu, mesure.model, mesure.dataset), ('A40', 'Mixtral', 'CS'))

    def test_grille_vide(self):
        with self.assertRaises(ErreurValidation):
            generate_samples(params_defaut(), [], SPARSITES, 0.0, 0)

    def test_sigma_negatif(self):
        with self.assertRaises(ErreurValidation):
            generate_samples(params_defaut(), TAILLES, SPARSITES, -0.1, 0)

    def test_ajustement_du_modele_de_debit(self):
        mesures = generate_samples(params_defaut(), TAILLES, SPARSITES, 0.05, 0)
        rapport = fit_throughput(mesures, Forme.POWER)
        moyenne = float(np.mean([m.throughput_qps for m in mesures]))
        self.assertLessEqual(rapport.rmse, 0.10 * moyenne)
        self.assertGreater(rapport.coeffs.c2, 0)


# =============================================================================
# TESTS DE LA RÉPARTITION PAR ÉTAPE
# =============================================================================

class RepartitionEtapesTest(SimpleTestCase):

    def setUp(self):
        self.parts = StageShares(forward=0.3, backward=0.6, optimizer=0.1, moe_layer_share=0.85)

    def test_etapes(self):
        repartition = stage_breakdown(self.parts, 10.0)
        self.assertAlmostEqual(repartition.forward_s, 3.0)
        self.assertAlmostEqual(repartition.backward_s, 6.0)
        self.assertAlmostEqual(repartition.optimizer_s, 1.0)

    def test_couches(self):
        repartition = stage_breakdown(self.parts, 10.0)
        self.assertAlmostEqual(repartition.moe_layers_s, 7.65)
        self.assertAlmostEqual(repartition.other_layers_s, 1.35)

    def test_sommes(self):
        repartition = stage_breakdown(self.parts, 10.0)
        self.assertAlmostEqual(sum(t for _, t in repartition.etapes), 10.0, places=9)
        self.assertAlmostEqual(sum(t for _, t in repartition.couches), 10.0, places=9)

    def test_parts_ne_sommant_pas_a_un(self):
        with self.assertRaises(ErreurValidation) as ctx:
            StageShares(forward=0.3, backward=0.5, optimizer=0.1, moe_layer_share=0.85)
        self.assertEqual(ctx.exception.champ, 'forward')

    def test_fine_tuning_complet(self):
        StageShares(0.3, 0.6, 0.1, 0.85, full_finetuning=True)
        with self.assertRaises(ErreurValidation) as ctx:
            StageShares(0.6, 0.3, 0.1, 0.85, full_finetuning=True)
        self.assertEqual(ctx.exception.champ, 'backward')

    def test_duree_nulle(self):
        with self.assertRaises(ErreurValidation):
            stage_breakdown(self.parts, 0.0)


# =============================================================================
# TESTS DE LA SENSIBILITÉ À LA LONGUEUR DE SÉQUENCE
# =============================================================================

class BalayageSequenceTest(SimpleTestCase):

    COEFFS = BatchCoeffs(8, 0.93)

    def test_sequence_courte_lot_plus_grand(self):
        points = sweep_seq_len(params_defaut(), [128, 512], self.COEFFS, 48, 23.35, 0.25)
        self.assertEqual([p.seq_len for p in points], [128, 512])
        self.assertEqual([p.max_batch for p in points], [5, 1])
        self.assertEqual(points[0].tokens_per_batch, 640)
        self.assertGreater(points[0].throughput_qps, points[1].throughput_qps)

    def test_memoire_insuffisante(self):
        point = sweep_seq_len(params_defaut(), [128], self.COEFFS, 16, 23.35, 0.25)[0]
        self.assertEqual(point.max_batch, 0)
        self.assertEqual(point.throughput_qps, 0.0)

    def test_liste_vide(self):
        with self.assertRaises(ErreurValidation):
            sweep_seq_len(params_defaut(), [], self.COEFFS, 48, 23.35, 0.25)
