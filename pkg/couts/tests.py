"""
=============================================================================
TESTS.PY - Tests de l'application Coûts
=============================================================================

Tests couverts :
    - estimate_from_throughput : coûts de Mixtral sparse sur GS (10 époques)
    - estimate_cost : chaîne complète et cas d'erreur
    - compare_gpus : classement et erreurs nommant le GPU
    - scale_by_dataset : linéarité en nombre de requêtes

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import math

from django.test import SimpleTestCase

from catalogue.exceptions import (
    CoefficientsManquants, ErreurValidation, HorsDomaine, PrixManquant,
)
from catalogue.models import Catalog, DatasetSpec, GpuSpec, ModelSpec
from debit.models import Forme, ThroughputCoeffs
from lots.models import BatchCoeffs
from lots.services import predict_max_batch

from .models import CostEstimate, CostQuery
from .services import compare_gpus, estimate_cost, estimate_from_throughput, scale_by_dataset


# =============================================================================
# HELPERS
# =============================================================================

# Débits (req/s) et prix ($/h) de Mixtral sparse sur GS, 15000 requêtes x 10 époques
DEBITS = {'A40': 1.01, 'A100-80GB': 2.74, 'H100-80GB': 4.90, 'A100-40GB': 2.0, 'T4': 0.5}
COUTS_ATTENDUS = {'A40': 32.7, 'A100-80GB': 25.4, 'H100-80GB': 17.9}
REQUETES_EPOQUES = 150_000
SPARSITE = 0.25
MIXTRAL_MEM = 23.35
COEFFS_LOT = BatchCoeffs(8, 0.93)

GPUS = (
    GpuSpec('A40', 48, 0.79),
    GpuSpec('A100-40GB', 40),
    GpuSpec('A100-80GB', 80, 1.67),
    GpuSpec('H100-80GB', 80, 2.1),
    GpuSpec('T4', 16, 0.35),
)
GS = DatasetSpec('GS', 1300, 148, 'math')
CS = DatasetSpec('CS', 15000, 79, 'common-sense')


def coeffs_pour(gpu):
    """Coefficients littéraux donnant DEBITS[gpu] à la taille de lot maximale prédite."""
    taille = max(predict_max_batch(COEFFS_LOT, gpu.memory_gib, MIXTRAL_MEM, GS.median_seq_len,
                                   SPARSITE), 1)
    return ThroughputCoeffs(0.5, 1.0, DEBITS[gpu.name] - 0.5 * math.log(taille / SPARSITE),
                            Forme.LITERAL)


def catalogue_couts(batch_coeffs=COEFFS_LOT):
    mixtral = ModelSpec('Mixtral', 47_000_000_000, MIXTRAL_MEM, 32, 8, 8, 2,
                        batch_coeffs=batch_coeffs)
    for gpu in GPUS:
        mixtral = mixtral.with_throughput_coeffs('GS', gpu.name, coeffs_pour(gpu))
    return Catalog(gpus=GPUS, models=(mixtral,), datasets=(CS, GS))


def requete(gpu='A40', **kwargs):
    valeurs = dict(model='Mixtral', dataset='GS', gpu=gpu, sparsity=SPARSITE, epochs=10,
                   override_queries=15_000)
    valeurs.update(kwargs)
    return CostQuery(**valeurs)


# =============================================================================
# TESTS DE L'ARITHMÉTIQUE
# =============================================================================

class EstimationDepuisDebitTest(SimpleTestCase):

    def test_couts_par_gpu(self):
        prix = {'A40': 0.79, 'A100-80GB': 1.67, 'H100-80GB': 2.1}
        for nom, attendu in COUTS_ATTENDUS.items():
            with self.subTest(gpu=nom):
                estimation = estimate_from_throughput(1, DEBITS[nom], prix[nom], REQUETES_EPOQUES)
                self.assertLessEqual(abs(estimation.total_usd - attendu) / attendu, 0.02)

    def test_composition_exacte(self):
        estimation = estimate_from_throughput(17, 4.90, 2.1, REQUETES_EPOQUES)
        self.assertEqual(estimation.wall_seconds, REQUETES_EPOQUES / 4.90)
        self.assertEqual(estimation.total_usd, REQUETES_EPOQUES / 4.90 / 3600.0 * 2.1)
        self.assertAlmostEqual(estimation.wall_hours, REQUETES_EPOQUES / 4.90 / 3600.0)

    def test_debit_nul_refuse(self):
        with self.assertRaises(ErreurValidation):
            estimate_from_throughput(1, 0.0, 2.1, REQUETES_EPOQUES)

    def test_estimation_invalide(self):
        with self.assertRaises(ErreurValidation):
            CostEstimate(1, 1.0, 10.0, -1.0, 2.1)


# =============================================================================
# TESTS DE L'ESTIMATION COMPLÈTE
# =============================================================================

class EstimationCoutTest(SimpleTestCase):

    def setUp(self):
        self.catalogue = catalogue_couts()

    def test_a40(self):
        estimation = estimate_cost(self.catalogue, requete('A40'))
        self.assertEqual(estimation.max_batch_size, 4)
        self.assertAlmostEqual(estimation.throughput_qps, 1.01, places=9)
        self.assertLessEqual(abs(estimation.total_usd - 32.7) / 32.7, 0.02)

    def test_h100(self):
        estimation = estimate_cost(self.catalogue, requete('H100-80GB'))
        self.assertLessEqual(abs(estimation.total_usd - 17.9) / 17.9, 0.02)

    def test_nombre_de_requetes_du_jeu_par_defaut(self):
        defaut = estimate_cost(self.catalogue, requete('A40', override_queries=None, epochs=1))
        self.assertAlmostEqual(defaut.wall_seconds, 1300 / defaut.throughput_qps)

    def test_seq_len_plus_long_reduit_le_lot(self):
        court = estimate_cost(self.catalogue, requete('H100-80GB'))
        long = estimate_cost(self.catalogue, requete('H100-80GB', seq_len_override=512))
        self.assertLess(long.max_batch_size, court.max_batch_size)

    def test_epoques_nulles(self):
        with self.assertRaises(ErreurValidation) as ctx:
            requete(epochs=0)
        self.assertEqual(ctx.exception.champ, 'epochs')

    def test_couple_non_calibre(self):
        with self.assertRaises(CoefficientsManquants) as ctx:
            estimate_cost(self.catalogue, requete(dataset='CS'))
        self.assertIn("'CS'", str(ctx.exception))
        self.assertIn("'A40'", str(ctx.exception))

    def test_modele_non_calibre(self):
        with self.assertRaises(CoefficientsManquants):
            estimate_cost(catalogue_couts(batch_coeffs=None), requete())

    def test_prix_manquant(self):
        with self.assertRaises(PrixManquant):
            estimate_cost(self.catalogue, requete('A100-40GB'))

    def test_modele_trop_gros(self):
        with self.assertRaises(HorsDomaine):
            estimate_cost(self.catalogue, requete('T4'))

    def test_debit_negatif(self):
        mixtral = self.catalogue.model('Mixtral').with_throughput_coeffs(
            'GS', 'A40', ThroughputCoeffs(0.1, 1.0, -10.0, Forme.POWER))
        with self.assertRaises(HorsDomaine):
            estimate_cost(self.catalogue.with_model(mixtral), requete('A40'))

    def test_forme_demandee(self):
        with self.assertRaises(CoefficientsManquants):
            estimate_cost(self.catalogue, requete('A40', form=Forme.POWER))


# =============================================================================
# TESTS DE LA COMPARAISON
# =============================================================================

class ComparaisonGpuTest(SimpleTestCase):

    def setUp(self):
        self.catalogue = catalogue_couts()

    def test_classement(self):
        resultats = compare_gpus(self.catalogue, requete(), ['A40', 'A100-80GB', 'H100-80GB'])
        self.assertEqual([nom for nom, _ in resultats], ['H100-80GB', 'A100-80GB', 'A40'])
        couts = [e.total_usd for _, e in resultats]
        self.assertEqual(couts, sorted(couts))

    def test_erreur_nomme_le_gpu(self):
        with self.assertRaises(PrixManquant) as ctx:
            compare_gpus(self.catalogue, requete(), ['A40', 'A100-40GB'])
        self.assertIn('A100-40GB', str(ctx.exception))

    def test_un_seul_gpu(self):
        resultats = compare_gpus(self.catalogue, requete(), ['A40'])
        self.assertEqual(resultats, [('A40', estimate_cost(self.catalogue, requete('A40')))])

    def test_egalite_departagee_par_nom(self):
        coeffs = ThroughputCoeffs(0.5, 1.0, 3.0, Forme.LITERAL)
        gpus = (GpuSpec('Zeta', 80, 2.1), GpuSpec('Alpha', 80, 2.1))
        mixtral = ModelSpec('Mixtral', 47_000_000_000, MIXTRAL_MEM, 32, 8, 8, 2,
                            batch_coeffs=COEFFS_LOT)
        for gpu in gpus:
            mixtral = mixtral.with_throughput_coeffs('GS', gpu.name, coeffs)
        jumeaux = Catalog(gpus=gpus, models=(mixtral,), datasets=(GS,))
        resultats = compare_gpus(jumeaux, requete('Zeta'), ['Zeta', 'Alpha'])
        self.assertEqual([nom for nom, _ in resultats], ['Alpha', 'Zeta'])
        self.assertEqual(resultats[0][1], resultats[1][1])

    def test_liste_vide(self):
        with self.assertRaises(ErreurValidation):
            compare_gpus(self.catalogue, requete(), [])


# =============================================================================
# TESTS DE L'EXTRAPOLATION
# =============================================================================

class ExtrapolationTest(SimpleTestCase):

    def setUp(self):
        self.catalogue = catalogue_couts()

    def test_lineaire_en_requetes(self):
        base = estimate_cost(self.catalogue, requete('H100-80GB', epochs=1,
                                                     override_queries=REQUETES_EPOQUES))
        grand = estimate_cost(self.catalogue, requete('H100-80GB', epochs=1,
                                                      override_queries=2_000_000))
        extrapole = scale_by_dataset(base, REQUETES_EPOQUES, 2_000_000)
        self.assertAlmostEqual(extrapole.total_usd / grand.total_usd, 1.0, places=12)
        self.assertEqual(extrapole.max_batch_size, base.max_batch_size)
        self.assertEqual(extrapole.throughput_qps, base.throughput_qps)

    def test_meme_nombre_de_requetes(self):
        base = estimate_from_throughput(10, 4.90, 2.1, REQUETES_EPOQUES)
        self.assertEqual(scale_by_dataset(base, 15_000, 15_000), base)

    def test_h100_vers_deux_millions_de_requetes(self):
        base = estimate_from_throughput(10, 4.90, 2.1, REQUETES_EPOQUES)
        self.assertAlmostEqual(base.total_usd, 17.86, delta=0.01)
        extrapole = scale_by_dataset(base, 15_000, 2_000_000)
        self.assertAlmostEqual(extrapole.total_usd, 2381, delta=1)

    def test_requetes_invalides(self):
        base = estimate_from_throughput(1, 1.0, 1.0, 100)
        with self.assertRaises(ErreurValidation):
            scale_by_dataset(base, 0, 100)
