"""
=============================================================================
TESTS.PY - Tests de l'application Débit
=============================================================================

Tests couverts :
    - predict_throughput : formes littérale et puissance, croissance
    - fit_throughput : données exactes, invariance d'échelle, mesures de
      Mixtral sur CommonSense, cas dégénérés
    - fit_groups et rmse

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import math

from django.test import SimpleTestCase

from catalogue.exceptions import ErreurAjustement, ErreurValidation
from catalogue.models import ProfileSample

from .models import Forme, ThroughputCoeffs
from .services import fit_groups, fit_throughput, predict_throughput, rmse


# =============================================================================
# HELPERS
# =============================================================================

TAILLES = (1, 2, 4, 8, 16)
SPARSITES = (0.25, 1.0)


def mesures(coeffs, tailles=TAILLES, sparsites=SPARSITES, gpu='A40', modele='Mixtral',
            jeu='CS', echelle=1.0):
    return [
        ProfileSample(gpu, modele, jeu, s, bs, echelle * predict_throughput(coeffs, bs, s))
        for bs in tailles for s in sparsites
    ]


def mesures_mixtral_cs():
    """Mixtral sparse sur CommonSense : 0.7 req/s à bs=2, x1.9 de bs=1 à bs=8 (approx.)."""
    return [
        ProfileSample('A40', 'Mixtral', 'CS', 0.25, 1, 0.368),
        ProfileSample('A40', 'Mixtral', 'CS', 0.25, 2, 0.70),
        ProfileSample('A40', 'Mixtral', 'CS', 0.25, 8, 1.768),
    ]


# =============================================================================
# TESTS DE LA PRÉDICTION
# =============================================================================

class PredictThroughputTest(SimpleTestCase):

    def test_ordonnee(self):
        self.assertEqual(predict_throughput(ThroughputCoeffs(1, 1, 2), 1, 1.0), 2.0)

    def test_forme_litterale(self):
        coeffs = ThroughputCoeffs(0.5, 2.0, 1.0, Forme.LITERAL)
        self.assertAlmostEqual(predict_throughput(coeffs, 4, 0.25),
                               0.5 * math.log(4 / 0.5) + 1.0, places=12)

    def test_forme_puissance(self):
        coeffs = ThroughputCoeffs(0.5, 0.5, 1.0, Forme.POWER)
        self.assertAlmostEqual(predict_throughput(coeffs, 4, 0.25),
                               0.5 * math.log(8) + 1.0, places=12)

    def test_sparsite_augmente_le_debit(self):
        coeffs = ThroughputCoeffs(0.5, 0.5, 1.0, Forme.POWER)
        self.assertGreater(predict_throughput(coeffs, 4, 0.25), predict_throughput(coeffs, 4, 1.0))

    def test_croissance_stricte(self):
        for coeffs in (ThroughputCoeffs(0.7, 1.0, 0.4), ThroughputCoeffs(0.2, 0.6, 3.0, 'power')):
            precedent = predict_throughput(coeffs, 1, 0.25)
            for bs in range(2, 1025):
                courant = predict_throughput(coeffs, bs, 0.25)
                self.assertGreater(courant, precedent)
                precedent = courant

    def test_taille_de_lot_invalide(self):
        with self.assertRaises(ErreurValidation):
            predict_throughput(ThroughputCoeffs(1, 1, 2), 0, 1.0)

    def test_coefficients_invalides(self):
        with self.assertRaises(ErreurValidation) as ctx:
            ThroughputCoeffs(1, 0, 2)
        self.assertEqual(ctx.exception.champ, 'c3')
        with self.assertRaises(ErreurValidation) as ctx:
            ThroughputCoeffs(1, 1, 2, 'cubique')
        self.assertEqual(ctx.exception.champ, 'form')

    def test_forme_normalisee(self):
        self.assertIs(ThroughputCoeffs(1, 1, 2, 'power').form, Forme.POWER)


# =============================================================================
# TESTS DE L'AJUSTEMENT
# =============================================================================

class AjustementExactTest(SimpleTestCase):
    """Des données sans bruit redonnent les coefficients."""

    def test_litterale(self):
        attendu = ThroughputCoeffs(0.7, 1.0, 0.4, Forme.LITERAL)
        rapport = fit_throughput(mesures(attendu), Forme.LITERAL)
        self.assertAlmostEqual(rapport.coeffs.c2, 0.7, delta=1e-6)
        self.assertEqual(rapport.coeffs.c3, 1.0)
        self.assertAlmostEqual(rapport.coeffs.c4, 0.4, delta=1e-6)
        self.assertLess(rapport.rmse, 1e-9)
        self.assertEqual(rapport.sample_count, 10)

    def test_puissance(self):
        attendu = ThroughputCoeffs(0.6, 0.7, 0.3, Forme.POWER)
        rapport = fit_throughput(mesures(attendu), Forme.POWER)
        self.assertAlmostEqual(rapport.coeffs.c2, 0.6, delta=1e-6)
        self.assertAlmostEqual(rapport.coeffs.c3, 0.7, delta=1e-6)
        self.assertAlmostEqual(rapport.coeffs.c4, 0.3, delta=1e-6)
        self.assertLess(rapport.rmse, 1e-9)
        self.assertEqual(rapport.coeffs.form, Forme.POWER)

    def test_invariance_d_echelle_de_c3(self):
        attendu = ThroughputCoeffs(0.6, 0.7, 0.3, Forme.POWER)
        reference = fit_throughput(mesures(attendu), Forme.POWER).coeffs
        for alpha in (0.5, 3.0):
            with self.subTest(alpha=alpha):
                mis_a_l_echelle = fit_throughput(mesures(attendu, echelle=alpha), Forme.POWER).coeffs
                self.assertAlmostEqual(mis_a_l_echelle.c3, reference.c3, delta=1e-9)
                self.assertAlmostEqual(mis_a_l_echelle.c2, alpha * reference.c2, delta=1e-9)

    def test_residus(self):
        attendu = ThroughputCoeffs(0.7, 1.0, 0.4, Forme.LITERAL)
        rapport = fit_throughput(mesures(attendu), Forme.LITERAL)
        self.assertEqual(rapport.cle, ('A40', 'Mixtral', 'CS'))
        for residu in rapport.residuals:
            self.assertAlmostEqual(residu.residual, 0.0, delta=1e-9)


class AjustementMixtralTest(SimpleTestCase):
    """Trois mesures de Mixtral sparse sur CommonSense."""

    def test_rmse_litterale(self):
        rapport = fit_throughput(mesures_mixtral_cs(), Forme.LITERAL)
        self.assertLessEqual(rapport.rmse, 0.1)
        self.assertGreater(rapport.coeffs.c2, 0)

    def test_rmse_coherente(self):
        rapport = fit_throughput(mesures_mixtral_cs(), Forme.LITERAL)
        self.assertAlmostEqual(rmse(rapport.coeffs, mesures_mixtral_cs()), rapport.rmse, places=12)

    def test_puissance_exige_deux_sparsites(self):
        with self.assertRaises(ErreurAjustement) as ctx:
            fit_throughput(mesures_mixtral_cs(), Forme.POWER)
        self.assertIn('sparsity', str(ctx.exception))


class AjustementErreursTest(SimpleTestCase):

    def test_aucune_mesure(self):
        with self.assertRaises(ErreurAjustement):
            fit_throughput([], Forme.LITERAL)

    def test_une_seule_taille_de_lot(self):
        donnees = [ProfileSample('A40', 'Mixtral', 'CS', s, 4, 1.0 + s) for s in (0.25, 0.5, 1.0)]
        with self.assertRaises(ErreurAjustement) as ctx:
            fit_throughput(donnees, Forme.POWER)
        self.assertIn('batch_size', str(ctx.exception))

    def test_trop_peu_de_mesures(self):
        with self.assertRaises(ErreurAjustement):
            fit_throughput(mesures_mixtral_cs()[:1], Forme.LITERAL)

    def test_configurations_melangees(self):
        donnees = mesures_mixtral_cs() + [ProfileSample('A40', 'Mixtral', 'MATH', 0.25, 1, 0.2)]
        with self.assertRaises(ErreurAjustement) as ctx:
            fit_throughput(donnees, Forme.LITERAL)
        self.assertIn('MATH', str(ctx.exception))

    def test_attenuation_negative(self):
        donnees = [
            ProfileSample('A40', 'Mixtral', 'CS', 1.0, 1, 1.0),
            ProfileSample('A40', 'Mixtral', 'CS', 1.0, 2, 1.5),
            ProfileSample('A40', 'Mixtral', 'CS', 0.25, 1, 0.8),
            ProfileSample('A40', 'Mixtral', 'CS', 0.25, 2, 1.3),
        ]
        with self.assertRaises(ErreurAjustement) as ctx:
            fit_throughput(donnees, Forme.POWER)
        self.assertIn('C3', str(ctx.exception))

    def test_pente_negative_signalee(self):
        donnees = [ProfileSample('A40', 'Mixtral', 'CS', 0.25, bs, q)
                   for bs, q in ((1, 2.0), (2, 1.5), (4, 1.0))]
        with self.assertLogs('debit.services', level='WARNING') as logs:
            rapport = fit_throughput(donnees, Forme.LITERAL)
        self.assertLess(rapport.coeffs.c2, 0)
        self.assertIn('C2', logs.output[0])

    def test_rmse_sans_mesure(self):
        with self.assertRaises(ErreurValidation):
            rmse(ThroughputCoeffs(1, 1, 1), [])


class AjustementParGroupeTest(SimpleTestCase):

    def test_un_rapport_par_configuration(self):
        donnees = (mesures(ThroughputCoeffs(0.7, 1.0, 0.4), jeu='MATH')
                   + mesures(ThroughputCoeffs(0.5, 1.0, 0.6), jeu='CS'))
        rapports = fit_groups(donnees, Forme.LITERAL)
        self.assertEqual([r.cle for r in rapports],
                         [('A40', 'Mixtral', 'CS'), ('A40', 'Mixtral', 'MATH')])
        self.assertAlmostEqual(rapports[0].coeffs.c2, 0.5, delta=1e-6)
        self.assertAlmostEqual(rapports[1].coeffs.c2, 0.7, delta=1e-6)
