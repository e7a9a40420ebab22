"""
=============================================================================
TESTS.PY - Tests de l'application Lots
=============================================================================

Tests couverts :
    - predict_max_batch : valeurs connues, mémoire insuffisante, monotonie
    - calibrate_batch_coeffs : observations sur A40, déterminisme, erreurs
    - project_max_batch

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from catalogue.exceptions import ErreurCalibration, ErreurValidation
from catalogue.services import load_catalog

from .models import BatchCoeffs
from .services import calibrate_batch_coeffs, predict_max_batch, project_max_batch


# =============================================================================
# HELPERS
# =============================================================================

MIXTRAL_MEM = 23.35
A40_MEM = 48
COEFFS = BatchCoeffs(8, 0.93)


def catalogue_reference():
    return load_catalog(settings.ESTIMATEUR['CATALOGUE_DEFAUT'])


# =============================================================================
# TESTS DE LA PRÉDICTION
# =============================================================================

class PredictMaxBatchTest(SimpleTestCase):
    """Tailles de lot de Mixtral sur A40 avec (C0, C1) = (8, 0.93)."""

    def test_commonsense_dense(self):
        self.assertEqual(predict_max_batch(COEFFS, A40_MEM, MIXTRAL_MEM, 79, 1.0), 2)

    def test_commonsense_sparse(self):
        self.assertEqual(predict_max_batch(COEFFS, A40_MEM, MIXTRAL_MEM, 79, 0.25), 8)

    def test_math_dense(self):
        self.assertEqual(predict_max_batch(COEFFS, A40_MEM, MIXTRAL_MEM, 174, 1.0), 1)

    def test_math_sparse(self):
        self.assertEqual(predict_max_batch(COEFFS, A40_MEM, MIXTRAL_MEM, 174, 0.25), 3)

    def test_modele_trop_gros(self):
        self.assertEqual(predict_max_batch(COEFFS, 16, MIXTRAL_MEM, 79, 0.25), 0)
        self.assertEqual(predict_max_batch(COEFFS, MIXTRAL_MEM, MIXTRAL_MEM, 79, 0.25), 0)

    def test_c1_nul_ignore_la_sparsite(self):
        coeffs = BatchCoeffs(8, 0.0)
        self.assertEqual(predict_max_batch(coeffs, A40_MEM, MIXTRAL_MEM, 79, 0.25),
                         predict_max_batch(coeffs, A40_MEM, MIXTRAL_MEM, 79, 1.0))

    def test_sparsite_invalide(self):
        with self.assertRaises(ErreurValidation) as ctx:
            predict_max_batch(COEFFS, A40_MEM, MIXTRAL_MEM, 79, 0.0)
        self.assertEqual(ctx.exception.champ, 'sparsity')

    def test_seq_len_invalide(self):
        with self.assertRaises(ErreurValidation):
            predict_max_batch(COEFFS, A40_MEM, MIXTRAL_MEM, 0, 1.0)

    def test_coefficients_invalides(self):
        with self.assertRaises(ErreurValidation):
            BatchCoeffs(0, 0.5)
        with self.assertRaises(ErreurValidation):
            BatchCoeffs(8, 1.5)


class PredictMaxBatchMonotonieTest(SimpleTestCase):
    """Monotonie sur 1000 tirages aléatoires reproductibles."""

    def test_monotonie(self):
        rng = np.random.default_rng(20240601)
        for _ in range(1000):
            c0 = float(rng.uniform(0.5, 200))
            c1 = float(rng.uniform(0, 1))
            gpu = float(rng.uniform(8, 160))
            modele = float(rng.uniform(0, 100))
            seq = int(rng.integers(1, 1024))
            sparsite = float(rng.uniform(0.01, 1))
            base = predict_max_batch(BatchCoeffs(c0, c1), gpu, modele, seq, sparsite)

            self.assertGreaterEqual(base, 0)
            self.assertGreaterEqual(
                predict_max_batch(BatchCoeffs(c0 * 1.5, c1), gpu, modele, seq, sparsite), base)
            self.assertGreaterEqual(
                predict_max_batch(BatchCoeffs(c0, c1), gpu + 10, modele, seq, sparsite), base)
            self.assertLessEqual(
                predict_max_batch(BatchCoeffs(c0, c1), gpu, modele + 5, seq, sparsite), base)
            self.assertLessEqual(
                predict_max_batch(BatchCoeffs(c0, c1), gpu, modele, seq + 16, sparsite), base)
            self.assertLessEqual(
                predict_max_batch(BatchCoeffs(c0, c1), gpu, modele, seq,
                                  min(1.0, sparsite * 2)), base)


# =============================================================================
# TESTS DE LA CALIBRATION
# =============================================================================

class CalibrationTest(SimpleTestCase):

    def setUp(self):
        self.catalogue = catalogue_reference()

    def test_mixtral_exact(self):
        rapport = calibrate_batch_coeffs(self.catalogue.observations_for('Mixtral'), self.catalogue)
        self.assertEqual(rapport.max_abs_residual, 0)
        self.assertEqual(rapport.exact_matches, 4)
        self.assertEqual([r.predicted for r in rapport.residuals], [2, 8, 1, 3])

    def test_blackmamba_a_un_pres(self):
        rapport = calibrate_batch_coeffs(
            self.catalogue.observations_for('BlackMamba'), self.catalogue)
        self.assertLessEqual(rapport.max_abs_residual, 1)

    def test_deterministe(self):
        observations = self.catalogue.observations_for('Mixtral')
        premier = calibrate_batch_coeffs(observations, self.catalogue)
        second = calibrate_batch_coeffs(observations, self.catalogue)
        self.assertEqual(premier, second)

    def test_coefficients_dans_le_domaine(self):
        rapport = calibrate_batch_coeffs(self.catalogue.observations_for('Mixtral'), self.catalogue)
        self.assertGreater(rapport.coeffs.c0, 0)
        self.assertGreaterEqual(rapport.coeffs.c1, 0)
        self.assertLessEqual(rapport.coeffs.c1, 1)

    def test_score(self):
        rapport = calibrate_batch_coeffs(self.catalogue.observations_for('Mixtral'), self.catalogue)
        self.assertEqual(rapport.score, 0)

    def test_aucune_observation(self):
        with self.assertRaises(ErreurCalibration):
            calibrate_batch_coeffs([], self.catalogue)

    def test_modeles_melanges(self):
        with self.assertRaises(ErreurCalibration) as ctx:
            calibrate_batch_coeffs(self.catalogue.batch_observations, self.catalogue)
        self.assertIn('BlackMamba', str(ctx.exception))

    def test_configuration_unique_signalee(self):
        observations = self.catalogue.observations_for('Mixtral')[:1]
        with self.assertLogs('lots.services', level='WARNING') as logs:
            rapport = calibrate_batch_coeffs(observations, self.catalogue)
        self.assertIn('sous-déterminée', logs.output[0])
        self.assertEqual(rapport.max_abs_residual, 0)

    def test_observation_repetee(self):
        observation = self.catalogue.observations_for('Mixtral')[0]
        with self.assertLogs('lots.services', level='WARNING'):
            rapport = calibrate_batch_coeffs([observation, observation], self.catalogue)
        self.assertEqual(rapport.exact_matches, 2)
        self.assertEqual(rapport.max_abs_residual, 0)


# =============================================================================
# TESTS DE LA PROJECTION
# =============================================================================

class ProjectionTest(SimpleTestCase):

    def test_projection(self):
        self.assertEqual(project_max_batch(COEFFS, MIXTRAL_MEM, 79, 0.25, [48, 96]),
                         [(48, 8), (96, 24)])

    def test_memoire_insuffisante(self):
        self.assertEqual(project_max_batch(COEFFS, MIXTRAL_MEM, 79, 0.25, [16]), [(16, 0)])

    def test_grille_vide(self):
        with self.assertRaises(ErreurValidation):
            project_max_batch(COEFFS, MIXTRAL_MEM, 79, 0.25, [])
