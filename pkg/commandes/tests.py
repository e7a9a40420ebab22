"""
=============================================================================
TESTS.PY - Tests de l'application Commandes
=============================================================================

Tests couverts :
    - Rendu : table, csv, json
    - Commandes de gestion : calibrate_batch, fit, predict, project, cost,
      compare, synth, sweep, breakdown, route
    - Codes de sortie : 1 pour une erreur du modèle, 2 pour une erreur d'entrée

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import csv
import io
import json
import math
import tempfile
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from catalogue.models import ProfileSample
from catalogue.services import load_catalog, load_samples_csv, save_catalog, write_samples_csv
from debit.models import Forme, ThroughputCoeffs
from debit.services import predict_throughput
from lots.models import BatchCoeffs

from .models import FormatSortie, Section
from .services import formater_nombre, rendre


# =============================================================================
# HELPERS
# =============================================================================

# Ordonnées à l'origine du débit de Mixtral sur GS, forme littérale (C2 = 0.5, C3 = 1)
ORDONNEES_GS = {'A40': 0.0, 'A100-80GB': 1.5, 'H100-80GB': 3.0}


class CommandeMixin:
    """Dossier temporaire et exécution des commandes avec capture de la sortie."""

    def setUp(self):
        super().setUp()
        temporaire = tempfile.TemporaryDirectory()
        self.addCleanup(temporaire.cleanup)
        self.dossier = Path(temporaire.name)

    def lancer(self, *args):
        sortie = io.StringIO()
        call_command(*args, stdout=sortie, stderr=io.StringIO())
        return sortie.getvalue()

    def lancer_json(self, *args):
        return json.loads(self.lancer(*args, '--format', 'json'))

    def code_erreur(self, *args):
        with self.assertRaises(CommandError) as ctx:
            self.lancer(*args)
        return ctx.exception

    def document_reference(self):
        return json.loads(Path(settings.ESTIMATEUR['CATALOGUE_DEFAUT']).read_text(encoding='utf-8'))

    def ecrire_document(self, document, nom='catalogue.json'):
        chemin = self.dossier / nom
        chemin.write_text(json.dumps(document), encoding='utf-8')
        return str(chemin)

    def catalogue_calibre(self):
        """Copie du catalogue de référence avec Mixtral calibré sur GS."""
        catalogue = load_catalog(settings.ESTIMATEUR['CATALOGUE_DEFAUT'])
        mixtral = catalogue.model('Mixtral').with_batch_coeffs(BatchCoeffs(8, 0.93))
        for gpu, c4 in ORDONNEES_GS.items():
            mixtral = mixtral.with_throughput_coeffs(
                'GS', gpu, ThroughputCoeffs(0.5, 1.0, c4, Forme.LITERAL))
        chemin = self.dossier / 'calibre.json'
        save_catalog(catalogue.with_model(mixtral), chemin)
        return str(chemin)


# =============================================================================
# TESTS DU RENDU
# =============================================================================

class RenduTest(SimpleTestCase):

    SECTION = Section('s', ('nom', 'valeur'), (('a', 1.5), ('bb', 10)))

    def test_formater_nombre(self):
        self.assertEqual(formater_nombre(1 / 3), '0.3333')
        self.assertEqual(formater_nombre(12), '12')
        self.assertEqual(formater_nombre(None), '-')
        self.assertEqual(formater_nombre(True), 'oui')
        self.assertEqual(formater_nombre(123456.0), '1.235e+05')

    def test_table(self):
        attendu = 's\nnom  valeur\n---  ------\na       1.5\nbb       10\n'
        self.assertEqual(rendre([self.SECTION], FormatSortie.TABLE), attendu)

    def test_table_plusieurs_sections(self):
        texte = rendre([self.SECTION, Section('t', ('x',), ((1,),))], 'table')
        self.assertIn('\n\nt\n', texte)

    def test_csv_pleine_precision(self):
        texte = rendre([Section('s', ('x',), ((1 / 3,),))], 'csv')
        self.assertEqual(float(texte.splitlines()[1]), 1 / 3)

    def test_csv_plusieurs_sections(self):
        texte = rendre([self.SECTION, Section('t', ('x',), ((None,),))], 'csv')
        self.assertEqual(texte, '# s\nnom,valeur\na,1.5\nbb,10\n\n# t\nx\n""\n')

    def test_json(self):
        self.assertEqual(json.loads(rendre([self.SECTION], 'json')),
                         {'s': [{'nom': 'a', 'valeur': 1.5}, {'nom': 'bb', 'valeur': 10}]})


# =============================================================================
# TESTS DE LA CALIBRATION
# =============================================================================

class CalibrateBatchCommandeTest(CommandeMixin, SimpleTestCase):

    def test_mixtral(self):
        resultat = self.lancer_json('calibrate_batch', '--model', 'Mixtral')
        coefficients = resultat['coefficients'][0]
        self.assertEqual(coefficients['exact_matches'], 4)
        self.assertEqual(coefficients['max_abs_residual'], 0)
        self.assertEqual([r['predicted'] for r in resultat['residus']], [2, 8, 1, 3])

    def test_table(self):
        self.assertIn('exact_matches', self.lancer('calibrate_batch', '--model', 'Mixtral'))

    def test_enregistrement(self):
        chemin = self.ecrire_document(self.document_reference())
        self.lancer('calibrate_batch', '--model', 'Mixtral', '--catalog', chemin, '--save')
        self.assertIsNotNone(load_catalog(chemin).model('Mixtral').batch_coeffs)

    def test_catalogue_absent(self):
        chemin = str(self.dossier / 'absent.json')
        erreur = self.code_erreur('calibrate_batch', '--model', 'Mixtral', '--catalog', chemin)
        self.assertEqual(erreur.returncode, 2)
        self.assertIn(chemin, str(erreur))

    def test_modele_inconnu(self):
        erreur = self.code_erreur('calibrate_batch', '--model', 'Llama')
        self.assertEqual(erreur.returncode, 2)

    def test_modele_sans_observation(self):
        document = self.document_reference()
        document['batch_observations'] = [o for o in document['batch_observations']
                                          if o['model'] != 'BlackMamba']
        chemin = self.ecrire_document(document)
        erreur = self.code_erreur('calibrate_batch', '--model', 'BlackMamba', '--catalog', chemin)
        self.assertEqual(erreur.returncode, 1)
        self.assertIn('BlackMamba', str(erreur))


# =============================================================================
# TESTS DE L'AJUSTEMENT
# =============================================================================

class FitCommandeTest(CommandeMixin, SimpleTestCase):

    ATTENDU = ThroughputCoeffs(0.6, 0.7, 0.3, Forme.POWER)

    def ecrire_mesures(self):
        mesures = [ProfileSample('A40', 'Mixtral', 'CS', s, bs,
                                 predict_throughput(self.ATTENDU, bs, s))
                   for bs in (1, 2, 4, 8, 16) for s in (0.25, 1.0)]
        chemin = self.dossier / 'mesures.csv'
        with chemin.open('w', newline='', encoding='utf-8') as flux:
            write_samples_csv(mesures, flux)
        return str(chemin)

    def test_mesures_exactes(self):
        ajustement = self.lancer_json('fit', '--samples', self.ecrire_mesures())['ajustements'][0]
        self.assertLess(ajustement['rmse'], 1e-9)
        self.assertAlmostEqual(ajustement['c3'], 0.7, delta=1e-6)
        self.assertEqual(ajustement['samples'], 10)
        self.assertEqual(ajustement['form'], 'power')

    def test_enregistrement(self):
        catalogue = self.ecrire_document(self.document_reference())
        self.lancer('fit', '--samples', self.ecrire_mesures(), '--catalog', catalogue, '--save')
        coeffs = load_catalog(catalogue).model('Mixtral').coeffs_debit('CS', 'A40')
        self.assertAlmostEqual(coeffs.c2, 0.6, delta=1e-6)

    def test_entete_reordonnee(self):
        chemin = self.dossier / 'desordre.csv'
        chemin.write_text('model,gpu,dataset,sparsity,batch_size,throughput_qps\n'
                          'Mixtral,A40,CS,0.25,1,0.3\n', encoding='utf-8')
        self.assertEqual(self.code_erreur('fit', '--samples', str(chemin)).returncode, 2)

    def test_fichier_vide(self):
        chemin = self.dossier / 'vide.csv'
        chemin.write_text('gpu,model,dataset,sparsity,batch_size,throughput_qps\n',
                          encoding='utf-8')
        self.assertEqual(self.code_erreur('fit', '--samples', str(chemin)).returncode, 2)

    def test_ajustement_impossible(self):
        chemin = self.dossier / 'une.csv'
        chemin.write_text('gpu,model,dataset,sparsity,batch_size,throughput_qps\n'
                          'A40,Mixtral,CS,0.25,1,0.3\n', encoding='utf-8')
        self.assertEqual(self.code_erreur('fit', '--samples', str(chemin)).returncode, 1)

    def test_mesures_du_catalogue(self):
        ajustements = self.lancer_json('fit', '--form', 'literal')['ajustements']
        self.assertEqual(len(ajustements), 1)
        ajustement = ajustements[0]
        self.assertEqual((ajustement['gpu'], ajustement['model'], ajustement['dataset']),
                         ('A40', 'Mixtral', 'CS'))
        self.assertEqual(ajustement['samples'], 3)
        self.assertLessEqual(ajustement['rmse'], 0.1)

    def test_mesures_du_catalogue_enregistrees(self):
        catalogue = self.ecrire_document(self.document_reference())
        self.lancer('fit', '--form', 'literal', '--catalog', catalogue, '--save')
        coeffs = load_catalog(catalogue).model('Mixtral').coeffs_debit('CS', 'A40', Forme.LITERAL)
        self.assertIsNotNone(coeffs)

    def test_catalogue_sans_mesures(self):
        document = self.document_reference()
        document['samples'] = []
        catalogue = self.ecrire_document(document)
        self.assertEqual(self.code_erreur('fit', '--catalog', catalogue).returncode, 2)

    def test_encodage_invalide(self):
        chemin = self.dossier / 'latin1.csv'
        chemin.write_bytes(b'gpu,model,dataset,sparsity,batch_size,throughput_qps\n'
                           b'A40,Mixtral,CS\xe9,0.25,1,0.3\n')
        erreur = self.code_erreur('fit', '--samples', str(chemin))
        self.assertEqual(erreur.returncode, 2)
        self.assertIn(str(chemin), str(erreur))


# =============================================================================
# TESTS DE LA PRÉDICTION ET DE LA PROJECTION
# =============================================================================

class PredictCommandeTest(CommandeMixin, SimpleTestCase):

    def test_taille_maximale(self):
        catalogue = self.catalogue_calibre()
        prediction = self.lancer_json('predict', '--model', 'Mixtral', '--dataset', 'GS',
                                      '--gpu', 'H100-80GB', '--catalog', catalogue)['prediction'][0]
        self.assertEqual(prediction['sparsity'], 0.25)
        self.assertEqual(prediction['max_batch_size'], 10)
        self.assertEqual(prediction['batch_size'], 10)
        self.assertAlmostEqual(prediction['throughput_qps'], 0.5 * math.log(40) + 3.0)

    def test_taille_imposee(self):
        catalogue = self.catalogue_calibre()
        prediction = self.lancer_json('predict', '--model', 'Mixtral', '--dataset', 'GS',
                                      '--gpu', 'H100-80GB', '--batch-size', '2',
                                      '--catalog', catalogue)['prediction'][0]
        self.assertEqual(prediction['batch_size'], 2)
        self.assertAlmostEqual(prediction['throughput_qps'], 0.5 * math.log(8) + 3.0)

    def test_modele_non_calibre(self):
        erreur = self.code_erreur('predict', '--model', 'Mixtral', '--dataset', 'GS',
                                  '--gpu', 'A40')
        self.assertEqual(erreur.returncode, 1)


class ProjectCommandeTest(CommandeMixin, SimpleTestCase):

    def test_projection(self):
        projection = self.lancer_json('project', '--model', 'Mixtral', '--dataset', 'CS',
                                      '--mem', '16', '48', '96',
                                      '--catalog', self.catalogue_calibre())['projection']
        self.assertEqual([p['max_batch_size'] for p in projection], [0, 8, 24])

    def test_modele_non_calibre(self):
        erreur = self.code_erreur('project', '--model', 'Mixtral', '--dataset', 'CS',
                                  '--mem', '48')
        self.assertEqual(erreur.returncode, 1)


# =============================================================================
# TESTS DES COÛTS
# =============================================================================

class CoutCommandeTest(CommandeMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        self.catalogue = self.catalogue_calibre()

    def arguments(self, *autres):
        return ('--model', 'Mixtral', '--dataset', 'GS', '--epochs', '10',
                '--queries', '15000', '--catalog', self.catalogue, *autres)

    def test_cout(self):
        ligne = self.lancer_json('cost', *self.arguments('--gpu', 'H100-80GB'))['couts'][0]
        debit = 0.5 * math.log(40) + 3.0
        self.assertEqual(ligne['max_batch_size'], 10)
        self.assertAlmostEqual(ligne['wall_hours'], 150_000 / debit / 3600)
        self.assertAlmostEqual(ligne['total_usd'], 150_000 / debit / 3600 * 2.1)

    def test_csv_et_json_identiques(self):
        arguments = self.arguments('--gpu', 'A40')
        ligne_json = self.lancer_json('cost', *arguments)['couts'][0]
        lignes_csv = list(csv.DictReader(io.StringIO(
            self.lancer('cost', *arguments, '--format', 'csv'))))
        self.assertEqual(len(lignes_csv), 1)
        for colonne in ('memory_gib', 'max_batch_size', 'throughput_qps', 'hourly_price_usd',
                        'wall_hours', 'total_usd'):
            self.assertEqual(float(lignes_csv[0][colonne]), float(ligne_json[colonne]))

    def test_epoques_nulles(self):
        erreur = self.code_erreur('cost', '--model', 'Mixtral', '--dataset', 'GS', '--gpu', 'A40',
                                  '--epochs', '0', '--catalog', self.catalogue)
        self.assertEqual(erreur.returncode, 2)

    def test_couple_non_calibre(self):
        erreur = self.code_erreur('cost', '--model', 'Mixtral', '--dataset', 'CS', '--gpu', 'A40',
                                  '--catalog', self.catalogue)
        self.assertEqual(erreur.returncode, 1)

    def test_prix_manquant(self):
        erreur = self.code_erreur('cost', *self.arguments('--gpu', 'A100-40GB'))
        self.assertEqual(erreur.returncode, 1)

    def test_comparaison(self):
        couts = self.lancer_json('compare', *self.arguments(
            '--gpus', 'A40', 'A100-80GB', 'H100-80GB'))['couts']
        self.assertEqual([c['gpu'] for c in couts], ['H100-80GB', 'A100-80GB', 'A40'])

    def test_comparaison_nomme_le_gpu(self):
        erreur = self.code_erreur('compare', *self.arguments('--gpus', 'A40', 'A100-40GB'))
        self.assertEqual(erreur.returncode, 1)
        self.assertIn('A100-40GB', str(erreur))


# =============================================================================
# TESTS DU GÉNÉRATEUR SYNTHÉTIQUE
# =============================================================================

class SynthCommandeTest(CommandeMixin, SimpleTestCase):

    ARGUMENTS = ('synth', '--sigma', '0.05', '--seed', '7', '--format', 'csv')

    def test_reproductible(self):
        self.assertEqual(self.lancer(*self.ARGUMENTS), self.lancer(*self.ARGUMENTS))

    def test_format_des_mesures(self):
        chemin = self.dossier / 'sortie.csv'
        chemin.write_text(self.lancer(*self.ARGUMENTS), encoding='utf-8')
        mesures = load_samples_csv(chemin)
        self.assertEqual(len(mesures), 10)
        self.assertEqual(mesures[0].gpu, 'synth')

    def test_fichier_de_sortie(self):
        chemin = self.dossier / 'mesures.csv'
        self.lancer(*self.ARGUMENTS, '--output', str(chemin), '--gpu', 'A40')
        self.assertEqual({m.gpu for m in load_samples_csv(chemin)}, {'A40'})

    def test_enchainement_avec_fit(self):
        chemin = self.dossier / 'mesures.csv'
        self.lancer('synth', '--output', str(chemin))
        ajustement = self.lancer_json('fit', '--samples', str(chemin))['ajustements'][0]
        self.assertEqual(ajustement['samples'], 10)
        self.assertGreater(ajustement['c3'], 0)

    def test_sigma_negatif(self):
        self.assertEqual(self.code_erreur('synth', '--sigma', '-1').returncode, 2)


class SweepCommandeTest(CommandeMixin, SimpleTestCase):

    def test_balayage(self):
        points = self.lancer_json('sweep', '--model', 'Mixtral', '--gpu', 'A40',
                                  '--seq-lens', '128', '512', '--sparsity', '0.25',
                                  '--catalog', self.catalogue_calibre())['sequences']
        self.assertEqual([p['max_batch_size'] for p in points], [5, 1])
        self.assertEqual(points[0]['tokens_per_batch'], 640)


class BreakdownCommandeTest(CommandeMixin, SimpleTestCase):

    ARGUMENTS = ('--forward', '0.3', '--backward', '0.6', '--optimizer', '0.1',
                 '--moe-share', '0.85', '--total', '10')

    def test_repartition(self):
        resultat = self.lancer_json('breakdown', *self.ARGUMENTS)
        self.assertEqual([e['stage'] for e in resultat['etapes']],
                         ['forward', 'backward', 'optimizer'])
        self.assertAlmostEqual(resultat['couches'][0]['seconds'], 7.65)

    def test_parts_invalides(self):
        erreur = self.code_erreur('breakdown', '--forward', '0.5', '--backward', '0.6',
                                  '--optimizer', '0.1', '--moe-share', '0.85', '--total', '10')
        self.assertEqual(erreur.returncode, 2)


# =============================================================================
# TESTS DU ROUTAGE
# =============================================================================

class RouteCommandeTest(CommandeMixin, SimpleTestCase):

    def ecrire_logits(self, nom='logits.csv'):
        chemin = self.dossier / nom
        chemin.write_text('2.0,1.0,0.5,0.1\n0.1,0.2,3.0,2.9\n1.0,1.0,0.0,0.0\n',
                          encoding='utf-8')
        return str(chemin)

    def test_logits_fichier(self):
        resultat = self.lancer_json('route', '--logits', self.ecrire_logits(), '--top-k', '2')
        self.assertEqual([c['count'] for c in resultat['charge']], [2, 2, 1, 1])
        statistiques = resultat['statistiques'][0]
        self.assertEqual(statistiques['tokens'], 3)
        self.assertAlmostEqual(statistiques['variance_pct'], 625 / 9, delta=1e-6)

    def test_k_superieur_aux_experts(self):
        erreur = self.code_erreur('route', '--logits', self.ecrire_logits(), '--top-k', '5')
        self.assertEqual(erreur.returncode, 2)

    def test_fichier_absent(self):
        erreur = self.code_erreur('route', '--logits', str(self.dossier / 'absent.csv'))
        self.assertEqual(erreur.returncode, 2)

    def test_encodage_invalide(self):
        chemin = self.dossier / 'latin1.csv'
        chemin.write_bytes(b'1.0,2.0\n3.0,4\xe9\n')
        erreur = self.code_erreur('route', '--logits', str(chemin))
        self.assertEqual(erreur.returncode, 2)
        self.assertIn(str(chemin), str(erreur))

    def test_synthetique_reproductible(self):
        arguments = ('route', '--tokens', '500', '--experts', '8', '--seed', '3')
        self.assertEqual(self.lancer(*arguments), self.lancer(*arguments))

    def test_comparaison_avec_biais(self):
        resultat = self.lancer_json('route', '--tokens', '2000', '--compare-skew', '3')
        comparaison = resultat['comparaison'][0]
        self.assertEqual(comparaison['dominant_expert'], 0)
        self.assertGreater(comparaison['variance_delta'], 0)
        self.assertEqual(len(resultat['ecarts']), 8)

    def test_comparaison_identique(self):
        logits = self.ecrire_logits()
        resultat = self.lancer_json('route', '--logits', logits, '--compare-logits', logits)
        self.assertEqual(resultat['comparaison'][0]['variance_delta'], 0.0)
