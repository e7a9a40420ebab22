"""
=============================================================================
TESTS.PY - Tests de l'application Catalogue
=============================================================================

Tests couverts :
    - Chargement du catalogue de référence
    - Erreurs de lecture et de validation (fichier, champ, référence)
    - Sérialisation : load -> save -> load est un point fixe
    - Sparsité k / E
    - Mesures au format CSV

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import copy
import io
import json
import tempfile
from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase

from debit.models import Forme, ThroughputCoeffs
from lots.models import BatchCoeffs

from .exceptions import ErreurLecture, ErreurValidation, ReferenceManquante
from .models import ProfileSample
from .services import (
    catalog_from_dict, catalog_to_dict, load_catalog, load_samples_csv, save_catalog,
    sparsity_of, write_samples_csv,
)


# =============================================================================
# HELPERS
# =============================================================================

def document_reference():
    chemin = settings.ESTIMATEUR['CATALOGUE_DEFAUT']
    return json.loads(Path(chemin).read_text(encoding='utf-8'))


class DossierTemporaireMixin:
    """Fournit self.dossier, supprimé après chaque test."""

    def setUp(self):
        super().setUp()
        temporaire = tempfile.TemporaryDirectory()
        self.addCleanup(temporaire.cleanup)
        self.dossier = Path(temporaire.name)

    def ecrire(self, nom, contenu):
        chemin = self.dossier / nom
        if not isinstance(contenu, str):
            contenu = json.dumps(contenu)
        chemin.write_text(contenu, encoding='utf-8')
        return chemin


# =============================================================================
# TESTS DU CHARGEMENT
# =============================================================================

class CatalogueReferenceTest(SimpleTestCase):
    """Le catalogue livré avec l'outil se charge sans erreur."""

    def setUp(self):
        self.catalogue = load_catalog(settings.ESTIMATEUR['CATALOGUE_DEFAUT'])

    def test_contenu(self):
        self.assertEqual(len(self.catalogue.gpus), 4)
        self.assertEqual(len(self.catalogue.models), 2)
        self.assertEqual(len(self.catalogue.datasets), 4)
        self.assertEqual(len(self.catalogue.samples), 3)
        self.assertEqual(len(self.catalogue.batch_observations), 8)

    def test_recherche_par_nom(self):
        self.assertEqual(self.catalogue.gpu('A40').memory_gib, 48.0)
        self.assertEqual(self.catalogue.model('Mixtral').resident_memory_gib, 23.35)
        self.assertEqual(self.catalogue.dataset('MATH').median_seq_len, 174)

    def test_gpu_inconnu(self):
        with self.assertRaises(ReferenceManquante) as ctx:
            self.catalogue.gpu('V100')
        self.assertIn('V100', str(ctx.exception))

    def test_prix_optionnel(self):
        self.assertIsNone(self.catalogue.gpu('A100-40GB').hourly_price_usd)
        self.assertEqual(self.catalogue.gpu('H100-80GB').hourly_price_usd, 2.1)

    def test_coefficients_publies_conserves(self):
        mixtral = self.catalogue.model('Mixtral')
        self.assertEqual(mixtral.published_batch_coeffs, BatchCoeffs(82.0, 0.95))
        self.assertIsNone(mixtral.batch_coeffs)

    def test_observations_par_modele(self):
        observations = self.catalogue.observations_for('BlackMamba')
        self.assertEqual([o.observed_max_bs for o in observations], [6, 20, 2, 8])


class CatalogueErreursTest(DossierTemporaireMixin, SimpleTestCase):
    """Chaque erreur nomme le fichier ou le champ fautif."""

    def test_fichier_absent(self):
        chemin = self.dossier / 'absent.json'
        with self.assertRaises(ErreurLecture) as ctx:
            load_catalog(chemin)
        self.assertIn(str(chemin), str(ctx.exception))

    def test_json_invalide_position(self):
        chemin = self.ecrire('casse.json', '{\n  "gpus": [,]\n}')
        with self.assertRaises(ErreurLecture) as ctx:
            load_catalog(chemin)
        self.assertEqual(ctx.exception.ligne, 2)
        self.assertIsNotNone(ctx.exception.colonne)

    def test_memoire_negative(self):
        document = document_reference()
        document['gpus'][0]['memory_gib'] = -1
        with self.assertRaises(ErreurValidation) as ctx:
            load_catalog(self.ecrire('c.json', document))
        self.assertEqual(ctx.exception.champ, 'gpus[0].memory_gib')

    def test_cle_inconnue(self):
        document = document_reference()
        document['datasets'][1]['couleur'] = 'bleu'
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'datasets[1].couleur')

    def test_section_inconnue(self):
        document = document_reference()
        document['prix'] = []
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'prix')

    def test_top_k_superieur_aux_experts(self):
        document = document_reference()
        document['models'][0]['default_top_k'] = 9
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'models[0].default_top_k')

    def test_entier_attendu(self):
        document = document_reference()
        document['datasets'][0]['median_seq_len'] = 79.5
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'datasets[0].median_seq_len')

    def test_sparsite_hors_intervalle(self):
        document = document_reference()
        document['samples'][0]['sparsity'] = 0.0
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'samples[0].sparsity')

    def test_reference_manquante(self):
        document = document_reference()
        document['batch_observations'][0]['gpu'] = 'V100'
        with self.assertRaises(ReferenceManquante) as ctx:
            catalog_from_dict(document)
        self.assertIn('V100', str(ctx.exception))
        self.assertIn('batch_observations[0]', str(ctx.exception))

    def test_nom_en_double(self):
        document = document_reference()
        document['datasets'].append(copy.deepcopy(document['datasets'][0]))
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'datasets[4].name')

    def test_encodage_invalide(self):
        chemin = self.dossier / 'latin1.json'
        chemin.write_bytes(b'{"gpus": [{"name": "A\xe9", "memory_gib": 48}]}')
        with self.assertRaises(ErreurLecture) as ctx:
            load_catalog(chemin)
        self.assertIn(str(chemin), str(ctx.exception))

    def test_chaine_au_lieu_d_un_reel(self):
        document = document_reference()
        document['gpus'][0]['memory_gib'] = '48'
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'gpus[0].memory_gib')

    def test_chaine_au_lieu_d_un_entier(self):
        document = document_reference()
        document['datasets'][0]['num_queries'] = '15000'
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'datasets[0].num_queries')

    def test_booleen_au_lieu_d_un_nombre(self):
        document = document_reference()
        document['models'][0]['num_experts'] = True
        with self.assertRaises(ErreurValidation) as ctx:
            catalog_from_dict(document)
        self.assertEqual(ctx.exception.champ, 'models[0].num_experts')

    def test_sections_absentes_acceptees(self):
        catalogue = catalog_from_dict({'gpus': [{'name': 'A40', 'memory_gib': 48}]})
        self.assertEqual(catalogue.models, ())


# =============================================================================
# TESTS DE LA SÉRIALISATION
# =============================================================================

class CatalogueSerialisationTest(DossierTemporaireMixin, SimpleTestCase):
    """load -> save -> load redonne le même catalogue."""

    def setUp(self):
        super().setUp()
        self.catalogue = load_catalog(settings.ESTIMATEUR['CATALOGUE_DEFAUT'])

    def test_point_fixe(self):
        chemin = self.dossier / 'copie.json'
        save_catalog(self.catalogue, chemin)
        recharge = load_catalog(chemin)
        self.assertEqual(recharge, self.catalogue)
        self.assertEqual(catalog_to_dict(recharge), catalog_to_dict(self.catalogue))

    def test_octets_identiques_apres_deux_sauvegardes(self):
        premier, second = self.dossier / 'a.json', self.dossier / 'b.json'
        save_catalog(self.catalogue, premier)
        save_catalog(load_catalog(premier), second)
        self.assertEqual(premier.read_bytes(), second.read_bytes())

    def test_coefficients_persistes(self):
        mixtral = self.catalogue.model('Mixtral')
        mixtral = mixtral.with_batch_coeffs(BatchCoeffs(8.0, 0.93))
        mixtral = mixtral.with_throughput_coeffs(
            'CS', 'A40', ThroughputCoeffs(0.67, 1.0, 0.37, Forme.LITERAL))
        mixtral = mixtral.with_throughput_coeffs(
            'CS', 'A40', ThroughputCoeffs(0.6, 0.8, 0.4, Forme.POWER))
        catalogue = self.catalogue.with_model(mixtral)

        chemin = self.dossier / 'calibre.json'
        save_catalog(catalogue, chemin)
        recharge = load_catalog(chemin)

        self.assertEqual(recharge, catalogue)
        modele = recharge.model('Mixtral')
        self.assertEqual(modele.batch_coeffs, BatchCoeffs(8.0, 0.93))
        self.assertEqual(modele.coeffs_debit('CS', 'A40').form, Forme.POWER)
        self.assertEqual(modele.coeffs_debit('CS', 'A40', Forme.LITERAL).c2, 0.67)
        self.assertIsNone(modele.coeffs_debit('GS', 'A40'))

    def test_fin_de_ligne_finale(self):
        chemin = self.dossier / 'c.json'
        save_catalog(self.catalogue, chemin)
        self.assertTrue(chemin.read_text(encoding='utf-8').endswith('}\n'))


# =============================================================================
# TESTS DE LA SPARSITÉ
# =============================================================================

class SparsiteTest(SimpleTestCase):

    def setUp(self):
        self.mixtral = load_catalog(settings.ESTIMATEUR['CATALOGUE_DEFAUT']).model('Mixtral')

    def test_sparse(self):
        self.assertEqual(sparsity_of(self.mixtral, 2), 0.25)

    def test_dense(self):
        self.assertEqual(sparsity_of(self.mixtral, 8), 1.0)

    def test_k_trop_grand(self):
        with self.assertRaises(ErreurValidation):
            sparsity_of(self.mixtral, 9)

    def test_k_nul(self):
        with self.assertRaises(ErreurValidation):
            sparsity_of(self.mixtral, 0)


# =============================================================================
# TESTS DES MESURES CSV
# =============================================================================

class MesuresCsvTest(DossierTemporaireMixin, SimpleTestCase):

    ENTETE = 'gpu,model,dataset,sparsity,batch_size,throughput_qps\n'

    def test_lecture(self):
        chemin = self.ecrire('m.csv', self.ENTETE + 'A40,Mixtral,CS,0.25,2,0.7\n')
        mesures = load_samples_csv(chemin)
        self.assertEqual(mesures, [ProfileSample('A40', 'Mixtral', 'CS', 0.25, 2, 0.7)])

    def test_ecriture_relue(self):
        mesures = [ProfileSample('A40', 'Mixtral', 'CS', 0.25, 1, 0.368),
                   ProfileSample('A40', 'Mixtral', 'CS', 1.0, 8, 1.0 / 3.0)]
        flux = io.StringIO()
        write_samples_csv(mesures, flux)
        self.assertTrue(flux.getvalue().startswith(self.ENTETE))
        self.assertEqual(load_samples_csv(self.ecrire('m.csv', flux.getvalue())), mesures)

    def test_entete_reordonne(self):
        chemin = self.ecrire('m.csv', 'model,gpu,dataset,sparsity,batch_size,throughput_qps\n')
        with self.assertRaises(ErreurLecture) as ctx:
            load_samples_csv(chemin)
        self.assertEqual(ctx.exception.ligne, 1)

    def test_ligne_invalide_numerotee(self):
        chemin = self.ecrire('m.csv', self.ENTETE
                             + 'A40,Mixtral,CS,0.25,2,0.7\n'
                             + 'A40,Mixtral,CS,0.25,deux,0.7\n')
        with self.assertRaises(ErreurLecture) as ctx:
            load_samples_csv(chemin)
        self.assertEqual(ctx.exception.ligne, 3)
        self.assertIn('ligne 3', str(ctx.exception))

    def test_debit_negatif(self):
        chemin = self.ecrire('m.csv', self.ENTETE + 'A40,Mixtral,CS,0.25,2,-1\n')
        with self.assertRaises(ErreurLecture) as ctx:
            load_samples_csv(chemin)
        self.assertEqual(ctx.exception.ligne, 2)

    def test_encodage_invalide(self):
        chemin = self.dossier / 'latin1.csv'
        chemin.write_bytes(self.ENTETE.encode() + b'A40,Mixtral,CS\xe9,0.25,2,0.7\n')
        with self.assertRaises(ErreurLecture) as ctx:
            load_samples_csv(chemin)
        self.assertIn(str(chemin), str(ctx.exception))
