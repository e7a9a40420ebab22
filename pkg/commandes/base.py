"""
=============================================================================
BASE.PY - Classe de base des commandes de l'estimateur
=============================================================================

Chaque commande déclare ses arguments et retourne des sections de
résultats ; la classe de base ajoute --format, met en forme la sortie
et traduit les erreurs du domaine en codes de sortie :

    0 : succès
    1 : ErreurModele (calibration, ajustement, coefficients absents...)
    2 : ErreurEntree (fichier, champ, référence, précondition)

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from catalogue.exceptions import ErreurEntree, ErreurModele
from catalogue.services import load_catalog, sparsity_of
from couts.models import CostQuery
from debit.models import Forme
from synthese.models import RooflineParams

from .models import FormatSortie, Section
from .services import rendre

logger = logging.getLogger(__name__)

CODE_ERREUR_MODELE = 1
CODE_ERREUR_ENTREE = 2


class CommandeEstimateur(BaseCommand):
    """
    Base des commandes : les sous-classes définissent ajouter_arguments()
    et executer(**options) -> list[Section].
    """

    def add_arguments(self, parser):
        self.ajouter_arguments(parser)
        parser.add_argument(
            '--format', dest='format_sortie', choices=FormatSortie.values,
            default=FormatSortie.TABLE, help="Format de sortie (défaut : table)",
        )

    def ajouter_arguments(self, parser):
        pass

    @staticmethod
    def argument_catalogue(parser):
        parser.add_argument(
            '--catalog', default=str(settings.ESTIMATEUR['CATALOGUE_DEFAUT']),
            help="Fichier catalogue JSON (défaut : catalogue de référence)",
        )

    def charger_catalogue(self, options):
        return load_catalog(options['catalog'])

    def executer(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            sections = self.executer(**options)
        except ErreurEntree as erreur:
            logger.debug(f"Erreur d'entrée : {erreur!r}")
            raise CommandError(str(erreur), returncode=CODE_ERREUR_ENTREE) from erreur
        except ErreurModele as erreur:
            logger.debug(f"Erreur du modèle : {erreur!r}")
            raise CommandError(str(erreur), returncode=CODE_ERREUR_MODELE) from erreur
        self.stdout.write(rendre(sections, options['format_sortie']), ending='')


class RequeteCoutMixin:
    """Arguments communs de cost et compare."""

    def arguments_requete(self, parser):
        self.argument_catalogue(parser)
        parser.add_argument('--model', required=True)
        parser.add_argument('--dataset', required=True)
        parser.add_argument('--sparsity', type=float, default=None,
                            help="Sparsité (défaut : k / E du modèle)")
        parser.add_argument('--epochs', type=int, default=1)
        parser.add_argument('--queries', type=int, default=None,
                            help="Remplace le nombre de requêtes du jeu de données")
        parser.add_argument('--seq-len', dest='seq_len', type=int, default=None,
                            help="Remplace la longueur médiane des séquences")
        parser.add_argument('--form', choices=Forme.values, default=None)

    def construire_requete(self, catalogue, options, gpu):
        modele = catalogue.model(options['model'])
        sparsite = options['sparsity']
        if sparsite is None:
            sparsite = sparsity_of(modele, modele.default_top_k)
        return CostQuery(
            model=modele.name, dataset=options['dataset'], gpu=gpu, sparsity=sparsite,
            epochs=options['epochs'], override_queries=options['queries'],
            seq_len_override=options['seq_len'], form=options['form'],
        )

    @staticmethod
    def section_couts(catalogue, estimations):
        return Section(
            'couts',
            ('gpu', 'memory_gib', 'max_batch_size', 'throughput_qps', 'hourly_price_usd',
             'wall_hours', 'total_usd'),
            tuple((nom, catalogue.gpu(nom).memory_gib, e.max_batch_size, e.throughput_qps,
                   e.hourly_price_usd, e.wall_hours, e.total_usd) for nom, e in estimations),
        )


class RooflineMixin:
    """Paramètres du générateur roofline, par défaut ceux de settings.ESTIMATEUR."""

    OPTIONS_ROOFLINE = (
        ('--peak-tflops', 'peak_compute_tflops', float),
        ('--bandwidth-gbs', 'mem_bandwidth_gbs', float),
        ('--weight-bytes', 'weight_bytes', float),
        ('--flops-per-token', 'flops_per_token', float),
        ('--activation-bytes', 'activation_bytes_per_token', float),
        ('--seq-len', 'seq_len', int),
        ('--moe-fraction', 'moe_flop_fraction', float),
        ('--overhead', 'fixed_overhead_s', float),
    )

    def arguments_roofline(self, parser):
        defauts = settings.ESTIMATEUR['ROOFLINE_DEFAUT']
        for option, champ, type_ in self.OPTIONS_ROOFLINE:
            parser.add_argument(option, dest=champ, type=type_, default=defauts[champ])

    def construire_roofline(self, options):
        return RooflineParams(**{champ: options[champ] for _, champ, _ in self.OPTIONS_ROOFLINE})
