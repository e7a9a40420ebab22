"""
Projette la taille de lot maximale sur des capacités mémoire hypothétiques.

Usage:
    python manage.py project --model Mixtral --dataset CS --mem 48 80 100 120 [--sparsity 0.25]
"""
from catalogue.exceptions import CoefficientsManquants
from catalogue.services import sparsity_of
from commandes.base import CommandeEstimateur
from commandes.models import Section
from lots.services import project_max_batch


class Command(CommandeEstimateur):
    help = "Taille de lot maximale pour plusieurs capacités mémoire GPU"

    def ajouter_arguments(self, parser):
        self.argument_catalogue(parser)
        parser.add_argument('--model', required=True)
        parser.add_argument('--dataset', required=True)
        parser.add_argument('--sparsity', type=float, default=None)
        parser.add_argument('--mem', type=float, nargs='+', required=True,
                            help="Capacités mémoire en GiB")

    def executer(self, **options):
        catalogue = self.charger_catalogue(options)
        modele = catalogue.model(options['model'])
        jeu = catalogue.dataset(options['dataset'])
        if modele.batch_coeffs is None:
            raise CoefficientsManquants(f"modèle '{modele.name}' sans coefficients de taille de lot")
        sparsite = options['sparsity']
        if sparsite is None:
            sparsite = sparsity_of(modele, modele.default_top_k)

        projection = project_max_batch(modele.batch_coeffs, modele.resident_memory_gib,
                                       jeu.median_seq_len, sparsite, options['mem'])
        return [Section(
            'projection',
            ('model', 'dataset', 'sparsity', 'memory_gib', 'max_batch_size'),
            tuple((modele.name, jeu.name, sparsite, mem, taille) for mem, taille in projection),
        )]
