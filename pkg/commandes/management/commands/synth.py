"""
Génère des mesures de débit synthétiques (modèle roofline).

Usage:
    python manage.py synth --batches 1 2 4 8 16 --sparsities 0.25 1.0 --sigma 0.05 --seed 7 --format csv
    python manage.py synth ... --output mesures.csv

La sortie csv a exactement le format lu par `fit --samples`.
"""
from pathlib import Path

from catalogue.exceptions import ErreurLecture
from catalogue.services import ENTETE_MESURES, write_samples_csv
from commandes.base import CommandeEstimateur, RooflineMixin
from commandes.models import Section
from synthese.services import generate_samples


class Command(RooflineMixin, CommandeEstimateur):
    help = "Mesures de débit synthétiques sur une grille (taille de lot, sparsité)"

    def ajouter_arguments(self, parser):
        self.arguments_roofline(parser)
        parser.add_argument('--batches', type=int, nargs='+', default=[1, 2, 4, 8, 16])
        parser.add_argument('--sparsities', type=float, nargs='+', default=[0.25, 1.0])
        parser.add_argument('--sigma', type=float, default=0.0,
                            help="Écart-type du bruit log-normal")
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--gpu', default='synth')
        parser.add_argument('--model', default='synth')
        parser.add_argument('--dataset', default='synth')
        parser.add_argument('--output', default=None, help="Écrit aussi les mesures dans ce fichier")

    def executer(self, **options):
        mesures = generate_samples(
            self.construire_roofline(options), options['batches'], options['sparsities'],
            options['sigma'], options['seed'],
            gpu=options['gpu'], model=options['model'], dataset=options['dataset'],
        )
        if options['output']:
            try:
                with Path(options['output']).open('w', newline='', encoding='utf-8') as flux:
                    write_samples_csv(mesures, flux)
            except OSError as erreur:
                raise ErreurLecture(f"écriture impossible ({erreur.strerror})",
                                    options['output']) from None

        return [Section('samples', ENTETE_MESURES, tuple(
            (m.gpu, m.model, m.dataset, m.sparsity, m.batch_size, m.throughput_qps)
            for m in mesures
        ))]
