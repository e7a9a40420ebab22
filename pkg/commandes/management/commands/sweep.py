"""
Sensibilité à la longueur de séquence : taille de lot maximale et débit.

Usage:
    python manage.py sweep --model Mixtral --gpu A40 --seq-lens 64 128 256 512 [--sparsity 0.25]
"""
from catalogue.exceptions import CoefficientsManquants
from catalogue.services import sparsity_of
from commandes.base import CommandeEstimateur, RooflineMixin
from commandes.models import Section
from synthese.services import sweep_seq_len


class Command(RooflineMixin, CommandeEstimateur):
    help = "Taille de lot maximale et débit simulé pour plusieurs longueurs de séquence"

    def ajouter_arguments(self, parser):
        self.arguments_roofline(parser)
        self.argument_catalogue(parser)
        parser.add_argument('--model', required=True)
        parser.add_argument('--gpu', required=True)
        parser.add_argument('--seq-lens', dest='seq_lens', type=int, nargs='+', required=True)
        parser.add_argument('--sparsity', type=float, default=None)

    def executer(self, **options):
        catalogue = self.charger_catalogue(options)
        modele = catalogue.model(options['model'])
        gpu = catalogue.gpu(options['gpu'])
        if modele.batch_coeffs is None:
            raise CoefficientsManquants(f"modèle '{modele.name}' sans coefficients de taille de lot")
        sparsite = options['sparsity']
        if sparsite is None:
            sparsite = sparsity_of(modele, modele.default_top_k)

        points = sweep_seq_len(self.construire_roofline(options), options['seq_lens'],
                               modele.batch_coeffs, gpu.memory_gib,
                               modele.resident_memory_gib, sparsite)
        return [Section(
            'sequences',
            ('seq_len', 'max_batch_size', 'throughput_qps', 'tokens_per_batch'),
            tuple((p.seq_len, p.max_batch, p.throughput_qps, p.tokens_per_batch) for p in points),
        )]
