"""
Prédit la taille de lot maximale et le débit d'une configuration.

Usage:
    python manage.py predict --model Mixtral --dataset CS --gpu A40 [--sparsity 0.25] [--batch-size 4]

Sans --sparsity, la sparsité par défaut du modèle (k / E) est utilisée ;
sans --batch-size, le débit est évalué à la taille de lot maximale.
"""
from catalogue.exceptions import CoefficientsManquants, HorsDomaine
from catalogue.services import sparsity_of
from commandes.base import CommandeEstimateur
from commandes.models import Section
from debit.models import Forme
from debit.services import predict_throughput
from lots.services import predict_max_batch


class Command(CommandeEstimateur):
    help = "Taille de lot maximale et débit prédits pour un modèle, un jeu et un GPU"

    def ajouter_arguments(self, parser):
        self.argument_catalogue(parser)
        parser.add_argument('--model', required=True)
        parser.add_argument('--dataset', required=True)
        parser.add_argument('--gpu', required=True)
        parser.add_argument('--sparsity', type=float, default=None)
        parser.add_argument('--batch-size', dest='batch_size', type=int, default=None)
        parser.add_argument('--form', choices=Forme.values, default=None)

    def executer(self, **options):
        catalogue = self.charger_catalogue(options)
        modele = catalogue.model(options['model'])
        jeu = catalogue.dataset(options['dataset'])
        gpu = catalogue.gpu(options['gpu'])
        sparsite = options['sparsity']
        if sparsite is None:
            sparsite = sparsity_of(modele, modele.default_top_k)

        if modele.batch_coeffs is None:
            raise CoefficientsManquants(f"modèle '{modele.name}' sans coefficients de taille de lot")
        taille_max = predict_max_batch(modele.batch_coeffs, gpu.memory_gib,
                                       modele.resident_memory_gib, jeu.median_seq_len, sparsite)

        taille = options['batch_size']
        if taille is None:
            if taille_max < 1:
                raise HorsDomaine(
                    f"'{modele.name}' ne tient pas sur '{gpu.name}' ({gpu.memory_gib} GiB)")
            taille = taille_max
        coeffs = modele.coeffs_debit(jeu.name, gpu.name, options['form'])
        if coeffs is None:
            raise CoefficientsManquants(
                f"couple non calibré : modèle '{modele.name}', jeu '{jeu.name}', GPU '{gpu.name}'")
        debit = predict_throughput(coeffs, taille, sparsite)

        return [Section(
            'prediction',
            ('model', 'dataset', 'gpu', 'sparsity', 'seq_len', 'max_batch_size',
             'batch_size', 'form', 'throughput_qps'),
            ((modele.name, jeu.name, gpu.name, sparsite, jeu.median_seq_len, taille_max,
              taille, coeffs.form.value, debit),),
        )]
