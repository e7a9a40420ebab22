"""
Estime la durée et le coût d'un fine-tuning sur un GPU.

Usage:
    python manage.py cost --model Mixtral --dataset GS --gpu A40 --sparsity 0.25 --epochs 10
"""
from commandes.base import CommandeEstimateur, RequeteCoutMixin
from couts.services import estimate_cost


class Command(RequeteCoutMixin, CommandeEstimateur):
    help = "Coût estimé d'un fine-tuning sur un GPU"

    def ajouter_arguments(self, parser):
        self.arguments_requete(parser)
        parser.add_argument('--gpu', required=True)

    def executer(self, **options):
        catalogue = self.charger_catalogue(options)
        requete = self.construire_requete(catalogue, options, options['gpu'])
        estimation = estimate_cost(catalogue, requete)
        return [self.section_couts(catalogue, [(requete.gpu, estimation)])]
