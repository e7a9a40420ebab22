"""
Compare le coût d'un même fine-tuning sur plusieurs GPU, du moins cher au plus cher.

Usage:
    python manage.py compare --model Mixtral --dataset GS --gpus A40 A100-80GB H100-80GB
"""
from commandes.base import CommandeEstimateur, RequeteCoutMixin
from couts.services import compare_gpus


class Command(RequeteCoutMixin, CommandeEstimateur):
    help = "Classement des GPU par coût de fine-tuning"

    def ajouter_arguments(self, parser):
        self.arguments_requete(parser)
        parser.add_argument('--gpus', nargs='+', required=True)

    def executer(self, **options):
        catalogue = self.charger_catalogue(options)
        requete = self.construire_requete(catalogue, options, options['gpus'][0])
        return [self.section_couts(catalogue, compare_gpus(catalogue, requete, options['gpus']))]
