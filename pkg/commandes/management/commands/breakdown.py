"""
Répartit la durée d'un pas de fine-tuning entre étapes et couches.

Usage:
    python manage.py breakdown --forward 0.3 --backward 0.6 --optimizer 0.1 --moe-share 0.85 --total 10
"""
from commandes.base import CommandeEstimateur
from commandes.models import Section
from synthese.models import StageShares
from synthese.services import stage_breakdown


class Command(CommandeEstimateur):
    help = "Temps par étape (forward, backward, optimiseur) et par type de couche"

    def ajouter_arguments(self, parser):
        parser.add_argument('--forward', type=float, required=True)
        parser.add_argument('--backward', type=float, required=True)
        parser.add_argument('--optimizer', type=float, required=True)
        parser.add_argument('--moe-share', dest='moe_share', type=float, required=True,
                            help="Part de forward + backward passée dans les couches MoE")
        parser.add_argument('--total', type=float, required=True, help="Durée du pas (s)")
        parser.add_argument('--full-finetuning', dest='full_finetuning', action='store_true')

    def executer(self, **options):
        parts = StageShares(
            forward=options['forward'], backward=options['backward'],
            optimizer=options['optimizer'], moe_layer_share=options['moe_share'],
            full_finetuning=options['full_finetuning'],
        )
        repartition = stage_breakdown(parts, options['total'])
        return [
            Section('etapes', ('stage', 'seconds'), tuple(repartition.etapes)),
            Section('couches', ('layer', 'seconds'), tuple(repartition.couches)),
        ]
