"""
Calibre les coefficients (C0, C1) du modèle de taille de lot d'un modèle.

Usage:
    python manage.py calibrate_batch --model Mixtral [--catalog f.json] [--save]
"""
from catalogue.exceptions import ErreurCalibration
from catalogue.services import save_catalog
from commandes.base import CommandeEstimateur
from commandes.models import Section
from lots.services import calibrate_batch_coeffs


class Command(CommandeEstimateur):
    help = "Calibre le modèle de taille de lot maximale sur les observations du catalogue"

    def ajouter_arguments(self, parser):
        self.argument_catalogue(parser)
        parser.add_argument('--model', required=True, help="Modèle à calibrer")
        parser.add_argument('--save', action='store_true',
                            help="Enregistre les coefficients dans le catalogue")

    def executer(self, **options):
        catalogue = self.charger_catalogue(options)
        modele = catalogue.model(options['model'])
        observations = catalogue.observations_for(modele.name)
        if not observations:
            raise ErreurCalibration(f"aucune observation de taille de lot pour le modèle '{modele.name}'")

        rapport = calibrate_batch_coeffs(observations, catalogue)
        if options['save']:
            save_catalog(catalogue.with_model(modele.with_batch_coeffs(rapport.coeffs)),
                         options['catalog'])

        return [
            Section('coefficients', ('model', 'c0', 'c1', 'exact_matches', 'max_abs_residual'),
                    ((modele.name, rapport.coeffs.c0, rapport.coeffs.c1,
                      rapport.exact_matches, rapport.max_abs_residual),)),
            Section('residus', ('gpu', 'dataset', 'sparsity', 'observed', 'predicted', 'residual'),
                    tuple((r.observation.gpu, r.observation.dataset, r.observation.sparsity,
                           r.observation.observed_max_bs, r.predicted, r.residual)
                          for r in rapport.residuals)),
        ]
