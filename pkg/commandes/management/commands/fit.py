"""
Ajuste le modèle de débit sur des mesures CSV ou sur celles du catalogue.

Usage:
    python manage.py fit --samples mesures.csv [--form power|literal] [--catalog f.json --save]
    python manage.py fit --form literal [--catalog f.json] [--save]

Sans --samples, les mesures de la section "samples" du catalogue sont
ajustées. Plusieurs triplets (gpu, model, dataset) peuvent coexister :
chacun est ajusté séparément.
"""
from catalogue.exceptions import ErreurValidation
from catalogue.services import load_samples_csv, save_catalog
from commandes.base import CommandeEstimateur
from commandes.models import Section
from debit.models import Forme
from debit.services import fit_groups


class Command(CommandeEstimateur):
    help = "Ajuste les coefficients C2, C3, C4 du modèle de débit"

    def ajouter_arguments(self, parser):
        parser.add_argument('--samples', default=None,
                            help="Mesures au format CSV (défaut : mesures du catalogue)")
        parser.add_argument('--form', choices=Forme.values, default=Forme.POWER,
                            help="Forme de l'équation (défaut : power)")
        self.argument_catalogue(parser)
        parser.add_argument('--save', action='store_true',
                            help="Enregistre les coefficients dans le catalogue")

    def executer(self, **options):
        catalogue = None
        if options['samples']:
            mesures = load_samples_csv(options['samples'])
            source = options['samples']
        else:
            catalogue = self.charger_catalogue(options)
            mesures = list(catalogue.samples)
            source = options['catalog']
        if not mesures:
            raise ErreurValidation('samples', f"aucune mesure dans {source}")
        rapports = fit_groups(mesures, options['form'])

        if options['save']:
            if catalogue is None:
                catalogue = self.charger_catalogue(options)
            for rapport in rapports:
                gpu, nom_modele, jeu = rapport.cle
                catalogue.gpu(gpu)
                catalogue.dataset(jeu)
                modele = catalogue.model(nom_modele)
                catalogue = catalogue.with_model(
                    modele.with_throughput_coeffs(jeu, gpu, rapport.coeffs))
            save_catalog(catalogue, options['catalog'])

        return [Section(
            'ajustements',
            ('gpu', 'model', 'dataset', 'form', 'c2', 'c3', 'c4', 'rmse', 'samples'),
            tuple((*r.cle, r.coeffs.form.value, r.coeffs.c2, r.coeffs.c3, r.coeffs.c4,
                   r.rmse, r.sample_count) for r in rapports),
        )]
