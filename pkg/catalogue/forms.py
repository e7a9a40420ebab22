"""
=============================================================================
FORMS.PY - Formulaires de lecture des enregistrements du catalogue
=============================================================================

Chaque enregistrement JSON (ou ligne CSV) passe par un formulaire Django
qui convertit les types (entier, réel, texte) et signale les champs
manquants. Les invariants métier (positivité, k <= E, ...) sont ensuite
vérifiés par les dataclasses de models.py.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
from django import forms

from debit.models import Forme

from .exceptions import ErreurValidation


class EnregistrementForm(forms.Form):
    """
    Base des formulaires d'enregistrement.

    Attributs:
        champs_imbriques (tuple): Clés acceptées mais lues hors formulaire
            (objets ou listes imbriqués)
    """
    champs_imbriques = ()

    @classmethod
    def champs_autorises(cls):
        return set(cls.base_fields) | set(cls.champs_imbriques)

    @classmethod
    def _verifier_nombres(cls, donnees, chemin):
        """Un champ numérique JSON doit être un nombre, pas une chaîne."""
        for nom, champ in cls.base_fields.items():
            valeur = donnees.get(nom)
            if valeur is None or not isinstance(champ, (forms.IntegerField, forms.FloatField)):
                continue
            if isinstance(valeur, bool) or not isinstance(valeur, (int, float)):
                raise ErreurValidation(f"{chemin}.{nom}", f"nombre attendu, {valeur!r} lu")

    @classmethod
    def lire(cls, donnees, chemin, texte=False):
        """
        Valide un enregistrement et retourne le dictionnaire nettoyé.

        Args:
            donnees (dict): Enregistrement brut
            chemin (str): Position dans le fichier, ex. 'gpus[2]'
            texte (bool): Valeurs lues comme texte (CSV) ; sinon les champs
                numériques doivent être des nombres JSON

        Raises:
            ErreurValidation: clé inconnue, champ manquant ou mal typé
        """
        if not isinstance(donnees, dict):
            raise ErreurValidation(chemin, "objet JSON attendu")
        inconnues = sorted(set(donnees) - cls.champs_autorises())
        if inconnues:
            raise ErreurValidation(f"{chemin}.{inconnues[0]}", "clé inconnue")
        if not texte:
            cls._verifier_nombres(donnees, chemin)
        formulaire = cls(data=donnees)
        if not formulaire.is_valid():
            champ, erreurs = next(iter(formulaire.errors.as_data().items()))
            raise ErreurValidation(f"{chemin}.{champ}", erreurs[0].messages[0])
        return formulaire.cleaned_data


class GpuForm(EnregistrementForm):
    name = forms.CharField()
    memory_gib = forms.FloatField()
    hourly_price_usd = forms.FloatField(required=False)
    peak_compute_tflops = forms.FloatField(required=False)
    mem_bandwidth_gbs = forms.FloatField(required=False)


class LlmForm(EnregistrementForm):
    champs_imbriques = ('batch_coeffs', 'throughput_coeffs', 'published_batch_coeffs')

    name = forms.CharField()
    param_count = forms.IntegerField()
    resident_memory_gib = forms.FloatField()
    num_layers = forms.IntegerField()
    num_moe_layers = forms.IntegerField()
    num_experts = forms.IntegerField()
    default_top_k = forms.IntegerField()


class DatasetForm(EnregistrementForm):
    name = forms.CharField()
    num_queries = forms.IntegerField()
    median_seq_len = forms.IntegerField()
    task_tag = forms.CharField(required=False)


class SampleForm(EnregistrementForm):
    gpu = forms.CharField()
    model = forms.CharField()
    dataset = forms.CharField()
    sparsity = forms.FloatField()
    batch_size = forms.IntegerField()
    throughput_qps = forms.FloatField()


class ObservationForm(EnregistrementForm):
    gpu = forms.CharField()
    model = forms.CharField()
    dataset = forms.CharField()
    sparsity = forms.FloatField()
    observed_max_bs = forms.IntegerField()


class BatchCoeffsForm(EnregistrementForm):
    c0 = forms.FloatField()
    c1 = forms.FloatField()


class ThroughputCoeffsForm(EnregistrementForm):
    dataset = forms.CharField()
    gpu = forms.CharField()
    form = forms.ChoiceField(choices=Forme.choices)
    c2 = forms.FloatField()
    c3 = forms.FloatField()
    c4 = forms.FloatField()
