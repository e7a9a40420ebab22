"""
Contrôles d'invariants partagés par les types du domaine.

Chaque fonction lève ErreurValidation en nommant le champ fautif.
"""
import math

from .exceptions import ErreurValidation


def exiger(condition, champ, message):
    if not condition:
        raise ErreurValidation(champ, message)


def exiger_fini(champ, valeur):
    exiger(isinstance(valeur, (int, float)) and not isinstance(valeur, bool)
           and math.isfinite(valeur), champ, f"nombre fini attendu, reçu {valeur!r}")


def exiger_positif(champ, valeur):
    """Valeur strictement positive."""
    exiger_fini(champ, valeur)
    exiger(valeur > 0, champ, f"doit être > 0, reçu {valeur!r}")


def exiger_positif_ou_nul(champ, valeur):
    exiger_fini(champ, valeur)
    exiger(valeur >= 0, champ, f"doit être >= 0, reçu {valeur!r}")


def exiger_entier(champ, valeur, minimum=None):
    exiger(isinstance(valeur, int) and not isinstance(valeur, bool),
           champ, f"entier attendu, reçu {valeur!r}")
    if minimum is not None:
        exiger(valeur >= minimum, champ, f"doit être >= {minimum}, reçu {valeur!r}")


def exiger_sparsite(champ, valeur):
    """Sparsité s = k/E dans l'intervalle (0, 1]."""
    exiger_fini(champ, valeur)
    exiger(0 < valeur <= 1, champ, f"doit être dans (0, 1], reçu {valeur!r}")


def exiger_fraction(champ, valeur):
    """Fraction dans [0, 1]."""
    exiger_fini(champ, valeur)
    exiger(0 <= valeur <= 1, champ, f"doit être dans [0, 1], reçu {valeur!r}")
