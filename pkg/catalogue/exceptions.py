"""
=============================================================================
EXCEPTIONS.PY - Erreurs communes de l'Estimateur
=============================================================================

Deux familles d'erreurs, qui correspondent aux codes de sortie des
commandes de gestion :

    - ErreurEntree : fichier illisible, champ invalide, référence
      inconnue, précondition violée                   -> code 2
    - ErreurModele : le modèle analytique ne peut pas répondre
      (calibration impossible, coefficients absents, hors domaine) -> code 1

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""


class ErreurEstimateur(Exception):
    """Racine de toutes les erreurs de l'estimateur."""


# =============================================================================
# ERREURS D'ENTRÉE (code de sortie 2)
# =============================================================================

class ErreurEntree(ErreurEstimateur, ValueError):
    """Donnée d'entrée ou argument invalide."""


class ErreurLecture(ErreurEntree):
    """
    Fichier introuvable ou impossible à analyser.

    Attributs:
        chemin (str): Fichier concerné
        ligne (int | None): Ligne fautive (1-based) si connue
        colonne (int | None): Colonne fautive si connue
    """

    def __init__(self, message, chemin=None, ligne=None, colonne=None):
        self.chemin = str(chemin) if chemin is not None else None
        self.ligne = ligne
        self.colonne = colonne
        position = ''
        if self.chemin:
            position = self.chemin
            if ligne is not None:
                position += f', ligne {ligne}'
            if colonne is not None:
                position += f', colonne {colonne}'
            position += ' : '
        super().__init__(f"{position}{message}")


class ErreurValidation(ErreurEntree):
    """
    Invariant violé sur un champ.

    Attributs:
        champ (str): Chemin du champ, ex. 'models[0].resident_memory_gib'
    """

    def __init__(self, champ, message):
        self.champ = champ
        self.detail = message
        super().__init__(f"{champ} : {message}")

    def prefixer(self, prefixe):
        """Retourne la même erreur avec le chemin complet du champ."""
        return type(self)(f"{prefixe}.{self.champ}", self.detail)


class ReferenceManquante(ErreurEntree):
    """Référence vers une entité absente du catalogue."""

    def __init__(self, entite, nom, contexte=''):
        self.entite = entite
        self.nom = nom
        suffixe = f" (référencé par {contexte})" if contexte else ''
        super().__init__(f"{entite} inconnu : '{nom}'{suffixe}")


# =============================================================================
# ERREURS DU MODÈLE (code de sortie 1)
# =============================================================================

class ErreurModele(ErreurEstimateur):
    """Le modèle analytique ne peut pas produire de résultat."""


class ErreurCalibration(ErreurModele):
    """Calibration du modèle de lot impossible."""


class ErreurAjustement(ErreurModele):
    """Ajustement du modèle de débit impossible."""


class CoefficientsManquants(ErreurModele):
    """Le modèle (ou le couple jeu de données / GPU) n'est pas calibré."""


class PrixManquant(ErreurModele):
    """Le GPU n'a pas de prix horaire dans le catalogue."""


class HorsDomaine(ErreurModele):
    """La prédiction sort du domaine de validité du modèle."""
