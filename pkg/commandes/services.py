"""
Rendu des résultats des commandes.

- table : colonnes alignées, réels à CHIFFRES_SIGNIFICATIFS chiffres
- csv   : une section = un en-tête + ses lignes ; réels en pleine précision
- json  : {section: [{colonne: valeur}, ...]} ; réels en pleine précision

csv et json portent exactement les mêmes valeurs numériques.
"""

import csv
import io
import json

from django.conf import settings

from .models import FormatSortie


def formater_nombre(valeur, chiffres=None):
    """Texte d'une cellule du format table."""
    if valeur is None:
        return '-'
    if isinstance(valeur, bool):
        return 'oui' if valeur else 'non'
    if isinstance(valeur, float):
        chiffres = chiffres or settings.ESTIMATEUR['CHIFFRES_SIGNIFICATIFS']
        return f"{valeur:.{chiffres}g}"
    return str(valeur)


def _rendre_table(sections):
    blocs = []
    for section in sections:
        cellules = [[formater_nombre(v) for v in ligne] for ligne in section.lignes]
        largeurs = [
            max([len(colonne)] + [len(ligne[i]) for ligne in cellules])
            for i, colonne in enumerate(section.colonnes)
        ]
        # Texte à gauche, nombres à droite
        a_droite = [
            any(isinstance(ligne[i], (int, float)) and not isinstance(ligne[i], bool)
                for ligne in section.lignes)
            for i in range(len(section.colonnes))
        ]

        def aligner(textes):
            return '  '.join(
                t.rjust(largeurs[i]) if a_droite[i] else t.ljust(largeurs[i])
                for i, t in enumerate(textes)
            ).rstrip()

        lignes = [section.nom, aligner(section.colonnes),
                  '  '.join('-' * l for l in largeurs)]
        lignes += [aligner(ligne) for ligne in cellules]
        blocs.append('\n'.join(lignes))
    return '\n\n'.join(blocs) + '\n'


def _rendre_csv(sections):
    flux = io.StringIO()
    writer = csv.writer(flux, lineterminator='\n')
    for i, section in enumerate(sections):
        if i:
            flux.write('\n')
        if len(sections) > 1:
            flux.write(f"# {section.nom}\n")
        writer.writerow(section.colonnes)
        for ligne in section.lignes:
            writer.writerow(['' if v is None else v for v in ligne])
    return flux.getvalue()


def _rendre_json(sections):
    document = {
        section.nom: [dict(zip(section.colonnes, ligne)) for ligne in section.lignes]
        for section in sections
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + '\n'


RENDUS = {
    FormatSortie.TABLE: _rendre_table,
    FormatSortie.CSV: _rendre_csv,
    FormatSortie.JSON: _rendre_json,
}


def rendre(sections, format_sortie=FormatSortie.TABLE):
    """
    Met en forme une liste de sections.

    Args:
        sections (list[Section]): Résultats de la commande
        format_sortie (str): 'table', 'csv' ou 'json'

    Returns:
        str: Texte terminé par un saut de ligne
    """
    return RENDUS[FormatSortie(format_sortie)](list(sections))
