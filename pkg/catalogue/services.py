"""
=============================================================================
SERVICES.PY - Lecture et écriture du catalogue
=============================================================================

Fonctions principales :
    - load_catalog      : Charge et valide un catalogue JSON
    - catalog_to_dict   : Sérialise un catalogue (ordre déterministe)
    - save_catalog      : Écrit un catalogue sur disque
    - sparsity_of       : Sparsité s = k / E d'un modèle
    - load_samples_csv  : Lit des mesures de débit au format CSV
    - write_samples_csv : Écrit des mesures au même format

Format du catalogue : un document JSON avec les clés "gpus", "models",
"datasets", "samples" et "batch_observations", chacune une liste
d'enregistrements. Toute clé inconnue est refusée.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""
import csv
import json
import logging
from pathlib import Path

from debit.models import ThroughputCoeffs
from lots.models import BatchCoeffs

from .exceptions import ErreurLecture, ErreurValidation, ReferenceManquante
from .forms import (
    BatchCoeffsForm, DatasetForm, GpuForm, LlmForm, ObservationForm, SampleForm,
    ThroughputCoeffsForm,
)
from .models import (
    BatchObservation, Catalog, DatasetSpec, GpuSpec, ModelSpec, ProfileSample,
)
from .validation import exiger, exiger_entier

logger = logging.getLogger(__name__)

SECTIONS = ('gpus', 'models', 'datasets', 'samples', 'batch_observations')

# En-tête exact des fichiers de mesures
ENTETE_MESURES = ('gpu', 'model', 'dataset', 'sparsity', 'batch_size', 'throughput_qps')


# =============================================================================
# LECTURE DU CATALOGUE
# =============================================================================

def _construire(classe, chemin, **champs):
    """Instancie une dataclass en complétant le chemin des erreurs."""
    try:
        return classe(**champs)
    except ErreurValidation as erreur:
        raise erreur.prefixer(chemin) from None


def _lire_coeffs_lot(donnees, chemin):
    if donnees is None:
        return None
    return _construire(BatchCoeffs, chemin, **BatchCoeffsForm.lire(donnees, chemin))


def _lire_modele(enregistrement, chemin):
    champs = LlmForm.lire(enregistrement, chemin)
    champs['batch_coeffs'] = _lire_coeffs_lot(
        enregistrement.get('batch_coeffs'), f"{chemin}.batch_coeffs")
    champs['published_batch_coeffs'] = _lire_coeffs_lot(
        enregistrement.get('published_batch_coeffs'), f"{chemin}.published_batch_coeffs")

    entrees = enregistrement.get('throughput_coeffs') or []
    if not isinstance(entrees, list):
        raise ErreurValidation(f"{chemin}.throughput_coeffs", "liste attendue")
    table = {}
    for i, entree in enumerate(entrees):
        sous_chemin = f"{chemin}.throughput_coeffs[{i}]"
        valeurs = ThroughputCoeffsForm.lire(entree, sous_chemin)
        cle = (valeurs.pop('dataset'), valeurs.pop('gpu'), valeurs['form'])
        if cle in table:
            raise ErreurValidation(sous_chemin, f"coefficients en double pour {cle}")
        table[cle] = _construire(ThroughputCoeffs, sous_chemin, **valeurs)
    champs['throughput_coeffs'] = table
    return _construire(ModelSpec, chemin, **champs)


LECTEURS = {
    'gpus': lambda e, c: _construire(GpuSpec, c, **GpuForm.lire(e, c)),
    'models': _lire_modele,
    'datasets': lambda e, c: _construire(DatasetSpec, c, **DatasetForm.lire(e, c)),
    'samples': lambda e, c: _construire(ProfileSample, c, **SampleForm.lire(e, c)),
    'batch_observations': lambda e, c: _construire(
        BatchObservation, c, **ObservationForm.lire(e, c)),
}


def _verifier_unicite(elements, section):
    vus = set()
    for i, element in enumerate(elements):
        if element.name in vus:
            raise ErreurValidation(f"{section}[{i}].name", f"nom en double '{element.name}'")
        vus.add(element.name)


def _verifier_references(catalogue):
    """Chaque mesure et chaque jeu de coefficients doit viser des entités connues."""
    gpus = {g.name for g in catalogue.gpus}
    modeles = {m.name for m in catalogue.models}
    jeux = {d.name for d in catalogue.datasets}

    for section in ('samples', 'batch_observations'):
        for i, mesure in enumerate(getattr(catalogue, section)):
            contexte = f"{section}[{i}]"
            if mesure.gpu not in gpus:
                raise ReferenceManquante('GPU', mesure.gpu, contexte)
            if mesure.model not in modeles:
                raise ReferenceManquante('Modèle', mesure.model, contexte)
            if mesure.dataset not in jeux:
                raise ReferenceManquante('Jeu de données', mesure.dataset, contexte)

    for modele in catalogue.models:
        for jeu, gpu, _ in modele.throughput_coeffs:
            contexte = f"coefficients de débit de '{modele.name}'"
            if jeu not in jeux:
                raise ReferenceManquante('Jeu de données', jeu, contexte)
            if gpu not in gpus:
                raise ReferenceManquante('GPU', gpu, contexte)


def catalog_from_dict(document):
    """
    Construit un catalogue validé à partir d'un document JSON déjà décodé.

    Raises:
        ErreurValidation: section inconnue, enregistrement invalide
        ReferenceManquante: mesure visant une entité absente
    """
    if not isinstance(document, dict):
        raise ErreurValidation('document', "objet JSON attendu à la racine")
    inconnues = sorted(set(document) - set(SECTIONS))
    if inconnues:
        raise ErreurValidation(inconnues[0], "section inconnue")

    contenu = {}
    for section in SECTIONS:
        enregistrements = document.get(section, [])
        if not isinstance(enregistrements, list):
            raise ErreurValidation(section, "liste attendue")
        lire = LECTEURS[section]
        contenu[section] = tuple(
            lire(e, f"{section}[{i}]") for i, e in enumerate(enregistrements)
        )

    for section in ('gpus', 'models', 'datasets'):
        _verifier_unicite(contenu[section], section)

    catalogue = Catalog(**contenu)
    _verifier_references(catalogue)
    return catalogue


def load_catalog(path):
    """
    Charge un catalogue depuis un fichier JSON.

    Le résultat ne dépend que des octets du fichier : deux fichiers
    identiques donnent deux catalogues égaux.

    Args:
        path (str | Path): Chemin du fichier

    Returns:
        Catalog: Catalogue validé, toutes références résolues

    Raises:
        ErreurLecture: fichier absent, encodage ou JSON invalide (avec ligne/colonne)
        ErreurValidation: invariant violé (avec le chemin du champ)
        ReferenceManquante: référence vers une entité inconnue
    """
    chemin = Path(path)
    try:
        texte = chemin.read_text(encoding='utf-8')
    except OSError as erreur:
        raise ErreurLecture(f"lecture impossible ({erreur.strerror})", chemin) from None
    except UnicodeDecodeError as erreur:
        raise ErreurLecture(f"encodage invalide, UTF-8 attendu (octet {erreur.start})", chemin) from None
    try:
        document = json.loads(texte)
    except json.JSONDecodeError as erreur:
        raise ErreurLecture(erreur.msg, chemin, erreur.lineno, erreur.colno) from None

    catalogue = catalog_from_dict(document)

    logger.info(
        f"Catalogue {chemin} : {len(catalogue.gpus)} GPU, {len(catalogue.models)} modèles, "
        f"{len(catalogue.datasets)} jeux, {len(catalogue.samples)} mesures, "
        f"{len(catalogue.batch_observations)} observations"
    )
    return catalogue


# =============================================================================
# ÉCRITURE DU CATALOGUE
# =============================================================================

def _sans_vides(enregistrement):
    return {cle: valeur for cle, valeur in enregistrement.items() if valeur is not None}


def _coeffs_lot_en_dict(coeffs):
    return None if coeffs is None else {'c0': coeffs.c0, 'c1': coeffs.c1}


def _modele_en_dict(modele):
    enregistrement = {
        'name': modele.name,
        'param_count': modele.param_count,
        'resident_memory_gib': modele.resident_memory_gib,
        'num_layers': modele.num_layers,
        'num_moe_layers': modele.num_moe_layers,
        'num_experts': modele.num_experts,
        'default_top_k': modele.default_top_k,
        'batch_coeffs': _coeffs_lot_en_dict(modele.batch_coeffs),
        'published_batch_coeffs': _coeffs_lot_en_dict(modele.published_batch_coeffs),
    }
    if modele.throughput_coeffs:
        enregistrement['throughput_coeffs'] = [
            {'dataset': jeu, 'gpu': gpu, 'form': forme,
             'c2': coeffs.c2, 'c3': coeffs.c3, 'c4': coeffs.c4}
            for (jeu, gpu, forme), coeffs in sorted(modele.throughput_coeffs.items())
        ]
    return _sans_vides(enregistrement)


def catalog_to_dict(catalogue):
    """Sérialise un catalogue ; load(save(c)) == c."""
    return {
        'gpus': [_sans_vides(vars(g).copy()) for g in catalogue.gpus],
        'models': [_modele_en_dict(m) for m in catalogue.models],
        'datasets': [vars(d).copy() for d in catalogue.datasets],
        'samples': [vars(s).copy() for s in catalogue.samples],
        'batch_observations': [vars(o).copy() for o in catalogue.batch_observations],
    }


def save_catalog(catalogue, path):
    """Écrit le catalogue en JSON indenté (UTF-8, fin de ligne finale)."""
    texte = json.dumps(catalog_to_dict(catalogue), indent=2, ensure_ascii=False) + '\n'
    Path(path).write_text(texte, encoding='utf-8')
    logger.info(f"Catalogue enregistré : {path}")


# =============================================================================
# SPARSITÉ
# =============================================================================

def sparsity_of(model, active_k):
    """
    Sparsité d'un modèle MoE : fraction d'experts activés par token.

    Args:
        model (ModelSpec): Modèle concerné
        active_k (int): Experts activés, 1 <= k <= E

    Returns:
        float: k / E (1.0 pour un fine-tuning dense)

    Exemple:
        >>> sparsity_of(mixtral, 2)   # 8 experts
        0.25
    """
    exiger_entier('active_k', active_k, minimum=1)
    exiger(active_k <= model.num_experts, 'active_k',
           f"k={active_k} dépasse le nombre d'experts ({model.num_experts})")
    return active_k / model.num_experts


# =============================================================================
# MESURES AU FORMAT CSV
# =============================================================================

def load_samples_csv(path):
    """
    Lit des mesures de débit au format CSV.

    L'en-tête doit être exactement gpu,model,dataset,sparsity,batch_size,throughput_qps.

    Raises:
        ErreurLecture: fichier absent, en-tête différent ou ligne invalide
            (le numéro de ligne est compté à partir de 1, en-tête compris)
    """
    chemin = Path(path)
    try:
        with chemin.open(newline='', encoding='utf-8') as fichier:
            lignes = list(csv.reader(fichier))
    except OSError as erreur:
        raise ErreurLecture(f"lecture impossible ({erreur.strerror})", chemin) from None
    except UnicodeDecodeError as erreur:
        raise ErreurLecture(f"encodage invalide, UTF-8 attendu (octet {erreur.start})", chemin) from None

    if not lignes or tuple(lignes[0]) != ENTETE_MESURES:
        raise ErreurLecture(f"en-tête attendu : {','.join(ENTETE_MESURES)}", chemin, ligne=1)

    mesures = []
    for numero, ligne in enumerate(lignes[1:], start=2):
        if not ligne:
            continue
        if len(ligne) != len(ENTETE_MESURES):
            raise ErreurLecture(
                f"{len(ENTETE_MESURES)} colonnes attendues, {len(ligne)} lues", chemin, ligne=numero)
        try:
            champs = SampleForm.lire(dict(zip(ENTETE_MESURES, ligne)), 'mesure', texte=True)
            mesures.append(ProfileSample(**champs))
        except ErreurValidation as erreur:
            raise ErreurLecture(str(erreur), chemin, ligne=numero) from None

    logger.info(f"{len(mesures)} mesures lues dans {chemin}")
    return mesures


def write_samples_csv(samples, flux):
    """Écrit des mesures dans un flux texte, au format lu par load_samples_csv."""
    writer = csv.writer(flux, lineterminator='\n')
    writer.writerow(ENTETE_MESURES)
    for s in samples:
        writer.writerow([s.gpu, s.model, s.dataset, repr(s.sparsity), s.batch_size,
                         repr(s.throughput_qps)])
