"""
=============================================================================
SETTINGS.PY - Configuration principale du projet Estimateur
=============================================================================

Ce fichier contient les paramètres du projet :
- Applications installées (une application par brique du modèle analytique)
- Journalisation (console sur stderr, la sortie standard reste aux commandes)
- Constantes de l'estimateur (grilles de calibration, formats, roofline)

Le projet n'a ni base de données ni interface web : Django fournit les
réglages, la validation des formulaires, les commandes de gestion et
l'outillage de test.

Projet : Estimateur de coûts de fine-tuning
=============================================================================
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# =============================================================================
# CHEMINS DE BASE
# =============================================================================
# BASE_DIR pointe vers le répertoire racine du projet (contenant manage.py)
BASE_DIR = Path(__file__).resolve().parent.parent

# Charger les variables d'environnement depuis .env
# Seuls les réglages Django en dépendent, jamais les sorties des commandes.
load_dotenv(BASE_DIR / '.env')

# =============================================================================
# SÉCURITÉ
# =============================================================================
SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-estimateur-local')

DEBUG = os.getenv('DEBUG', 'False').lower() in ('true', '1', 'yes')

ALLOWED_HOSTS = []

# =============================================================================
# APPLICATIONS INSTALLÉES
# =============================================================================
INSTALLED_APPS = [
    'catalogue',   # GPU, modèles, jeux de données, mesures
    'lots',        # Taille de lot maximale
    'debit',       # Débit de fine-tuning
    'couts',       # Coût d'une campagne de fine-tuning
    'routage',     # Simulation du routage top-k des experts
    'synthese',    # Générateur roofline de mesures synthétiques
    'commandes',   # Commandes de gestion (interface en ligne de commande)
]

# =============================================================================
# BASES DE DONNÉES
# =============================================================================
# Aucune base : toutes les données viennent du fichier catalogue JSON.
DATABASES = {}

# =============================================================================
# INTERNATIONALISATION
# =============================================================================
LANGUAGE_CODE = 'fr-fr'
TIME_ZONE = 'Europe/Paris'
USE_I18N = True
USE_TZ = True

# =============================================================================
# JOURNALISATION
# =============================================================================
# Tous les journaux partent sur stderr pour que stdout ne contienne que
# les rapports des commandes (tables, CSV, JSON).
LOG_LEVEL = os.getenv('LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name} : {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'simple',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ('catalogue', 'lots', 'debit', 'couts', 'routage', 'synthese', 'commandes')
    },
}

# =============================================================================
# CONSTANTES DE L'ESTIMATEUR
# =============================================================================
ESTIMATEUR = {
    # Grille grossière de calibration du modèle de lot : (début, fin, pas)
    'GRILLE_C0': (0.5, 200.0, 0.05),
    'GRILLE_C1': (0.0, 1.0, 0.005),
    # Résolution du raffinement local autour de la meilleure cellule
    'FACTEUR_RAFFINEMENT': 10,
    # Seuil relatif sur la diagonale de R pour détecter un rang déficient
    'SEUIL_RANG': 1e-10,
    # Chiffres significatifs du format "table"
    'CHIFFRES_SIGNIFICATIFS': 4,
    # Catalogue utilisé quand --catalog est omis
    'CATALOGUE_DEFAUT': BASE_DIR / 'donnees' / 'catalogue_reference.json',
    # Paramètres roofline par défaut de la commande synth (régime saturant)
    'ROOFLINE_DEFAUT': {
        'peak_compute_tflops': 100.0,
        'mem_bandwidth_gbs': 1000.0,
        'weight_bytes': 5e9,
        'flops_per_token': 6e9,
        'activation_bytes_per_token': 1e5,
        'seq_len': 128,
        'moe_flop_fraction': 0.25,
        'fixed_overhead_s': 0.03072,
    },
}
