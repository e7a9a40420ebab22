"""
Configuration Django de l'application Coûts : temps et prix d'un
fine-tuning, classement des GPU par coût.
"""
from django.apps import AppConfig


class CoutsConfig(AppConfig):
    name = 'couts'
    verbose_name = 'Coûts'
