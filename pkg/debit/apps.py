from django.apps import AppConfig


class DebitConfig(AppConfig):
    name = 'debit'
    verbose_name = 'Débit de fine-tuning'
