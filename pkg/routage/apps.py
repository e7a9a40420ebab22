from django.apps import AppConfig


class RoutageConfig(AppConfig):
    name = 'routage'
