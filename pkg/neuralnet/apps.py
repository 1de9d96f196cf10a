from django.apps import AppConfig


class NeuralnetConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'neuralnet'
