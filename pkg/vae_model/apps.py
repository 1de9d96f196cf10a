from django.apps import AppConfig


class VaeModelConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'vae_model'
