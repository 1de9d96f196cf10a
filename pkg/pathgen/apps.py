from django.apps import AppConfig


class PathgenConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'pathgen'
