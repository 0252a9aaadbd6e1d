from django.apps import AppConfig as DjangoAppConfig


class AppConfig(DjangoAppConfig):
    name = "crossed"
    verbose_name = "Smooth crossed products"
