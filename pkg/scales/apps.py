from django.apps import AppConfig as DjangoAppConfig


class AppConfig(DjangoAppConfig):
    name = "scales"
    verbose_name = "Scale calculus and mollification"
