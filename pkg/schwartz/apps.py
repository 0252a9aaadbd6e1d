from django.apps import AppConfig as DjangoAppConfig


class AppConfig(DjangoAppConfig):
    name = "schwartz"
    verbose_name = "Weighted rapidly vanishing functions"
