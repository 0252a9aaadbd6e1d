from django.apps import AppConfig as DjangoAppConfig


class AppConfig(DjangoAppConfig):
    name = "factorization"
    verbose_name = "Factorization through infinite products"
