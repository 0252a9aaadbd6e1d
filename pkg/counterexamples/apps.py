from django.apps import AppConfig as DjangoAppConfig


class AppConfig(DjangoAppConfig):
    name = "counterexamples"
    verbose_name = "Counterexamples to factorization"
