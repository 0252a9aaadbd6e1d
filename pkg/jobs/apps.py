from django.apps import AppConfig as DjangoAppConfig


class AppConfig(DjangoAppConfig):
    name = "jobs"
    verbose_name = "Batch jobs and artifacts"
