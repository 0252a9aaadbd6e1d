from django.apps import AppConfig as DjangoAppConfig


class AppConfig(DjangoAppConfig):
    name = "grids"
    verbose_name = "Lattices, stencils and quadrature"
