import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "smoothfactor.settings")
django.setup()
