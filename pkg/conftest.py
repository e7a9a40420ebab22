import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'estimateur.settings')
django.setup()
