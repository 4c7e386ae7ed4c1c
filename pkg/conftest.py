import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'wsrman.settings')
django.setup()
