import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'speech_workload.settings')
django.setup()
