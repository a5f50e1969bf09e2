import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / 'cellpack_sim'))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'cellpack_sim.settings')

import django  # noqa: E402

django.setup()
