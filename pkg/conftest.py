"""Pytest wiring: configure Django before test modules are imported."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'occupredict.settings')
django.setup()

import pytest  # noqa: E402


@pytest.fixture
def workdir(tmp_path):
    """Output directory for test_end_to_end.test_full_pipeline (a script argument when run directly)."""
    return str(tmp_path)
