"""
Wire the Django test suites (manage.py test) into plain pytest: load the
isoseq settings and create the test database for the whole session, the
way Django's own test runner does.
"""
import os

import django

_state = {}


def pytest_configure(config):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'isoseq.settings')
    django.setup()
    from django.test.utils import setup_databases, setup_test_environment
    setup_test_environment()
    _state['old_config'] = setup_databases(verbosity=0, interactive=False)


def pytest_unconfigure(config):
    from django.test.utils import teardown_databases, teardown_test_environment
    if 'old_config' in _state:
        teardown_databases(_state.pop('old_config'), verbosity=0)
        teardown_test_environment()
