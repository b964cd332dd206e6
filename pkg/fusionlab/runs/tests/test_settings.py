from django.conf import settings
from django.db import connections
from django.test import SimpleTestCase


class TestSettings(SimpleTestCase):
    def test_no_database_or_auth(self):
        self.assertEqual(settings.INSTALLED_APPS, ['rest_framework', 'fusionlab.runs.apps.RunsConfig'])
        self.assertEqual(connections['default'].settings_dict['ENGINE'], 'django.db.backends.dummy')

    def test_fusionlab_defaults(self):
        self.assertIn('SLOW_TESTS', settings.FUSIONLAB)
        self.assertNotIn('GRADCHECK_COORDS', settings.FUSIONLAB)
