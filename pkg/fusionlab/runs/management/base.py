from django.core.management.base import BaseCommand, CommandError

from fusionlab.utils.errors import FusionLabError


class FusionLabCommand(BaseCommand):
    """
    Runs ``run(**options)`` and turns domain and file errors into ``CommandError``, so the
    command exits 1 with a one-line diagnostic. Argument errors exit 2 with usage.
    """
    requires_system_checks = []

    def add_config_argument(self, parser):
        parser.add_argument('--config', help='run configuration file of "key = value" lines')

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except (FusionLabError, OSError) as e:
            raise CommandError(str(e)) from e

    def run(self, **options):
        raise NotImplementedError
