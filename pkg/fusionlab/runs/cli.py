"""``python -m fusionlab <subcommand>``: the management commands under their command-line names."""
import os
import sys

SUBCOMMANDS = {
    'gen-data': 'gen_data',
    'train': 'train',
    'eval': 'evaluate',
    'gradcheck': 'gradcheck',
    'ablate': 'ablate',
    'robustness': 'robustness',
}

USAGE = (
    'usage: python -m fusionlab {' + ','.join(SUBCOMMANDS) + '} [options]\n'
    'run "python -m fusionlab <subcommand> --help" for the options of a subcommand\n'
)


def dispatch(argv, prog: str = 'fusionlab') -> int:
    """Runs one subcommand and returns its exit code: 0 on success, 1 on failure, 2 on usage errors."""
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] in ('-h', '--help'):
            sys.stdout.write(USAGE)
            return 0
        sys.stderr.write(f'unknown subcommand {argv[0]!r}\n' if argv else 'missing subcommand\n')
        sys.stderr.write(USAGE)
        return 2

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings.settings')
    import django
    from django.core.management import load_command_class

    django.setup()
    name = SUBCOMMANDS[argv[0]]
    command = load_command_class('fusionlab.runs', name)
    try:
        command.run_from_argv([prog, argv[0], *argv[1:]])
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    return 0
