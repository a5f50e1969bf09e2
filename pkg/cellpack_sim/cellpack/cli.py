"""
Batch entry point::

    python -m cellpack.cli drive-cycle --window 1.5
    python -m cellpack.cli longterm --chemistry lfp --strategy both --seeds 10
    python -m cellpack.cli sensitivity --seeds 10 --parallel 8
    python -m cellpack.cli optimize-once cellpack/fixtures/pack_state.json
    python -m cellpack.cli two-cell
"""
import os
import sys

COMMANDS = {
    'drive-cycle': 'drive_cycle',
    'longterm': 'longterm',
    'sensitivity': 'sensitivity',
    'optimize-once': 'optimize_once',
    'two-cell': 'two_cell',
}


def main(argv=None):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'cellpack_sim.settings')
    import django
    from django.core.management import call_command
    from django.core.management.base import CommandError

    django.setup()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] not in COMMANDS:
        sys.stderr.write(f'usage: cellpack {{{",".join(COMMANDS)}}} [options]\n')
        return 1
    try:
        call_command(COMMANDS[argv[0]], *argv[1:])
    except CommandError as exc:
        sys.stderr.write(f'cellpack {argv[0]}: {exc}\n')
        return exc.returncode
    return 0


if __name__ == '__main__':
    sys.exit(main())
