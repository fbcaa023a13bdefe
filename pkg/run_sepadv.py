"""Entry point: ``python run_sepadv.py <subcommand> --config plan.json [...]``.

See ``cli/main.py`` for the subcommands, flags and exit codes.
"""
import sys

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
