"""Run the command-line interface: ``python -m confined_stark``."""

import sys

from .cli import main

sys.exit(main())
