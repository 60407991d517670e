"""Run the command-line front end as ``python -m ionramp``."""

import sys

from .cli import main

sys.exit(main())
