"""Allow running the command-line interface as ``python -m mapqa``."""

import sys

from mapqa.cli import main

sys.exit(main())
