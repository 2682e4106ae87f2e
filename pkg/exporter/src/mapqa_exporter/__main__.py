"""Allow running the exporter as ``python -m mapqa_exporter``."""

import sys

from mapqa_exporter.cli import main

sys.exit(main())
