"""Allow ``python -m sddesplit``."""

import sys

from .cli import main

sys.exit(main())
