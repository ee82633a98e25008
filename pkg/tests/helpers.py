"""Shared test settings."""
from __future__ import annotations

import os

from snbump.config import RunConfig

# randomized checks draw their seed from the run configuration
SEED = int(os.environ.get("SNBUMP_TEST_SEED", RunConfig().seed))
