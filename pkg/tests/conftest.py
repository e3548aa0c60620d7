import sys
from pathlib import Path

from hypothesis import settings

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

# Property tests draw from a fixed stream so the suite is reproducible.
settings.register_profile("repo", derandomize=True)
settings.load_profile("repo")
