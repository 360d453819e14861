import sys
from pathlib import Path

SDK_SRC = str(Path(__file__).resolve().parents[1] / "src")
if SDK_SRC not in sys.path:
    sys.path.insert(0, SDK_SRC)
