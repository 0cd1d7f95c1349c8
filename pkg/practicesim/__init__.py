"""practicesim - Agent-based simulation of social practices, context
interpretation and disturbance between co-located activities."""

from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as get_version

try:
    __version__ = get_version("practicesim")
except PackageNotFoundError:
    __version__ = "0.0.0+unknown"
