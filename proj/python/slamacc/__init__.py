"""Accuracy evaluation for monocular SLAM reconstructions on a robot arm."""

from ._slamacc import *  # noqa: F401,F403
from ._slamacc import __version__  # noqa: F401
