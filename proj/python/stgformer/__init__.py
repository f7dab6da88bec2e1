"""2D-to-3D pose lifting with criss-cross graph attention and hop-wise GCNs."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "0.1.0"
