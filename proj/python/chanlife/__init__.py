"""Payment channel lifespan prediction and simulation."""

from ._chanlife import *  # noqa: F401,F403
from ._chanlife import __doc__  # noqa: F401

__version__ = "0.1.0"
