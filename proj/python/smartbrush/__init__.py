"""Python bindings for the smart brush map generation core."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

MODES = (MaskMode.MEDIUM, MaskMode.HARD, MaskMode.COMPLETE)  # noqa: F405
