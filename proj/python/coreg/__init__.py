"""Co-regularized sparse recovery from indirect compressed data.

Thin re-export of the compiled ``_core`` extension.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
