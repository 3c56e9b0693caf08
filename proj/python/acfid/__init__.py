"""Avoided-crossing detection from the fidelity change of eigenstates.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports it.
"""

from ._core import *  # noqa: F401,F403
from ._core import AcfidError, __version__

__all__ = [name for name in dir() if not name.startswith("_")]
