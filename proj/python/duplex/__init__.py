from ._duplex import *  # noqa: F401,F403
from ._duplex import __version__  # noqa: F401
