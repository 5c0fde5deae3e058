from ._gridplace import *  # noqa: F401,F403
from ._gridplace import __version__  # noqa: F401
