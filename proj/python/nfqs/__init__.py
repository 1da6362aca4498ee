"""Neural quantum states from normalizing flows."""

try:
    from nfqs._core import *  # noqa: F401,F403
    from nfqs._core import __version__  # noqa: F401
except ImportError:  # development layout: extension next to the build tree
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
