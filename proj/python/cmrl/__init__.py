"""Core operations of the consistency-sampler RL lab.

The compiled extension lives inside the package for wheel installs and next
to it for in-tree CMake builds.
"""

try:
    from ._cmrl import *  # noqa: F401,F403
except ImportError:
    from _cmrl import *  # noqa: F401,F403
