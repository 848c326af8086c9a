"""Exact fair division of an interval cake, backed by the Rust core.

Functions accept and return JSON strings in the same formats as the
`fairslice` command line; rationals travel as strings like "8/5", so call
`json.loads` on results and nothing gets rounded on the way.
"""

try:
    from ._fairslice import (
        __version__,
        check,
        divide,
        fixtures,
        generate_profile,
        manipulate,
    )
except ImportError:
    # Running against a bare cargo artifact placed on sys.path.
    from _fairslice import (
        __version__,
        check,
        divide,
        fixtures,
        generate_profile,
        manipulate,
    )

__all__ = [
    "__version__",
    "check",
    "divide",
    "fixtures",
    "generate_profile",
    "manipulate",
]
