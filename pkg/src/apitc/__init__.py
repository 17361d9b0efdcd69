"""apitc - a workbench for a truly concurrent actor calculus.

This package parses and typechecks actor configurations, explores their
step-labelled transition systems, checks and simulates actor traces,
unfolds runs into prime event structures and decides pomset, step, hp
and hhp bisimilarity, so that the algebraic laws of the calculus can be
tested mechanically.

Example:
    Typecheck a configuration::

        >>> from apitc.parser import parse
        >>> from apitc.typesystem import typecheck
        >>> str(typecheck(parse("a?(x).x!a")))
        'rho = {a}; f = {a↦*}'
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("apitc")
except PackageNotFoundError:
    # Package is not installed (running from source without pip install -e)
    # Fall back to the generated _version.py if available
    try:
        from apitc._version import __version__
    except ImportError:
        __version__ = "0.0.0.dev0+unknown"

__all__ = ["__version__"]
