"""Fuzzy brand similarity. Uses the compiled kernel when the extension built,
otherwise the pure-Python implementation; ``KERNEL`` records which is active.
"""

try:
    from . import _jaro_c as _impl
    KERNEL = "compiled"
except ImportError:
    from . import _jaro_py as _impl
    KERNEL = "python"

from . import _jaro_py as pure_python

jaro = _impl.jaro
jaro_winkler = _impl.jaro_winkler
