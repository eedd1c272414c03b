"""Backend selection for the hot loops.

The compiled extension ``biharm._kernels`` is used when it imports; otherwise
the numpy versions in ``biharm._fallback`` take over.  Setting the environment
variable ``BIHARM_PURE_PYTHON=1`` forces the fallback, which is how the test
suite and the benchmark compare the two.
"""

import os

from . import _fallback

_compiled = None
if os.environ.get("BIHARM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _fallback
BACKEND = "compiled" if _compiled is not None else "python"

bessel_j = _impl.bessel_j
lam_nu = _impl.lam_nu
profile_direct = _impl.profile_direct
contour_odd = _impl.contour_odd
contour_even = _impl.contour_even
gbtrf = _impl.gbtrf
gbtrs = _impl.gbtrs
band_matvec = _impl.band_matvec
theta_march = _impl.theta_march
nested_levels = _impl.nested_levels


def backend(name):
    """Return the kernel namespace for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
