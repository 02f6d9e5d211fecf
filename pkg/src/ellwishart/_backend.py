"""Select the compiled kernels when available, else the numpy fallback."""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("ELLWISHART_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

perm_sum_apply = _impl.perm_sum_apply
ks_sup_distance = _impl.ks_sup_distance
kron_power_sums = _impl.kron_power_sums
