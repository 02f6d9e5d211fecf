import numpy as np
import pytest

from ellwishart import _backend, _kernels_py


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _backends():
    out = [pytest.param(_kernels_py, id="python")]
    try:
        from ellwishart import _kernels
    except ImportError:
        out.append(pytest.param(None, id="cython",
                                marks=pytest.mark.skip(reason="extension not built")))
    else:
        out.append(pytest.param(_kernels, id="cython"))
    return out


@pytest.fixture(params=_backends())
def kernels(request):
    return request.param


@pytest.fixture
def pure_python(monkeypatch):
    """Route the operator engine through the numpy kernels."""
    for name in ("perm_sum_apply", "ks_sup_distance", "kron_power_sums"):
        monkeypatch.setattr(_backend, name, getattr(_kernels_py, name))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
