import pytest

from poisson_lab import _purepy, kernels

BACKENDS = [_purepy]
if kernels.compiled_available():
    from poisson_lab import _core

    BACKENDS.append(_core)


@pytest.fixture(params=BACKENDS, ids=lambda m: m.BACKEND)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[key])
