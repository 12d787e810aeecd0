import pytest
from hypothesis import settings

from freeword.graphs import load_gmap, rose_map
from freeword.suite import load_input, resolve
from freeword.words import load_fga

# compiled kernels make the first call slow
settings.register_profile("default", deadline=None)
settings.load_profile("default")


def corpus(name):
    return load_input(resolve(name))


def rose(name):
    return rose_map(load_fga(resolve(name)))


@pytest.fixture(scope="session")
def omega():
    return corpus("omega.fga")


@pytest.fixture(scope="session")
def alpha0():
    return corpus("alpha0.fga")


@pytest.fixture(scope="session")
def alpha0_map():
    return load_gmap(resolve("alpha0.gmap"))


@pytest.fixture(scope="session")
def rcdif():
    return corpus("rcdif.fga")


@pytest.fixture(scope="session")
def theta():
    return load_gmap(resolve("theta.gmap"))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = []


def record(criterion, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
