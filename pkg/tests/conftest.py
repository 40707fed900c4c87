import numpy as np
import pytest

from ifekit import _kernels


def _backend_names():
    names = ["numpy"]
    try:
        _kernels.select("numba")
        names.insert(0, "numba")
    except Exception:
        pass
    return names


BACKENDS = _backend_names()


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile every jit signature once so timing-sensitive tests stay honest
    for name in BACKENDS:
        _kernels.select(name).warm()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def make_path_graph(n, directed=True):
    """0 -> 1 -> ... -> n-1 as an edge-list string."""
    from ifekit import load_edge_list

    text = "\n".join(f"{i} {i + 1}" for i in range(n - 1))
    return load_edge_list(text, directed=directed)


def make_diamond():
    """0 -> {1, 2} -> 3: two equal-length shortest paths."""
    from ifekit import load_edge_list

    return load_edge_list("0 1\n0 2\n1 3\n2 3")
