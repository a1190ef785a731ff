import numpy as np
import pytest

from models.rng_stream import RngStream
from processors.network import build_path, build_ring, metropolis_weights
from processors.objectives import make_benchmark_instance, make_quadratic_suite


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ring4():
    return build_ring(4)


@pytest.fixture
def path3():
    return build_path(3)


@pytest.fixture
def ring4_metropolis(ring4):
    return metropolis_weights(ring4)


@pytest.fixture
def quadratic_suite():
    centers = np.random.default_rng(7).standard_normal((6, 3))
    return make_quadratic_suite(3, 6, centers)


@pytest.fixture
def benchmark_suite():
    return make_benchmark_instance(5, 6, RngStream(seed=3).generator())


@pytest.fixture
def write_config(tmp_path):
    """Write a key = value config file and return its path."""

    def _write(entries, name='run.cfg'):
        path = tmp_path / name
        path.write_text(''.join(f"{key} = {value}\n" for key, value in entries.items()), encoding='utf-8')
        return str(path)

    return _write


@pytest.fixture
def small_run_entries(tmp_path):
    return {
        'kernel': 'alg2',
        'suite': 'quadratic',
        'd': 3,
        'n': 5,
        'T': 40,
        'seed': 11,
        'graph': 'ring',
        'schedule': 'manual',
        'eta0': 0.1,
        'eta_power': 0,
        'u0': 0.5,
        'u_power': 0.75,
        'output': str(tmp_path / 'out'),
    }


@pytest.fixture
def diverging():
    """Overrides that make the small run blow up after a few iterations.

    The radius stays comparable to the iterates so the differences do not
    round to zero before the values overflow.
    """
    return {'eta0': 5.0, 'init_std': 1e150, 'u0': 1e149, 'u_power': 0, 'T': 100}
