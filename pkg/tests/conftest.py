from pathlib import Path

import numpy as np
import pytest

import aqsim

DATA_DIR = Path(__file__).parent / "data"


def make_chain(n: int, coupling: float = 1.0) -> aqsim.Hamiltonian:
    c = np.zeros((n, n))
    for i in range(n - 1):
        c[i, i + 1] = c[i + 1, i] = coupling
    return aqsim.build_tight_binding(aqsim.SiteNetwork(np.zeros(n), c))


def make_ring(n: int, coupling: float = 1.0) -> aqsim.Hamiltonian:
    c = np.zeros((n, n))
    for i in range(n):
        c[i, (i + 1) % n] = c[(i + 1) % n, i] = coupling
    return aqsim.build_tight_binding(aqsim.SiteNetwork(np.zeros(n), c))


def detuned_dimer():
    """The detuned-dimer transport fixture: eps = [0, 5C], V = C = 1."""
    net = aqsim.SiteNetwork([0.0, 5.0], [[0.0, 1.0], [1.0, 0.0]])
    h = aqsim.build_tight_binding(net)
    spec = aqsim.TransportSpec(source_site=0, sink_site=1, trap_rate=1.0,
                               recombination_rate=0.05,
                               dephasing_rates=np.zeros(2))
    return h, spec


def disordered_seven_site():
    """Seeded 7-site disordered chain used by the sweep fixtures."""
    h = aqsim.apply_static_disorder(make_chain(7), sigma=1.5, seed=11)
    spec = aqsim.TransportSpec(source_site=0, sink_site=6, trap_rate=1.0,
                               recombination_rate=0.05,
                               dephasing_rates=np.zeros(7))
    return h, spec


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR
