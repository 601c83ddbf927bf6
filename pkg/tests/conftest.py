import numpy as np
import pytest

from fermembed import meanfield, solver, zoo
from fermembed.model import MolecularIntegrals, random_two_body


def random_integrals(n_modes: int, seed: int, one_body_scale: float = 1.0,
                     two_body_scale: float = 0.3,
                     core_energy: float = 0.0) -> MolecularIntegrals:
    """Generic dense Hermitian test Hamiltonian (real)."""
    rng = np.random.default_rng(seed)
    h = rng.uniform(-one_body_scale, one_body_scale, size=(n_modes, n_modes))
    h = 0.5 * (h + h.T)
    g = random_two_body(n_modes, two_body_scale, rng)
    return MolecularIntegrals(core_energy, h, g)


@pytest.fixture(scope="session")
def imp8():
    return zoo.impurity8()


@pytest.fixture(scope="session")
def imp8_ground(imp8):
    return solver.ground_state(imp8.integrals, imp8.n_electrons)


@pytest.fixture(scope="session")
def imp8_scf(imp8):
    return meanfield.hartree_fock(imp8.integrals, imp8.n_electrons)


@pytest.fixture(scope="session")
def gen6():
    return zoo.general6()


@pytest.fixture(scope="session")
def gen6_ground(gen6):
    return solver.ground_state(gen6.integrals, gen6.n_electrons)


@pytest.fixture(scope="session")
def mono4():
    return zoo.monomer4()


@pytest.fixture(scope="session")
def mono4_ground(mono4):
    return solver.ground_state(mono4.integrals, mono4.n_electrons)


@pytest.fixture(scope="session")
def aligned6():
    return zoo.aligned6()
