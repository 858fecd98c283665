import numpy as np
import pytest

from multinoise import (
    DesignOptions,
    certainty_equivalent,
    design_algorithm_1,
    design_algorithm_2,
    inverted_pendulum,
    moment_operator,
    spectral_radius,
)


def random_mss_instance(rng, n, p, target_radius):
    """Random closed loop with noise directions, scaled exactly so the
    second-moment operator has the requested spectral radius.

    The moment operator is homogeneous of degree two in (A_cl, sqrt(alpha)),
    so a joint rescaling hits any target radius exactly.
    """
    A0 = rng.normal(size=(n, n))
    mats = [rng.normal(size=(n, n)) for _ in range(p)]
    variances = rng.uniform(0.2, 1.0, size=p)
    dirs0 = list(zip(mats, variances))
    r0 = spectral_radius(moment_operator(A0, dirs0))
    s = np.sqrt(target_radius / r0)
    return s * A0, [(D, float(s * s * a)) for D, a in dirs0]


@pytest.fixture(scope="session")
def pendulum():
    return inverted_pendulum()


@pytest.fixture(scope="session")
def pendulum_opts(pendulum):
    return DesignOptions(
        gare=pendulum.gare_options,
        bisect=pendulum.bisect_options,
        grid_samples_per_dir=10_000,
    )


@pytest.fixture(scope="session")
def pendulum_ce(pendulum, pendulum_opts):
    return certainty_equivalent(
        pendulum.system, pendulum.costs, pendulum_opts, pendulum.true_system
    )


@pytest.fixture(scope="session")
def pendulum_alg1(pendulum, pendulum_opts):
    a_mats = [D for D, _ in pendulum.noise.a_dirs]
    return design_algorithm_1(
        pendulum.system, pendulum.costs, a_mats, [], pendulum.structure,
        pendulum_opts, pendulum.true_system,
    )


@pytest.fixture(scope="session")
def pendulum_alg2(pendulum, pendulum_opts):
    a_mats = [D for D, _ in pendulum.noise.a_dirs]
    return design_algorithm_2(
        pendulum.system, pendulum.costs, a_mats, [], pendulum.structure,
        pendulum_opts, pendulum.true_system,
    )
