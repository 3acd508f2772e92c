import numpy as np
import pytest

from dwl.core_model import StatePair


def random_sine_state(rng, nx: int = 1001, n_modes: int = 8,
                      scale: float = 1.0) -> StatePair:
    """Random Fourier-polynomial state pair on a fine grid.

    Low mode count on a fine grid keeps trapezoid integrals of products
    exact to roundoff, so functional identities can be tested tightly.
    """
    x = np.linspace(0.0, 1.0, nx)
    k = np.arange(1, n_modes + 1)
    a = rng.standard_normal(n_modes) * scale / k ** 2
    b = rng.standard_normal(n_modes) * scale / k ** 2
    kpi = k * np.pi
    phi = np.sin(np.outer(x, kpi)) @ a
    phi_x = np.cos(np.outer(x, kpi)) @ (a * kpi)
    phi_xx = -np.sin(np.outer(x, kpi)) @ (a * kpi ** 2)
    psi = np.sin(np.outer(x, kpi)) @ b
    return StatePair(x=x, phi=phi, phi_x=phi_x, phi_xx=phi_xx, psi=psi)


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
