"""Shared fixtures; the heavy reference engine is built once per session."""

import numpy as np
import pytest

from enclosure_kit import enclosure, geometry, materials, meshing

REFERENCE_TAUS = np.linspace(4.0, 16.0, 13)


def reference_scene() -> materials.MaterialScene:
    """Conductive disk at (0.3, 0), radius 0.2, in the unit disk."""
    return materials.MaterialScene(
        sigma0=1.0,
        eps0=1.0,
        omega=1.0,
        inclusions=(
            materials.Inclusion(
                shape=geometry.Disk((0.3, 0.0), 0.2),
                alpha=materials.SymMat2.identity(),
                beta=materials.SymMat2.zero(),
            ),
        ),
    )


@pytest.fixture(scope="session")
def reference_mesh():
    return meshing.generate_mesh(geometry.UnitDisk(), 0.01)


@pytest.fixture(scope="session")
def reference_engine(reference_mesh):
    reduced = materials.reduce_scene(reference_scene())
    return enclosure.IndicatorEngine(reduced, reference_mesh)


@pytest.fixture(scope="session")
def coarse_mesh():
    """Unit-disk mesh fine enough for tau up to 8."""
    return meshing.generate_mesh(geometry.UnitDisk(), 0.04)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_RESULTS
    except ImportError:
        return
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
