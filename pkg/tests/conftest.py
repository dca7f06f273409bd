import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geofixtures import acceptance_lattice, field_grid_for  # noqa: E402

from roadweave.field import rasterize_truth  # noqa: E402


@pytest.fixture(scope="session")
def oracle_graph():
    return acceptance_lattice()


@pytest.fixture(scope="session")
def oracle_field(oracle_graph):
    grid = field_grid_for(oracle_graph, cell_size=2.0, margin=20.0)
    return rasterize_truth(oracle_graph, grid, step_dist=12.0, match_thresh=20.0)
