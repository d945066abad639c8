"""
Fixtures compartidas - Escenas de policubos construidas en memoria
"""

from pathlib import Path

import pytest
from loguru import logger

from analysis.stability import FrictionModel
from geometry.pose import Pose
from geometry.shape import build_shape
from planner.scene import Scene, Workpiece
from settings import ENV_VARS, PlannerConfig

VOXEL = 0.025
DENSITY = 700.0
SCENES_DIR = Path(__file__).resolve().parent.parent / "scenes"

CUBE = [(0, 0, 0)]
L_TRICUBE = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]

# Planas en y = 0; ninguna se sostiene sola en su pose final
SOMA3 = {
    "big_l": [(0, 0, 0), (0, 0, 1), (1, 0, 1), (2, 0, 1)],
    "zeta": [(4, 0, 0), (4, 0, 1), (3, 0, 1), (3, 0, 2)],
    "uve": [(1, 0, 2), (2, 0, 2), (2, 0, 3)],
}

TWO_CANTILEVERS = {
    "left": [(0, 0, 0), (0, 0, 1), (1, 0, 1), (2, 0, 1)],
    "right": [(10, 0, 0), (10, 0, 1), (9, 0, 1), (8, 0, 1)],
}

# La Z cae sola; la L grande apoyada encima la sujeta y sostiene a las otras dos
SOMA4 = {
    "zeta": [(2, 0, 0), (2, 0, 1), (3, 0, 1), (3, 0, 2)],
    "big_l": [(2, 0, 2), (2, 0, 3), (3, 0, 3), (4, 0, 3)],
    "uve": [(3, 0, 4), (4, 0, 4), (4, 0, 5)],
    "small_l": [(2, 0, 4), (2, 0, 5), (1, 0, 5)],
}

# Cubo soma 3×3×3; L y Z forman la capa superior
SOMA7 = {
    "L": [(0, 2, 2), (1, 2, 2), (2, 2, 2), (0, 1, 2)],
    "Z": [(2, 1, 2), (1, 1, 2), (1, 0, 2), (0, 0, 2)],
    "T": [(2, 0, 2), (2, 0, 1), (2, 0, 0), (2, 1, 1)],
    "P": [(2, 2, 0), (2, 2, 1), (1, 2, 0), (2, 1, 0)],
    "A": [(1, 2, 1), (0, 2, 1), (0, 2, 0), (0, 1, 0)],
    "B": [(0, 1, 1), (1, 1, 1), (1, 1, 0), (1, 0, 0)],
    "V": [(0, 0, 1), (1, 0, 1), (0, 0, 0)],
}


def make_scene(pieces: dict, mu: float = 0.5, pose: Pose = None) -> Scene:
    """Escena de policubos {id: celdas} sobre la mesa z = 0."""
    pose = pose or Pose.identity()
    workpieces = []
    for piece_id, cells in pieces.items():
        shape = build_shape(cells, VOXEL)
        workpieces.append(Workpiece(id=piece_id, shape=shape, pose=pose, mass=DENSITY * shape.volume))
    return Scene(workpieces, friction=FrictionModel(mu=mu))


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    """Sin variables ASMPLAN_* ni .env del desarrollador durante los tests."""
    for env_name in ENV_VARS.values():
        monkeypatch.delenv(env_name, raising=False)
    monkeypatch.setattr("settings.load_dotenv", lambda *args, **kwargs: False)
    monkeypatch.chdir(tmp_path)
    yield


@pytest.fixture(autouse=True, scope="session")
def quiet_logger():
    logger.remove()
    logger.add(lambda message: None, level="WARNING")
    yield


@pytest.fixture
def config() -> PlannerConfig:
    return PlannerConfig()


@pytest.fixture
def cube_scene() -> Scene:
    return make_scene({"cube": CUBE})


@pytest.fixture
def stacked_scene() -> Scene:
    return make_scene({"bottom": [(0, 0, 0)], "top": [(0, 0, 1)]})


@pytest.fixture
def soma3_scene() -> Scene:
    return make_scene(SOMA3)


@pytest.fixture
def soma4_scene() -> Scene:
    return make_scene(SOMA4)


@pytest.fixture
def cantilever_scene() -> Scene:
    return make_scene(TWO_CANTILEVERS)


@pytest.fixture
def scenes_dir() -> Path:
    return SCENES_DIR


NEIGHBOURS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def random_polycube(rng, size: int, start=(0, 0, 0), taken=()) -> list:
    """Policubo conexo de `size` celdas que crece desde `start`, sin bajar de z = 0 ni pisar `taken`."""
    cells = [tuple(int(c) for c in start)]
    blocked = set(taken)
    while len(cells) < size:
        x, y, z = cells[int(rng.integers(len(cells)))]
        dx, dy, dz = NEIGHBOURS[int(rng.integers(len(NEIGHBOURS)))]
        cell = (x + dx, y + dy, z + dz)
        if cell[2] >= 0 and cell not in cells and cell not in blocked:
            cells.append(cell)
    return cells
