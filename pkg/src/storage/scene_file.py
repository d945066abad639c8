"""
Archivo de escena - Lectura, validación y escritura canónica (JSON)
"""

import json
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError

from analysis.grasping import GripperSpec
from analysis.stability import FrictionModel
from errors import AsmPlanError, ParseError, PlanIOError, SceneValidationError
from geometry.collision import half_space_depth, max_overlap
from geometry.contacts import TABLE_ID
from geometry.pose import Pose
from geometry.shape import Shape, build_shape, load_mesh_shape
from geometry.tolerances import Tolerances
from planner.scene import Scene, Workpiece
from storage.canonical import canonical_dumps

DEFAULT_DENSITY = 700.0  # kg/m³, madera


# ========== Modelos ==========


class PoseSpec(BaseModel):
    """Pose final: cuaternión (w, x, y, z) y traslación en metros."""

    model_config = ConfigDict(extra="forbid")

    quaternion: Tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_pose(self) -> Pose:
        return Pose.from_quaternion(self.quaternion, self.translation)


class WorkpieceSpec(BaseModel):
    """Una pieza: vóxeles o malla, pose final y masa o densidad."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    name: Optional[str] = None
    voxels: Optional[List[Tuple[int, int, int]]] = None
    mesh_path: Optional[str] = None
    voxel_size: float = 0.025
    goal_pose: PoseSpec = Field(default_factory=PoseSpec)
    density: Optional[float] = None
    mass: Optional[float] = None
    color: Optional[str] = None


class PairFriction(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a: str
    b: str
    mu: float


class FrictionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    default_mu: float = 0.5
    cone_sides: int = 6
    overrides: List[PairFriction] = Field(default_factory=list)


class SceneFile(BaseModel):
    """Contenido de un archivo de escena."""

    model_config = ConfigDict(extra="forbid")

    workpieces: List[WorkpieceSpec]
    table_height: float = 0.0
    gravity: Tuple[float, float, float] = (0.0, 0.0, -9.81)
    friction: FrictionSpec = Field(default_factory=FrictionSpec)
    gripper: GripperSpec = Field(default_factory=GripperSpec)

    _base_dir: Path = PrivateAttr(default_factory=Path.cwd)

    @property
    def base_dir(self) -> Path:
        return self._base_dir


# ========== Lectura ==========


def parse_scene(text: str, source: str = "<escena>", base_dir: Optional[Path] = None) -> SceneFile:
    """
    Interpretar el texto JSON de una escena (sin validación semántica).

    Raises:
        ParseError: JSON mal formado (con línea y columna) o campos inválidos
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    try:
        scene_file = SceneFile.model_validate(data)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()
        )
        raise ParseError(f"{source}: {details}") from exc

    if base_dir is not None:
        scene_file._base_dir = base_dir
    return scene_file


def load_scene(path) -> SceneFile:
    """
    Leer y validar un archivo de escena.

    Args:
        path: Ruta al JSON

    Returns:
        SceneFile validado

    Raises:
        PlanIOError: Si no se puede leer
        ParseError: Si el JSON o sus campos son inválidos
        SceneValidationError: Con todos los invariantes violados
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PlanIOError(f"No se puede leer {path}: {exc}") from exc

    scene_file = parse_scene(text, source=str(path), base_dir=path.resolve().parent)
    problems = validate_scene(scene_file)
    if problems:
        raise SceneValidationError(problems)

    logger.info(f"📂 Escena {path.name}: {len(scene_file.workpieces)} piezas")
    return scene_file


def validate_scene(scene_file: SceneFile) -> List[str]:
    """Lista de todos los invariantes violados (vacía si la escena es válida)."""
    problems = []
    seen = set()
    for spec in scene_file.workpieces:
        if spec.id in seen:
            problems.append(f"id duplicado: {spec.id}")
        seen.add(spec.id)
        if spec.id == TABLE_ID:
            problems.append(f"'{TABLE_ID}' está reservado para la mesa")
        problems.extend(_workpiece_problems(spec, scene_file.base_dir))

    if not scene_file.workpieces:
        problems.append("la escena no tiene piezas")
    if np.linalg.norm(scene_file.gravity) == 0:
        problems.append("la gravedad no puede ser nula")

    friction = scene_file.friction
    if friction.default_mu < 0:
        problems.append(f"default_mu negativo: {friction.default_mu}")
    if friction.cone_sides < 3:
        problems.append(f"cone_sides debe ser ≥ 3: {friction.cone_sides}")
    for override in friction.overrides:
        for body in (override.a, override.b):
            if body not in seen and body != TABLE_ID:
                problems.append(f"fricción para un cuerpo desconocido: {body}")
        if override.mu < 0:
            problems.append(f"mu negativo para {override.a}/{override.b}: {override.mu}")

    if not problems:
        problems.extend(_overlap_problems(scene_file))
    return problems


def _workpiece_problems(spec: WorkpieceSpec, base_dir: Path) -> List[str]:
    problems = []
    label = f"pieza {spec.id}"
    if (spec.voxels is None) == (spec.mesh_path is None):
        problems.append(f"{label}: se necesita exactamente uno de voxels o mesh_path")
    if spec.voxel_size <= 0:
        problems.append(f"{label}: voxel_size debe ser positivo")
    if spec.mass is not None and spec.density is not None:
        problems.append(f"{label}: indicar masa o densidad, no ambas")
    for field_name in ("mass", "density"):
        value = getattr(spec, field_name)
        if value is not None and value <= 0:
            problems.append(f"{label}: {field_name} debe ser positiva")
    try:
        spec.goal_pose.to_pose()
    except AsmPlanError as exc:
        problems.append(f"{label}: pose inválida ({exc})")

    if not problems:
        try:
            _build_shape(spec, base_dir)
        except AsmPlanError as exc:
            problems.append(f"{label}: {exc}")
    return problems


def _overlap_problems(scene_file: SceneFile) -> List[str]:
    scene = scene_from_file(scene_file)
    tol = scene.tolerances
    problems = []
    pieces = scene.workpieces
    for i, piece in enumerate(pieces):
        sunk = half_space_depth(scene.table, piece.world_pieces)
        if sunk > tol.contact_gap:
            problems.append(f"pieza {piece.id}: atraviesa la mesa {sunk:.3g} m")
        for other in pieces[i + 1:]:
            depth = max_overlap(piece.world_pieces, other.world_pieces, tol.contact_gap)
            if depth > tol.contact_gap:
                problems.append(f"piezas {piece.id} y {other.id} se interpenetran {depth:.3g} m")
    return problems


def _build_shape(spec: WorkpieceSpec, base_dir: Path) -> Shape:
    if spec.voxels is not None:
        return build_shape(spec.voxels, spec.voxel_size)
    mesh_path = Path(spec.mesh_path)
    if not mesh_path.is_absolute():
        mesh_path = base_dir / mesh_path
    if not mesh_path.exists():
        raise PlanIOError(f"no existe la malla {mesh_path}")
    return load_mesh_shape(mesh_path)


def scene_from_file(scene_file: SceneFile, tolerances: Optional[Tolerances] = None) -> Scene:
    """Construir la escena (formas, poses, masas) a partir del archivo."""
    workpieces = []
    for spec in scene_file.workpieces:
        shape = _build_shape(spec, scene_file.base_dir)
        mass = spec.mass if spec.mass is not None else (spec.density or DEFAULT_DENSITY) * shape.volume
        workpieces.append(
            Workpiece(
                id=spec.id,
                shape=shape,
                pose=spec.goal_pose.to_pose(),
                mass=mass,
                name=spec.name or spec.id,
                color=spec.color,
            )
        )

    friction = FrictionModel(
        mu=scene_file.friction.default_mu,
        cone_sides=scene_file.friction.cone_sides,
        pair_mu={frozenset((o.a, o.b)): o.mu for o in scene_file.friction.overrides},
    )
    return Scene(
        workpieces,
        table_height=scene_file.table_height,
        gravity=scene_file.gravity,
        friction=friction,
        gripper=scene_file.gripper,
        tolerances=tolerances,
    )


# ========== Escritura ==========


def save_scene(scene_file: SceneFile, path):
    """
    Escribir la forma canónica de la escena.

    Raises:
        PlanIOError: Si no se puede escribir
    """
    path = Path(path)
    text = canonical_dumps(scene_file.model_dump(mode="python"))
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise PlanIOError(f"No se puede escribir {path}: {exc}") from exc
    logger.debug(f"💾 Escena guardada en {path}")
