"""
Scene - Piezas en su pose final, mesa, gravedad, fricción y pinza
Cachea los contactos por par de cuerpos; es segura entre hilos.
"""

import threading
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from analysis.grasping import GripperSpec
from analysis.stability import DEFAULT_GRAVITY, FrictionModel
from errors import SceneValidationError, UnknownBody
from geometry.collision import Obstacle, world_pieces
from geometry.contacts import TABLE_ID, ContactPatch, detect_contacts
from geometry.pose import Pose
from geometry.shape import HalfSpace, Shape
from geometry.tolerances import Tolerances


@dataclass(frozen=True, eq=False)
class Workpiece:
    """Cuerpo rígido: forma local, pose final y masa."""

    id: str
    shape: Shape
    pose: Pose
    mass: float
    name: str = ""
    color: Optional[str] = None

    @cached_property
    def center_of_mass(self) -> np.ndarray:
        return self.pose.apply(self.shape.center_of_mass)

    @cached_property
    def world_pieces(self):
        return world_pieces(self.shape, self.pose)

    @cached_property
    def world_vertices(self) -> np.ndarray:
        return self.pose.apply(self.shape.vertices)


class Scene:
    """
    Escena de ensamblaje.

    Los contactos entre dos cuerpos se calculan una sola vez; la caché
    es interna y no cambia ningún resultado.
    """

    def __init__(
        self,
        workpieces: Sequence[Workpiece],
        table_height: float = 0.0,
        gravity=DEFAULT_GRAVITY,
        friction: Optional[FrictionModel] = None,
        gripper: Optional[GripperSpec] = None,
        tolerances: Optional[Tolerances] = None,
    ):
        ids = [piece.id for piece in workpieces]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise SceneValidationError([f"id duplicado: {i}" for i in duplicates])
        if TABLE_ID in ids:
            raise SceneValidationError([f"'{TABLE_ID}' está reservado para la mesa"])

        gravity = np.asarray(gravity, dtype=float)
        if np.linalg.norm(gravity) == 0:
            raise SceneValidationError(["la gravedad no puede ser nula"])

        self._workpieces: Dict[str, Workpiece] = {piece.id: piece for piece in workpieces}
        self.table = HalfSpace(float(table_height))
        self.gravity = gravity
        self.friction = friction or FrictionModel()
        self.gripper = gripper or GripperSpec()
        self.tolerances = tolerances or Tolerances()

        self._contacts: Dict[Tuple[str, str], List[ContactPatch]] = {}
        self._lock = threading.Lock()

    # ========== Cuerpos ==========

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(self._workpieces)

    @property
    def workpieces(self) -> Tuple[Workpiece, ...]:
        return tuple(self._workpieces.values())

    def workpiece(self, piece_id: str) -> Workpiece:
        try:
            return self._workpieces[piece_id]
        except KeyError:
            raise UnknownBody(piece_id) from None

    def require(self, body_id: str):
        if body_id != TABLE_ID:
            self.workpiece(body_id)

    def body(self, body_id: str) -> Obstacle:
        """Par (forma o semiespacio, pose) de un cuerpo."""
        if body_id == TABLE_ID:
            return self.table, None
        piece = self.workpiece(body_id)
        return piece.shape, piece.pose

    def obstacles(self, body_ids: Sequence[str], include_table: bool = True) -> List[Obstacle]:
        bodies = [self.body(body_id) for body_id in body_ids]
        return [self.body(TABLE_ID)] + bodies if include_table else bodies

    def weight(self, piece_id: str) -> float:
        return self.workpiece(piece_id).mass * float(np.linalg.norm(self.gravity))

    @cached_property
    def heaviest_weight(self) -> float:
        return max(self.weight(piece_id) for piece_id in self.ids)

    @property
    def gravity_direction(self) -> np.ndarray:
        return self.gravity / np.linalg.norm(self.gravity)

    # ========== Contactos ==========

    def contacts(self, body_a: str, body_b: str) -> List[ContactPatch]:
        """
        Parches entre dos cuerpos con normales de A hacia B.

        Raises:
            UnknownBody: Si algún id no existe
            Interpenetration: Si los cuerpos se solapan
        """
        self.require(body_a)
        self.require(body_b)
        key = (body_a, body_b)
        with self._lock:
            if key in self._contacts:
                return self._contacts[key]
            reverse = self._contacts.get((body_b, body_a))
        if reverse is not None:
            patches = [patch.flipped() for patch in reverse]
        else:
            shape_a, pose_a = self.body(body_a)
            shape_b, pose_b = self.body(body_b)
            patches = detect_contacts(shape_a, pose_a, shape_b, pose_b, self.tolerances, body_a, body_b)
            logger.debug(f"🔍 {len(patches)} parches {body_a} → {body_b}")
        with self._lock:
            self._contacts[key] = patches
        return patches

    def support_patches(self, piece_id: str, fixed_bodies: Sequence[str]) -> List[ContactPatch]:
        """Contactos de la mesa y de `fixed_bodies` sobre la pieza (normales hacia ella)."""
        self.workpiece(piece_id)
        sources = [TABLE_ID] + [body for body in fixed_bodies if body not in (TABLE_ID, piece_id)]
        patches = []
        for source in sources:
            patches.extend(self.contacts(source, piece_id))
        return patches

    # ========== Variantes ==========

    def with_friction(self, mu: float) -> "Scene":
        """Copia con un único coeficiente de fricción (p. ej. --mu)."""
        return self._copy(friction=self.friction.with_mu(mu))

    def with_workpieces(self, workpieces: Sequence[Workpiece]) -> "Scene":
        return self._copy(workpieces=workpieces)

    def transformed(self, pose: Pose) -> "Scene":
        """Aplicar una transformación rígida global a todas las piezas."""
        moved = [replace(piece, pose=pose.compose(piece.pose)) for piece in self.workpieces]
        return self._copy(workpieces=moved)

    def _copy(self, **changes) -> "Scene":
        values = dict(
            workpieces=self.workpieces,
            table_height=self.table.height,
            gravity=self.gravity,
            friction=self.friction,
            gripper=self.gripper,
            tolerances=self.tolerances,
        )
        values.update(changes)
        return Scene(**values)
