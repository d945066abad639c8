"""
Agarre - Agarres antipodales de pinza paralela sobre facetas opuestas
Enumeración de pares de facetas, muestreo en rejilla, filtro de colisiones
y calidad de agarrabilidad (número de agarres accesibles).
"""

import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
import shapely
from shapely.geometry import MultiPolygon, Point, Polygon

from geometry.collision import Obstacle, pieces_collide
from geometry.contacts import ANTIPARALLEL_COS
from geometry.convex import ConvexPiece, box_piece
from geometry.pose import Pose
from geometry.shape import Facet, Shape, box_shape, polygon_parts
from geometry.tolerances import Tolerances

if TYPE_CHECKING:
    from planner.scene import Scene

# Calidad de agarrabilidad: número de agarres que sobreviven a los filtros
GraspabilityQuality = int

GRIPPER_PARTS = ("finger_left", "finger_right", "palm")

MIN_OVERLAP_AREA = 1e-12


class GripperSpec(BaseModel):
    """
    Pinza paralela modelada con tres cajas: dos dedos y la palma.

    Marco de la pinza: eje de mordaza = y local, aproximación = −z local.
    El punto de contacto queda a finger_width/2 del extremo de cada dedo.
    """

    model_config = ConfigDict(frozen=True)

    max_opening: float = Field(0.085, gt=0, description="Apertura máxima (m)")
    finger_width: float = Field(0.015, gt=0, description="Ancho del dedo (m)")
    finger_length: float = Field(0.04, gt=0, description="Largo del dedo (m)")
    finger_thickness: float = Field(0.008, gt=0, description="Espesor del dedo (m)")
    palm_depth: float = Field(0.03, gt=0, description="Profundidad de la palma (m)")

    def boxes(self, opening: float) -> Tuple[Tuple[str, np.ndarray, np.ndarray], ...]:
        """Cajas (nombre, centro, semiejes) en el marco de la pinza."""
        w, length, t = self.finger_width, self.finger_length, self.finger_thickness
        finger_z = length / 2.0 - w / 2.0
        finger_y = opening / 2.0 + t / 2.0
        finger_half = np.array([w / 2.0, t / 2.0, length / 2.0])
        palm_center = np.array([0.0, 0.0, length - w / 2.0 + self.palm_depth / 2.0])
        palm_half = np.array([w / 2.0, self.max_opening / 2.0 + t, self.palm_depth / 2.0])
        return (
            ("finger_left", np.array([0.0, finger_y, finger_z]), finger_half),
            ("finger_right", np.array([0.0, -finger_y, finger_z]), finger_half),
            ("palm", palm_center, palm_half),
        )

    def collision_shapes(self, opening: float) -> Tuple[Tuple[str, Shape], ...]:
        return _gripper_shapes(self, opening)


@lru_cache(maxsize=1024)
def _gripper_shapes(gripper: GripperSpec, opening: float) -> Tuple[Tuple[str, Shape], ...]:
    return tuple((name, box_shape(half, center)) for name, center, half in gripper.boxes(opening))


@lru_cache(maxsize=1024)
def _gripper_pieces(gripper: GripperSpec, opening: float) -> Tuple[ConvexPiece, ...]:
    return tuple(box_piece(center, half) for _, center, half in gripper.boxes(opening))


class GraspSampling(BaseModel):
    """Muestreo de agarres: paso de la rejilla y giros alrededor de la mordaza."""

    model_config = ConfigDict(frozen=True)

    pitch: float = Field(0.01, gt=0, description="Paso de la rejilla (m)")
    rolls: int = Field(2, ge=1, description="Giros por muestra (paso 360°/max(rolls, 4))")


@dataclass(frozen=True, eq=False)
class FacetPair:
    """Par de facetas antiparalelas; el solape vive en el marco 2-D de facet_a."""

    index: int
    facet_a: Facet
    facet_b: Facet
    separation: float
    overlap: Polygon


@dataclass(frozen=True, eq=False)
class Grasp:
    """Agarre: pose de la pinza, apertura y los dos puntos de contacto."""

    pose: Pose
    opening: float
    contact_pair: np.ndarray
    pair_index: int = 0
    grid_index: int = 0
    roll_index: int = 0

    @property
    def jaw_axis(self) -> np.ndarray:
        return self.pose.rotation[:, 1]

    @property
    def approach(self) -> np.ndarray:
        return -self.pose.rotation[:, 2]

    def transformed(self, pose: Pose) -> "Grasp":
        return Grasp(
            pose=pose.compose(self.pose),
            opening=self.opening,
            contact_pair=pose.apply(self.contact_pair),
            pair_index=self.pair_index,
            grid_index=self.grid_index,
            roll_index=self.roll_index,
        )

    def collision_pieces(self, gripper: GripperSpec) -> Tuple[ConvexPiece, ...]:
        return tuple(piece.transformed(self.pose) for piece in _gripper_pieces(gripper, self.opening))


# ========== Facetas y muestreo ==========


def enumerate_facet_pairs(shape: Shape, gripper: GripperSpec) -> List[FacetPair]:
    """
    Pares de facetas con normales antiparalelas y proyecciones solapadas.

    Args:
        shape: Forma en su marco local
        gripper: Pinza (limita la separación a max_opening)

    Returns:
        Pares en orden (i, j) de facetas, i < j
    """
    facets = shape.facets
    pairs = []
    for i, facet_a in enumerate(facets):
        for facet_b in facets[i + 1:]:
            if facet_a.normal @ facet_b.normal > -ANTIPARALLEL_COS:
                continue
            # el material queda entre ambos planos si la separación es positiva
            separation = facet_a.offset + facet_b.offset
            if separation <= 0 or separation > gripper.max_opening:
                continue
            projected = shapely.transform(facet_b.polygon, lambda uv: facet_a.to_plane(facet_b.to_world(uv)))
            overlap = _overlap_region(facet_a.polygon.intersection(projected))
            if overlap is None:
                continue
            pairs.append(
                FacetPair(index=len(pairs), facet_a=facet_a, facet_b=facet_b, separation=separation, overlap=overlap)
            )
    return pairs


def _overlap_region(geometry):
    parts = [part for part in polygon_parts(geometry) if part.area > MIN_OVERLAP_AREA]
    if not parts:
        return None
    if len(parts) == 1:
        return parts[0]
    return MultiPolygon(parts)


def _axis_samples(low: float, high: float, pitch: float) -> np.ndarray:
    width = high - low
    count = max(1, int(np.floor(width / pitch + 1e-9)))
    start = low + (width - (count - 1) * pitch) / 2.0
    return start + pitch * np.arange(count)


def grid_points(region, pitch: float) -> List[Tuple[float, float]]:
    """Muestras en rejilla centrada, estrictamente dentro de la región."""
    min_x, min_y, max_x, max_y = region.bounds
    points = [
        (x, y)
        for x in _axis_samples(min_x, max_x, pitch)
        for y in _axis_samples(min_y, max_y, pitch)
        if region.contains(Point(x, y))
    ]
    if points:
        return points
    fallback = region.centroid if region.contains(region.centroid) else region.representative_point()
    return [(fallback.x, fallback.y)]


def _grasp_rotation(jaw_axis: np.ndarray, angle: float) -> np.ndarray:
    # roll 0: la palma hacia +z local (proyectado), aproximación desde arriba
    up = np.array([0.0, 0.0, 1.0])
    base = up - (up @ jaw_axis) * jaw_axis
    if np.linalg.norm(base) < 1e-9:
        side = np.array([1.0, 0.0, 0.0])
        base = side - (side @ jaw_axis) * jaw_axis
    base /= np.linalg.norm(base)

    z_axis = np.cos(angle) * base + np.sin(angle) * np.cross(jaw_axis, base)
    x_axis = np.cross(jaw_axis, z_axis)
    return np.column_stack([x_axis, jaw_axis, z_axis])


def sample_grasps(shape: Shape, gripper: GripperSpec, sampling: GraspSampling) -> List[Grasp]:
    """
    Agarres candidatos en el marco local de la forma.

    Por cada par de facetas, una rejilla sobre el solape de proyecciones y
    `sampling.rolls` giros alrededor de la mordaza por muestra. Orden:
    par, muestra, giro.
    """
    roll_step = 2.0 * np.pi / max(sampling.rolls, 4)
    grasps = []
    for pair in enumerate_facet_pairs(shape, gripper):
        jaw_axis = pair.facet_a.normal
        for grid_index, uv in enumerate(grid_points(pair.overlap, sampling.pitch)):
            on_a = pair.facet_a.to_world(uv)[0]
            on_b = on_a - pair.separation * jaw_axis
            center = (on_a + on_b) / 2.0
            for roll_index in range(sampling.rolls):
                grasps.append(
                    Grasp(
                        pose=Pose(_grasp_rotation(jaw_axis, roll_index * roll_step), center),
                        opening=pair.separation,
                        contact_pair=np.vstack([on_a, on_b]),
                        pair_index=pair.index,
                        grid_index=grid_index,
                        roll_index=roll_index,
                    )
                )
    return grasps


# ========== Filtros ==========


def blocked_mask(grasps: Sequence[Grasp], obstacle: Obstacle, gripper: GripperSpec, tol: Tolerances) -> np.ndarray:
    """Máscara booleana: agarres cuya pinza choca con el obstáculo."""
    return np.array(
        [pieces_collide(grasp.collision_pieces(gripper), obstacle, tol.contact_gap) for grasp in grasps],
        dtype=bool,
    )


def filter_accessible(
    grasps: Sequence[Grasp],
    shape: Shape,
    pose: Pose,
    obstacles: Sequence[Obstacle],
    gripper: GripperSpec,
    tol: Tolerances,
) -> List[Grasp]:
    """
    Agarres (ya en mundo) cuya pinza no choca con la propia pieza ni con los obstáculos.

    Args:
        grasps: Agarres expresados en el marco del mundo
        shape: Forma de la pieza agarrada
        pose: Pose final de la pieza
        obstacles: Mesa y piezas ya ensambladas
        gripper: Pinza
        tol: Tolerancias (contact_gap)

    Returns:
        Subconjunto en el mismo orden
    """
    if not grasps:
        return []
    blocked = blocked_mask(grasps, (shape, pose), gripper, tol)
    for obstacle in obstacles:
        blocked |= blocked_mask(grasps, obstacle, gripper, tol)
    return [grasp for grasp, hit in zip(grasps, blocked) if not hit]


class GraspCatalog:
    """
    Caché de agarres por pieza para una escena.

    Los candidatos de cada pieza (libres de sí misma y de la mesa) y su
    máscara de bloqueo frente a cada otra pieza se calculan una vez; los
    agarres accesibles con un prefijo son la conjunción de máscaras.
    """

    def __init__(self, scene: "Scene", sampling: GraspSampling):
        self.scene = scene
        self.sampling = sampling
        self._candidates: Dict[str, Tuple[Grasp, ...]] = {}
        self._masks: Dict[Tuple[str, str], np.ndarray] = {}
        self._lock = threading.Lock()

    def candidates(self, piece_id: str) -> Tuple[Grasp, ...]:
        with self._lock:
            cached = self._candidates.get(piece_id)
        if cached is not None:
            return cached

        scene = self.scene
        piece = scene.workpiece(piece_id)
        local = sample_grasps(piece.shape, scene.gripper, self.sampling)
        world = [grasp.transformed(piece.pose) for grasp in local]
        accessible = tuple(
            filter_accessible(world, piece.shape, piece.pose, scene.obstacles([]), scene.gripper, scene.tolerances)
        )
        logger.debug(f"✋ {piece_id}: {len(accessible)}/{len(local)} agarres libres de mesa y de sí misma")
        with self._lock:
            self._candidates[piece_id] = accessible
        return accessible

    def mask(self, piece_id: str, other_id: str) -> np.ndarray:
        key = (piece_id, other_id)
        with self._lock:
            cached = self._masks.get(key)
        if cached is not None:
            return cached

        grasps = self.candidates(piece_id)
        mask = blocked_mask(grasps, self.scene.body(other_id), self.scene.gripper, self.scene.tolerances)
        with self._lock:
            self._masks[key] = mask
        return mask

    def accessible(self, piece_id: str, prefix: Sequence[str]) -> List[Grasp]:
        grasps = self.candidates(piece_id)
        blocked = np.zeros(len(grasps), dtype=bool)
        for other in prefix:
            if other != piece_id:
                blocked |= self.mask(piece_id, other)
        return [grasp for grasp, hit in zip(grasps, blocked) if not hit]


def graspability_row(
    order: Sequence[str],
    scene: "Scene",
    sampling: GraspSampling,
    catalog: Optional[GraspCatalog] = None,
) -> Tuple[List[GraspabilityQuality], List[List[Grasp]]]:
    """
    Fila de agarrabilidad de un orden.

    Returns:
        (conteos por paso, listas de agarres accesibles por paso)
    """
    catalog = catalog or GraspCatalog(scene, sampling)
    grasp_lists = [catalog.accessible(piece, order[:j]) for j, piece in enumerate(order)]
    return [len(grasps) for grasps in grasp_lists], grasp_lists
