"""
Colisión - Solapes estáticos y barridos de traslación
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from geometry.convex import ConvexPiece, penetration_depth
from geometry.pose import Pose
from geometry.shape import HalfSpace, Shape
from geometry.tolerances import Tolerances

Body = Union[Shape, HalfSpace]
Obstacle = Tuple[Body, Optional[Pose]]


def world_pieces(shape: Shape, pose: Pose) -> Tuple[ConvexPiece, ...]:
    return tuple(piece.transformed(pose) for piece in shape.convex_pieces)


def half_space_depth(half_space: HalfSpace, pieces: Sequence[ConvexPiece]) -> float:
    """Cuánto se hunde el conjunto de piezas bajo el plano de la mesa."""
    lowest = min(float(piece.lower[2]) for piece in pieces)
    return half_space.height - lowest


def max_overlap(pieces_a: Sequence[ConvexPiece], pieces_b: Sequence[ConvexPiece], gap: float = 0.0) -> float:
    """
    Máximo solape entre dos conjuntos de piezas convexas.

    Los pares cuyas cajas envolventes están separadas más de `gap` se
    descartan sin SAT y cuentan como -inf.
    """
    if not pieces_a or not pieces_b:
        return -np.inf

    lower_a = np.array([p.lower for p in pieces_a])
    upper_a = np.array([p.upper for p in pieces_a])
    lower_b = np.array([p.lower for p in pieces_b])
    upper_b = np.array([p.upper for p in pieces_b])

    separation = np.maximum(lower_b[None, :, :] - upper_a[:, None, :], lower_a[:, None, :] - upper_b[None, :, :])
    near = np.argwhere(separation.max(axis=2) <= gap)

    deepest = -np.inf
    for i, j in near:
        deepest = max(deepest, penetration_depth(pieces_a[i], pieces_b[j]))
    return deepest


def pieces_collide(pieces: Sequence[ConvexPiece], obstacle: Obstacle, gap: float) -> bool:
    """¿Solapan las piezas (ya en mundo) con el obstáculo más de `gap`?"""
    body, pose = obstacle
    if isinstance(body, HalfSpace):
        return half_space_depth(body, pieces) > gap
    return max_overlap(pieces, world_pieces(body, pose), gap) > gap


def overlap_depth(shape_a: Shape, pose_a: Pose, shape_b: Shape, pose_b: Pose) -> float:
    """Interpenetración con signo entre dos formas en sus poses."""
    return max_overlap(world_pieces(shape_a, pose_a), world_pieces(shape_b, pose_b), gap=np.inf)


def swept_collision(
    shape: Shape,
    start_pose: Pose,
    direction,
    distance: float,
    obstacles: Sequence[Obstacle],
    tol: Tolerances,
) -> bool:
    """
    ¿Choca la forma al trasladarse desde start_pose a lo largo de `direction`?

    El recorrido se divide en `tol.sweep_steps` tramos; cada tramo se
    prueba con el volumen barrido exacto de cada pieza convexa, así que no
    hay huecos entre estaciones y el resultado es monótono en la distancia.

    Args:
        shape: Forma que se mueve
        start_pose: Pose inicial
        direction: Dirección unitaria del movimiento
        distance: Longitud del recorrido (m), ≥ 0
        obstacles: Pares (forma o semiespacio, pose)
        tol: Tolerancias (contact_gap, sweep_steps)

    Returns:
        True si algún tramo interpenetra un obstáculo más de contact_gap
    """
    direction = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-6:
        raise ValueError("La dirección del barrido debe ser unitaria")
    if distance < 0:
        raise ValueError("La distancia del barrido no puede ser negativa")

    start = world_pieces(shape, start_pose)
    steps = tol.sweep_steps if distance > 0 else 1
    step = direction * (distance / steps)

    for k in range(steps):
        segment = [piece.translated(step * k).swept(step) for piece in start]
        if any(pieces_collide(segment, obstacle, tol.contact_gap) for obstacle in obstacles):
            return True
    return False
