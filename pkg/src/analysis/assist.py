"""
Asistencia - Soporte de piezas inestables con el segundo brazo
Recalcula la estabilidad de cada grupo parcial sustituyendo por +INF las
piezas sujetas y filtra los agarres de asistencia contra la pieza siguiente.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from analysis.assemblability import AssemblyDirection, constraint_normals, optimal_direction
from analysis.grasping import Grasp, GripperSpec
from analysis.stability import INF, StabilityParams, StabilityQuality, stability_quality
from errors import NoAssistGrasp
from geometry.collision import max_overlap, swept_collision

if TYPE_CHECKING:
    from planner.scene import Scene

StabilityFn = Callable[[str, Sequence[str]], StabilityQuality]


@dataclass(frozen=True, eq=False)
class AssistResult:
    """
    Resultado del analizador de asistencia.

    held[j] son las piezas sujetas en el paso j (en orden de montaje);
    assist_grasps[j] un agarre por pieza sujeta, alineado con held[j].
    """

    updated_s: Tuple[StabilityQuality, ...]
    held: Tuple[Tuple[str, ...], ...]
    assist_grasps: Tuple[Tuple[Grasp, ...], ...]
    feasible: bool

    @property
    def used(self) -> bool:
        return any(self.held)

    @property
    def max_held(self) -> int:
        return max((len(group) for group in self.held), default=0)


def assist_analyze(
    order: Sequence[str],
    scene: "Scene",
    params: StabilityParams,
    extra_hands: int = 1,
    raw_row: Optional[Sequence[StabilityQuality]] = None,
    stability: Optional[StabilityFn] = None,
) -> AssistResult:
    """
    Estabilidad por grupos con piezas sujetas.

    Para cada prefijo se recalcula la estabilidad de todas sus piezas frente
    a la mesa y al resto del prefijo; las que dan 0 se marcan sujetas (+INF).
    Una pieza sujeta se suelta en cuanto su recálculo vuelve a ser positivo.

    Args:
        order: Orden de montaje
        scene: Escena
        params: Parámetros de estabilidad
        extra_hands: Brazos disponibles para sujetar
        raw_row: Fila de estabilidad bruta, si ya se calculó
        stability: Función (pieza, fijos) -> s; por defecto stability_quality

    Returns:
        AssistResult; feasible = False si algún paso necesita más de extra_hands
    """
    if extra_hands < 0:
        raise ValueError("extra_hands no puede ser negativo")

    def quality(piece: str, fixed: Sequence[str]) -> StabilityQuality:
        if stability is not None:
            return stability(piece, fixed)
        return stability_quality(piece, fixed, scene, params)

    if raw_row is None:
        raw_row = [quality(piece, order[:j]) for j, piece in enumerate(order)]

    steps = len(order)
    if min(raw_row, default=1.0) > 0:
        return AssistResult(tuple(raw_row), ((),) * steps, ((),) * steps, True)

    updated, held_steps = [], []
    for j in range(steps):
        group = order[: j + 1]
        recomputed = {piece: quality(piece, [other for other in group if other != piece]) for piece in group}
        held = tuple(piece for piece in group if recomputed[piece] == 0)
        free = [recomputed[piece] for piece in group if piece not in held]
        updated.append(min(free) if free else INF)
        held_steps.append(held)

    feasible = all(len(held) <= extra_hands for held in held_steps)
    if not feasible:
        logger.debug(f"Orden {list(order)}: se necesitan más de {extra_hands} brazos de asistencia")
    return AssistResult(tuple(updated), tuple(held_steps), ((),) * steps, feasible)


def assist_grasps(
    held: str,
    next_preparing: Optional[str],
    scene: "Scene",
    candidate_grasps: Sequence[Grasp],
    prefix: Sequence[str] = (),
    direction: Optional[AssemblyDirection] = None,
    retract_distance: float = 0.15,
) -> list:
    """
    Agarres de asistencia compatibles con la llegada de la pieza siguiente.

    Args:
        held: Pieza sujeta
        next_preparing: Pieza que se monta a continuación (None en el último paso)
        scene: Escena
        candidate_grasps: Agarres accesibles de la pieza sujeta
        prefix: Piezas ya montadas cuando llega la siguiente
        direction: Dirección de inserción de la siguiente; se calcula si falta
        retract_distance: Recorrido barrido hacia atrás (m)

    Returns:
        Subconjunto de candidate_grasps cuya pinza no choca con la pieza
        siguiente en su pose final ni a lo largo de su retirada

    Raises:
        NoAssistGrasp: Si no queda ningún agarre
    """
    if next_preparing is None:
        return list(candidate_grasps)

    incoming = scene.workpiece(next_preparing)
    if direction is None:
        direction = optimal_direction(constraint_normals(next_preparing, prefix, scene), scene.gravity_direction)
    retreat = -np.asarray(direction.direction, dtype=float)

    kept = []
    for grasp in candidate_grasps:
        obstacles = [(shape, grasp.pose) for _, shape in scene.gripper.collision_shapes(grasp.opening)]
        if not swept_collision(incoming.shape, incoming.pose, retreat, retract_distance, obstacles, scene.tolerances):
            kept.append(grasp)

    logger.debug(f"🤝 {held}: {len(kept)}/{len(candidate_grasps)} agarres de asistencia libres de {next_preparing}")
    if not kept:
        raise NoAssistGrasp(f"Ningún agarre de {held} deja paso a {next_preparing}")
    return kept


def pick_hands(grasp_sets: Sequence[Sequence[Grasp]], gripper: GripperSpec, gap: float) -> Optional[Tuple[Grasp, ...]]:
    """
    Un agarre por pieza sujeta, sin choques entre pinzas.

    Se recorre cada lista en su orden y se toma el primer agarre cuya pinza
    no solapa con las ya elegidas.

    Args:
        grasp_sets: Agarres de asistencia de cada pieza sujeta
        gripper: Pinza de cada brazo
        gap: Holgura de contacto (m)

    Returns:
        Tupla alineada con grasp_sets, o None si alguna pieza se queda sin mano
    """
    chosen, bodies = [], []
    for grasps in grasp_sets:
        pick = next(
            (
                grasp
                for grasp in grasps
                if all(max_overlap(grasp.collision_pieces(gripper), other, gap) <= gap for other in bodies)
            ),
            None,
        )
        if pick is None:
            return None
        chosen.append(pick)
        bodies.append(pick.collision_pieces(gripper))
    return tuple(chosen)
