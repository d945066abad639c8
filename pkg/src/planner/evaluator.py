"""
Evaluación de órdenes - Filas S, G y A de un orden y su puntuación
"""

import threading
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from loguru import logger

from analysis.assemblability import (
    AssemblyDirection,
    assemblability_quality,
    constraint_normals,
    optimal_direction,
)
from analysis.assist import AssistResult, assist_analyze, assist_grasps, pick_hands
from analysis.grasping import Grasp, GraspCatalog
from analysis.stability import INF, StabilityQuality, stability_quality
from errors import NoAssistGrasp
from planner.scene import Scene
from settings import PlannerConfig


@dataclass(frozen=True, eq=False)
class OrderEvaluation:
    """Evaluación completa de un orden de montaje."""

    order: Tuple[str, ...]
    raw_s_row: Tuple[StabilityQuality, ...]
    s_row: Tuple[StabilityQuality, ...]
    g_row: Tuple[int, ...]
    a_row: Tuple[float, ...]
    directions: Tuple[AssemblyDirection, ...]
    grasps: Tuple[Tuple[Grasp, ...], ...]
    assist: Optional[AssistResult]
    assist_feasible: bool
    score: float

    @property
    def raw_stable(self) -> bool:
        return min(self.raw_s_row) > 0

    @property
    def used_assist(self) -> bool:
        return self.assist is not None and self.assist.used


def order_score(s_row, g_row, a_row, s_cap: float, feasible: bool = True) -> float:
    """
    min*(s) · min(g) · min(a).

    min* ignora las entradas +INF; si todas lo son, el factor es s_cap.
    Una asistencia inviable anula la puntuación.
    """
    if not feasible:
        return 0.0
    finite = [s for s in s_row if s != INF]
    stability = min(finite) if finite else s_cap
    return float(stability * min(g_row) * min(a_row))


class StepAnalyzer:
    """
    Análisis por paso memoizados por (pieza, conjunto de piezas montadas).

    Con n piezas hay como mucho n·2^(n−1) claves distintas, frente a n·n!
    pasos a evaluar. Seguro entre hilos.
    """

    def __init__(self, scene: Scene, config: PlannerConfig):
        self.scene = scene
        self.config = config
        self.catalog = GraspCatalog(scene, config.sampling)
        self._stability: Dict[Tuple[str, FrozenSet[str]], StabilityQuality] = {}
        self._directions: Dict[Tuple[str, FrozenSet[str]], AssemblyDirection] = {}
        self._assist: Dict[Tuple[str, FrozenSet[str], Optional[str]], Optional[Tuple[Grasp, ...]]] = {}
        self._lock = threading.Lock()

    def _memo(self, table: dict, key, compute):
        with self._lock:
            if key in table:
                return table[key]
        value = compute()
        with self._lock:
            table.setdefault(key, value)
        return value

    def stability(self, piece: str, fixed: Sequence[str]) -> StabilityQuality:
        support = frozenset(fixed) - {piece}
        return self._memo(
            self._stability,
            (piece, support),
            lambda: stability_quality(piece, sorted(support), self.scene, self.config.stability),
        )

    def direction(self, piece: str, prefix: Sequence[str]) -> AssemblyDirection:
        support = frozenset(prefix) - {piece}
        return self._memo(
            self._directions,
            (piece, support),
            lambda: optimal_direction(
                constraint_normals(piece, sorted(support), self.scene), self.scene.gravity_direction
            ),
        )

    def grasps(self, piece: str, prefix: Sequence[str]) -> List[Grasp]:
        return self.catalog.accessible(piece, prefix)

    def assist_grasps(self, held: str, group: Sequence[str], next_piece: Optional[str]) -> Optional[Tuple[Grasp, ...]]:
        """Agarres de asistencia de `held` en el grupo; None si no queda ninguno."""
        members = frozenset(group)

        def compute():
            candidates = self.grasps(held, sorted(members))
            direction = self.direction(next_piece, sorted(members)) if next_piece else None
            try:
                return tuple(
                    assist_grasps(
                        held,
                        next_piece,
                        self.scene,
                        candidates,
                        prefix=sorted(members),
                        direction=direction,
                        retract_distance=self.config.retract_distance,
                    )
                )
            except NoAssistGrasp as exc:
                logger.warning(f"⚠️ {exc}")
                return None

        return self._memo(self._assist, (held, members, next_piece), compute)


def evaluate_order(
    order: Sequence[str],
    scene: Scene,
    config: PlannerConfig,
    analyzer: Optional[StepAnalyzer] = None,
    allow_assist: bool = True,
) -> OrderEvaluation:
    """
    Evaluar un orden: estabilidad, asistencia si hace falta, agarrabilidad y ensamblabilidad.

    Args:
        order: Permutación de los ids de la escena
        scene: Escena
        config: Configuración
        analyzer: Caché compartida entre órdenes (se crea una si falta)
        allow_assist: False para conservar la fila bruta aunque tenga ceros

    Returns:
        OrderEvaluation con la puntuación ya calculada
    """
    analyzer = analyzer or StepAnalyzer(scene, config)
    order = tuple(order)
    if sorted(order) != sorted(scene.ids):
        raise ValueError(f"{list(order)} no es una permutación de {list(scene.ids)}")

    raw = tuple(analyzer.stability(piece, order[:j]) for j, piece in enumerate(order))
    directions = tuple(analyzer.direction(piece, order[:j]) for j, piece in enumerate(order))
    a_row = tuple(assemblability_quality(direction) for direction in directions)
    grasps = tuple(tuple(analyzer.grasps(piece, order[:j])) for j, piece in enumerate(order))
    g_row = tuple(len(step) for step in grasps)

    assist, s_row, feasible = None, raw, True
    if allow_assist and min(raw) <= 0:
        analysis = assist_analyze(
            order, scene, config.stability, config.extra_hands, raw_row=raw, stability=analyzer.stability
        )
        assist, feasible = _attach_grasps(order, analysis, analyzer)
        s_row = assist.updated_s

    return OrderEvaluation(
        order=order,
        raw_s_row=raw,
        s_row=s_row,
        g_row=g_row,
        a_row=a_row,
        directions=directions,
        grasps=grasps,
        assist=assist,
        assist_feasible=feasible,
        score=order_score(s_row, g_row, a_row, config.s_cap, feasible),
    )


def _attach_grasps(order: Tuple[str, ...], analysis: AssistResult, analyzer: StepAnalyzer):
    # una mano por pieza sujeta; el paso queda incompleto si alguna se queda sin agarre
    scene = analyzer.scene
    per_step = []
    complete = True
    for j, held in enumerate(analysis.held):
        if not held or not analysis.feasible:
            per_step.append(())
            continue
        group = order[: j + 1]
        next_piece = order[j + 1] if j + 1 < len(order) else None
        found = [analyzer.assist_grasps(piece, group, next_piece) for piece in held]
        hands = None
        if all(grasps is not None for grasps in found):
            hands = pick_hands(found, scene.gripper, scene.tolerances.contact_gap)
        complete = complete and hands is not None
        per_step.append(hands or ())

    result = AssistResult(
        updated_s=analysis.updated_s,
        held=analysis.held,
        assist_grasps=tuple(per_step),
        feasible=analysis.feasible,
    )
    return result, analysis.feasible and complete
