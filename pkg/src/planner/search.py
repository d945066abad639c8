"""
Búsqueda - Enumeración exhaustiva de órdenes y selección del óptimo
Sin poda: se evalúan las n! permutaciones y se desempata con una semilla.
"""

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from analysis.assemblability import AssemblyDirection
from errors import NoFeasibleOrder, SceneValidationError, TooManyPieces
from planner.evaluator import OrderEvaluation, StepAnalyzer, evaluate_order
from planner.scene import Scene
from settings import PlannerConfig

TIE_TOL = 1e-12
CHUNK_SIZE = 256


@dataclass(frozen=True, eq=False)
class PlanResult:
    """Orden óptimo y, opcionalmente, todas las filas evaluadas."""

    optimal: OrderEvaluation
    optimal_index: int
    order_count: int
    seed: int
    evaluations: Optional[Tuple[OrderEvaluation, ...]] = None

    @property
    def used_assist(self) -> bool:
        return self.optimal.used_assist

    @property
    def optimal_directions(self) -> Tuple[AssemblyDirection, ...]:
        return self.optimal.directions

    @property
    def matrices(self) -> Optional[Dict[str, list]]:
        """Matrices S, G, A y de direcciones (una fila por orden)."""
        if self.evaluations is None:
            return None
        rows = self.evaluations
        return {
            "orders": [list(row.order) for row in rows],
            "S": [list(row.s_row) for row in rows],
            "G": [list(row.g_row) for row in rows],
            "A": [list(row.a_row) for row in rows],
            "directions": [[d.direction.tolist() for d in row.directions] for row in rows],
            "scores": [row.score for row in rows],
        }


def permutations(ids: Sequence[str], max_pieces: int = 8) -> Iterator[Tuple[str, ...]]:
    """
    Todas las permutaciones en orden lexicográfico respecto al orden de `ids`.

    Raises:
        TooManyPieces: Si hay más de max_pieces ids
    """
    ids = list(ids)
    if not ids:
        raise SceneValidationError(["la escena no tiene piezas"])
    if len(ids) > max_pieces:
        raise TooManyPieces(f"{len(ids)} piezas superan el máximo de {max_pieces} ({math.factorial(len(ids))} órdenes)")
    return itertools.permutations(ids)


def pick_winner(scores: Sequence[float], assist_free: Sequence[bool], seed: int, prefer_no_assist: bool = True) -> int:
    """
    Índice del máximo; los empates (dentro de 1e-12) se resuelven con un
    generador determinista sembrado con `seed`.
    """
    scores = np.asarray(scores, dtype=float)
    tied = np.flatnonzero(scores >= scores.max() - TIE_TOL)
    if prefer_no_assist:
        free = [i for i in tied if assist_free[i]]
        if free:
            tied = np.array(free)
    rng = np.random.default_rng(seed)
    return int(tied[rng.integers(len(tied))])


def _check_feasible(scores: Sequence[float], recoverable: Sequence[bool]):
    if max(scores) <= 0 and not any(recoverable):
        raise NoFeasibleOrder("Todos los órdenes puntúan 0 y ninguna asistencia es viable")


def _recoverable(evaluation: OrderEvaluation) -> bool:
    return evaluation.raw_stable or (evaluation.assist is not None and evaluation.assist_feasible)


def select(evaluations: Sequence[OrderEvaluation], seed: int = 0, prefer_no_assist: bool = True) -> PlanResult:
    """
    Elegir el orden de máxima puntuación.

    Raises:
        NoFeasibleOrder: Si todas las puntuaciones son 0 y ninguna asistencia es viable
    """
    evaluations = tuple(evaluations)
    if not evaluations:
        raise ValueError("No hay evaluaciones entre las que elegir")

    scores = [evaluation.score for evaluation in evaluations]
    _check_feasible(scores, [_recoverable(evaluation) for evaluation in evaluations])
    index = pick_winner(scores, [not e.used_assist for e in evaluations], seed, prefer_no_assist)
    return PlanResult(
        optimal=evaluations[index],
        optimal_index=index,
        order_count=len(evaluations),
        seed=seed,
        evaluations=evaluations,
    )


def _chunks(orders: Iterator[Tuple[str, ...]], size: int) -> Iterator[List[Tuple[str, ...]]]:
    """Bloques consecutivos de `size` órdenes sin materializar la enumeración."""
    while True:
        chunk = list(itertools.islice(orders, size))
        if not chunk:
            return
        yield chunk


def _nth_order(ids: Sequence[str], index: int, max_pieces: int) -> Tuple[str, ...]:
    return next(itertools.islice(permutations(ids, max_pieces), index, None))


def plan(scene: Scene, config: PlannerConfig) -> PlanResult:
    """
    Planificación completa: permutaciones → evaluación → selección.

    Las permutaciones se generan de forma perezosa y se entregan al pool en
    bloques de CHUNK_SIZE; el resultado es el mismo que en secuencial porque
    `executor.map` conserva el orden y sólo `pick_winner` usa aleatoriedad.

    Args:
        scene: Escena validada
        config: Configuración

    Returns:
        PlanResult (con todas las filas si config.full_matrices)
    """
    if config.mu_override is not None:
        scene = scene.with_friction(config.mu_override)

    # valida el número de piezas antes de evaluar nada
    permutations(scene.ids, config.max_pieces)
    order_count = math.factorial(len(scene.ids))
    analyzer = StepAnalyzer(scene, config)
    started = time.perf_counter()
    logger.info(f"🔢 {len(scene.ids)} piezas → {order_count} órdenes, {config.threads} hilo(s)")

    allow_assist = True
    if config.assist_policy == "global":
        allow_assist = not any(
            all(analyzer.stability(piece, order[:j]) > 0 for j, piece in enumerate(order))
            for order in permutations(scene.ids, config.max_pieces)
        )
        logger.info(f"🤝 Política global: asistencia {'activada' if allow_assist else 'desactivada'}")

    def evaluate(order):
        return evaluate_order(order, scene, config, analyzer, allow_assist)

    scores: List[float] = []
    assist_free: List[bool] = []
    recoverable: List[bool] = []
    kept: List[OrderEvaluation] = []
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        for chunk in _chunks(permutations(scene.ids, config.max_pieces), CHUNK_SIZE):
            for evaluation in executor.map(evaluate, chunk):
                scores.append(evaluation.score)
                assist_free.append(not evaluation.used_assist)
                recoverable.append(_recoverable(evaluation))
                if config.full_matrices:
                    kept.append(replace(evaluation, grasps=()))

    logger.info(f"⏱️ {order_count} órdenes evaluados en {time.perf_counter() - started:.1f} s")
    _check_feasible(scores, recoverable)

    index = pick_winner(scores, assist_free, config.seed, config.prefer_no_assist)
    optimal = evaluate(_nth_order(scene.ids, index, config.max_pieces))
    logger.success(f"🏆 Orden óptimo #{index}: {' → '.join(optimal.order)} (puntuación {optimal.score:.6g})")

    return PlanResult(
        optimal=optimal,
        optimal_index=index,
        order_count=order_count,
        seed=config.seed,
        evaluations=tuple(kept) if config.full_matrices else None,
    )
