"""
Ensamblabilidad - Dirección de inserción de máxima holgura
A partir de las normales de contacto con el componente ya montado se busca
la traslación recta que más se aleja de todas las restricciones.
"""

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Sequence, Tuple

import numpy as np

from geometry.hull import icosphere

if TYPE_CHECKING:
    from planner.scene import Scene

# Calidad de ensamblabilidad: 0 si la inserción está bloqueada, [0.5, 1] si no
AssemblabilityQuality = float

DEDUP_COS = float(np.cos(1e-6))
TIE_TOL = 1e-12
DOWN = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True, eq=False)
class DirectionConstraintSet:
    """Normales unitarias del componente montado hacia la pieza entrante."""

    normals: np.ndarray

    def __len__(self) -> int:
        return len(self.normals)

    def margin(self, direction) -> float:
        if len(self.normals) == 0:
            return 1.0
        return float(np.min(-(self.normals @ np.asarray(direction, dtype=float))))


@dataclass(frozen=True, eq=False)
class AssemblyDirection:
    """Dirección de movimiento en la inserción final y su margen en [−1, 1]."""

    direction: np.ndarray
    margin: float


def make_constraints(normals) -> DirectionConstraintSet:
    """Normalizar, deduplicar (1e-6 rad) y ordenar lexicográficamente."""
    kept = []
    for normal in np.asarray(normals, dtype=float).reshape(-1, 3):
        normal = normal / np.linalg.norm(normal)
        if all(normal @ other < DEDUP_COS for other in kept):
            kept.append(normal + 0.0)
    kept.sort(key=lambda n: tuple(np.round(n, 12)))
    return DirectionConstraintSet(np.array(kept).reshape(-1, 3))


def constraint_normals(workpiece: str, prefix: Sequence[str], scene: "Scene") -> DirectionConstraintSet:
    """Normales de todos los parches de la mesa y del prefijo sobre la pieza."""
    patches = scene.support_patches(workpiece, prefix)
    return make_constraints([patch.normal for patch in patches])


def _candidates(normals: np.ndarray) -> np.ndarray:
    # direcciones críticas: antípodas, bisectrices y circuncentros esféricos
    candidates = [-normal for normal in normals]
    for a, b in itertools.combinations(normals, 2):
        total = a + b
        length = np.linalg.norm(total)
        # normales opuestas: sin bisectriz; el par sólo aporta ±n con margen −1, así que
        # una ranura pura puntúa como bloqueada aunque deslizar a lo largo dé margen 0
        if length > 1e-9:
            candidates.append(-total / length)
    for a, b, c in itertools.combinations(normals, 3):
        center = np.cross(a - b, a - c)
        length = np.linalg.norm(center)
        if length > 1e-9:
            candidates.append(center / length)
            candidates.append(-center / length)
    return np.array(candidates)


def optimal_direction(constraints: DirectionConstraintSet, gravity=DOWN) -> AssemblyDirection:
    """
    Dirección que maximiza min_j(−d·n_j) sobre la esfera unitaria.

    El máximo se alcanza en una dirección crítica de algún subconjunto de
    hasta tres normales, así que basta con enumerarlas. Empates: la más
    cercana a la gravedad y después la lexicográficamente menor.

    Args:
        constraints: Normales de contacto
        gravity: Dirección de la gravedad (se normaliza)

    Returns:
        Dirección unitaria y margen; sin restricciones, la gravedad con margen 1
    """
    down = np.asarray(gravity, dtype=float)
    down = down / np.linalg.norm(down)
    if len(constraints) == 0:
        return AssemblyDirection(direction=down + 0.0, margin=1.0)

    candidates = _candidates(constraints.normals)
    margins = np.min(-(candidates @ constraints.normals.T), axis=1)
    best = margins.max()
    tied = np.flatnonzero(margins >= best - TIE_TOL)

    alignment = candidates[tied] @ down
    closest = tied[alignment >= alignment.max() - TIE_TOL]
    winner = min(closest, key=lambda i: tuple(candidates[i]))

    margin = float(margins[winner])
    if abs(margin) <= TIE_TOL:
        margin = 0.0
    return AssemblyDirection(direction=candidates[winner] + 0.0, margin=margin)


def assemblability_quality(direction: AssemblyDirection) -> AssemblabilityQuality:
    """0 si el margen es negativo (bloqueada); (1 + margen)/2 en otro caso."""
    if direction.margin < 0:
        return 0.0
    return (1.0 + direction.margin) / 2.0


def sampled_margin(constraints: DirectionConstraintSet, level: int = 5) -> Tuple[np.ndarray, float]:
    """Mejor dirección sobre los vértices de una icosfera (comprobación del solver exacto)."""
    directions = icosphere(level)
    if len(constraints) == 0:
        return directions[0], 1.0
    margins = np.min(-(directions @ constraints.normals.T), axis=1)
    best = int(np.argmax(margins))
    return directions[best], float(margins[best])


def assemblability_row(
    order: Sequence[str],
    scene: "Scene",
) -> Tuple[List[AssemblabilityQuality], List[AssemblyDirection]]:
    """Calidad y dirección óptima de cada paso del orden."""
    directions = [
        optimal_direction(constraint_normals(piece, order[:j], scene), scene.gravity_direction)
        for j, piece in enumerate(order)
    ]
    return [assemblability_quality(direction) for direction in directions], directions
