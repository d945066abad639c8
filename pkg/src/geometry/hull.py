"""
Envolventes convexas - Margen de un punto respecto a conv(P) en 2, 3 o 6 dimensiones
Incluye los conjuntos de direcciones deterministas usados para muestrear.
"""

import itertools
from functools import lru_cache

import numpy as np
from loguru import logger
from scipy.optimize import nnls
from scipy.spatial import ConvexHull, QhullError

from errors import DegenerateHull

RANK_TOL = 1e-10
BOUNDARY_TOL = 1e-9


def convex_hull_margin(points, query, exact_limit: int = 200) -> float:
    """
    Distancia con signo de `query` a la frontera de conv(points).

    Hasta `exact_limit` puntos se enumeran las facetas con qhull; por
    encima, en 6-D, se usa el conjunto fijo de direcciones de soporte
    (aproximación por exceso del margen interior).

    Args:
        points: (N, d) puntos
        query: (d,) punto consultado
        exact_limit: Máximo de puntos para el cálculo exacto

    Returns:
        > 0 dentro (distancia a la faceta más cercana), 0 en la frontera,
        < 0 fuera (menos la distancia a la envolvente)

    Raises:
        DegenerateHull: Si los puntos no generan un volumen d-dimensional
    """
    points = np.asarray(points, dtype=float)
    query = np.asarray(query, dtype=float)
    dim = points.shape[1]

    if len(points) < dim + 1 or np.linalg.matrix_rank(points[1:] - points[0], tol=RANK_TOL) < dim:
        raise DegenerateHull(f"{len(points)} puntos no generan un volumen de dimensión {dim}")

    if len(points) <= exact_limit or dim != 6:
        margin, vertices = _facet_margin(points, query)
    else:
        margin, vertices = _support_margin(points, query), points

    if abs(margin) <= BOUNDARY_TOL:
        return 0.0
    if margin > 0:
        return margin
    return -distance_to_hull(vertices, query)


def _facet_margin(points: np.ndarray, query: np.ndarray):
    try:
        hull = ConvexHull(points)
    except QhullError:
        # puntos casi coplanares: reintentar con perturbación (joggle)
        try:
            hull = ConvexHull(points, qhull_options="QJ")
        except QhullError as exc:
            raise DegenerateHull(str(exc).splitlines()[0]) from exc

    # qhull: normal·x + offset ≤ 0 dentro, normales unitarias
    normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
    margin = float(np.min(-(normals @ query + offsets)))
    return margin, points[hull.vertices]


def _support_margin(points: np.ndarray, query: np.ndarray) -> float:
    directions = support_directions(points.shape[1])
    support = (points @ directions.T).max(axis=0)
    margin = float(np.min(support - directions @ query))
    logger.debug(f"🧮 Margen por {len(directions)} direcciones de soporte: {margin:.3g}")
    return margin


def distance_to_hull(vertices, query) -> float:
    """
    Distancia euclídea de `query` a conv(vertices).

    Mínimos cuadrados no negativos con una fila extra muy pesada que
    impone Σλ = 1.
    """
    vertices = np.asarray(vertices, dtype=float)
    query = np.asarray(query, dtype=float)
    weight = 1e3 * (1.0 + np.abs(vertices).max() + np.abs(query).max())

    matrix = np.vstack([vertices.T, np.full(len(vertices), weight)])
    target = np.append(query, weight)
    lambdas, _ = nnls(matrix, target, maxiter=50 * matrix.shape[1])

    total = lambdas.sum()
    if total <= 0:
        return float(np.min(np.linalg.norm(vertices - query, axis=1)))
    closest = (lambdas / total) @ vertices
    return float(np.linalg.norm(closest - query))


# ========== Conjuntos de direcciones ==========


@lru_cache(maxsize=None)
def support_directions(dim: int = 6, level: int = 4) -> np.ndarray:
    """
    Direcciones del politopo cruzado subdividido: vectores enteros con
    norma L1 = level, normalizados. En 6-D con level 4 son 912 direcciones.
    """
    directions = []
    for parts in _compositions(level, dim):
        nonzero = [i for i, part in enumerate(parts) if part]
        for signs in itertools.product((1, -1), repeat=len(nonzero)):
            vector = np.array(parts, dtype=float)
            vector[nonzero] *= signs
            directions.append(vector / np.linalg.norm(vector))
    result = np.array(directions)
    result.setflags(write=False)
    return result


def _compositions(total: int, parts: int):
    # reparto de `total` en `parts` sumandos ≥ 0, en orden lexicográfico
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def icosphere(level: int = 5) -> np.ndarray:
    """Vértices unitarios de un icosaedro subdividido `level` veces."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    vertices = [np.array(v, dtype=float) / np.linalg.norm(v) for v in vertices]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]

    for _ in range(level):
        midpoints = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoints:
                point = vertices[i] + vertices[j]
                vertices.append(point / np.linalg.norm(point))
                midpoints[key] = len(vertices) - 1
            return midpoints[key]

        subdivided = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            subdivided += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = subdivided

    result = np.array(vertices)
    result.setflags(write=False)
    return result
