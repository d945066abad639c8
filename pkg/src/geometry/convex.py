"""
Piezas convexas - Primitivas para colisión por ejes separadores (SAT)
Cada forma se descompone en piezas convexas: cajas por vóxel, la propia
malla si es convexa o su envolvente convexa en otro caso.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from errors import InvalidMesh

AXIS_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class ConvexPiece:
    """Politopo convexo: vértices, normales de cara y direcciones de arista."""

    vertices: np.ndarray
    face_normals: np.ndarray
    edge_dirs: np.ndarray

    @cached_property
    def lower(self) -> np.ndarray:
        return self.vertices.min(axis=0)

    @cached_property
    def upper(self) -> np.ndarray:
        return self.vertices.max(axis=0)

    def transformed(self, pose) -> "ConvexPiece":
        return ConvexPiece(
            vertices=pose.apply(self.vertices),
            face_normals=pose.apply_vector(self.face_normals),
            edge_dirs=pose.apply_vector(self.edge_dirs),
        )

    def translated(self, offset) -> "ConvexPiece":
        return ConvexPiece(
            vertices=self.vertices + np.asarray(offset, dtype=float),
            face_normals=self.face_normals,
            edge_dirs=self.edge_dirs,
        )

    def swept(self, offset) -> "ConvexPiece":
        """
        Volumen barrido por la pieza al trasladarse `offset`.

        El barrido de un convexo por una traslación es convexo: sus caras
        son las originales más las generadas por aristas × dirección.
        """
        offset = np.asarray(offset, dtype=float)
        length = np.linalg.norm(offset)
        if length < AXIS_EPS:
            return self

        direction = offset / length
        side_normals = np.cross(self.edge_dirs, direction)
        return ConvexPiece(
            vertices=np.vstack([self.vertices, self.vertices + offset]),
            face_normals=unique_axes(np.vstack([self.face_normals, side_normals])),
            edge_dirs=unique_axes(np.vstack([self.edge_dirs, direction[None, :]])),
        )


# ========== Constructores ==========


def box_piece(center, half_extents) -> ConvexPiece:
    """Caja alineada con los ejes locales."""
    center = np.asarray(center, dtype=float)
    half = np.asarray(half_extents, dtype=float)
    signs = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
    )
    return ConvexPiece(
        vertices=center + signs * half,
        face_normals=np.eye(3),
        edge_dirs=np.eye(3),
    )


def polytope_piece(vertices, triangles) -> ConvexPiece:
    """Pieza a partir de una malla triangular que ya es convexa."""
    vertices = np.asarray(vertices, dtype=float)
    tri = vertices[np.asarray(triangles, dtype=int)]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    edges = np.vstack([tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 1], tri[:, 0] - tri[:, 2]])
    return ConvexPiece(
        vertices=np.unique(vertices, axis=0),
        face_normals=unique_axes(normals),
        edge_dirs=unique_axes(edges),
    )


def hull_piece(points) -> ConvexPiece:
    """
    Envolvente convexa de una nube de puntos 3-D.

    Raises:
        InvalidMesh: Si los puntos no encierran volumen
    """
    points = np.asarray(points, dtype=float)
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise InvalidMesh(f"Envolvente convexa degenerada: {exc}") from exc
    return polytope_piece(points[hull.vertices], _reindex(hull))


def _reindex(hull: ConvexHull) -> np.ndarray:
    # los símplices indexan hull.points; se reindexan a hull.vertices
    lookup = np.full(len(hull.points), -1, dtype=int)
    lookup[hull.vertices] = np.arange(len(hull.vertices))
    return lookup[hull.simplices]


def unique_axes(vectors) -> np.ndarray:
    """Normalizar y quitar duplicados sin distinguir v de −v."""
    vectors = np.asarray(vectors, dtype=float).reshape(-1, 3)
    norms = np.linalg.norm(vectors, axis=1)
    vectors = vectors[norms > AXIS_EPS] / norms[norms > AXIS_EPS, None]
    if len(vectors) == 0:
        return np.zeros((0, 3))

    # signo canónico: primera componente no nula positiva
    first = np.argmax(np.abs(vectors) > 1e-12, axis=1)
    signs = np.sign(vectors[np.arange(len(vectors)), first])
    vectors = vectors * signs[:, None]
    _, index = np.unique(np.round(vectors, 9), axis=0, return_index=True)
    return vectors[np.sort(index)]


# ========== Consultas ==========


def penetration_depth(a: ConvexPiece, b: ConvexPiece) -> float:
    """
    Solape mínimo sobre los ejes separadores candidatos.

    Returns:
        > 0: profundidad de interpenetración; ≤ 0: separación (con signo)
    """
    crosses = np.cross(a.edge_dirs[:, None, :], b.edge_dirs[None, :, :]).reshape(-1, 3)
    norms = np.linalg.norm(crosses, axis=1)
    crosses = crosses[norms > AXIS_EPS] / norms[norms > AXIS_EPS, None]
    axes = np.vstack([a.face_normals, b.face_normals, crosses])

    proj_a = a.vertices @ axes.T
    proj_b = b.vertices @ axes.T
    overlap = np.minimum(proj_a.max(axis=0), proj_b.max(axis=0)) - np.maximum(
        proj_a.min(axis=0), proj_b.min(axis=0)
    )
    return float(overlap.min())
