"""
Pose - Transformaciones rígidas (rotación + traslación)
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from errors import InvalidPose

ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Pose:
    """
    Transformación rígida x ↦ R·x + t.

    La rotación se valida al construir: ortonormal y con determinante +1
    dentro de 1e-9. Los arrays quedan de sólo lectura.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=float).reshape(3, 3)
        translation = np.array(self.translation, dtype=float).reshape(3)

        if not np.allclose(rotation.T @ rotation, np.eye(3), rtol=0.0, atol=ORTHONORMAL_TOL):
            raise InvalidPose("La rotación no es ortonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ORTHONORMAL_TOL:
            raise InvalidPose("La rotación debe tener determinante +1")

        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    # ========== Constructores ==========

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, translation) -> "Pose":
        return cls(np.eye(3), translation)

    @classmethod
    def from_quaternion(cls, wxyz, translation=(0.0, 0.0, 0.0)) -> "Pose":
        """
        Crear una pose desde un cuaternión (w, x, y, z) y una traslación.

        Args:
            wxyz: Cuaternión; se normaliza antes de convertir
            translation: Traslación en metros

        Returns:
            Pose equivalente
        """
        w, x, y, z = (float(c) for c in wxyz)
        if np.linalg.norm([w, x, y, z]) == 0.0:
            raise InvalidPose("Cuaternión nulo")
        matrix = Rotation.from_quat([x, y, z, w]).as_matrix()
        return cls(_reorthonormalize(matrix), translation)

    @classmethod
    def from_axis_angle(cls, axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        axis = np.asarray(axis, dtype=float)
        matrix = Rotation.from_rotvec(axis / np.linalg.norm(axis) * angle).as_matrix()
        return cls(_reorthonormalize(matrix), translation)

    # ========== Operaciones ==========

    def to_quaternion(self) -> np.ndarray:
        """Cuaternión (w, x, y, z) canónico, con w ≥ 0."""
        x, y, z, w = Rotation.from_matrix(self.rotation).as_quat()
        quaternion = np.array([w, x, y, z])
        if quaternion[0] < 0.0:
            quaternion = -quaternion
        return quaternion + 0.0

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: primero `other`, después `self`."""
        rotation = self.rotation @ other.rotation
        translation = self.rotation @ other.translation + self.translation
        return Pose(_reorthonormalize(rotation), translation)

    def inverse(self) -> "Pose":
        rotation = self.rotation.T
        return Pose(rotation, -rotation @ self.translation)

    def translated(self, offset) -> "Pose":
        return Pose(self.rotation, self.translation + np.asarray(offset, dtype=float))

    def apply(self, points) -> np.ndarray:
        """Transformar puntos (N, 3) o un único punto (3,)."""
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def apply_vector(self, vectors) -> np.ndarray:
        """Rotar direcciones (sin traslación)."""
        vectors = np.asarray(vectors, dtype=float)
        return vectors @ self.rotation.T

    def __repr__(self) -> str:
        return f"Pose(q={np.round(self.to_quaternion(), 6).tolist()}, t={self.translation.tolist()})"


def _reorthonormalize(matrix: np.ndarray) -> np.ndarray:
    # SVD: la rotación más cercana; elimina la deriva de productos encadenados
    u, _, vt = np.linalg.svd(matrix)
    rotation = u @ vt
    if np.linalg.det(rotation) < 0.0:
        u[:, -1] = -u[:, -1]
        rotation = u @ vt
    return rotation
