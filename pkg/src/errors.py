"""
Errores - Jerarquía de excepciones del planificador
Cada error nombrado del contrato tiene su clase; la CLI los traduce a códigos de salida.
"""

from typing import Iterable, List


class AsmPlanError(Exception):
    """Error base de asmplan."""


# ========== GEOMETRÍA ==========


class EmptyShape(AsmPlanError, ValueError):
    """El conjunto de vóxeles está vacío."""


class Disconnected(AsmPlanError, ValueError):
    """El conjunto de vóxeles no es 6-conexo."""


class InvalidPose(AsmPlanError, ValueError):
    """La rotación no es ortonormal con determinante +1."""


class InvalidMesh(AsmPlanError, ValueError):
    """La malla no es cerrada, orientable o tiene volumen no positivo."""


class Interpenetration(AsmPlanError, ValueError):
    """Dos cuerpos se solapan más allá de la tolerancia de contacto."""


class DegenerateHull(AsmPlanError, ValueError):
    """Los puntos no generan una envolvente de dimensión completa."""


# ========== ANÁLISIS ==========


class NoContacts(AsmPlanError, ValueError):
    """El cuerpo analizado no toca ningún soporte."""


class UnknownBody(AsmPlanError, KeyError):
    """Identificador de pieza inexistente en la escena."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "cuerpo desconocido"


class NoAssistGrasp(AsmPlanError):
    """Ningún agarre de asistencia queda libre frente a la siguiente pieza."""


class TooManyPieces(AsmPlanError, ValueError):
    """Hay más piezas de las que permite la enumeración exhaustiva."""


class NoFeasibleOrder(AsmPlanError):
    """Todas las secuencias tienen puntuación 0 y ninguna es estable ni asistible."""


# ========== ENTRADA / SALIDA ==========


class ParseError(AsmPlanError, ValueError):
    """El fichero no se puede interpretar (sintaxis o tipos de campo)."""


class SceneValidationError(AsmPlanError, ValueError):
    """
    La escena viola uno o más invariantes.

    Args:
        problems: Lista completa de invariantes violados
    """

    def __init__(self, problems: Iterable[str]):
        self.problems: List[str] = list(problems)
        super().__init__("; ".join(self.problems))


class PlanIOError(AsmPlanError, OSError):
    """Fallo de lectura o escritura de ficheros de plan/exportación."""
