"""
Settings - Configuración del planificador
Valores por defecto, variables de entorno (.env) y huella de configuración.
"""

import hashlib
import os
import sys
from typing import Literal, Optional

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from analysis.grasping import GraspSampling
from analysis.stability import StabilityParams
from geometry.tolerances import Tolerances

VERSION = "0.1.0"

# Campo del PlannerConfig -> variable de entorno
ENV_VARS = {
    "seed": "ASMPLAN_SEED",
    "threads": "ASMPLAN_THREADS",
    "extra_hands": "ASMPLAN_EXTRA_HANDS",
    "log_level": "ASMPLAN_LOG_LEVEL",
    "retract_distance": "ASMPLAN_RETRACT_DISTANCE",
}

# Variables de entorno que ganan incluso a los flags de la CLI
ENV_WINS = {"threads"}

# Campos que no cambian el resultado y quedan fuera de la huella
UNHASHED_FIELDS = {"threads", "log_level", "full_matrices"}


class PlannerConfig(BaseModel):
    """
    Configuración completa de una planificación.
    Todos los analizadores leen de aquí; nada se lee de variables globales.
    """

    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, description="Semilla del desempate aleatorio")
    extra_hands: int = Field(1, ge=0, description="Brazos libres para agarres de asistencia")
    prefer_no_assist: bool = Field(
        True, description="En empates exactos, preferir órdenes sin asistencia"
    )
    s_cap: float = Field(10.0, gt=0, description="Factor de estabilidad si toda la fila es +INF")
    max_pieces: int = Field(8, ge=1, description="Máximo de piezas (n! órdenes)")
    threads: int = Field(1, ge=1, description="Hilos para evaluar órdenes")
    full_matrices: bool = Field(False, description="Conservar las matrices S/G/A completas")
    retract_distance: float = Field(
        0.15, ge=0, description="Distancia de retirada de la pieza siguiente (m)"
    )
    mu_override: Optional[float] = Field(
        None, ge=0, description="Coeficiente de fricción que sustituye al de la escena"
    )
    assist_policy: Literal["per_order", "global"] = Field(
        "per_order", description="Cuándo se activa el analizador de asistencia"
    )
    stability: StabilityParams = Field(default_factory=StabilityParams)
    sampling: GraspSampling = Field(default_factory=GraspSampling)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    log_level: str = Field("INFO", description="Nivel de log de loguru")


def load_config(**overrides) -> PlannerConfig:
    """
    Construir la configuración a partir de defaults, `.env` y overrides.

    Los overrides con valor None se ignoran, así la CLI puede pasar sus
    flags tal cual.

    Args:
        **overrides: Campos explícitos (normalmente flags de la CLI)

    Returns:
        PlannerConfig validado

    Raises:
        pydantic.ValidationError: Si algún valor no es válido
    """
    load_dotenv()

    values = {key: value for key, value in overrides.items() if value is not None}

    for field_name, env_name in ENV_VARS.items():
        raw = os.getenv(env_name)
        if raw is None or raw == "":
            continue
        if field_name in ENV_WINS or field_name not in values:
            values[field_name] = raw
            logger.debug(f"⚙️ {env_name}={raw}")

    return PlannerConfig(**values)


def config_hash(config: PlannerConfig) -> str:
    """Huella sha256 de los campos que afectan al resultado."""
    payload = config.model_dump_json(exclude=UNHASHED_FIELDS)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def configure_logging(level: str = "INFO"):
    """
    Instalar el sink de loguru en stderr con el nivel pedido.
    stdout queda libre para la salida de la CLI.
    """
    logger.remove()
    logger.add(
        sys.stderr,
        level=level.upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}",
    )
