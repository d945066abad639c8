"""
Tolerancias geométricas compartidas por todos los analizadores.
"""

from pydantic import BaseModel, ConfigDict, Field


class Tolerances(BaseModel):
    """Tolerancias de contacto y barrido (metros, metros², estaciones)."""

    model_config = ConfigDict(frozen=True)

    contact_gap: float = Field(
        1e-4, gt=0, description="Holgura de coplanaridad/separación entre caras en contacto"
    )
    min_patch_area: float = Field(
        1e-8, gt=0, description="Área mínima de un parche de contacto"
    )
    sweep_steps: int = Field(
        16, gt=0, description="Tramos en que se divide un barrido de traslación"
    )
