"""Operator-facing service: FastAPI app over the ground station."""

from .app import create_app
from .models import (CommandRequest, CommandResponse, HealthResponse,
                     SafetyStatusModel, StatusResponse)

__all__ = ["create_app", "CommandRequest", "CommandResponse",
           "HealthResponse", "SafetyStatusModel", "StatusResponse"]
