"""Ground-station orchestration: pipeline, scenario runs, live station."""

from .pipeline import EstState, Pipeline, PipelineConfig
from .scenario import (Scenario, ScenarioResult, TimedCommand, load_scenario,
                       parse_scenario, pipeline_config_for,
                       replay_through_pipeline, run_scenario)

__all__ = [
    "EstState", "Pipeline", "PipelineConfig",
    "Scenario", "ScenarioResult", "TimedCommand", "load_scenario",
    "parse_scenario", "pipeline_config_for", "replay_through_pipeline",
    "run_scenario",
]
