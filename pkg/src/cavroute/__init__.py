"""Predictive routing and intersection coordination for connected automated vehicles."""

from .flowmodel import FdParams, INFINITE_TIME
from .network import (NetworkGraph, Scenario, ScenarioError, ScenarioParseError,
                      ScenarioValidationError, load_scenario, parse_scenario)
from .simengine import MetricsReport, SimConfig, World, run

__all__ = [
    "FdParams", "INFINITE_TIME", "NetworkGraph", "Scenario", "ScenarioError",
    "ScenarioParseError", "ScenarioValidationError", "load_scenario", "parse_scenario",
    "MetricsReport", "SimConfig", "World", "run",
]
