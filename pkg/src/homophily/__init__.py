"""Homophily and heterophily measures for multi-layer developer networks."""

from .graph import Layer, Network, load_edge_list
from .pipeline import PipelineConfig, load_config, run_pipeline

__all__ = ["Layer", "Network", "PipelineConfig", "load_config", "load_edge_list", "run_pipeline"]
__version__ = "0.1.0"
