from .manifold import (BUNDLED, Manifold, ManifoldError, ManifoldParseError, build_manifold, bundled_manifold,
                       check_metric_axioms, format_manifold, grid, klein_quartic_maps, load_manifold,
                       parse_manifold, torus)
from .model import (PopulationMap, SomModel, TrainConfig, best_matching_unit, initial_codebook, load_model,
                    map_population, quantization_error, save_model, train_som)

__all__ = [
    "BUNDLED", "Manifold", "ManifoldError", "ManifoldParseError", "build_manifold", "bundled_manifold",
    "check_metric_axioms", "format_manifold", "grid", "klein_quartic_maps", "load_manifold", "parse_manifold",
    "torus", "PopulationMap", "SomModel", "TrainConfig", "best_matching_unit", "initial_codebook", "load_model",
    "map_population", "quantization_error", "save_model", "train_som",
]
