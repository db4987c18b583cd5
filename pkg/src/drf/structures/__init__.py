from .associative import (
    AssociativeLayer,
    al_complete,
    al_encode,
    observed_set,
    train_associative_layer,
)
from .graph import (
    ArchitectureGraph,
    ConfigError,
    TrainedGraph,
    graph_encode,
    graph_project,
    graph_train,
    load_config,
)
from .pyramid import (
    DiscriminatoryColumn,
    DiscriminatoryPyramid,
    ProjectionError,
    as_column,
    column_encode,
    column_project,
    pyramid_encode,
    pyramid_project,
    train_column,
    train_pyramid,
)

__all__ = [
    "ArchitectureGraph",
    "AssociativeLayer",
    "ConfigError",
    "DiscriminatoryColumn",
    "DiscriminatoryPyramid",
    "ProjectionError",
    "TrainedGraph",
    "al_complete",
    "al_encode",
    "as_column",
    "column_encode",
    "column_project",
    "graph_encode",
    "graph_project",
    "graph_train",
    "load_config",
    "observed_set",
    "pyramid_encode",
    "pyramid_project",
    "train_associative_layer",
    "train_column",
    "train_pyramid",
]
