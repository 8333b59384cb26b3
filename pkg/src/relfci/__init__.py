"""Constraint-based causal discovery for relational domains with latent
confounders: schema and dependency modelling, abstract ground graphs,
relational d-separation oracles, ancestral ground truth, and two
discovery drivers (latent-admitting and causally-sufficient)."""

from .agg import IntersectionNode, Lagg, build_lagg, build_laggs, extend, pivots
from .discovery import (RULE_NAMES, RunConfig, RunResult, run_discovery,
                        run_rcd, run_relfci)
from .evaluation import ADJACENCY, ORIENTED, Score, score, sweep
from .generate import generate_model
from .maagg import Maagg, build_maagg, build_maaggs, truth_edges
from .oracle import CiOracle
from .schema import (AttributeClass, Cardinality, EntityClass, Lrcm,
                     RelationalDependency, RelationalVariable,
                     RelationshipClass, Schema, SchemaError, load_model,
                     parse_dependency, parse_variable, save_model)
from .state import (ConflictError, DiscoveryState, Mark, Parm, extract_parm)

__version__ = "0.1.0"
