"""Robust verification of two-player interval concurrent stochastic games."""
from .benchmarks import GENERATORS, gen_benchmark
from .errors import (AssumptionError, CapExceededError, IcsgError, InfeasibleRowError, ModelError,
                     PivotingError, PropertyError)
from .model import (IDLE, Icsg, IntervalDistribution, RewardStructure, check_valid, dump_model, embed_csg,
                    load_model, model_from_dict, model_to_dict, perturb, support_graph, validate)
from .nfg import BimatrixGame, MixedProfile, enumerate_ne, select_swne, solve_matrix
from .nonzerosum import NoRneReport, NzSolution, nz_solve
from .properties import ADVERSARIAL, CONTROLLED, Objective, Property, parse_property
from .uncertainty import Resolution, enumerate_vertices, solve_inner
from .zerosum import ZsSolution, evaluate_under_nature, solve_zero_sum

__version__ = "0.1.0"
