"""Two-stage stochastic mixed-integer programming with hinge (ReLU-form)
Lagrangian cuts, the classical cut families they generalize, LP-based cut
strengthening, a brute-force verification oracle, seeded instance
generators, and a benchmark harness."""

from .model import (AGGREGATE, LinearCut, ReluCut, Scenario, SmipError,
                    SmipInstance, SolveReport, evaluate_relu_cut,
                    instance_from_json, instance_to_json, linear_to_relu)
from .driver import DriverConfig, run_benchmark, solve_binary, solve_general
from .embed import Binarization, MasterModel, binarize_instance
from .instances import GeneratorSpec, gen_dcap, gen_smrcsp, gen_sslp, generate
from .oracle import RecourseTable, UnsupportedByOracle, build_table
from .relu import RhoEstimate, binary_search_rho, closed_form_rho, initial_mixed_cut
from .strengthen import StrengthenOutcome, strengthen_binary_cut, strengthen_mixed_cut

__version__ = "0.1.0"

__all__ = [
    "AGGREGATE", "Binarization", "DriverConfig", "GeneratorSpec", "LinearCut",
    "MasterModel", "RecourseTable", "ReluCut", "RhoEstimate", "Scenario",
    "SmipError", "SmipInstance", "SolveReport", "StrengthenOutcome",
    "UnsupportedByOracle", "binarize_instance", "binary_search_rho",
    "build_table", "closed_form_rho", "evaluate_relu_cut", "gen_dcap",
    "gen_smrcsp", "gen_sslp", "generate", "initial_mixed_cut",
    "instance_from_json", "instance_to_json", "linear_to_relu",
    "run_benchmark", "solve_binary", "solve_general", "strengthen_binary_cut",
    "strengthen_mixed_cut",
]
