"""Cost-aware placement of container images on registry nodes.

Submodules: ``model`` (data types and file formats), ``network`` (end-to-end
links), ``eligibility``, ``heuristic``, ``exact``, ``continuous``,
``scenario`` (random instances and churn) and ``harness`` (experiment runs).
"""
from .continuous import Budgets, WorkflowState, cr_placement, declace_step, partition_ok_ko, workflow_step
from .eligibility import EligibilityReport, check_eligible, cost
from .exact import ExactResult, lower_bound, solve_oipp
from .heuristic import IPPResult, SearchBudget, SearchTimeout, solve_ipp
from .model import (ContainerImage, DirectLink, Infrastructure, ParseError, Placement, ProblemInstance,
                    RegistryNode, parse_instance, parse_placement, serialize_instance, serialize_placement)
from .network import derive_e2e, transfer_time

__version__ = "0.1.0"


def load_example5() -> ProblemInstance:
    """The six-node, three-image reference instance shipped with the package."""
    from importlib.resources import files

    return parse_instance(files(__name__).joinpath("data/example5.pl").read_text(encoding="utf-8"))
