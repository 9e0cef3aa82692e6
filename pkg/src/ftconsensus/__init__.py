"""Fixed-time leader-follower consensus for double-integrator multi-agent systems."""

from .fixed_time_math import FixedTimeParams, controller_constants, gamma_fn, settling_bound, signed_pow
from .graph_topology import ConnectionMatrices, TopologySpec, build_matrices, min_eigenvalue
from .scenario import ScenarioConfig, load_scenario, save_scenario
from .sim_engine import SimConfig, run_scenario

__version__ = "0.1.0"
