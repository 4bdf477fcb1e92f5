from rydwalk.protocols import ODD, EVEN, DIMER, TETRAMER, OCTAMER, OPEN, PERIODIC, PROGRAMS
from rydwalk.lattice import LatticeSpec, BoundaryTopology, build_lattice, tessellation_pairs, seam_pairs
from rydwalk.walk import WalkerState, Tessellation, StepProgram, compile_program, run_program
from rydwalk.experiments import Experiment, ExperimentConfig

__version__ = "0.1.0"
