"""Quantum query algorithms from two reflections, simulated from the dual adversary SDP."""
from .boolfn import BooleanFunction, compose, load, save
from .advsdp import DualSolution, SolverTolerances, evaluate_primal, solve_dual
from .graphrefl import AdversaryGraph, InputOperators, build_graph, build_input_operators
from .spectral import ReflectionSpectrum, jordan_decompose, spectrum_of
from .algsim import AlgorithmOutcome, run_alg1, run_alg2, run_alg3, sample

__version__ = "0.1.0"

__all__ = [
    "BooleanFunction", "compose", "load", "save",
    "DualSolution", "SolverTolerances", "evaluate_primal", "solve_dual",
    "AdversaryGraph", "InputOperators", "build_graph", "build_input_operators",
    "ReflectionSpectrum", "jordan_decompose", "spectrum_of",
    "AlgorithmOutcome", "run_alg1", "run_alg2", "run_alg3", "sample",
]
