"""Diamond (Lieb-lattice) and standard surface-code memory benchmarks."""

from .circuit import Circuit, CircuitError, Instruction, parse_crumble, parse_stim_text, serialize, validate
from .dem import DetectorErrorModel, ErrorMechanism, decompose_graphlike, extract_dem
from .generate import ExperimentSpec, build_memory_circuit
from .lattice import Layout, build_layout, count_lines, line_count
from .noise import NoiseParams, NoisyCircuit, apply_si1000

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CircuitError",
    "DetectorErrorModel",
    "ErrorMechanism",
    "ExperimentSpec",
    "Instruction",
    "Layout",
    "NoiseParams",
    "NoisyCircuit",
    "apply_si1000",
    "build_layout",
    "build_memory_circuit",
    "count_lines",
    "decompose_graphlike",
    "extract_dem",
    "line_count",
    "parse_crumble",
    "parse_stim_text",
    "serialize",
    "validate",
]
