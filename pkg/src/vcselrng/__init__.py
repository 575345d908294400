"""Chaotic spin-VCSEL random bit generation: laser model, delay-signature
analysis, multi-bit extraction and the SP 800-22 battery."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .extraction import BitStream, ExtractionConfig, delay_schedule, extract, throughput
from .sfm import Trajectory, VcselParams, integrate, paper_operating_point

__all__ = [
    "BACKEND", "BitStream", "ExtractionConfig", "delay_schedule", "extract", "throughput",
    "Trajectory", "VcselParams", "integrate", "paper_operating_point", "__version__",
]
