"""Union-Find surface-code decoder, hardware pipeline model, decoder-block
simulator and syndrome compression codecs."""

__version__ = "0.1.0"

from .lattice import LatticeParams, DecodingGraph, build_decoding_graph  # noqa: F401
from .noise import NoiseParams, ErrorPattern, Syndrome  # noqa: F401
