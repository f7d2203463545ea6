"""fragscript: compiles a small untyped math scripting language to GLSL
fragment shaders via dependency-graph splitting and lattice fixed-point type
inference, with a CPU interpreter as fallback and oracle."""

__version__ = "0.1.0"

from .pipeline import Pipeline  # noqa: F401
