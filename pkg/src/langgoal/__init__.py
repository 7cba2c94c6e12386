"""Language-conditioned goal generation over semantic block configurations."""

from .semantics import enumerate_valid, is_valid, realize
from .instructions import build_instruction_set, parse_expression, parse_instruction
from .oracle import Oracle, compatible_set, compatible_set_expr, satisfied
from .goalgen import CVAEModel, Hyperparams, sample_goals, train

__version__ = "0.1.0"
