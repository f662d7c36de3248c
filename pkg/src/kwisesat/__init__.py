"""Random 3-SAT under k-clause independence.

Generators for independent, pairwise and threewise clause distributions,
exact and statistical independence checks, refutation statistics, Berge
cycle machinery and small exact solvers.
"""

from .core import (Assignment, Clause, DimacsError, Instance, Literal, canonicalize,
                   clause_to_type_id, deduplicate, evaluate, format_dimacs, load_dimacs,
                   parse_dimacs, save_dimacs, type_id_to_clause)
from .generators import GeneratorSpec, Model, make_rng, sample

__version__ = "0.1.0"

__all__ = [
    "Assignment", "Clause", "DimacsError", "Instance", "Literal", "canonicalize",
    "clause_to_type_id", "deduplicate", "evaluate", "format_dimacs", "load_dimacs",
    "parse_dimacs", "save_dimacs", "type_id_to_clause", "GeneratorSpec", "Model",
    "make_rng", "sample", "__version__",
]
