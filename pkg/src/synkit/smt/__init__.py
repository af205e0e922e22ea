"""SMT backend: subprocess protocol client and a bundled fallback solver.

The verification engine always talks SMT-LIB2 text to a solver child
process. `resolve_solver_command` picks, in order: an explicit command,
the SOLVER_CMD environment variable, a z3 binary on PATH, and finally
the bundled pure-Python solver (`python -m synkit.smt.bundled`).
"""

from .session import (SmtSession, SolverFailure, parse_value,
                      resolve_solver_command)

__all__ = ["SmtSession", "SolverFailure", "parse_value",
           "resolve_solver_command"]
