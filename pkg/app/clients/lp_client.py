import logging

import numpy as np
from scipy.optimize import linprog

from app.core.errors import LinearProgramError

logger = logging.getLogger(__name__)

LP_TOLERANCE = 1e-9

# scipy.optimize.linprog status code for a solved program
_OPTIMAL = 0


class LinearProgramClient:
    """Thin wrapper around the HiGHS solver shipped with scipy."""

    def __init__(self, method: str = "highs", tolerance: float = LP_TOLERANCE):
        self.method = method
        self.tolerance = tolerance

    def _solve(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
        options = {
            "primal_feasibility_tolerance": self.tolerance,
            "dual_feasibility_tolerance": self.tolerance,
        }
        try:
            return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                           bounds=bounds, method=self.method, options=options)
        except ValueError as e:
            logger.error(f"Linear program rejected by solver: {e}")
            raise LinearProgramError(f"linear program rejected: {e}")

    def minimize(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None) -> np.ndarray:
        result = self._solve(c, A_ub, b_ub, A_eq, b_eq, bounds)
        if result.status != _OPTIMAL:
            logger.error(f"Linear program ended with status {result.status}: {result.message}")
            raise LinearProgramError(
                f"linear program not solved (status {result.status}): {result.message}",
                witness={"status": int(result.status)},
            )
        return np.asarray(result.x, dtype=float)

    def maximize(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None) -> np.ndarray:
        return self.minimize(-np.asarray(c, dtype=float), A_ub, b_ub, A_eq, b_eq, bounds)
