from typing import Optional

import numpy as np

from latopt.common.errors import OptimizerError
from latopt.common.util import get_child_logger

RAA0 = 1e-5
ALBEFA = 0.1
BISECTION_STEPS = 200
EXPANSION_STEPS = 200


class MMA(object):
    """Method of moving asymptotes for one inequality constraint g(x) <= 0

    The convex subproblem is solved through its one-dimensional dual: for a
    multiplier lam the separable primal minimizer is closed-form, and lam is
    found by bisection on the approximated constraint.

    Properties:
        xmin, xmax (np.ndarray): variable bounds
        move_limit (float): max step as a fraction of (xmax - xmin)
        asyinit, asyincr, asydecr (float): asymptote initialization and adaptation
        iteration (int): completed updates
        low, upp (np.ndarray): current asymptotes
    """

    def __init__(
        self,
        xmin: np.ndarray,
        xmax: np.ndarray,
        move_limit: float = 0.2,
        asyinit: float = 0.5,
        asyincr: float = 1.2,
        asydecr: float = 0.7,
    ):
        super(MMA, self).__init__()
        self.xmin = np.asarray(xmin, dtype=float)
        self.xmax = np.asarray(xmax, dtype=float)
        if np.any(self.xmax < self.xmin):
            raise OptimizerError('MMA bounds are inverted')
        self.move_limit = move_limit
        self.asyinit = asyinit
        self.asyincr = asyincr
        self.asydecr = asydecr
        self.iteration = 0
        self.xold1: Optional[np.ndarray] = None
        self.xold2: Optional[np.ndarray] = None
        self.low: Optional[np.ndarray] = None
        self.upp: Optional[np.ndarray] = None
        self._logger = get_child_logger('latopt.optimizer.mma')

    def _asymptotes(self, x: np.ndarray, span: np.ndarray):
        if self.iteration < 2:
            self.low = x - self.asyinit * span
            self.upp = x + self.asyinit * span
            return
        trend = (x - self.xold1) * (self.xold1 - self.xold2)
        factor = np.where(trend > 0, self.asyincr, np.where(trend < 0, self.asydecr, 1.0))
        low = x - factor * (self.xold1 - self.low)
        upp = x + factor * (self.upp - self.xold1)
        self.low = np.clip(low, x - 10.0 * span, x - 0.01 * span)
        self.upp = np.clip(upp, x + 0.01 * span, x + 10.0 * span)

    def update(self, x: np.ndarray, df0: np.ndarray, g: float, dg: np.ndarray) -> np.ndarray:
        """One MMA step from x given objective gradient df0, constraint value g and gradient dg

    Raises:
        OptimizerError: non-finite input, or no point of the move box satisfies the
            approximated constraint
    """
        x = np.asarray(x, dtype=float)
        df0 = np.asarray(df0, dtype=float)
        dg = np.asarray(dg, dtype=float)
        if not (np.all(np.isfinite(df0)) and np.all(np.isfinite(dg)) and np.isfinite(g)):
            raise OptimizerError('Non-finite gradient passed to MMA')
        if x.size == 0:
            return x.copy()

        span = np.maximum(self.xmax - self.xmin, 1e-5)
        self._asymptotes(x, span)
        low, upp = self.low, self.upp

        lo = np.maximum.reduce([low + ALBEFA * (x - low), x - self.move_limit * span, self.xmin])
        hi = np.minimum.reduce([upp - ALBEFA * (upp - x), x + self.move_limit * span, self.xmax])

        ux2 = (upp - x) ** 2
        xl2 = (x - low) ** 2

        def split(grad):
            pos, neg = np.maximum(grad, 0.0), np.maximum(-grad, 0.0)
            common = 0.001 * (pos + neg) + RAA0 / span
            return (pos + common) * ux2, (neg + common) * xl2

        p0, q0 = split(df0)
        p1, q1 = split(dg)
        r1 = g - np.sum(p1 / (upp - x) + q1 / (x - low))

        def primal(lam: float) -> np.ndarray:
            sp = np.sqrt(p0 + lam * p1)
            sq = np.sqrt(q0 + lam * q1)
            return np.clip((sp * low + sq * upp) / (sp + sq), lo, hi)

        def constraint(xs: np.ndarray) -> float:
            return float(np.sum(p1 / (upp - xs) + q1 / (xs - low)) + r1)

        lam_lo, lam_hi = 0.0, 1.0
        if constraint(primal(0.0)) <= 0:
            x_new = primal(0.0)
        else:
            for _ in range(EXPANSION_STEPS):
                if constraint(primal(lam_hi)) <= 0:
                    break
                lam_lo, lam_hi = lam_hi, 2.0 * lam_hi
            else:
                message = (
                    f'MMA subproblem infeasible at iteration {self.iteration + 1}: the constraint '
                    f'stays at {constraint(primal(lam_hi)):.3e} > 0 over the whole move box'
                )
                self._logger.error(message)
                raise OptimizerError(message)
            for _ in range(BISECTION_STEPS):
                lam = 0.5 * (lam_lo + lam_hi)
                if constraint(primal(lam)) > 0:
                    lam_lo = lam
                else:
                    lam_hi = lam
                if lam_hi - lam_lo <= 1e-14 * max(1.0, lam_hi):
                    break
            x_new = primal(lam_hi)

        self.xold2 = self.xold1
        self.xold1 = x.copy()
        self.iteration += 1
        return x_new
