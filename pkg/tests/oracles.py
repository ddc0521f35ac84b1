"""Independent reference implementations used only by the tests.

They share no code with the package: sums run in 60-digit Decimal, ranks
are found by counting rather than sorting, and OLS solves the raw-moment
normal equations.
"""

from decimal import Decimal, localcontext

import numpy as np

DIGITS = 60


def _dec(values):
    return [Decimal(float(v)) for v in values]


def pearson_oracle(x, y) -> float:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        xs, ys = _dec(x), _dec(y)
        n = Decimal(len(xs))
        mx = sum(xs) / n
        my = sum(ys) / n
        sxy = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
        sxx = sum((a - mx) ** 2 for a in xs)
        syy = sum((b - my) ** 2 for b in ys)
        return float(sxy / (sxx * syy).sqrt())


def ranks_oracle(x) -> np.ndarray:
    """rank_i = #{j: x_j < x_i} + (#{j: x_j == x_i} + 1) / 2."""
    x = np.asarray(x, dtype=np.float64)
    less = (x[None, :] < x[:, None]).sum(axis=1)
    equal = (x[None, :] == x[:, None]).sum(axis=1)
    return less + (equal + 1) / 2.0


def spearman_oracle(x, y) -> float:
    return pearson_oracle(ranks_oracle(x), ranks_oracle(y))


def ols_oracle(x, y) -> tuple[float, float]:
    """Solve [[n, Sx], [Sx, Sxx]] @ [b, a] = [Sy, Sxy] by Cramer's rule."""
    with localcontext() as ctx:
        ctx.prec = DIGITS
        xs, ys = _dec(x), _dec(y)
        n = Decimal(len(xs))
        sx, sy = sum(xs), sum(ys)
        sxx = sum(a * a for a in xs)
        sxy = sum(a * b for a, b in zip(xs, ys))
        det = n * sxx - sx * sx
        slope = (n * sxy - sx * sy) / det
        intercept = (sy * sxx - sx * sxy) / det
        return float(slope), float(intercept)


def mean_oracle(values) -> float:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        vs = _dec(values)
        return float(sum(vs) / Decimal(len(vs)))
