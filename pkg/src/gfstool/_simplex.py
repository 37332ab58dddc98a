"""
Exact phase-1 simplex over rationals
"""

from fractions import Fraction
from typing import List, Optional, Sequence, Union

Number = Union[int, float, Fraction]


class SimplexException(Exception):
    """
    Raised when the simplex tableau is malformed
    """


def _pivot(
    tableau: List[List[Fraction]], objective: List[Fraction], row: int, col: int
) -> None:
    pivot = tableau[row][col]
    tableau[row] = [v / pivot for v in tableau[row]]
    source = tableau[row]
    for i, other in enumerate(tableau):
        if i != row and other[col] != 0:
            factor = other[col]
            tableau[i] = [a - factor * b for a, b in zip(other, source)]
    factor = objective[col]
    if factor != 0:
        objective[:] = [a - factor * b for a, b in zip(objective, source)]


def feasible(A: Sequence[Sequence[Number]], rhs: Sequence[Number]) -> bool:
    """
    Decide whether A z >= rhs has a solution with z >= 0

    Every input is converted to an exact Fraction (floats included), so the
    verdict carries no rounding tolerance. Bland's rule rules out cycling.
    """
    m = len(A)
    if m != len(rhs):
        raise SimplexException(f"{m} row(s) but {len(rhs)} right-hand side(s)")
    if m == 0:
        return True
    n = len(A[0])
    if any(len(row) != n for row in A):
        raise SimplexException("Rows of A differ in length")

    # columns: n structural, m surplus, m artificial, then the right-hand side
    width = n + 2 * m
    tableau: List[List[Fraction]] = []
    for i, (row, b) in enumerate(zip(A, rhs)):
        sign = -1 if Fraction(b) < 0 else 1
        line = [sign * Fraction(v) for v in row] + [Fraction(0)] * (2 * m + 1)
        line[n + i] = Fraction(-sign)
        line[n + m + i] = Fraction(1)
        line[width] = sign * Fraction(b)
        tableau.append(line)
    basis = [n + m + i for i in range(m)]

    # reduced costs of "minimise the sum of artificials"
    objective = [Fraction(0)] * (width + 1)
    for j in range(n + m):
        objective[j] = -sum((line[j] for line in tableau), Fraction(0))
    objective[width] = -sum((line[width] for line in tableau), Fraction(0))

    while True:
        entering = next((j for j in range(width) if objective[j] < 0), None)
        if entering is None:
            break
        leaving = -1
        best_ratio: Optional[Fraction] = None
        for i, line in enumerate(tableau):
            if line[entering] > 0:
                ratio = line[width] / line[entering]
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leaving])
                ):
                    leaving, best_ratio = i, ratio
        if best_ratio is None:
            raise SimplexException("Phase-1 objective is unbounded")
        _pivot(tableau, objective, leaving, entering)
        basis[leaving] = entering

    return all(
        tableau[i][width] == 0 for i, var in enumerate(basis) if var >= n + m
    )
