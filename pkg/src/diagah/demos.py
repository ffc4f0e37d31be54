"""Ready-made AH systems used by the CLI, the walkthroughs and the acceptance suite."""
from __future__ import annotations

from .diagonal_hom import AHSystem, BondingMap, DiagonalHom, PointMap, Summand
from .errors import UnknownDemo
from .metric_space import FiniteMetricSpace


def van_der_corput(k: int, base: int = 2) -> float:
    """k-th term of the base-``base`` van der Corput sequence (k >= 1)."""
    q, denom, x = k, 1, 0.0
    while q:
        q, r = divmod(q, base)
        denom *= base
        x += r / denom
    return x


def goodearl(stages: int = 4, grid: int = 101, constants: int = 4) -> AHSystem:
    """Single summand C([0,1]) at every stage; each bond is the identity plus point evaluations.

    The evaluation points of the bond out of stage i are consecutive terms of
    the van der Corput sequence, so they fill [0,1] densely as i grows. Sizes
    are (1 + constants)^(i - 1).
    """
    if stages < 1 or grid < 2 or constants < 1:
        raise ValueError("need stages >= 1, grid >= 2, constants >= 1")
    X = FiniteMetricSpace.interval(0.0, 1.0, grid, name="I")
    mult = 1 + constants
    levels = [[Summand(mult ** (i - 1), X)] for i in range(1, stages + 1)]
    bonds = []
    counter = 1
    for i in range(1, stages):
        maps = [PointMap.identity(X)]
        for _ in range(constants):
            maps.append(PointMap.constant(X, X, X.nearest(van_der_corput(counter))))
            counter += 1
        bonds.append(BondingMap(i, {(0, 0): DiagonalHom(levels[i - 1][0].size, X, X, maps)}))
    return AHSystem(levels, bonds, name=f"goodearl({stages})")


def identity_system(stages: int = 6, grid: int = 101) -> AHSystem:
    """C([0,1]) with identity bonds: its limit is C([0,1]), which is not simple."""
    X = FiniteMetricSpace.interval(0.0, 1.0, grid, name="I")
    levels = [[Summand(1, X)] for _ in range(stages)]
    bonds = [BondingMap(i, {(0, 0): DiagonalHom(1, X, X, [PointMap.identity(X)])})
             for i in range(1, stages)]
    return AHSystem(levels, bonds, name=f"identity({stages})")


def two_summand(stages: int = 3, grid: int = 41) -> AHSystem:
    """Two interval summands per stage with cross partial maps given by point evaluations."""
    X = FiniteMetricSpace.interval(0.0, 1.0, grid, name="I")
    sizes = [(1, 1)]
    for _ in range(1, stages):
        a, b = sizes[-1]
        sizes.append((2 * a + b, a + 2 * b))
    levels = [[Summand(a, X), Summand(b, X)] for a, b in sizes]
    bonds = []
    counter = 1

    def const():
        nonlocal counter
        pm = PointMap.constant(X, X, X.nearest(van_der_corput(counter)))
        counter += 1
        return pm

    for i in range(1, stages):
        a, b = sizes[i - 1]
        partial = {
            (0, 0): DiagonalHom(a, X, X, [PointMap.identity(X), const()]),
            (1, 0): DiagonalHom(b, X, X, [const()]),
            (0, 1): DiagonalHom(a, X, X, [const()]),
            (1, 1): DiagonalHom(b, X, X, [PointMap.identity(X), const()]),
        }
        bonds.append(BondingMap(i, partial))
    return AHSystem(levels, bonds, name=f"two_summand({stages})")


DEMOS = {"goodearl": goodearl, "identity": identity_system, "two-summand": two_summand}


def build_demo(name: str, stages: int | None = None) -> AHSystem:
    try:
        factory = DEMOS[name]
    except KeyError:
        raise UnknownDemo(f"unknown demo {name!r}; choose from {', '.join(sorted(DEMOS))}") from None
    return factory() if stages is None else factory(stages)
