"""Arbitrage on constant-product pools.

For a trader holding none of the pool's minted tokens, selling ``x`` of the
input token is profitable exactly when the swap rate beats the oracle
exchange rate. At most one direction can be profitable, and the best amount
is the one that moves the reserve ratio onto the oracle ratio:

    x* = sqrt(o_out * r_in * r_out / o_in) - r_in

:func:`grid_best_gain` is a brute-force cross-check that does not use the
closed form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

from cpamm.econ import PriceFn, swap_gain_closed_form
from cpamm.numerics import Rational, as_rational, DEFAULT_SQRT_TOL, RationalLike, format_rational, positive, sqrt_approx
from cpamm.state import AccountId, MintedId, PairLike, State, TokenId, as_pair
from cpamm.txn import SwapRateFn, constprod, swap_output


class Ordering(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def cmp(a: Rational, b: Rational) -> Ordering:
    return Ordering((a > b) - (a < b))


@dataclass(frozen=True)
class SwapQuote:
    input: TokenId
    output: TokenId
    x: Rational
    y: Rational
    gain: Rational


@dataclass(frozen=True)
class ArbSolution:
    """Optimal swap for one pool.

    ``post_ratio`` is the pool's reserve of its higher-id token over its
    lower-id token after the swap; at the optimum it equals
    ``o(lo) / o(hi)``.
    """

    pool: MintedId
    direction: Tuple[TokenId, TokenId]
    x_star: Rational
    y: Rational
    expected_gain: Rational
    post_ratio: Rational

    @property
    def quote(self) -> SwapQuote:
        return SwapQuote(*self.direction, self.x_star, self.y, self.expected_gain)

    def to_json(self) -> dict:
        return {
            "pool": str(self.pool),
            "direction": list(self.direction),
            "x": format_rational(self.x_star),
            "y": format_rational(self.y),
            "gain": format_rational(self.expected_gain),
            "post_ratio": format_rational(self.post_ratio),
        }


def gain_sign(
    x: RationalLike,
    r_in: RationalLike,
    r_out: RationalLike,
    o_in: RationalLike,
    o_out: RationalLike,
    sx: SwapRateFn = constprod,
) -> Ordering:
    """Sign of a non-LP trader's gain, read off ``cmp(sx(x, r_in, r_out), o_in/o_out)``."""
    x, r_in, r_out = positive(x, "x"), positive(r_in, "r_in"), positive(r_out, "r_out")
    return cmp(sx(x, r_in, r_out), positive(o_in, "o_in") / positive(o_out, "o_out"))


def profitable_direction(
    r0: RationalLike,
    r1: RationalLike,
    o0: RationalLike,
    o1: RationalLike,
    tokens: Tuple[TokenId, TokenId] = (0, 1),
) -> Optional[Tuple[TokenId, TokenId]]:
    """``(input, output)`` of the only direction with profitable swaps, or None.

    The constant-product rate for selling token 0 tends to ``r1/r0`` as the
    amount shrinks, so selling token 0 pays iff ``r1/r0 > o0/o1``, i.e. iff
    the pool holds less oracle value of token 0 than of token 1.
    """
    v0 = positive(r0, "r0") * positive(o0, "o0")
    v1 = positive(r1, "r1") * positive(o1, "o1")
    t0, t1 = tokens
    if v0 < v1:
        return (t0, t1)
    if v1 < v0:
        return (t1, t0)
    return None


def optimal_amount(
    r_in: RationalLike,
    r_out: RationalLike,
    o_in: RationalLike,
    o_out: RationalLike,
    rel_tol: RationalLike = DEFAULT_SQRT_TOL,
) -> Rational:
    """Gain-maximizing input amount, or 0 when this direction cannot profit."""
    r_in, r_out = positive(r_in, "r_in"), positive(r_out, "r_out")
    o_in, o_out = positive(o_in, "o_in"), positive(o_out, "o_out")
    x = sqrt_approx(o_out * r_in * r_out / o_in, rel_tol) - r_in
    return max(x, Rational(0))


def solve_arbitrage(
    s: State,
    a: AccountId,
    o: PriceFn,
    pair: PairLike,
    rel_tol: RationalLike = DEFAULT_SQRT_TOL,
    align_tol: RationalLike = 0,
) -> Optional[ArbSolution]:
    """Best swap of account ``a`` against ``pair``, or None if the pool is aligned.

    ``a`` must hold none of the pool's minted tokens. Its atomic balance is
    not checked: the amount can always be flash-borrowed. With ``align_tol``
    > 0 a pool whose ratio is within that relative distance of the oracle
    ratio counts as aligned.
    """
    pair = as_pair(pair)
    r_lo, r_hi = s.amms.reserves(pair)
    if s.mints.get(a, pair) != 0:
        raise ValueError(f"account {a} holds minted tokens of {pair}; closed form needs none")
    o_lo, o_hi = o(pair.lo), o(pair.hi)
    target = o_lo / o_hi
    if abs(r_hi / r_lo - target) <= as_rational(align_tol) * target:
        return None
    direction = profitable_direction(r_lo, r_hi, o_lo, o_hi, tokens=(pair.lo, pair.hi))
    if direction is None:
        return None
    t_in, t_out = direction
    r_in, r_out = s.amms.reserve(pair, t_in), s.amms.reserve(pair, t_out)
    o_in, o_out = o(t_in), o(t_out)
    x = optimal_amount(r_in, r_out, o_in, o_out, rel_tol)
    if x <= 0:
        return None
    y = swap_output(x, r_in, r_out)
    expected = swap_gain_closed_form(x, y, o_in, o_out, 0, s.mintsupply(pair))
    if t_in == pair.lo:
        post = (r_hi - y) / (r_lo + x)
    else:
        post = (r_hi + x) / (r_lo - y)
    return ArbSolution(pair, direction, x, y, expected, post)


def grid_gains(
    r_in: RationalLike,
    r_out: RationalLike,
    o_in: RationalLike,
    o_out: RationalLike,
    n_points: int,
    x_max: Optional[RationalLike] = None,
    lp_share: RationalLike = 0,
    sx: SwapRateFn = constprod,
) -> List[Tuple[Rational, Rational]]:
    """Exact ``(x, gain)`` at ``x_max * i / n_points`` for ``i = 1..n_points``.

    ``x_max`` defaults to ``10 * r_in``. Points whose output would drain the
    pool are skipped. ``lp_share`` is the trader's fraction of the minted supply.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    r_in, r_out = positive(r_in, "r_in"), positive(r_out, "r_out")
    o_in, o_out = as_rational(o_in), as_rational(o_out)
    step = (as_rational(x_max) if x_max is not None else 10 * r_in) / n_points
    factor = 1 - as_rational(lp_share)
    if sx is constprod:
        return [(x, g * factor) for x, g in _constprod_grid(r_in, r_out, o_in, o_out, step, n_points)]
    out = []
    for i in range(1, n_points + 1):
        x = step * i
        y = swap_output(x, r_in, r_out, sx)
        if y >= r_out:
            continue
        out.append((x, (y * o_out - x * o_in) * factor))
    return out


def _constprod_grid(r_in, r_out, o_in, o_out, step, n_points):
    # gain(x) = o_out*r_out*x/(r_in + x) - o_in*x over a common denominator,
    # one normalization per point instead of one per arithmetic step.
    k = o_out * r_out
    kn, kd = k.numerator, k.denominator
    a, b = r_in.numerator, r_in.denominator
    on, od = o_in.numerator, o_in.denominator
    p, q = step.numerator, step.denominator
    aq = a * q
    out = []
    for i in range(1, n_points + 1):
        ip = i * p
        den_x = aq + ip * b
        num = ip * (kn * b * q * od - on * kd * den_x)
        out.append((Rational(ip, q), Rational(num, kd * den_x * q * od)))
    return out


def grid_best_gain(
    s: State,
    a: AccountId,
    o: PriceFn,
    input: TokenId,
    output: TokenId,
    n_points: int = 10_000,
    sx: SwapRateFn = constprod,
) -> Tuple[Rational, Rational]:
    """Brute-force best ``(x, gain)`` over a uniform grid on ``(0, 10*r_in]``.

    Ties go to the smaller amount.
    """
    pair = MintedId(input, output)
    r_in, r_out = s.amms.r_in(input, output), s.amms.r_out(input, output)
    share = s.mints.get(a, pair) / s.mintsupply(pair)
    points = grid_gains(r_in, r_out, o(input), o(output), n_points, lp_share=share, sx=sx)
    if not points:
        raise ValueError("no grid point satisfies nodrain")
    best_x, best_gain = points[0]
    for x, g in points[1:]:
        if g > best_gain:
            best_x, best_gain = x, g
    return best_x, best_gain
