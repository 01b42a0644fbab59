"""Oracle valuation: wallet value, minted-token price, networth and gain."""

from __future__ import annotations

import json
from typing import Any, Callable, Mapping

from cpamm.numerics import Rational, as_rational, RationalLike, format_rational, nonneg, parse_rational, positive
from cpamm.state import AccountId, AtomicWallet, MintedId, MintedWallet, PairLike, State, TokenId, as_pair
from cpamm.txn import Swap, SwapRateFn, constprod, validate_swap

PriceFn = Callable[[TokenId], Rational]
MintedPriceFn = Callable[[MintedId], Rational]


class MissingPrice(KeyError):
    pass


class Oracle:
    """Finite price table for atomic tokens; every price is strictly positive.

    Querying a token without a configured price raises MissingPrice.
    """

    __slots__ = ("_prices",)

    def __init__(self, prices: Mapping[TokenId, RationalLike]):
        self._prices = {int(t): positive(p, f"price of token {t}") for t, p in prices.items()}

    def __call__(self, token: TokenId) -> Rational:
        try:
            return self._prices[token]
        except KeyError:
            raise MissingPrice(f"oracle has no price for token {token}") from None

    def __contains__(self, token: object) -> bool:
        return token in self._prices

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Oracle) and self._prices == other._prices

    def __repr__(self) -> str:
        body = ", ".join(f"{t}: {format_rational(p)}" for t, p in sorted(self._prices.items()))
        return f"Oracle({{{body}}})"

    def to_json(self) -> dict:
        return {"prices": {str(t): format_rational(p) for t, p in sorted(self._prices.items())}}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Oracle":
        if set(obj) != {"prices"}:
            raise ValueError('oracle config must be {"prices": {...}}')
        return cls({int(t): parse_rational(p) for t, p in obj["prices"].items()})

    @classmethod
    def load(cls, path: str) -> "Oracle":
        with open(path) as fp:
            return cls.from_json(json.load(fp))


def value_atomic(w: AtomicWallet, o: PriceFn) -> Rational:
    return sum((amount * o(t) for t, amount in w.items()), Rational(0))


def value_minted(w: MintedWallet, mp: MintedPriceFn) -> Rational:
    """Value of minted holdings; each unordered pair is counted once."""
    return sum((amount * mp(m) for m, amount in w.items()), Rational(0))


def minted_price(s: State, o: PriceFn, pair: PairLike) -> Rational:
    """Oracle value of the pool's reserves per minted share, 0 if no pool."""
    pair = as_pair(pair)
    if not s.amms.initialized(pair):
        return Rational(0)
    r_lo, r_hi = s.amms.reserves(pair)
    supply = s.mintsupply(pair)
    if supply == 0:
        raise ZeroDivisionError(f"pool {pair} exists but has no minted supply (unreachable state)")
    return (r_lo * o(pair.lo) + r_hi * o(pair.hi)) / supply


def networth(s: State, a: AccountId, o: PriceFn) -> Rational:
    atomic = value_atomic(s.atoms.wallet(a), o)
    minted = value_minted(s.mints.wallet(a), lambda m: minted_price(s, o, m))
    return atomic + minted


def gain(a: AccountId, o: PriceFn, s: State, s_after: State) -> Rational:
    """Signed networth change of ``a`` from ``s`` to ``s_after``."""
    return networth(s_after, a, o) - networth(s, a, o)


def swap_gain_closed_form(
    x: RationalLike,
    y: RationalLike,
    o_in: RationalLike,
    o_out: RationalLike,
    user_minted: RationalLike,
    supply: RationalLike,
) -> Rational:
    """``(y*o_out - x*o_in) * (1 - user_minted/supply)``.

    The trader's own share of the pool absorbs the matching fraction of the
    value moved by the swap.
    """
    supply = positive(supply, "supply")
    factor = 1 - nonneg(user_minted, "user_minted") / supply
    return (as_rational(y) * as_rational(o_out) - as_rational(x) * as_rational(o_in)) * factor


def swap_gain(s: State, tx: Swap, o: PriceFn, sx: SwapRateFn = constprod) -> Rational:
    """Closed-form gain of the trader for a valid swap in ``s``."""
    y = validate_swap(s, tx, sx)
    return swap_gain_closed_form(
        tx.x, y, o(tx.input), o(tx.output), s.mints.get(tx.account, tx.pair), s.mintsupply(tx.pair)
    )
