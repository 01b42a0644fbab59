"""Blockchain state: wallets, ledgers, pool reserves and token supplies.

All containers are immutable, finitely supported maps that never store zero
entries. Every update returns a new object.

Minted token types and pools are keyed by :class:`MintedId`, an unordered
pair stored with the smaller token id first, so order-insensitivity and
distinctness of the pair hold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Generic, Iterator, Mapping, Tuple, TypeVar, Union

from cpamm.errors import InsufficientBalance, ReserveDrained, SameToken, UninitializedAmm
from cpamm.numerics import Rational, RationalLike, format_rational, nonneg, parse_rational, positive

AccountId = int
TokenId = int

K = TypeVar("K")
W = TypeVar("W", bound="_FinMap")


@dataclass(frozen=True, order=True)
class MintedId:
    """Unordered pair of distinct atomic tokens, stored as ``lo < hi``.

    ``MintedId(1, 0) == MintedId(0, 1)``; ``MintedId(2, 2)`` raises SameToken.
    """

    lo: TokenId
    hi: TokenId

    def __post_init__(self) -> None:
        a, b = int(self.lo), int(self.hi)
        if a < 0 or b < 0:
            raise ValueError("token ids are natural numbers")
        if a == b:
            raise SameToken(f"a pool needs two distinct tokens, got {a} twice")
        object.__setattr__(self, "lo", min(a, b))
        object.__setattr__(self, "hi", max(a, b))

    def __iter__(self) -> Iterator[TokenId]:
        return iter((self.lo, self.hi))

    def __contains__(self, token: object) -> bool:
        return token == self.lo or token == self.hi

    def other(self, token: TokenId) -> TokenId:
        if token == self.lo:
            return self.hi
        if token == self.hi:
            return self.lo
        raise KeyError(f"token {token} not in pair {self}")

    def __str__(self) -> str:
        return f"{self.lo}-{self.hi}"

    @classmethod
    def parse(cls, text: str, strict: bool = True) -> "MintedId":
        """Parse ``"t0-t1"``; with ``strict`` the ids must already be ordered."""
        try:
            a, b = (int(part) for part in text.split("-"))
        except ValueError as exc:
            raise ValueError(f"bad pair key {text!r}, expected 't0-t1'") from exc
        if strict and not a < b:
            raise ValueError(f"pair key {text!r} must list the smaller token first")
        return cls(a, b)


PairLike = Union[MintedId, Tuple[int, int]]


def as_pair(pair: PairLike) -> MintedId:
    return pair if isinstance(pair, MintedId) else MintedId(*pair)


class _FinMap(Mapping[K, Rational]):
    """Finitely supported map to nonnegative rationals; zeros are never stored."""

    __slots__ = ("_data",)

    def __init__(self, data: Mapping[Any, RationalLike] | None = None):
        clean: Dict[K, Rational] = {}
        for k, v in (data or {}).items():
            q = nonneg(v, "balance")
            if q:
                clean[self._key(k)] = q
        self._data = clean

    @staticmethod
    def _key(k: Any) -> Any:
        return k

    @classmethod
    def _wrap(cls: type[W], data: Dict[Any, Rational]) -> W:
        obj = cls.__new__(cls)
        obj._data = data
        return obj

    def __getitem__(self, k: K) -> Rational:
        return self._data[self._key(k)]

    def __iter__(self) -> Iterator[K]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self) -> int:
        return hash(frozenset(self._data.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {format_rational(v)}" for k, v in sorted(self._data.items()))
        return f"{type(self).__name__}({{{body}}})"

    def get(self, k: Any, default: Rational = Rational(0)) -> Rational:  # type: ignore[override]
        return self._data.get(self._key(k), default)

    def add(self: W, k: Any, amount: RationalLike) -> W:
        amount = positive(amount, "amount")
        k = self._key(k)
        data = dict(self._data)
        data[k] = data.get(k, Rational(0)) + amount
        return self._wrap(data)

    def sub(self: W, k: Any, amount: RationalLike) -> W:
        amount = positive(amount, "amount")
        k = self._key(k)
        have = self._data.get(k, Rational(0))
        if amount > have:
            raise InsufficientBalance(
                f"need {format_rational(amount)} of {k}, have {format_rational(have)}"
            )
        data = dict(self._data)
        if amount == have:
            del data[k]
        else:
            data[k] = have - amount
        return self._wrap(data)

    def drain(self: W, k: Any) -> W:
        """Copy of this wallet with the entry for ``k`` set to zero."""
        k = self._key(k)
        if k not in self._data:
            return self
        data = dict(self._data)
        del data[k]
        return self._wrap(data)


class AtomicWallet(_FinMap[TokenId]):
    """Balances of atomic tokens."""

    __slots__ = ()

    @staticmethod
    def _key(k: Any) -> TokenId:
        if isinstance(k, bool) or not isinstance(k, int) or k < 0:
            raise TypeError(f"atomic token ids are natural numbers, got {k!r}")
        return k


class MintedWallet(_FinMap[MintedId]):
    """Balances of minted (liquidity share) tokens, keyed by unordered pair."""

    __slots__ = ()

    @staticmethod
    def _key(k: Any) -> MintedId:
        return as_pair(k)


def drain_atomic(w: AtomicWallet, token: TokenId) -> AtomicWallet:
    return w.drain(token)


def drain_minted(w: MintedWallet, pair: PairLike) -> MintedWallet:
    return w.drain(pair)


class _Ledger(Generic[W]):
    """Account -> wallet map; accounts with empty wallets are pruned."""

    __slots__ = ("_wallets",)
    wallet_type: Callable[..., W]

    def __init__(self, wallets: Mapping[AccountId, Any] | None = None):
        clean: Dict[AccountId, W] = {}
        for a, w in (wallets or {}).items():
            if isinstance(a, bool) or not isinstance(a, int) or a < 0:
                raise TypeError(f"account ids are natural numbers, got {a!r}")
            if not isinstance(w, self.wallet_type):
                w = self.wallet_type(w)
            if w:
                clean[a] = w
        self._wallets = clean

    def _replace(self, a: AccountId, w: W) -> "_Ledger[W]":
        wallets = dict(self._wallets)
        if w:
            wallets[a] = w
        else:
            wallets.pop(a, None)
        new = type(self).__new__(type(self))
        new._wallets = wallets
        return new

    def wallet(self, a: AccountId) -> W:
        w = self._wallets.get(a)
        return w if w is not None else self.wallet_type()

    def get(self, a: AccountId, token: Any) -> Rational:
        w = self._wallets.get(a)
        return w.get(token) if w is not None else Rational(0)

    def add(self, a: AccountId, token: Any, amount: RationalLike):
        return self._replace(a, self.wallet(a).add(token, amount))

    def sub(self, a: AccountId, token: Any, amount: RationalLike):
        return self._replace(a, self.wallet(a).sub(token, amount))

    def supply(self, token: Any) -> Rational:
        return sum((w.get(token) for w in self._wallets.values()), Rational(0))

    def accounts(self) -> Iterator[AccountId]:
        return iter(self._wallets)

    def items(self):
        return self._wallets.items()

    def __len__(self) -> int:
        return len(self._wallets)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, _Ledger):
            return NotImplemented
        return type(self) is type(other) and self._wallets == other._wallets

    def __hash__(self) -> int:
        return hash(frozenset(self._wallets.items()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._wallets!r})"


class AtomicLedger(_Ledger[AtomicWallet]):
    __slots__ = ()
    wallet_type = AtomicWallet


class MintedLedger(_Ledger[MintedWallet]):
    __slots__ = ()
    wallet_type = MintedWallet


class AmmSet:
    """Pool reserves keyed by pair: ``pair -> (reserve of lo, reserve of hi)``.

    Stored pools always have both reserves strictly positive; a pair that is
    absent is an uninitialized pool (both reserves zero).
    """

    __slots__ = ("_pools",)

    def __init__(self, pools: Mapping[PairLike, Tuple[RationalLike, RationalLike]] | None = None):
        clean: Dict[MintedId, Tuple[Rational, Rational]] = {}
        for pair, (r_lo, r_hi) in (pools or {}).items():
            clean[as_pair(pair)] = (positive(r_lo, "reserve"), positive(r_hi, "reserve"))
        self._pools = clean

    def _with(self, pair: MintedId, reserves: Tuple[Rational, Rational]) -> "AmmSet":
        new = AmmSet.__new__(AmmSet)
        new._pools = {**self._pools, pair: reserves}
        return new

    def initialized(self, pair: PairLike) -> bool:
        return as_pair(pair) in self._pools

    def init(self, t0: TokenId, t1: TokenId) -> bool:
        """Whether the pool for ``t0``/``t1`` exists (False for ``t0 == t1``)."""
        return t0 != t1 and MintedId(t0, t1) in self._pools

    def reserves(self, pair: PairLike) -> Tuple[Rational, Rational]:
        pair = as_pair(pair)
        try:
            return self._pools[pair]
        except KeyError:
            raise UninitializedAmm(f"no pool for pair {pair}") from None

    def reserve(self, pair: PairLike, token: TokenId) -> Rational:
        pair = as_pair(pair)
        r_lo, r_hi = self.reserves(pair)
        if token == pair.lo:
            return r_lo
        if token == pair.hi:
            return r_hi
        raise KeyError(f"token {token} not in pair {pair}")

    def r_in(self, input: TokenId, output: TokenId) -> Rational:
        """Reserve of the input (first-named) token of the pool."""
        return self.reserve(MintedId(input, output), input)

    def r_out(self, input: TokenId, output: TokenId) -> Rational:
        """Reserve of the output (second-named) token of the pool."""
        return self.reserve(MintedId(input, output), output)

    def create(self, t0: TokenId, t1: TokenId, x0: RationalLike, x1: RationalLike) -> "AmmSet":
        pair = MintedId(t0, t1)
        if pair in self._pools:
            raise ValueError(f"pool {pair} already exists")
        x0, x1 = positive(x0, "reserve"), positive(x1, "reserve")
        return self._with(pair, (x0, x1) if t0 < t1 else (x1, x0))

    def add_reserve(self, pair: PairLike, token: TokenId, amount: RationalLike) -> "AmmSet":
        pair = as_pair(pair)
        amount = positive(amount, "amount")
        r_lo, r_hi = self.reserves(pair)
        if token == pair.lo:
            return self._with(pair, (r_lo + amount, r_hi))
        if token == pair.hi:
            return self._with(pair, (r_lo, r_hi + amount))
        raise KeyError(f"token {token} not in pair {pair}")

    def sub_reserve(self, pair: PairLike, token: TokenId, amount: RationalLike) -> "AmmSet":
        """Remove ``amount`` of ``token``; the reserve must stay strictly positive."""
        pair = as_pair(pair)
        amount = positive(amount, "amount")
        have = self.reserve(pair, token)
        if amount >= have:
            raise ReserveDrained(
                f"cannot take {format_rational(amount)} of {token} from pool {pair} "
                f"holding {format_rational(have)}"
            )
        r_lo, r_hi = self._pools[pair]
        if token == pair.lo:
            return self._with(pair, (r_lo - amount, r_hi))
        return self._with(pair, (r_lo, r_hi - amount))

    def supply(self, token: TokenId) -> Rational:
        """Total reserves of ``token`` across every pool that contains it."""
        total = Rational(0)
        for pair, (r_lo, r_hi) in self._pools.items():
            if token == pair.lo:
                total += r_lo
            elif token == pair.hi:
                total += r_hi
        return total

    def pairs(self) -> Iterator[MintedId]:
        return iter(self._pools)

    def items(self):
        return self._pools.items()

    def __len__(self) -> int:
        return len(self._pools)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AmmSet):
            return NotImplemented
        return self._pools == other._pools

    def __hash__(self) -> int:
        return hash(frozenset(self._pools.items()))

    def __repr__(self) -> str:
        return f"AmmSet({self._pools!r})"


@dataclass(frozen=True)
class State:
    """Atomic ledger, minted ledger and pool set."""

    atoms: AtomicLedger = field(default_factory=AtomicLedger)
    mints: MintedLedger = field(default_factory=MintedLedger)
    amms: AmmSet = field(default_factory=AmmSet)

    def atomsupply(self, token: TokenId) -> Rational:
        return self.atoms.supply(token) + self.amms.supply(token)

    def mintsupply(self, pair: PairLike) -> Rational:
        return self.mints.supply(as_pair(pair))

    def valid_init(self) -> bool:
        return len(self.amms) == 0 and len(self.mints) == 0

    def accounts(self) -> set[AccountId]:
        return set(self.atoms.accounts()) | set(self.mints.accounts())

    def tokens(self) -> set[TokenId]:
        toks: set[TokenId] = set()
        for _, w in self.atoms.items():
            toks.update(w)
        for pair in self.amms.pairs():
            toks.update(pair)
        return toks

    def minted_pairs(self) -> set[MintedId]:
        pairs = set(self.amms.pairs())
        for _, w in self.mints.items():
            pairs.update(w)
        return pairs

    def to_json(self) -> dict:
        return {
            "atoms": {
                str(a): {str(t): format_rational(v) for t, v in sorted(w.items())}
                for a, w in sorted(self.atoms.items())
            },
            "mints": {
                str(a): {str(m): format_rational(v) for m, v in sorted(w.items())}
                for a, w in sorted(self.mints.items())
            },
            "amms": {
                str(m): [format_rational(r_lo), format_rational(r_hi)]
                for m, (r_lo, r_hi) in sorted(self.amms.items())
            },
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "State":
        unknown = set(obj) - {"atoms", "mints", "amms"}
        if unknown:
            raise ValueError(f"unknown state fields: {sorted(unknown)}")
        atoms = {
            _nat(a): {_nat(t): parse_rational(v) for t, v in w.items()}
            for a, w in obj.get("atoms", {}).items()
        }
        mints = {
            _nat(a): {MintedId.parse(m): parse_rational(v) for m, v in w.items()}
            for a, w in obj.get("mints", {}).items()
        }
        amms = {}
        for m, reserves in obj.get("amms", {}).items():
            if len(reserves) != 2:
                raise ValueError(f"pool {m} needs exactly two reserves")
            amms[MintedId.parse(m)] = tuple(parse_rational(r) for r in reserves)
        return cls(AtomicLedger(atoms), MintedLedger(mints), AmmSet(amms))


def _nat(text: str) -> int:
    n = int(text)
    if n < 0:
        raise ValueError(f"ids are natural numbers, got {text!r}")
    return n


def atomsupply(s: State, token: TokenId) -> Rational:
    """Wallet holdings of ``token`` plus its reserves in every pool."""
    return s.atomsupply(token)


def mintsupply(s: State, pair: PairLike) -> Rational:
    return s.mintsupply(pair)


def valid_init(s: State) -> bool:
    """No pools and no minted tokens; atomic wallets are unrestricted."""
    return s.valid_init()
