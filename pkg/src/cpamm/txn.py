"""Transactions: create, deposit, redeem and swap.

Each kind has a ``validate_*`` function that raises the error naming the
violated precondition and an ``apply_*`` function that validates and returns
the successor state. Swaps are parameterised by a swap rate function
``sx(x, r_in, r_out)``; the output amount is ``x * sx(x, r_in, r_out)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Any, Callable, Iterable, List, Mapping, Sequence, Tuple, Union

from cpamm.errors import (
    AlreadyInitialized,
    AmmError,
    InsufficientBalance,
    InvalidInitialState,
    ReserveDrained,
    SameToken,
    StepInvalid,
    UninitializedAmm,
)
from cpamm.numerics import Rational, RationalLike, format_rational, parse_rational, positive
from cpamm.state import AccountId, MintedId, State, TokenId

SwapRateFn = Callable[[Rational, Rational, Rational], Rational]


def constprod(x: Rational, r0: Rational, r1: Rational) -> Rational:
    """Constant-product swap rate ``r1 / (r0 + x)``."""
    return r1 / (r0 + x)


def swap_output(x: Rational, r0: Rational, r1: Rational, sx: SwapRateFn = constprod) -> Rational:
    rate = sx(x, r0, r1)
    if rate <= 0:
        raise ValueError("swap rate functions must return positive rates")
    return x * rate


def _distinct(t0: TokenId, t1: TokenId) -> None:
    if t0 == t1:
        raise SameToken(f"token pair must be distinct, got {t0} twice")


@dataclass(frozen=True)
class Create:
    """Open the pool ``t0``/``t1`` with reserves ``(x0, x1)``; mints ``x0`` shares."""

    account: AccountId
    t0: TokenId
    t1: TokenId
    x0: Rational
    x1: Rational
    kind = "create"

    def __post_init__(self) -> None:
        _distinct(self.t0, self.t1)
        object.__setattr__(self, "x0", positive(self.x0, "x0"))
        object.__setattr__(self, "x1", positive(self.x1, "x1"))

    @property
    def pair(self) -> MintedId:
        return MintedId(self.t0, self.t1)


@dataclass(frozen=True)
class Deposit:
    """Add ``x0`` of ``t0`` and the proportional amount of ``t1`` to a pool."""

    account: AccountId
    t0: TokenId
    t1: TokenId
    x0: Rational
    kind = "deposit"

    def __post_init__(self) -> None:
        _distinct(self.t0, self.t1)
        object.__setattr__(self, "x0", positive(self.x0, "x0"))

    @property
    def pair(self) -> MintedId:
        return MintedId(self.t0, self.t1)


@dataclass(frozen=True)
class Redeem:
    """Burn ``v`` minted shares for the pro-rata part of both reserves."""

    account: AccountId
    t0: TokenId
    t1: TokenId
    v: Rational
    kind = "redeem"

    def __post_init__(self) -> None:
        _distinct(self.t0, self.t1)
        object.__setattr__(self, "v", positive(self.v, "v"))

    @property
    def pair(self) -> MintedId:
        return MintedId(self.t0, self.t1)


@dataclass(frozen=True)
class Swap:
    """Sell ``x`` units of ``input`` to the pool for units of ``output``."""

    account: AccountId
    input: TokenId
    output: TokenId
    x: Rational
    kind = "swap"

    def __post_init__(self) -> None:
        _distinct(self.input, self.output)
        object.__setattr__(self, "x", positive(self.x, "x"))

    @property
    def pair(self) -> MintedId:
        return MintedId(self.input, self.output)


Tx = Union[Create, Deposit, Redeem, Swap]


def _require_balance(s: State, a: AccountId, token: TokenId, amount: Rational) -> None:
    have = s.atoms.get(a, token)
    if amount > have:
        raise InsufficientBalance(
            f"account {a} needs {format_rational(amount)} of token {token}, "
            f"has {format_rational(have)}"
        )


def _require_pool(s: State, pair: MintedId) -> None:
    if not s.amms.initialized(pair):
        raise UninitializedAmm(f"pool {pair} is not initialized")


# -- swap --------------------------------------------------------------------

def validate_swap(s: State, tx: Swap, sx: SwapRateFn = constprod) -> Rational:
    """Check ``enough``, ``exi`` and ``nodrain``; return the output amount."""
    _require_balance(s, tx.account, tx.input, tx.x)
    _require_pool(s, tx.pair)
    r_out = s.amms.r_out(tx.input, tx.output)
    y = swap_output(tx.x, s.amms.r_in(tx.input, tx.output), r_out, sx)
    if not y < r_out:
        raise ReserveDrained(
            f"swap output {format_rational(y)} would drain reserve {format_rational(r_out)}"
        )
    return y


def apply_swap(s: State, tx: Swap, sx: SwapRateFn = constprod) -> State:
    y = validate_swap(s, tx, sx)
    atoms = s.atoms.sub(tx.account, tx.input, tx.x).add(tx.account, tx.output, y)
    amms = s.amms.sub_reserve(tx.pair, tx.output, y).add_reserve(tx.pair, tx.input, tx.x)
    return State(atoms, s.mints, amms)


# -- create ------------------------------------------------------------------

def validate_create(s: State, tx: Create) -> None:
    if s.amms.initialized(tx.pair):
        raise AlreadyInitialized(f"pool {tx.pair} already exists")
    _require_balance(s, tx.account, tx.t0, tx.x0)
    _require_balance(s, tx.account, tx.t1, tx.x1)


def apply_create(s: State, tx: Create) -> State:
    validate_create(s, tx)
    atoms = s.atoms.sub(tx.account, tx.t0, tx.x0).sub(tx.account, tx.t1, tx.x1)
    amms = s.amms.create(tx.t0, tx.t1, tx.x0, tx.x1)
    mints = s.mints.add(tx.account, tx.pair, tx.x0)
    return State(atoms, mints, amms)


# -- deposit -----------------------------------------------------------------

def deposit_amounts(s: State, tx: Deposit) -> Tuple[Rational, Rational]:
    """``(x1, minted)`` for a proportional deposit of ``tx.x0``."""
    _require_pool(s, tx.pair)
    r0 = s.amms.r_in(tx.t0, tx.t1)
    r1 = s.amms.r_out(tx.t0, tx.t1)
    supply = s.mintsupply(tx.pair)
    if supply <= 0:
        raise ValueError(f"pool {tx.pair} is initialized but has no minted supply")
    return tx.x0 * r1 / r0, tx.x0 * supply / r0


def validate_deposit(s: State, tx: Deposit) -> Tuple[Rational, Rational]:
    x1, minted = deposit_amounts(s, tx)
    _require_balance(s, tx.account, tx.t0, tx.x0)
    _require_balance(s, tx.account, tx.t1, x1)
    return x1, minted


def apply_deposit(s: State, tx: Deposit) -> State:
    x1, minted = validate_deposit(s, tx)
    atoms = s.atoms.sub(tx.account, tx.t0, tx.x0).sub(tx.account, tx.t1, x1)
    amms = s.amms.add_reserve(tx.pair, tx.t0, tx.x0).add_reserve(tx.pair, tx.t1, x1)
    mints = s.mints.add(tx.account, tx.pair, minted)
    return State(atoms, mints, amms)


# -- redeem ------------------------------------------------------------------

def validate_redeem(s: State, tx: Redeem) -> Tuple[Rational, Rational]:
    """Return the amounts ``(x0, x1)`` of ``t0``, ``t1`` paid out."""
    _require_pool(s, tx.pair)
    held = s.mints.get(tx.account, tx.pair)
    if tx.v > held:
        raise InsufficientBalance(
            f"account {tx.account} holds {format_rational(held)} of {tx.pair}, "
            f"cannot redeem {format_rational(tx.v)}"
        )
    supply = s.mintsupply(tx.pair)
    if not tx.v < supply:
        raise ReserveDrained(f"redeeming the whole supply of {tx.pair} would empty the pool")
    r0 = s.amms.r_in(tx.t0, tx.t1)
    r1 = s.amms.r_out(tx.t0, tx.t1)
    return tx.v * r0 / supply, tx.v * r1 / supply


def apply_redeem(s: State, tx: Redeem) -> State:
    x0, x1 = validate_redeem(s, tx)
    mints = s.mints.sub(tx.account, tx.pair, tx.v)
    amms = s.amms.sub_reserve(tx.pair, tx.t0, x0).sub_reserve(tx.pair, tx.t1, x1)
    atoms = s.atoms.add(tx.account, tx.t0, x0).add(tx.account, tx.t1, x1)
    return State(atoms, mints, amms)


# -- dispatch ----------------------------------------------------------------

def validate_tx(s: State, tx: Tx, sx: SwapRateFn = constprod) -> None:
    if isinstance(tx, Swap):
        validate_swap(s, tx, sx)
    elif isinstance(tx, Create):
        validate_create(s, tx)
    elif isinstance(tx, Deposit):
        validate_deposit(s, tx)
    elif isinstance(tx, Redeem):
        validate_redeem(s, tx)
    else:
        raise TypeError(f"not a transaction: {tx!r}")


def apply_tx(s: State, tx: Tx, sx: SwapRateFn = constprod) -> State:
    if isinstance(tx, Swap):
        return apply_swap(s, tx, sx)
    if isinstance(tx, Create):
        return apply_create(s, tx)
    if isinstance(tx, Deposit):
        return apply_deposit(s, tx)
    if isinstance(tx, Redeem):
        return apply_redeem(s, tx)
    raise TypeError(f"not a transaction: {tx!r}")


@dataclass(frozen=True)
class Trace:
    """A valid initial state followed by transactions."""

    initial: State
    steps: Tuple[Tx, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))


def replay(trace: Trace, sx: SwapRateFn = constprod) -> List[State]:
    """Apply every step; return all states, initial state included.

    Raises InvalidInitialState if the trace does not start from a state with
    no pools and no minted tokens, and StepInvalid on the first bad step.
    """
    if not trace.initial.valid_init():
        raise InvalidInitialState("initial state must have no pools and no minted tokens")
    states = [trace.initial]
    for i, tx in enumerate(trace.steps):
        try:
            states.append(apply_tx(states[-1], tx, sx))
        except AmmError as exc:
            raise StepInvalid(i, exc) from exc
    return states


# -- JSON ----------------------------------------------------------------------

_AMOUNT_FIELDS = {"create": ("x0", "x1"), "deposit": ("x0",), "redeem": ("v",), "swap": ("x",)}
_ID_FIELDS = {
    "create": ("account", "t0", "t1"),
    "deposit": ("account", "t0", "t1"),
    "redeem": ("account", "t0", "t1"),
    "swap": ("account", "input", "output"),
}
_TX_TYPES = {"create": Create, "deposit": Deposit, "redeem": Redeem, "swap": Swap}


def tx_to_json(tx: Tx) -> dict:
    obj: dict = {"kind": tx.kind}
    for name in _ID_FIELDS[tx.kind]:
        obj[name] = getattr(tx, name)
    for name in _AMOUNT_FIELDS[tx.kind]:
        obj[name] = format_rational(getattr(tx, name))
    return obj


def tx_from_json(obj: Mapping[str, Any]) -> Tx:
    kind = obj.get("kind")
    if kind not in _TX_TYPES:
        raise ValueError(f"unknown transaction kind {kind!r}")
    expected = {"kind", *_ID_FIELDS[kind], *_AMOUNT_FIELDS[kind]}
    if set(obj) != expected:
        raise ValueError(f"{kind} needs fields {sorted(expected)}, got {sorted(obj)}")
    kwargs: dict = {}
    for name in _ID_FIELDS[kind]:
        value = obj[name]
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ValueError(f"{name} must be a natural number, got {value!r}")
        kwargs[name] = value
    for name in _AMOUNT_FIELDS[kind]:
        value = obj[name]
        kwargs[name] = parse_rational(value) if isinstance(value, str) else _int_amount(name, value)
    return _TX_TYPES[kind](**kwargs)


def _int_amount(name: str, value: Any) -> Rational:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be a 'num/den' string or an integer, got {value!r}")
    return Rational(value)


def dump_trace(trace: Trace, fp: IO[str]) -> None:
    """Write the trace as JSON lines: initial state, then one transaction per line."""
    fp.write(json.dumps(trace.initial.to_json()) + "\n")
    for tx in trace.steps:
        fp.write(json.dumps(tx_to_json(tx)) + "\n")


def dumps_trace(trace: Trace) -> str:
    lines = [json.dumps(trace.initial.to_json())]
    lines += [json.dumps(tx_to_json(tx)) for tx in trace.steps]
    return "\n".join(lines) + "\n"


def load_trace(lines: Iterable[str]) -> Trace:
    rows = [line for line in lines if line.strip()]
    if not rows:
        raise ValueError("trace file is empty")
    initial = State.from_json(json.loads(rows[0]))
    steps: Sequence[Tx] = [tx_from_json(json.loads(row)) for row in rows[1:]]
    return Trace(initial, tuple(steps))
