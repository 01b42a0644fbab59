"""Executable model of constant-product automated market makers.

Exact rational state machine (wallets, ledgers, pools), the four transaction
kinds, oracle-based valuation, and a closed-form arbitrage solver, plus a
randomized trace generator and checker.
"""

from cpamm.numerics import Rational, format_rational, parse_rational, sqrt_approx
from cpamm.state import (
    AmmSet,
    AtomicLedger,
    AtomicWallet,
    MintedId,
    MintedLedger,
    MintedWallet,
    State,
    atomsupply,
    mintsupply,
    valid_init,
)
from cpamm.errors import (
    AlreadyInitialized,
    AmmError,
    GenerationStalled,
    InsufficientBalance,
    InvalidInitialState,
    ReserveDrained,
    SameToken,
    StepInvalid,
    UninitializedAmm,
)
from cpamm.txn import Create, Deposit, Redeem, Swap, Trace, apply_tx, constprod, replay
from cpamm.econ import Oracle, gain, minted_price, networth, swap_gain_closed_form
from cpamm.arb import (
    ArbSolution,
    SwapQuote,
    gain_sign,
    grid_best_gain,
    optimal_amount,
    profitable_direction,
    solve_arbitrage,
)

__version__ = "0.1.0"
