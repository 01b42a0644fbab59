"""Random reachable traces and property checks over them.

:func:`gen_trace` builds a valid trace by rejection sampling: it proposes a
transaction, runs the matching ``validate_*`` and retries on failure.
:func:`check_trace` replays a trace and checks the reachability invariants
on every state; :func:`check_lemmas` runs the gain and arbitrage properties
on swaps drawn from generated states.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from math import ceil, floor
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from cpamm import arb, econ
from cpamm.errors import AmmError, GenerationStalled
from cpamm.numerics import Rational, as_rational, format_rational, parse_rational
from cpamm.state import AccountId, AmmSet, AtomicLedger, MintedId, MintedLedger, State, TokenId
from cpamm.txn import (
    Create,
    Deposit,
    Redeem,
    Swap,
    SwapRateFn,
    Trace,
    Tx,
    apply_tx,
    constprod,
    deposit_amounts,
    validate_tx,
)

TX_KINDS = ("create", "deposit", "redeem", "swap")
DEFAULT_WEIGHTS = {"create": 1, "deposit": 2, "redeem": 2, "swap": 5}


@dataclass
class GenConfig:
    seed: int = 0
    n_accounts: int = 4
    n_tokens: int = 3
    n_steps: int = 50
    tx_weights: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    amount_range: Tuple[Rational, Rational] = (Rational(1), Rational(100))
    max_den: int = 8
    max_retries: int = 500

    def __post_init__(self) -> None:
        lo, hi = (as_rational(v) for v in self.amount_range)
        self.amount_range = (lo, hi)
        if self.n_accounts < 1 or self.n_tokens < 2 or self.n_steps < 0:
            raise ValueError("need n_accounts >= 1, n_tokens >= 2, n_steps >= 0")
        if not 0 < lo <= hi:
            raise ValueError("amount_range must satisfy 0 < lo <= hi")
        unknown = set(self.tx_weights) - set(TX_KINDS)
        if unknown:
            raise ValueError(f"unknown transaction kinds in weights: {sorted(unknown)}")
        if any(w < 0 for w in self.tx_weights.values()) or not any(self.tx_weights.values()):
            raise ValueError("weights must be nonnegative and not all zero")
        if self.max_den < 1 or self.max_retries < 1:
            raise ValueError("max_den and max_retries must be positive")

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["amount_range"] = [format_rational(v) for v in self.amount_range]
        return obj

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "GenConfig":
        obj = dict(obj)
        if "amount_range" in obj:
            obj["amount_range"] = tuple(parse_rational(str(v)) for v in obj["amount_range"])
        return cls(**obj)


@dataclass
class Violation:
    step: int
    property: str
    detail: str


@dataclass
class CheckReport:
    states_checked: int = 0
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, step: int, prop: str, detail: str) -> None:
        self.violations.append(Violation(step, prop, detail))

    def merge(self, other: "CheckReport") -> "CheckReport":
        self.states_checked += other.states_checked
        self.violations.extend(other.violations)
        return self

    def to_json(self) -> dict:
        return {
            "states_checked": self.states_checked,
            "violations": [asdict(v) for v in self.violations],
        }

    def summary(self) -> str:
        if self.ok:
            return f"OK: {self.states_checked} states checked, no violations"
        kinds = sorted({v.property for v in self.violations})
        return (
            f"FAIL: {len(self.violations)} violations over {self.states_checked} states "
            f"({', '.join(kinds)})"
        )


# -- sampling ----------------------------------------------------------------

def draw_amount(
    rng: random.Random,
    lo: Rational,
    hi: Rational,
    cap: Rational,
    max_den: int,
    strict: bool = False,
) -> Optional[Rational]:
    """Small-denominator rational in ``[lo, min(hi, cap)]`` (``< cap`` if strict).

    Falls back to ``cap / 2`` when no small-denominator value fits; returns
    None if ``cap`` is zero.
    """
    if cap <= 0:
        return None
    upper = min(hi, cap)
    d = rng.randint(1, max_den)
    top = upper * d
    hi_n = floor(top)
    if strict and upper == cap and hi_n == top:
        hi_n -= 1
    lo_n = max(1, ceil(lo * d))
    if lo_n > hi_n:
        lo_n = 1
    if lo_n > hi_n:
        return cap / 2
    return Rational(rng.randint(lo_n, hi_n), d)


def initial_state(rng: random.Random, cfg: GenConfig) -> State:
    """Random atomic endowments, no pools, no minted tokens."""
    _, hi = cfg.amount_range
    wallets: Dict[AccountId, Dict[TokenId, Rational]] = {}
    for a in range(cfg.n_accounts):
        w = {}
        for t in range(cfg.n_tokens):
            if rng.random() < 0.9:
                w[t] = Rational(rng.randint(hi.numerator, 10 * hi.numerator), hi.denominator)
        wallets[a] = w
    return State(AtomicLedger(wallets))


def _all_pairs(n_tokens: int) -> List[MintedId]:
    return [MintedId(i, j) for i in range(n_tokens) for j in range(i + 1, n_tokens)]


def _ordered(rng: random.Random, pair: MintedId) -> Tuple[TokenId, TokenId]:
    return (pair.lo, pair.hi) if rng.random() < 0.5 else (pair.hi, pair.lo)


def propose(rng: random.Random, s: State, kind: str, cfg: GenConfig) -> Optional[Tx]:
    """A candidate transaction of ``kind``; may be invalid, None if hopeless."""
    lo, hi = cfg.amount_range
    a = rng.randrange(cfg.n_accounts)
    pools = sorted(s.amms.pairs())
    if kind == "create":
        free = [p for p in _all_pairs(cfg.n_tokens) if not s.amms.initialized(p)]
        if not free:
            return None
        t0, t1 = _ordered(rng, rng.choice(free))
        x0 = draw_amount(rng, lo, hi, s.atoms.get(a, t0), cfg.max_den)
        x1 = draw_amount(rng, lo, hi, s.atoms.get(a, t1), cfg.max_den)
        if x0 is None or x1 is None:
            return None
        return Create(a, t0, t1, x0, x1)
    if not pools:
        return None
    if kind == "deposit":
        t0, t1 = _ordered(rng, rng.choice(pools))
        cap = s.atoms.get(a, t0)
        # keep the proportional t1 leg affordable too
        r0, r1 = s.amms.r_in(t0, t1), s.amms.r_out(t0, t1)
        cap = min(cap, s.atoms.get(a, t1) * r0 / r1)
        x0 = draw_amount(rng, lo, hi, cap, cfg.max_den)
        return None if x0 is None else Deposit(a, t0, t1, x0)
    if kind == "redeem":
        held = [(acct, p) for acct, w in sorted(s.mints.items()) for p in sorted(w)]
        if not held:
            return None
        a, pair = rng.choice(held)
        cap = min(s.mints.get(a, pair), s.mintsupply(pair))
        v = draw_amount(rng, lo, hi, cap, cfg.max_den, strict=True)
        if v is None or v >= s.mintsupply(pair):
            return None
        t0, t1 = _ordered(rng, pair)
        return Redeem(a, t0, t1, v)
    if kind == "swap":
        t_in, t_out = _ordered(rng, rng.choice(pools))
        x = draw_amount(rng, lo, hi, s.atoms.get(a, t_in), cfg.max_den)
        return None if x is None else Swap(a, t_in, t_out, x)
    raise ValueError(f"unknown transaction kind {kind!r}")


def next_tx(rng: random.Random, s: State, cfg: GenConfig, sx: SwapRateFn = constprod) -> Tx:
    kinds = [k for k in TX_KINDS if cfg.tx_weights.get(k, 0) > 0]
    weights = [cfg.tx_weights[k] for k in kinds]
    for _ in range(cfg.max_retries):
        kind = rng.choices(kinds, weights)[0]
        tx = propose(rng, s, kind, cfg)
        if tx is None:
            continue
        try:
            validate_tx(s, tx, sx)
        except AmmError:
            continue
        return tx
    raise GenerationStalled(f"no valid transaction after {cfg.max_retries} proposals")


def gen_trace(cfg: GenConfig, sx: SwapRateFn = constprod) -> Trace:
    """Deterministic (in ``cfg.seed``) random valid trace."""
    rng = random.Random(cfg.seed)
    s = initial_state(rng, cfg)
    init = s
    steps: List[Tx] = []
    for _ in range(cfg.n_steps):
        tx = next_tx(rng, s, cfg, sx)
        s = apply_tx(s, tx, sx)
        steps.append(tx)
    return Trace(init, tuple(steps))


def gen_states(cfg: GenConfig, sx: SwapRateFn = constprod) -> List[State]:
    """Every state along a freshly generated trace."""
    rng = random.Random(cfg.seed)
    states = [initial_state(rng, cfg)]
    for _ in range(cfg.n_steps):
        states.append(apply_tx(states[-1], next_tx(rng, states[-1], cfg, sx), sx))
    return states


def random_oracle(rng: random.Random, tokens: Iterable[TokenId], max_den: int = 8) -> econ.Oracle:
    return econ.Oracle({t: Rational(rng.randint(1, 20 * max_den), rng.randint(1, max_den)) for t in tokens})


def sample_swap(
    rng: random.Random,
    s: State,
    cfg: GenConfig,
    non_lp: bool = False,
    sx: SwapRateFn = constprod,
) -> Optional[Swap]:
    """A valid swap in ``s``; with ``non_lp`` the trader holds none of the pool's shares."""
    pools = sorted(s.amms.pairs())
    if not pools:
        return None
    lo, hi = cfg.amount_range
    for _ in range(cfg.max_retries):
        pair = rng.choice(pools)
        t_in, t_out = _ordered(rng, pair)
        a = rng.randrange(cfg.n_accounts)
        if non_lp and s.mints.get(a, pair) != 0:
            continue
        x = draw_amount(rng, lo, hi, s.atoms.get(a, t_in), cfg.max_den)
        if x is None:
            continue
        tx = Swap(a, t_in, t_out, x)
        try:
            validate_tx(s, tx, sx)
        except AmmError:
            continue
        return tx
    return None


def oracle_for_ordering(
    rng: random.Random,
    s: State,
    tx: Swap,
    want: arb.Ordering,
    sx: SwapRateFn = constprod,
    max_den: int = 8,
) -> econ.Oracle:
    """Random oracle placing ``o_in/o_out`` below, at, or above the swap rate.

    ``want`` is the desired ``cmp(sx, o_in/o_out)``.
    """
    rate = sx(tx.x, s.amms.r_in(tx.input, tx.output), s.amms.r_out(tx.input, tx.output))
    prices = {t: Rational(rng.randint(1, 20 * max_den), rng.randint(1, max_den)) for t in s.tokens()}
    u = Rational(rng.randint(1, max_den), max_den + 1)  # in (0, 1)
    scale = {arb.Ordering.GT: u, arb.Ordering.EQ: Rational(1), arb.Ordering.LT: 1 / u}[want]
    prices[tx.input] = rate * prices[tx.output] * scale
    return econ.Oracle(prices)


# -- checks ------------------------------------------------------------------

def _unit_oracle(s: State) -> econ.Oracle:
    return econ.Oracle({t: 1 for t in s.tokens()} or {0: 1})


def check_state(
    report: CheckReport,
    step: int,
    s: State,
    initial: State,
    touched: set,
    expected_supply: Mapping[MintedId, Rational],
    o: Optional[econ.PriceFn] = None,
) -> None:
    touched.update(s.minted_pairs())
    for pair in sorted(touched):
        supply = s.mintsupply(pair)
        if (supply > 0) != s.amms.initialized(pair):
            report.add(step, "supply_iff_pool", f"pair {pair}: supply {format_rational(supply)}, "
                       f"initialized={s.amms.initialized(pair)}")
        if supply != expected_supply.get(pair, 0):
            report.add(step, "minted_supply", f"pair {pair}: wallets sum to {format_rational(supply)}, "
                       f"transactions minted {format_rational(expected_supply.get(pair, Rational(0)))}")
    for t in sorted(initial.tokens() | s.tokens()):
        before, now = initial.atomsupply(t), s.atomsupply(t)
        if before != now:
            report.add(step, "conservation", f"token {t}: {format_rational(before)} -> {format_rational(now)}")
    price_fn = o if o is not None else _unit_oracle(s)
    for pair, reserves in s.amms.items():
        if not all(r > 0 for r in reserves):
            report.add(step, "posres", f"pool {pair} reserves {reserves}")
            continue
        try:
            price = econ.minted_price(s, price_fn, pair)
        except ZeroDivisionError:
            price = Rational(0)
        if not price > 0:
            report.add(step, "minted_price", f"pool {pair} has nonpositive minted price")
    report.states_checked += 1


def _minted_delta(s: State, tx: Tx) -> Rational:
    if isinstance(tx, Create):
        return tx.x0
    if isinstance(tx, Deposit):
        return deposit_amounts(s, tx)[1]
    if isinstance(tx, Redeem):
        return -tx.v
    return Rational(0)


def check_trace(
    trace: Trace,
    sx: SwapRateFn = constprod,
    o: Optional[econ.PriceFn] = None,
) -> CheckReport:
    """Replay ``trace`` and check every state; violations are reported, not raised.

    State ``k`` is the state after the ``k``-th transaction (0 is the initial one).
    Minted supply is compared against an independent tally of what each
    transaction minted or burned.
    """
    report = CheckReport()
    s = trace.initial
    if not s.valid_init():
        report.add(0, "valid_init", "initial state has pools or minted tokens")
    touched: set = set()
    expected: Dict[MintedId, Rational] = {}
    check_state(report, 0, s, trace.initial, touched, expected, o)
    for k, tx in enumerate(trace.steps, start=1):
        try:
            delta = _minted_delta(s, tx)
            s = apply_tx(s, tx, sx)
        except AmmError as exc:
            report.add(k, "validity", f"{type(exc).__name__}: {exc}")
            break
        if delta:
            expected[tx.pair] = expected.get(tx.pair, Rational(0)) + delta
        check_state(report, k, s, trace.initial, touched, expected, o)
    return report


def check_swap_properties(
    report: CheckReport,
    step: int,
    s: State,
    tx: Swap,
    o: econ.PriceFn,
    sx: SwapRateFn = constprod,
) -> Optional[arb.Ordering]:
    """Closed-form gain, zero-sum, and (for non-LP traders) sign agreement.

    Returns the observed ordering of the trader's gain for non-LP traders.
    """
    s2 = apply_tx(s, tx, sx)
    direct = econ.gain(tx.account, o, s, s2)
    closed = econ.swap_gain(s, tx, o, sx)
    if direct != closed:
        report.add(step, "swap_gain", f"{tx}: direct {direct} != closed form {closed}")
    total = sum((econ.gain(a, o, s, s2) for a in s.accounts() | s2.accounts()), Rational(0))
    if total != 0:
        report.add(step, "zero_sum", f"{tx}: gains sum to {total}")
    if s.mints.get(tx.account, tx.pair) != 0:
        return None
    r_in, r_out = s.amms.r_in(tx.input, tx.output), s.amms.r_out(tx.input, tx.output)
    predicted = arb.gain_sign(tx.x, r_in, r_out, o(tx.input), o(tx.output), sx)
    observed = arb.cmp(direct, Rational(0))
    if predicted != observed:
        report.add(step, "gain_sign", f"{tx}: cmp(sx, price ratio)={predicted.name}, gain sign={observed.name}")
    return observed


def check_arbitrage(
    report: CheckReport,
    step: int,
    r_in: Rational,
    r_out: Rational,
    o_in: Rational,
    o_out: Rational,
    n_points: int = 1000,
    rel_tol: Rational = Rational(1, 10**9),
) -> None:
    """Direction uniqueness, grid optimality, alignment and fixed point for one pool."""
    pool = MintedId(0, 1)
    s = State(amms=_pool(r_in, r_out), mints=_shares(pool))
    o = econ.Oracle({0: o_in, 1: o_out})
    forward = arb.grid_gains(r_in, r_out, o_in, o_out, n_points)
    backward = arb.grid_gains(r_out, r_in, o_out, o_in, n_points)
    for this, other, name in ((forward, backward, "0->1"), (backward, forward, "1->0")):
        if any(g > 0 for _, g in this) and not all(g < 0 for _, g in other):
            report.add(step, "unique_direction", f"both directions profitable (first {name})")
    sol = arb.solve_arbitrage(s, 99, o, pool)
    if sol is None:
        if any(g > 0 for _, g in forward + backward):
            report.add(step, "optimality", "solver found no arbitrage but the grid did")
        return
    grid = forward if sol.direction == (0, 1) else backward
    eps = rel_tol * max(Rational(1), abs(sol.expected_gain))
    best = max(g for _, g in grid)
    if sol.expected_gain < best - eps:
        report.add(step, "optimality", f"x*={float(sol.x_star)} gain {float(sol.expected_gain)} < grid {float(best)}")
    target = o_in / o_out
    pre = r_out / r_in
    if abs(sol.post_ratio - target) > abs(pre - target):
        report.add(step, "alignment", "post-swap ratio moved away from the oracle ratio")
    after = _apply_arb(s, sol)
    if arb.solve_arbitrage(after, 99, o, pool, align_tol=rel_tol) is not None:
        report.add(step, "fixed_point", "re-solving after the optimal swap found more arbitrage")


def _pool(r0: Rational, r1: Rational) -> AmmSet:
    return AmmSet({MintedId(0, 1): (r0, r1)})


def _shares(pool: MintedId) -> MintedLedger:
    # one LP holding the whole supply; account 99 trades
    return MintedLedger({0: {pool: 1}})


def _apply_arb(s: State, sol: arb.ArbSolution) -> State:
    t_in, t_out = sol.direction
    amms = s.amms.sub_reserve(sol.pool, t_out, sol.y).add_reserve(sol.pool, t_in, sol.x_star)
    return State(s.atoms, s.mints, amms)


def check_lemmas(
    cfg: GenConfig,
    sx: SwapRateFn = constprod,
    o: Optional[econ.PriceFn] = None,
    grid_points: int = 1000,
) -> CheckReport:
    """Property campaign on states along one generated trace.

    At each state with a pool: one random valid swap (gain formula, zero-sum,
    sign rule) and the arbitrage checks on every pool. Oracles are random
    unless ``o`` is given.
    """
    rng = random.Random(cfg.seed ^ 0x5EED)
    report = CheckReport()
    for k, s in enumerate(gen_states(cfg, sx)):
        if not len(s.amms):
            continue
        report.states_checked += 1
        oracle = o if o is not None else random_oracle(rng, s.tokens(), cfg.max_den)
        tx = sample_swap(rng, s, cfg, sx=sx)
        if tx is not None:
            check_swap_properties(report, k, s, tx, oracle, sx)
        if sx is not constprod:
            continue
        for pair, (r_lo, r_hi) in sorted(s.amms.items()):
            check_arbitrage(report, k, r_lo, r_hi, oracle(pair.lo), oracle(pair.hi), grid_points)
    return report
