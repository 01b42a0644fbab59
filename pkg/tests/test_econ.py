import random
from fractions import Fraction

import pytest

from conftest import LP, TRADER
from cpamm.econ import (
    MissingPrice,
    Oracle,
    gain,
    minted_price,
    networth,
    swap_gain,
    swap_gain_closed_form,
    value_atomic,
    value_minted,
)
from cpamm.harness import GenConfig, gen_states, random_oracle, sample_swap
from cpamm.state import AmmSet, AtomicLedger, AtomicWallet, MintedId, MintedLedger, MintedWallet, State
from cpamm.txn import Swap, apply_swap

POOL = MintedId(0, 1)


def test_value_atomic():
    assert value_atomic(AtomicWallet(), Oracle({0: 3})) == 0
    assert value_atomic(AtomicWallet({0: 6}), Oracle({0: 3, 1: 4})) == 18


def test_oracle_rejects_missing_and_nonpositive():
    o = Oracle({0: 3})
    with pytest.raises(MissingPrice):
        o(1)
    with pytest.raises(ValueError):
        Oracle({0: 0})


def test_oracle_json():
    o = Oracle.from_json({"prices": {"0": "3/1", "1": "4"}})
    assert o(1) == 4
    assert Oracle.from_json(o.to_json()) == o
    with pytest.raises(ValueError):
        Oracle.from_json({"0": "1"})


class TestMintedPrice:
    def test_uninitialized_is_zero(self, example_state, example_oracle):
        assert minted_price(example_state, example_oracle, (0, 2)) == 0

    def test_example_pool(self, example_state, example_oracle):
        assert minted_price(example_state, example_oracle, (0, 1)) == Fraction(13, 3)

    def test_symmetric(self, example_state, example_oracle):
        assert minted_price(example_state, example_oracle, (1, 0)) == minted_price(
            example_state, example_oracle, (0, 1)
        )

    def test_unreachable_state_zero_supply(self, example_oracle):
        s = State(amms=AmmSet({POOL: (1, 1)}))
        with pytest.raises(ZeroDivisionError):
            minted_price(s, example_oracle, POOL)

    def test_total_minted_value_counts_each_pool_once(self, example_state, example_oracle):
        # the whole supply is worth exactly the pool's reserves
        s = example_state
        holder = MintedWallet({POOL: s.mintsupply(POOL)})
        value = value_minted(holder, lambda m: minted_price(s, example_oracle, m))
        assert value == 18 * 3 + 6 * 4
        assert value == s.mintsupply(POOL) * minted_price(s, example_oracle, POOL)


class TestGain:
    def test_same_state(self, example_state, example_oracle):
        assert gain(TRADER, example_oracle, example_state, example_state) == 0

    def test_sell_token1(self, example_state, example_oracle):
        s2 = apply_swap(example_state, Swap(TRADER, 1, 0, 6))
        assert gain(TRADER, example_oracle, example_state, s2) == 3

    def test_sell_token0(self, example_state, example_oracle):
        s2 = apply_swap(example_state, Swap(TRADER, 0, 1, 6))
        assert gain(TRADER, example_oracle, example_state, s2) == -12

    def test_lp_absorbs_trader_gain(self, example_state, example_oracle):
        s2 = apply_swap(example_state, Swap(TRADER, 1, 0, 6))
        assert gain(LP, example_oracle, example_state, s2) == -3

    def test_networth_includes_shares(self, example_state, example_oracle):
        # LP: 82*3 + 94*4 atomic, plus the whole pool (78)
        assert networth(example_state, LP, example_oracle) == 82 * 3 + 94 * 4 + 78


class TestClosedForm:
    def test_example_data(self):
        assert swap_gain_closed_form(6, 9, 4, 3, 0, 18) == 3
        assert swap_gain_closed_form(6, Fraction(3, 2), 3, 4, 0, 18) == -12

    def test_whole_supply_holder_gains_nothing(self):
        assert swap_gain_closed_form(5, 7, 2, 3, 18, 18) == 0

    def test_lp_trader(self, example_state, example_oracle):
        # LP trades against its own pool: holds all shares, gain is 0
        tx = Swap(LP, 1, 0, 6)
        s2 = apply_swap(example_state, tx)
        assert swap_gain(example_state, tx, example_oracle) == 0
        assert gain(LP, example_oracle, example_state, s2) == 0

    def test_partial_lp(self, example_oracle):
        s = State(
            AtomicLedger({1: {0: 50, 1: 50}}),
            MintedLedger({0: {POOL: 12}, 1: {POOL: 6}}),
            AmmSet({POOL: (18, 6)}),
        )
        tx = Swap(1, 1, 0, 6)
        s2 = apply_swap(s, tx)
        expected = (Fraction(9) * 3 - 6 * 4) * (1 - Fraction(6, 18))
        assert swap_gain(s, tx, example_oracle) == expected == gain(1, example_oracle, s, s2)

    def test_matches_state_difference_on_random_swaps(self):
        rng = random.Random(7)
        checked = 0
        for seed in range(40):
            cfg = GenConfig(seed=seed, n_steps=20)
            for s in gen_states(cfg)[::4]:
                tx = sample_swap(rng, s, cfg)
                if tx is None:
                    continue
                o = random_oracle(rng, s.tokens())
                s2 = apply_swap(s, tx)
                assert swap_gain(s, tx, o) == gain(tx.account, o, s, s2)
                assert sum(gain(a, o, s, s2) for a in s.accounts() | s2.accounts()) == 0
                checked += 1
        assert checked > 100
