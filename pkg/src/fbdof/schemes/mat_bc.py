"""Retrospective-alignment broadcast over K antennas with delayed CSI.

Order-j symbols are wanted by every receiver of a j-subset. A phase-j slot
for subset S sends K - j + 1 of S's order-j symbols through a random
precoder; each of the K - j receivers outside S overhears one equation that
all of S would like and that it already knows. After phase j, each
(j + 1)-subset collects j + 1 such overheard equations per round (one per
j-subset it contains) and compresses them into j order-(j + 1) symbols with
a random j x (j + 1) combination. A member knows exactly one of the raw
equations, so the j combinations hand it the other j.

Writing m_j for slots per j-subset, the flows are n_1 = K symbols per
receiver per round, m_j = n_j / (K - j + 1) and n_{j+1} = j * m_j. The
replication factor is the least integer making every m_j integral.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from ..analysis import mat_dof
from ..channel_env import NetworkConfig
from ..complexla import haar_isometry
from ..errors import ConfigError, DemandMismatchError
from ..ledger import LinExpr, combine, lin_map


@dataclass(frozen=True)
class MatPlan:
    K: int
    replication: int
    rounds: tuple
    slots_per_phase: tuple
    total_slots: int
    total_order1_symbols: int
    dof: Fraction

    def demand(self):
        """Order-1 symbols each receiver must supply."""
        return self.K * self.rounds[0]


def mat_plan(K):
    """Integral schedule for the K-receiver broadcast block."""
    if K < 1:
        raise ConfigError("K must be positive")
    m = [Fraction(1)]
    for j in range(1, K):
        m.append(j * m[-1] / (K - j))
    rep = 1
    for x in m:
        rep = rep * x.denominator // math.gcd(rep, x.denominator)
    rounds = tuple(int(x * rep) for x in m)
    slots = tuple(math.comb(K, j + 1) * rounds[j] for j in range(K))
    total = sum(slots)
    symbols = K * K * rounds[0]
    plan = MatPlan(K, rep, rounds, slots, total, symbols, Fraction(symbols, total))
    assert plan.dof == mat_dof(K)
    return plan


def mat_config(K, power=1.0, noiseless=False):
    """Single K-antenna transmitter, K single-antenna receivers, delayed CSI."""
    return NetworkConfig(num_tx=1, num_rx=K, tx_antennas=K, rx_antennas=1,
                         feedback="none", csi_at_tx="delayed",
                         power=power, noiseless=noiseless)


def run_mat_phases(env, plan, pools, rng, emit, raw_of, direct_first=False,
                   after_phase=None, phase_prefix=""):
    """Run every broadcast phase over the given order-1 pools.

    ``pools[t]`` lists receiver t's order-1 symbols as the transmitter side
    knows them. ``emit(signals, phase)`` puts one antenna signal per virtual
    antenna on the air and returns the slot index; ``raw_of(q, slot)``
    returns what receiver q overheard in ``slot``, as known to the
    transmitter side. With ``direct_first`` the phase-1 precoder is the
    identity, so symbol i of each batch goes out on antenna i.

    Returns per-phase statistics used by the conservation checks.
    """
    K = plan.K
    stock = {frozenset([t]): list(pools[t]) for t in range(K)}
    for t in range(K):
        if len(stock[frozenset([t])]) != plan.demand():
            raise DemandMismatchError(
                f"receiver {t} supplies {len(pools[t])} symbols, schedule needs {plan.demand()}")
    stats = []
    for j in range(1, K + 1):
        width = K - j + 1
        rounds = plan.rounds[j - 1]
        raws = {}
        slots_used = 0
        for subset in combinations(range(K), j):
            key = frozenset(subset)
            syms = stock.pop(key)
            if len(syms) != width * rounds:
                raise DemandMismatchError(f"subset {subset} holds {len(syms)} order-{j} symbols")
            outsiders = [q for q in range(K) if q not in key]
            for r in range(rounds):
                batch = syms[r * width:(r + 1) * width]
                if j == 1 and direct_first:
                    sig = list(batch)
                else:
                    sig = lin_map(haar_isometry(width, width, rng), batch)
                slot = emit(sig + [LinExpr()] * (K - width), f"{phase_prefix}{j}")
                slots_used += 1
                heard = [raw_of(q, slot) for q in outsiders]
                assert len(heard) == K - j
                for q, e in zip(outsiders, heard):
                    raws.setdefault((key, q), []).append(e)
        if slots_used != plan.slots_per_phase[j - 1]:
            raise AssertionError(f"phase {j} used {slots_used} slots, planned "
                                 f"{plan.slots_per_phase[j - 1]}")
        made = 0
        if j < K:
            for sup in combinations(range(K), j + 1):
                sup_key = frozenset(sup)
                out = []
                for r in range(rounds):
                    group = [raws[(sup_key - {q}, q)][r] for q in sup]
                    assert len(group) == j + 1
                    out.extend(lin_map(haar_isometry(j, j + 1, rng), group))
                stock[sup_key] = out
                made += len(out)
        stats.append({"phase": j, "slots": slots_used, "raws": sum(map(len, raws.values())),
                      "next_order_symbols": made})
        if after_phase is not None:
            after_phase(j)
    return stats


def run_mat(env, K, rng, symbols=None):
    """Standalone broadcast run with fresh symbols (or caller-supplied ones).

    Overheard equations are rebuilt at the transmitter from its own signals
    and the delayed channel draw, since there is no output feedback.
    """
    cfg = env.config
    if (cfg.num_tx, cfg.num_rx, cfg.tx_antennas, cfg.rx_antennas) != (1, K, K, 1):
        raise ConfigError(f"broadcast block needs one {K}-antenna transmitter and {K} receivers")
    plan = mat_plan(K)
    if symbols is None:
        symbols = [[LinExpr.atom(env.new_symbol(0, t, f"b{t}[{i}]").id)
                    for i in range(plan.demand())] for t in range(K)]

    def emit(sig, phase):
        env.advance_slot([env.normalize(sig)], phase=phase)
        return env.current_slot - 1

    def raw_of(q, slot):
        h = env.csi(0, slot)[q, 0, 0]
        return combine(h, env.own(0, slot))

    stats = run_mat_phases(env, plan, symbols, rng, emit, raw_of)
    assert env.current_slot == plan.total_slots
    return env.transcript("mat_bc", {"K": K}, plan.dof,
                          meta={"phase_lengths": list(plan.slots_per_phase),
                                "replication": plan.replication, "phase_stats": stats})
