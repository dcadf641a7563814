"""K-user single-antenna X-channel: global- and partial-feedback schemes.

Symbol ``s{k}{t}`` originates at transmitter k and is meant for receiver t.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from ..analysis import kx_global_dof, kx_partial_dof
from ..channel_env import NetworkConfig
from ..complexla import pseudo_inverse
from ..errors import ConfigError
from ..ledger import LinExpr, lin_map
from .mat_bc import mat_plan, run_mat_phases


@dataclass(frozen=True)
class KxPlan:
    K: int
    mode: str
    phase_lengths: tuple
    total_symbols: int
    predicted_dof: Fraction


def kx_plan(K, mode):
    if mode == "partial":
        if K < 2:
            raise ConfigError("partial-feedback scheme needs K >= 2")
        return KxPlan(K, mode, (K, K * (K - 1) // 2), K * K, kx_partial_dof(K))
    if mode == "global":
        plan = mat_plan(K)
        return KxPlan(K, mode, plan.slots_per_phase, plan.total_order1_symbols, kx_global_dof(K))
    raise ConfigError(f"unknown feedback mode {mode!r}")


def kx_config(K, mode, power=1.0, noiseless=False):
    if mode == "partial":
        return NetworkConfig(K, K, 1, 1, feedback="partial", csi_at_tx="none",
                             power=power, noiseless=noiseless)
    return NetworkConfig(K, K, 1, 1, feedback="global", csi_at_tx="delayed",
                         power=power, noiseless=noiseless)


def _check_env(env, K, feedback):
    cfg = env.config
    if (cfg.num_tx, cfg.num_rx, cfg.tx_antennas, cfg.rx_antennas) != (K, K, 1, 1):
        raise ConfigError(f"environment is not a single-antenna {K}-user network")
    if cfg.feedback != feedback:
        raise ConfigError(f"scheme needs {feedback} feedback, environment has {cfg.feedback!r}")


def _send_single(env, signals, phase):
    """Each transmitter puts its one signal on its single antenna."""
    env.advance_slot([env.normalize([s]) for s in signals], phase=phase)
    return env.current_slot - 1


def run_partial_fb(env, K, rng=None):
    """K^2 symbols in K + K(K-1)/2 slots using receiver-k-to-transmitter-k feedback only.

    Phase 1, slot t: every transmitter sends its symbol for receiver t.
    Phase 2, one slot per pair i < j (lexicographic): transmitter i forwards
    its receiver's slot-j output A_i(j), transmitter j forwards A_j(i), the
    rest stay silent. Receiver i knows A_i(j) already and keeps A_j(i).
    """
    if K < 2:
        raise ConfigError("partial-feedback scheme needs K >= 2")
    _check_env(env, K, "partial")
    plan = kx_plan(K, "partial")
    sym = [[env.new_symbol(k, t, f"s{k}{t}", slot=t) for t in range(K)] for k in range(K)]
    for t in range(K):
        _send_single(env, [LinExpr.atom(sym[k][t].id) for k in range(K)], "1")
    # receiver-side bank of overheard outputs A_j(t), j != t
    bank = {(j, t): env.slots[t].received[j][0] for t in range(K) for j in range(K) if j != t}
    pairs = list(combinations(range(K), 2))
    for i, j in pairs:
        sig = [LinExpr()] * K
        sig[i] = env.feedback(i, i, j)[0]
        sig[j] = env.feedback(j, j, i)[0]
        _send_single(env, sig, "2")
    assert env.current_slot == sum(plan.phase_lengths)
    return env.transcript("kx_partial", {"K": K}, plan.predicted_dof,
                          meta={"phase_lengths": list(plan.phase_lengths),
                                "pairs": [list(p) for p in pairs]},
                          extras={"overheard": bank})


def _decode_slot_symbols(env, tx, slot, K):
    """Transmitter ``tx`` solves slot ``slot``'s K x K system from global feedback."""
    y = [env.feedback(tx, q, slot)[0] for q in range(K)]
    h = env.csi(tx, slot)[:, :, 0, 0]
    return lin_map(pseudo_inverse(h), y)


def run_global_fb(env, K, rng):
    """Global feedback plus delayed CSI turns the transmitters into one K-antenna broadcaster.

    Phase 1 is the broadcast block's first phase with transmitter k sending
    its own symbol. After it every transmitter solves each slot's K x K
    system, recovering all symbols; the remaining phases run over overheard
    equations every transmitter holds through feedback.
    """
    _check_env(env, K, "global")
    if env.config.csi_at_tx != "delayed":
        raise ConfigError("global-feedback scheme needs delayed CSI")
    plan = mat_plan(K)
    pools = [[] for _ in range(K)]
    for r in range(plan.rounds[0]):
        for t in range(K):
            for k in range(K):
                a = env.new_symbol(k, t, f"s{k}{t}[{r}]")
                pools[t].append(LinExpr.atom(a.id))

    decoded = {}

    def after_phase(j):
        if j != 1:
            return
        slots = [rec.index for rec in env.slots if rec.phase == "1"]
        for k in range(K):
            pool = {}
            for s in slots:
                xhat = _decode_slot_symbols(env, k, s, K)
                for b, sent in enumerate(env.slots[s].transmitted):
                    # sent[0] is c * atom; divide the known gain back out
                    aid = int(sent[0].ids[0])
                    est = xhat[b] * (1.0 / complex(sent[0].coefs[0]))
                    pool[aid] = est
                    env.remember(k, "reconstruction", est, ("decode", s, b))
            decoded[k] = pool

    def emit(sig, phase):
        return _send_single(env, sig, phase)

    def raw_of(q, slot):
        heard = [env.feedback(k, q, slot)[0] for k in range(K)]
        return heard[0]

    stats = run_mat_phases(env, plan, pools, rng, emit, raw_of, direct_first=True,
                           after_phase=after_phase)
    assert env.current_slot == plan.total_slots
    return env.transcript("kx_global", {"K": K}, kx_global_dof(K),
                          meta={"phase_lengths": list(plan.slots_per_phase),
                                "replication": plan.replication, "phase_stats": stats},
                          extras={"decoded_pools": decoded})
