"""K-user single-antenna interference channel with global feedback and delayed CSI.

Phase 1 repeats R slots in which every transmitter sends one fresh symbol for
its own receiver. Receiver j sees its symbol plus an interference component
I_j built from the other K - 1 symbols. Every transmitter recovers all
symbols from global feedback and delayed CSI, forms every I_j, and the
broadcast block then delivers each receiver its own R components. R is the
broadcast block's per-receiver demand, so the schedule is integral.
"""

from dataclasses import dataclass

from ..analysis import kic_dof
from ..channel_env import NetworkConfig
from ..complexla import pseudo_inverse
from ..errors import ConfigError
from ..ledger import LinExpr, combine, lin_map
from .kx import _check_env, _send_single
from .mat_bc import mat_plan, run_mat_phases


@dataclass
class InterferenceComponent:
    receiver: int
    slot: int
    expr: LinExpr


def kic_config(K, power=1.0, noiseless=False):
    return NetworkConfig(K, K, 1, 1, feedback="global", csi_at_tx="delayed",
                         power=power, noiseless=noiseless)


def true_interference(transcript, rx, slot):
    """I_j of a phase-1 slot: received signal minus own-symbol and own-noise terms."""
    y = transcript.slots[slot].received[rx][0]
    keep = [i for i, aid in enumerate(y.ids)
            if not (transcript.atoms[int(aid)].kind == "noise"
                    or transcript.atoms[int(aid)].node == rx)]
    return LinExpr(y.ids[keep], y.coefs[keep])


def run_ic_global(env, K, rng):
    if K < 2:
        raise ConfigError("interference-channel scheme needs K >= 2")
    _check_env(env, K, "global")
    if env.config.csi_at_tx != "delayed":
        raise ConfigError("interference-channel scheme needs delayed CSI")
    plan = mat_plan(K)
    rounds = plan.demand()
    syms = [[env.new_symbol(k, k, f"x{k}[{r}]", slot=r) for r in range(rounds)]
            for k in range(K)]
    for r in range(rounds):
        _send_single(env, [LinExpr.atom(syms[k][r].id) for k in range(K)], "1")

    per_tx = []
    for k in range(K):
        comps = [[] for _ in range(K)]
        for r in range(rounds):
            y = [env.feedback(k, q, r)[0] for q in range(K)]
            h = env.csi(k, r)[:, :, 0, 0]
            xhat = lin_map(pseudo_inverse(h), y)
            for j in range(K):
                others = [i for i in range(K) if i != j]
                comp = combine([h[j, i] for i in others], [xhat[i] for i in others])
                env.remember(k, "reconstruction", comp, ("interference", j, r))
                comps[j].append(comp)
        per_tx.append(comps)
    # every transmitter ran the same computation on the same feedback
    for k in range(1, K):
        assert all(a == b for j in range(K) for a, b in zip(per_tx[0][j], per_tx[k][j]))

    def emit(sig, phase):
        return _send_single(env, sig, phase)

    def raw_of(q, slot):
        return [env.feedback(k, q, slot)[0] for k in range(K)][0]

    stats = run_mat_phases(env, plan, per_tx[0], rng, emit, raw_of, phase_prefix="bc")
    assert env.current_slot == rounds + plan.total_slots
    components = {k: [InterferenceComponent(j, r, per_tx[k][j][r])
                      for j in range(K) for r in range(rounds)] for k in range(K)}
    return env.transcript("k_ic", {"K": K}, kic_dof(K),
                          meta={"phase_lengths": [rounds] + list(plan.slots_per_phase),
                                "replication": plan.replication, "phase_stats": stats},
                          extras={"components": components})
