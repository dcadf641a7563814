"""Two-user (M, M, N, N) MIMO X-channel with output feedback and delayed CSI.

Three regimes, chosen by :func:`select_regime`:

* ``A`` (2M <= N): both transmitters serve receiver 1 in one slot, a MIMO
  multiple-access channel.
* ``B`` (N <= 2M <= 2N): two fresh-symbol phases of N slots each, after
  which both transmitters hold the same side information; a third phase of
  2M - N slots broadcasts element-wise sums of the two side-information
  vectors.
* ``C`` (N <= M): two fresh slots plus one slot in which each transmitter
  forwards its own receiver's output from the slot meant for the other
  receiver.

Receivers and transmitters are 0-indexed: transmitter 0 holds messages
``u11``/``v12``, transmitter 1 holds ``u21``/``v22``; receiver 0 wants the
``u`` symbols and receiver 1 the ``v`` symbols.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..analysis import x2_dof
from ..channel_env import NetworkConfig
from ..complexla import pseudo_inverse
from ..errors import ConfigError, RegimeError
from ..ledger import LinExpr, lin_map


@dataclass(frozen=True)
class X2Plan:
    regime: str
    M: int
    N: int
    phase_lengths: tuple
    symbols_per_message: int
    predicted_dof: Fraction

    @property
    def total_slots(self):
        return sum(self.phase_lengths)


@dataclass
class SideInfoSet:
    """Phase-3 side information, in both transmitters' versions.

    ``u_native`` is what transmitter 1 got from receiver 1 through feedback;
    ``u_rebuilt`` is transmitter 0's reconstruction of it. Likewise for ``v``
    with the roles swapped. ``placement[l]`` is ``(tx, antenna, phase3_slot)``.
    """

    u_native: list
    u_rebuilt: list
    v_native: list
    v_rebuilt: list
    placement: list


def select_regime(M, N):
    """Pick the regime for (M, N); boundaries resolve to A, then B, then C."""
    if M < 1 or N < 1:
        raise ConfigError("M and N must be positive")
    if 2 * M <= N:
        return X2Plan("A", M, N, (1,), M, x2_dof(M, N))
    if M <= N:
        return X2Plan("B", M, N, (N, N, 2 * M - N), M * N, x2_dof(M, N))
    return X2Plan("C", M, N, (1, 1, 1), N, x2_dof(M, N))


def x2_config(M, N, power=1.0, noiseless=False):
    """Network configuration used for every regime.

    Partial feedback (receiver k to transmitter k) and delayed CSI; regime C
    runs without CSI at the transmitters.
    """
    regime = select_regime(M, N).regime
    return NetworkConfig(num_tx=2, num_rx=2, tx_antennas=M, rx_antennas=N,
                         feedback="partial",
                         csi_at_tx="none" if regime == "C" else "delayed",
                         power=power, noiseless=noiseless)


def _check_env(env, M, N, regime):
    cfg = env.config
    if (cfg.num_tx, cfg.num_rx, cfg.tx_antennas, cfg.rx_antennas) != (2, 2, M, N):
        raise ConfigError(f"environment does not match a ({M},{M},{N},{N}) X-channel")
    plan = select_regime(M, N)
    if plan.regime != regime:
        raise RegimeError(f"(M, N) = ({M}, {N}) is regime {plan.regime}, not {regime}")
    return plan


def _fresh(env, tx, rx, name, count, M, first_slot):
    # symbol k sits on antenna k mod M at slot k // M of its phase
    return [env.new_symbol(tx, rx, f"{name}[{k}]", slot=first_slot + k // M, antenna=k % M)
            for k in range(count)]


def _send_fresh(env, streams, M, slots, phase):
    for s in range(slots):
        tx = []
        for stream in streams:
            tx.append(env.normalize([LinExpr.atom(stream[s * M + b].id) for b in range(M)]))
        env.advance_slot(tx, phase=phase)


def run_regime_a(env, M, N, rng=None):
    """One slot: both transmitters send M fresh symbols each to receiver 0."""
    plan = _check_env(env, M, N, "A")
    u11 = _fresh(env, 0, 0, "u11", M, M, 0)
    u21 = _fresh(env, 1, 0, "u21", M, M, 0)
    _send_fresh(env, [u11, u21], M, 1, "1")
    return env.transcript("x2_mimo", {"M": M, "N": N}, plan.predicted_dof,
                          meta={"regime": "A", "phase_lengths": list(plan.phase_lengths)})


def _rebuild_other_output(env, me, other, own_rx, target_rx, slots):
    """Transmitter ``me`` rebuilds receiver ``target_rx``'s outputs.

    For each slot: subtract its own contribution from its receiver's fed-back
    output, least-squares-decode the other transmitter's signal, and
    re-synthesize the target receiver's noiseless output with delayed CSI.
    Returns one list of N expressions per slot.
    """
    out = []
    for s in slots:
        y = env.feedback(me, own_rx, s)
        h = env.csi(me, s)
        x_me = env.own(me, s)
        mine = lin_map(h[own_rx, me], x_me)
        resid = [a - b for a, b in zip(y, mine)]
        x_other = lin_map(pseudo_inverse(h[own_rx, other]), resid)
        rebuilt = lin_map(np.hstack([h[target_rx, me], h[target_rx, other]]), x_me + x_other)
        for e in rebuilt:
            env.remember(me, "reconstruction", e, ("rebuild", target_rx, s))
        out.append(rebuilt)
    return out


def side_info_indices(M, N):
    """(phase slot, receive antenna) of each side-information component.

    Each slot of a fresh phase carries 2M symbols and gives the intended
    receiver N equations in them, so the 2M - N missing equations must come
    from that same slot: the first 2M - N antennas of every slot, slot-major.
    """
    return [(s, a) for s in range(N) for a in range(2 * M - N)]


def _per_slot_head(per_slot, count):
    return [e for outputs in per_slot for e in outputs[:count]]


def phase3_placement(M, N):
    """Antenna-major placement of the 2MN - N^2 side-information sums.

    Item ``l`` goes to global antenna ``l // S`` at phase-3 slot ``l % S``
    (S = 2M - N), global antennas 0..M-1 being transmitter 0's.
    """
    size = 2 * M * N - N * N
    slots = 2 * M - N
    out = []
    for l in range(size):
        g, s = divmod(l, slots)
        out.append((0 if g < M else 1, g % M, s))
    return out


def run_regime_b(env, M, N, rng=None):
    """Three-phase side-information scheme for N <= 2M <= 2N."""
    plan = _check_env(env, M, N, "B")
    mn = M * N
    size = 2 * mn - N * N
    p3 = 2 * M - N
    assert len(side_info_indices(M, N)) == size
    # structural counting identity: each receiver ends with 2MN equations
    assert N * N + p3 * N == 2 * mn

    u11 = _fresh(env, 0, 0, "u11", mn, M, 0)
    u21 = _fresh(env, 1, 0, "u21", mn, M, 0)
    v12 = _fresh(env, 0, 1, "v12", mn, M, N)
    v22 = _fresh(env, 1, 1, "v22", mn, M, N)

    phase1 = list(range(N))
    _send_fresh(env, [u11, u21], M, N, "1")
    u_native = _per_slot_head([env.feedback(1, 1, s) for s in phase1], p3)
    u_rebuilt = _per_slot_head(_rebuild_other_output(env, 0, 1, 0, 1, phase1), p3)

    phase2 = list(range(N, 2 * N))
    _send_fresh(env, [v12, v22], M, N, "2")
    v_native = _per_slot_head([env.feedback(0, 0, s) for s in phase2], p3)
    v_rebuilt = _per_slot_head(_rebuild_other_output(env, 1, 0, 1, 0, phase2), p3)

    placement = phase3_placement(M, N)
    grid = [[[None] * M for _ in range(2)] for _ in range(p3)]
    for l, (tx, ant, s) in enumerate(placement):
        if tx == 0:
            grid[s][tx][ant] = u_rebuilt[l] + v_native[l]
        else:
            grid[s][tx][ant] = u_native[l] + v_rebuilt[l]
    for s in range(p3):
        tx = [env.normalize([LinExpr() if e is None else e for e in grid[s][k]])
              for k in range(2)]
        env.advance_slot(tx, phase="3")

    side = SideInfoSet(u_native, u_rebuilt, v_native, v_rebuilt, placement)
    meta = {"regime": "B", "phase_lengths": list(plan.phase_lengths),
            "side_info_size": size, "placement": [list(p) for p in placement]}
    return env.transcript("x2_mimo", {"M": M, "N": N}, plan.predicted_dof,
                          meta=meta, extras={"side_info": side})


def run_regime_c(env, M, N, rng=None):
    """Three slots using output feedback only, for N <= M.

    Slot 3 has transmitter 0 forward receiver 0's slot-2 output (useful to
    receiver 1, already known to receiver 0) and transmitter 1 forward
    receiver 1's slot-1 output. Each forwards its own receiver's output, so
    partial feedback suffices and no CSI is read.
    """
    plan = _check_env(env, M, N, "C")
    u11 = _fresh(env, 0, 0, "u11", N, N, 0)
    u21 = _fresh(env, 1, 0, "u21", N, N, 0)
    v12 = _fresh(env, 0, 1, "v12", N, N, 1)
    v22 = _fresh(env, 1, 1, "v22", N, N, 1)
    pad = [LinExpr()] * (M - N)
    for name, (a, b) in (("1", (u11, u21)), ("2", (v12, v22))):
        tx = [env.normalize([LinExpr.atom(x.id) for x in a] + pad),
              env.normalize([LinExpr.atom(x.id) for x in b] + pad)]
        env.advance_slot(tx, phase=name)
    fwd0 = env.feedback(0, 0, 1)
    fwd1 = env.feedback(1, 1, 0)
    env.advance_slot([env.normalize(fwd0 + pad), env.normalize(fwd1 + pad)], phase="3")
    return env.transcript("x2_mimo", {"M": M, "N": N}, plan.predicted_dof,
                          meta={"regime": "C", "phase_lengths": list(plan.phase_lengths)})


def run_x2_mimo(env, M, N, rng=None):
    """Dispatch to the regime's scheme."""
    regime = select_regime(M, N).regime
    return {"A": run_regime_a, "B": run_regime_b, "C": run_regime_c}[regime](env, M, N, rng)
