"""Time-slotted fast-fading channel with output feedback and delayed CSI."""

from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

from .errors import CausalityError, ConfigError, DimensionError, PowerConstraintError
from .ledger import INFO, NOISE, KnowledgeSet, LinExpr, SourceAtom, lin_map
from .transcript import Access, SlotRecord, Transcript

FEEDBACK_MODES = ("global", "partial", "none")
CSI_MODES = ("delayed", "none")
POWER_RTOL = 1e-9


@dataclass(frozen=True)
class NetworkConfig:
    """Network topology and side-information assumptions.

    ``feedback`` is ``"global"``, ``"partial"`` (receiver k to transmitter k),
    ``"none"`` or a tuple of ``(rx, tx)`` edges.
    """

    num_tx: int
    num_rx: int
    tx_antennas: int = 1
    rx_antennas: int = 1
    feedback: Union[str, tuple] = "partial"
    csi_at_tx: str = "delayed"
    power: float = 1.0
    noiseless: bool = False

    def __post_init__(self):
        for name in ("num_tx", "num_rx", "tx_antennas", "rx_antennas"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if isinstance(self.feedback, str):
            if self.feedback not in FEEDBACK_MODES:
                raise ConfigError(f"unknown feedback mode {self.feedback!r}")
            if self.feedback == "partial" and self.num_tx != self.num_rx:
                raise ConfigError("partial feedback needs num_tx == num_rx")
        else:
            edges = tuple(tuple(int(v) for v in e) for e in self.feedback)
            for r, t in edges:
                if not (0 <= r < self.num_rx and 0 <= t < self.num_tx):
                    raise ConfigError(f"feedback edge {(r, t)} out of range")
            object.__setattr__(self, "feedback", edges)
        if self.csi_at_tx not in CSI_MODES:
            raise ConfigError(f"unknown CSI mode {self.csi_at_tx!r}")
        if not self.power > 0:
            raise ConfigError("power must be positive")

    def feedback_edges(self):
        if self.feedback == "global":
            return {(r, t) for r in range(self.num_rx) for t in range(self.num_tx)}
        if self.feedback == "partial":
            return {(k, k) for k in range(self.num_tx)}
        if self.feedback == "none":
            return set()
        return set(self.feedback)

    def to_dict(self):
        d = asdict(self)
        if not isinstance(self.feedback, str):
            d["feedback"] = [list(e) for e in self.feedback]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if not isinstance(d.get("feedback", "partial"), str):
            d["feedback"] = tuple(tuple(e) for e in d["feedback"])
        return cls(**d)


class ChannelEnv:
    """One trial's physical layer.

    The environment owns the atom registry, samples a fresh channel draw per
    slot, appends fresh noise atoms to every received antenna, delivers
    feedback and delayed CSI at the end of each slot, and logs every encoder
    read. With ``strict=True`` an out-of-order read raises
    :class:`CausalityError` immediately; the log is audited either way.
    """

    def __init__(self, config, rng, strict=True):
        self.config = config
        self.rng = rng
        self.strict = strict
        self.atoms = []
        self._powers = []
        self.slots = []
        self.access_log = []
        self.knowledge = {k: KnowledgeSet(k) for k in range(config.num_tx)}
        self._edges = config.feedback_edges()
        self._csi_archive = {k: {} for k in range(config.num_tx)}

    @property
    def current_slot(self):
        """Index of the next slot to be executed."""
        return len(self.slots)

    # atoms

    def _new_atom(self, **kw):
        atom = SourceAtom(id=len(self.atoms), **kw)
        self.atoms.append(atom)
        self._powers.append(atom.power)
        return atom

    def new_symbol(self, tx, rx, label="", slot=None, antenna=None, power=1.0):
        """Register an information symbol of transmitter ``tx`` for receiver ``rx``."""
        atom = self._new_atom(kind=INFO, node=tx, slot=slot, antenna=antenna,
                              intended_rx=rx, power=power, label=label)
        self.knowledge[tx].add("own", 0, LinExpr.atom(atom.id), ("msg", atom.id))
        return atom

    def expr_power(self, expr):
        if expr.is_zero():
            return 0.0
        p = np.asarray(self._powers)[expr.ids]
        return float(np.sum(np.abs(expr.coefs) ** 2 * p))

    def normalize(self, exprs):
        """Scale one transmitter's antenna signals to split the power budget.

        Active (nonzero) antennas share ``P`` equally; each is scaled so its
        share binds exactly.
        """
        active = [i for i, e in enumerate(exprs) if not e.is_zero()]
        if not active:
            return [LinExpr() for _ in exprs]
        share = self.config.power / len(active)
        out = []
        for e in exprs:
            p = self.expr_power(e)
            out.append(e if p == 0.0 else e * np.sqrt(share / p))
        return out

    # slots

    def advance_slot(self, transmitted, phase=""):
        """Run one channel use and return its :class:`SlotRecord`.

        ``transmitted[k][b]`` is transmitter k's expression on antenna b;
        ``None`` means a silent antenna.
        """
        cfg = self.config
        if len(transmitted) != cfg.num_tx:
            raise DimensionError(f"{len(transmitted)} transmitters, expected {cfg.num_tx}")
        flat = []
        tx_lists = []
        for k, ants in enumerate(transmitted):
            if len(ants) != cfg.tx_antennas:
                raise DimensionError(f"tx{k} drives {len(ants)} antennas, has {cfg.tx_antennas}")
            ants = [LinExpr() if e is None else e for e in ants]
            total = sum(self.expr_power(e) for e in ants)
            if total > cfg.power * (1.0 + POWER_RTOL):
                raise PowerConstraintError(f"tx{k} power {total:.6g} exceeds {cfg.power:.6g}")
            tx_lists.append(ants)
            flat.extend(ants)

        t = self.current_slot
        raw = self.rng.standard_normal(
            (cfg.num_rx, cfg.num_tx, cfg.rx_antennas, cfg.tx_antennas, 2))
        h = (raw[..., 0] + 1j * raw[..., 1]) / np.sqrt(2.0)
        # rows: (rx, rx_ant); cols: (tx, tx_ant)
        big = h.transpose(0, 2, 1, 3).reshape(cfg.num_rx * cfg.rx_antennas,
                                              cfg.num_tx * cfg.tx_antennas)
        rows = lin_map(big, flat)
        received = []
        for i in range(cfg.num_rx):
            ants = rows[i * cfg.rx_antennas:(i + 1) * cfg.rx_antennas]
            if not cfg.noiseless:
                ants = [e.with_new_atom(self._new_atom(kind=NOISE, node=i, slot=t, antenna=a,
                                                       label=f"z{i}[{t},{a}]").id)
                        for a, e in enumerate(ants)]
            received.append(ants)
        rec = SlotRecord(t, phase, tx_lists, h, received)
        self.slots.append(rec)
        for k in range(cfg.num_tx):
            for b, e in enumerate(tx_lists[k]):
                if not e.is_zero():
                    self.knowledge[k].add("own", t, e, ("tx", t, b))
        self.deliver_feedback(t)
        self.deliver_csi(t)
        return rec

    def deliver_feedback(self, t):
        """Hand slot ``t``'s received signals to the transmitters linked to them.

        Items become usable from slot ``t + 1``. Returns the new items per
        transmitter.
        """
        rec = self.slots[t]
        fresh = {k: [] for k in range(self.config.num_tx)}
        for (r, k) in sorted(self._edges):
            for a, e in enumerate(rec.received[r]):
                self.knowledge[k].add("feedback", t + 1, e, ("fb", r, t, a))
                fresh[k].append(e)
        return fresh

    def deliver_csi(self, t):
        """Archive slot ``t``'s channel draw at every transmitter (delayed CSI only)."""
        if self.config.csi_at_tx != "delayed":
            return {}
        h = self.slots[t].channels
        for k in range(self.config.num_tx):
            self._csi_archive[k][t] = h
        return {k: h for k in range(self.config.num_tx)}

    # encoder-side reads

    def _violation(self, msg):
        if self.strict:
            raise CausalityError(msg)

    def feedback(self, tx, rx, slot):
        """Receiver ``rx``'s output of ``slot`` as seen by transmitter ``tx``."""
        at = self.current_slot
        if slot >= at:
            self._violation(f"tx{tx} asked for feedback of slot {slot} at slot {at}")
        if (rx, tx) not in self._edges:
            self._violation(f"tx{tx} has no feedback link from rx{rx}")
        self.access_log.append(Access(tx, "fb", slot, rx, at))
        return list(self.slots[slot].received[rx])

    def csi(self, tx, slot):
        """Channel draw of ``slot`` as known to transmitter ``tx``.

        Array of shape ``(num_rx, num_tx, rx_antennas, tx_antennas)``.
        """
        at = self.current_slot
        if slot >= at:
            self._violation(f"tx{tx} asked for CSI of slot {slot} at slot {at}")
        if self.config.csi_at_tx != "delayed":
            self._violation(f"tx{tx} has no CSI")
        self.access_log.append(Access(tx, "csi", slot, None, at))
        if slot in self._csi_archive[tx]:
            return self._csi_archive[tx][slot]
        return self.slots[slot].channels

    def own(self, tx, slot):
        """What transmitter ``tx`` itself sent in ``slot``."""
        return list(self.slots[slot].transmitted[tx])

    def remember(self, tx, label, expr, source=()):
        self.knowledge[tx].add(label, self.current_slot, expr, source)

    def transcript(self, scheme, params, predicted=None, meta=None, extras=None):
        return Transcript(scheme, dict(params), self.config, list(self.atoms), list(self.slots),
                          list(self.access_log), self.knowledge, predicted,
                          dict(meta or {}), dict(extras or {}))


def split_seed(master_seed, trial):
    """Seed sequence for one trial: ``SeedSequence(master_seed, spawn_key=(trial,))``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(trial),))


def trial_rngs(master_seed, trial):
    """Independent generators ``(channel, scheme, values)`` for one trial."""
    children = split_seed(master_seed, trial).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)
