"""Complete record of one scheme run, its serialization, and the causality audit.

Serialized form is JSON Lines. The first line is a header record::

    {"record": "header", "scheme": ..., "params": {...}, "config": {...},
     "predicted": "num/den", "meta": {...}, "atoms": [[id, kind, node, slot,
     antenna, intended_rx, power, label], ...]}

followed by one record per slot::

    {"record": "slot", "slot": t, "phase": "...",
     "transmitted": [[expr, ...] per antenna] per transmitter,
     "channels": [[re, im], ...] flattened (rx, tx, rx_ant, tx_ant),
     "received": [[expr, ...] per antenna] per receiver}

and finally one record per logged transmitter access::

    {"record": "access", "tx": k, "kind": "fb"|"csi", "slot": s, "rx": r, "at": t}

An ``expr`` is ``[[atom_id, re, im], ...]``.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .ledger import INFO, NOISE, LinExpr, SourceAtom


@dataclass
class SlotRecord:
    index: int
    phase: str
    transmitted: list
    channels: np.ndarray
    received: list


@dataclass(frozen=True)
class Access:
    """One encoder-side read of feedback (``fb``) or channel state (``csi``)."""

    tx: int
    kind: str
    slot: int
    rx: Optional[int]
    at: int


@dataclass
class Transcript:
    scheme: str
    params: dict
    config: "object"
    atoms: list
    slots: list
    access_log: list = field(default_factory=list)
    knowledge: dict = field(default_factory=dict)
    predicted: Optional[Fraction] = None
    meta: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def n_slots(self):
        return len(self.slots)

    @property
    def info_atoms(self):
        return [a for a in self.atoms if a.kind == INFO]

    @property
    def n_symbols(self):
        return len(self.info_atoms)

    @property
    def ratio(self):
        return Fraction(self.n_symbols, self.n_slots)

    @property
    def noiseless(self):
        return bool(self.config.noiseless)

    def atom(self, atom_id):
        return self.atoms[atom_id]

    def desired(self, rx):
        return [a.id for a in self.atoms if a.kind == INFO and a.intended_rx == rx]

    def observations(self, rx):
        out = []
        for rec in self.slots:
            out.extend(rec.received[rx])
        return out

    def message_counts(self):
        """Number of symbols per (transmitter, receiver) message."""
        counts = {}
        for a in self.info_atoms:
            key = (a.node, a.intended_rx)
            counts[key] = counts.get(key, 0) + 1
        return counts

    def without_slots(self, indices):
        """Copy with the given slot indices removed (for corruption tests)."""
        drop = set(indices)
        kept = [rec for rec in self.slots if rec.index not in drop]
        return Transcript(self.scheme, dict(self.params), self.config, self.atoms, kept,
                          list(self.access_log), self.knowledge, self.predicted,
                          dict(self.meta), self.extras)

    def phase_slots(self, phase):
        return [rec.index for rec in self.slots if rec.phase == phase]

    # serialization

    def to_jsonl(self, fp):
        header = {
            "record": "header",
            "scheme": self.scheme,
            "params": self.params,
            "config": self.config.to_dict(),
            "predicted": _frac(self.predicted),
            "meta": self.meta,
            "atoms": [[a.id, a.kind, a.node, a.slot, a.antenna, a.intended_rx, a.power, a.label]
                      for a in self.atoms],
        }
        fp.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in self.slots:
            row = {
                "record": "slot",
                "slot": rec.index,
                "phase": rec.phase,
                "transmitted": [[_expr(e) for e in tx] for tx in rec.transmitted],
                "channels": [[float(z.real), float(z.imag)] for z in rec.channels.ravel()],
                "channel_shape": list(rec.channels.shape),
                "received": [[_expr(e) for e in rx] for rx in rec.received],
            }
            fp.write(json.dumps(row, sort_keys=True) + "\n")
        for acc in self.access_log:
            fp.write(json.dumps({"record": "access", "tx": acc.tx, "kind": acc.kind,
                                 "slot": acc.slot, "rx": acc.rx, "at": acc.at},
                                sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, fp):
        from .channel_env import NetworkConfig

        header = None
        slots, log = [], []
        for line in fp:
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec["record"]
            if kind == "header":
                header = rec
            elif kind == "slot":
                ch = np.array([complex(re, im) for re, im in rec["channels"]],
                              dtype=np.complex128).reshape(rec["channel_shape"])
                slots.append(SlotRecord(
                    rec["slot"], rec["phase"],
                    [[_unexpr(e) for e in tx] for tx in rec["transmitted"]],
                    ch,
                    [[_unexpr(e) for e in rx] for rx in rec["received"]]))
            elif kind == "access":
                log.append(Access(rec["tx"], rec["kind"], rec["slot"], rec["rx"], rec["at"]))
        if header is None:
            raise ValueError("transcript has no header record")
        atoms = [SourceAtom(*row) for row in header["atoms"]]
        pred = Fraction(header["predicted"]) if header["predicted"] is not None else None
        return cls(header["scheme"], header["params"],
                   NetworkConfig.from_dict(header["config"]), atoms, slots, log,
                   predicted=pred, meta=header["meta"])


def _frac(x):
    return None if x is None else f"{x.numerator}/{x.denominator}"


def _expr(e):
    return [[int(i), float(c.real), float(c.imag)] for i, c in zip(e.ids, e.coefs)]


def _unexpr(rows):
    if not rows:
        return LinExpr()
    ids = np.array([r[0] for r in rows], dtype=np.int64)
    coefs = np.array([complex(r[1], r[2]) for r in rows], dtype=np.complex128)
    return LinExpr(ids, coefs)


def audit_causality(transcript, own_feedback_only=False, allow_csi=True):
    """Replay a transcript and list every causality violation found.

    Two independent checks run:

    * access log: each feedback/CSI read happened strictly after the slot it
      refers to, along an edge the network actually has;
    * atom support: every atom in a transmission at slot ``t`` is the
      transmitter's own message or a noise/symbol atom it could have seen
      through feedback from slots ``< t``.

    ``own_feedback_only`` and ``allow_csi=False`` tighten both checks to the
    partial-feedback, no-CSI setting.
    """
    cfg = transcript.config
    edges = cfg.feedback_edges()
    if own_feedback_only:
        edges = {(r, t) for (r, t) in edges if r == t}
    csi_ok = allow_csi and cfg.csi_at_tx == "delayed"
    problems = []

    for acc in transcript.access_log:
        if acc.slot >= acc.at:
            problems.append(f"tx{acc.tx} read {acc.kind} of slot {acc.slot} at slot {acc.at}")
        if acc.kind == "fb" and (acc.rx, acc.tx) not in edges:
            problems.append(f"tx{acc.tx} read feedback of rx{acc.rx} without a link")
        if acc.kind == "csi" and not csi_ok:
            problems.append(f"tx{acc.tx} read CSI of slot {acc.slot}")

    atoms = transcript.atoms
    seen = {k: set() for k in range(cfg.num_tx)}
    for rec in transcript.slots:
        t = rec.index
        for k, tx_exprs in enumerate(rec.transmitted):
            for ant, e in enumerate(tx_exprs):
                for aid in e.ids:
                    a = atoms[int(aid)]
                    if a.kind == INFO and a.node == k:
                        continue
                    if a.kind == NOISE and a.slot is not None and a.slot >= t:
                        problems.append(f"tx{k} ant{ant} slot {t} uses noise from slot {a.slot}")
                    elif int(aid) not in seen[k]:
                        problems.append(f"tx{k} ant{ant} slot {t} uses unseen atom {a.label or aid}")
        for (r, k) in edges:
            if k < cfg.num_tx and r < len(rec.received):
                for e in rec.received[r]:
                    seen[k].update(int(i) for i in e.ids)
    return problems
