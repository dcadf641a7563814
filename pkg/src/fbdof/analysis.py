"""Exact DoF accounting, outer bounds, rank verification and rate estimation."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .complexla import logdet_hpd, orth_complement, rank_margin
from .errors import DomainError, ModeError
from .ledger import INFO, NOISE, coefficient_matrix

#: acceptance threshold on min/max singular value of a receiver's system
RANK_THRESHOLD = 1e-6
#: tolerance for "exact" noiseless decoding in floating point
DECODE_RTOL = 1e-6


def harmonic(K):
    return sum((Fraction(1, k) for k in range(1, K + 1)), Fraction(0))


def x2_dof(M, N):
    """Sum DoF of the (M, M, N, N) MIMO X-channel with feedback and delayed CSI."""
    if M < 1 or N < 1:
        raise DomainError("M and N must be positive")
    if 2 * M <= N:
        return Fraction(2 * M)
    if M <= N:
        return Fraction(4 * M * N, 2 * M + N)
    return Fraction(4 * N, 3)


def mat_dof(K):
    """K-antenna MISO broadcast DoF with delayed CSI: K / H_K."""
    return Fraction(K) / harmonic(K)


def kx_global_dof(K):
    return mat_dof(K)


def kx_partial_dof(K):
    return Fraction(2 * K, K + 1)


def kic_dof(K):
    return Fraction(K) / (1 + harmonic(K))


class OuterBound(NamedTuple):
    ok: bool
    slack1: Fraction
    slack2: Fraction


def outer_bound_ok(quad, M, N):
    """Check a DoF quadruple ``(d11, d12, d22, d21)`` against both outer bounds.

    Slack is ``1 - lhs`` for each bound; exact rational arithmetic throughout.
    """
    d11, d12, d22, d21 = (Fraction(d) for d in quad)
    if min(d11, d12, d22, d21) < 0:
        raise DomainError("DoF values must be nonnegative")
    big, small = min(2 * M, 2 * N), min(2 * M, N)
    lhs1 = (d11 + d21) / big + (d22 + d12) / small
    lhs2 = (d11 + d21) / small + (d22 + d12) / big
    s1, s2 = 1 - lhs1, 1 - lhs2
    return OuterBound(s1 >= 0 and s2 >= 0, s1, s2)


def achieved_quadruple(transcript):
    """Per-message DoF ``(d11, d12, d22, d21)`` of a two-user transcript."""
    counts = transcript.message_counts()
    t = transcript.n_slots
    # d_ij: transmitter i -> receiver j, 1-indexed; atoms are 0-indexed
    return tuple(Fraction(counts.get((i - 1, j - 1), 0), t)
                 for i, j in ((1, 1), (1, 2), (2, 2), (2, 1)))


@dataclass
class ReceiverSystem:
    """A receiver's observations after zero-forcing its undesired symbols.

    ``signal`` maps desired symbols to effective observations; ``noise`` maps
    noise atoms; ``combiner`` is the orthonormal projector applied.
    """

    rx: int
    desired: list
    signal: np.ndarray
    noise: np.ndarray
    noise_ids: list
    combiner: np.ndarray
    raw_desired: np.ndarray
    raw_undesired: np.ndarray
    undesired: list


def receiver_system(transcript, rx):
    """Stack receiver ``rx``'s observations and cancel everything it does not want.

    Undesired information symbols are removed by projecting onto the
    orthogonal complement of their coefficient span; this is the most general
    linear cancellation of known and interfering quantities, and reduces to
    subtracting the receiver's own past outputs whenever those carry the
    interference. Rows are first scaled to unit coefficient norm, which is
    invertible and so changes neither decodability nor rates.
    """
    obs = transcript.observations(rx)
    desired = transcript.desired(rx)
    atoms = transcript.atoms
    present = set()
    for e in obs:
        present.update(int(i) for i in e.ids)
    dset = set(desired)
    undesired = sorted(i for i in present if atoms[i].kind == INFO and i not in dset)
    noise_ids = sorted(i for i in present if atoms[i].kind == NOISE)
    a_d, rest = coefficient_matrix(obs, desired)
    a_u, rest = coefficient_matrix(rest, undesired)
    b, _ = coefficient_matrix(rest, noise_ids)
    # unit-norm rows: per-slot power gains say nothing about decodability
    norms = np.sqrt(np.sum(np.abs(a_d) ** 2, axis=1) + np.sum(np.abs(a_u) ** 2, axis=1))
    scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)[:, None]
    a_d, a_u, b = a_d * scale, a_u * scale, b * scale
    q = orth_complement(a_u) if len(obs) else np.zeros((0, 0), dtype=np.complex128)
    qh = q.conj().T
    return ReceiverSystem(rx, desired, qh @ a_d, qh @ b, noise_ids, q, a_d, a_u, undesired)


@dataclass
class ReceiverVerdict:
    rx: int
    n_desired: int
    rows: int
    margin: float
    rank_ok: bool
    decode_ok: Optional[bool] = None

    @property
    def ok(self):
        return self.rank_ok and self.decode_ok is not False


def verify_decodability(transcript, threshold=RANK_THRESHOLD, rng=None):
    """Per-receiver verdict on generic decodability of a finished transcript.

    The effective system must be square or tall with min/max singular value
    above ``threshold``. For noiseless transcripts, random ground-truth
    symbol values are pushed through the ledger, solved for, and compared.
    """
    if transcript.n_slots == 0:
        raise ValueError("transcript has no slots")
    if rng is None:
        rng = np.random.default_rng(0)
    values = None
    if transcript.noiseless:
        n = len(transcript.atoms)
        values = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    verdicts = []
    for rx in range(transcript.config.num_rx):
        sysm = receiver_system(transcript, rx)
        nd = len(sysm.desired)
        if nd == 0:
            verdicts.append(ReceiverVerdict(rx, 0, sysm.signal.shape[0], 1.0, True,
                                            True if values is not None else None))
            continue
        rows = sysm.signal.shape[0]
        margin = rank_margin(sysm.signal) if rows else 0.0
        rank_ok = rows >= nd and margin > threshold
        decode_ok = None
        if values is not None:
            decode_ok = False
            if rank_ok:
                y = sysm.raw_desired @ values[sysm.desired]
                if sysm.undesired:
                    y = y + sysm.raw_undesired @ values[sysm.undesired]
                est, *_ = np.linalg.lstsq(sysm.signal, sysm.combiner.conj().T @ y, rcond=None)
                truth = values[sysm.desired]
                err = np.max(np.abs(est - truth))
                decode_ok = bool(err <= DECODE_RTOL * max(1.0, float(np.max(np.abs(truth)))))
        verdicts.append(ReceiverVerdict(rx, nd, rows, margin, rank_ok, decode_ok))
    return verdicts


def achievable_rate(transcript):
    """Gaussian-input achievable rate of each receiver, in bits per slot.

    Undesired symbols are zero-forced; every noise atom, including noise
    forwarded through feedback, is treated as Gaussian with its exact ledger
    covariance.
    """
    if transcript.noiseless:
        raise ModeError("achievable_rate needs a transcript with noise atoms")
    powers = np.array([a.power for a in transcript.atoms])
    rates = []
    for rx in range(transcript.config.num_rx):
        sysm = receiver_system(transcript, rx)
        if not sysm.desired or sysm.signal.shape[0] == 0:
            rates.append(0.0)
            continue
        p = powers[sysm.desired]
        sig = (sysm.signal * p) @ sysm.signal.conj().T
        noise = sysm.noise @ sysm.noise.conj().T
        noise = 0.5 * (noise + noise.conj().T)
        total = 0.5 * (noise + sig + (noise + sig).conj().T)
        nats = logdet_hpd(total) - logdet_hpd(noise)
        rates.append(max(nats, 0.0) / np.log(2.0) / transcript.n_slots)
    return rates


def fit_slope(p_grid, rates):
    """Least-squares slope of rate against log2(P) over the top half of the grid."""
    p = np.asarray(p_grid, dtype=float)
    r = np.asarray(rates, dtype=float)
    if p.size < 2:
        raise ValueError("need at least two grid points")
    if np.any(np.diff(p) <= 0):
        raise ValueError("power grid must be strictly ascending")
    lo = p.size // 2 if p.size >= 4 else 0
    x = np.log2(p[lo:])
    return float(np.polyfit(x, r[lo:], 1)[0])


def dof_slope(runner, p_grid, trials, master_seed=0, mapper=map):
    """Estimate the sum DoF of a scheme from its finite-SNR rate curve.

    ``runner(power, trial, master_seed)`` must return a noisy transcript and
    use the same channel draws for every power. Returns ``(slope, mean_rates)``.
    """
    p_grid = list(p_grid)
    if len(p_grid) < 2:
        raise ValueError("need at least two grid points")
    jobs = [(runner, p_grid, t, master_seed) for t in range(trials)]
    per_trial = list(mapper(_trial_rates, jobs))
    mean = np.mean(np.asarray(per_trial), axis=0)
    return fit_slope(p_grid, mean), mean


def _trial_rates(job):
    runner, p_grid, trial, seed = job
    return [sum(achievable_rate(runner(p, trial, seed))) for p in p_grid]


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass
class DofReport:
    scheme: str
    params: dict
    symbols: int
    slots: int
    predicted: Fraction
    rank_pass: Optional[float] = None
    slope: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self):
        return Fraction(self.symbols, self.slots)

    @property
    def exact(self):
        return self.ratio == self.predicted

    def as_dict(self):
        d = {
            "scheme": self.scheme,
            "params": dict(self.params),
            "symbols": self.symbols,
            "slots": self.slots,
            "ratio": frac_str(self.ratio),
            "predicted": frac_str(self.predicted),
            "rank_pass": self.rank_pass,
            "slope": None if self.slope is None else float(f"{self.slope:.12g}"),
        }
        d.update(self.extra)
        return d


def frac_str(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def dof_report(transcript, rank_pass=None, slope=None):
    return DofReport(transcript.scheme, dict(transcript.params), transcript.n_symbols,
                     transcript.n_slots, transcript.predicted, rank_pass, slope)


__all__ = [
    "RANK_THRESHOLD", "x2_dof", "mat_dof", "kx_global_dof", "kx_partial_dof",
    "kic_dof", "harmonic", "outer_bound_ok", "achieved_quadruple", "receiver_system",
    "verify_decodability", "achievable_rate", "fit_slope", "dof_slope", "DofReport",
    "dof_report", "frac_str", "db_to_linear",
]
