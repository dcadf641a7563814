"""Batch experiment runner: config files, seeded trials, result files.

Config files are flat ``key = value`` text, one key per line, ``#`` starts a
comment. Recognised keys:

=============  ==============================================================
scheme         x2_mimo | kx_partial | kx_global | mat_bc | k_ic
M, N           antenna counts (x2_mimo)
K              number of users (the other schemes)
mode           rank_verify | noiseless_decode | snr_sweep
trials         number of seeded trials, at least 1 (default 100)
master_seed    integer (default 0)
p_grid_db      comma-separated powers in dB, ascending (default 30,40,50,60)
slope_tol      relative slope tolerance for snr_sweep (default 0.10)
output_dir     where result files go (default: $FBDOF_OUTPUT_DIR or ./results)
name           file-name stem (default derived from scheme, params and mode)
=============  ==============================================================

Each run writes three files into ``output_dir``:

``<name>.csv``
    One row per trial: ``trial, seed, rank_margin, rank_ok, decode_exact,
    audit_ok`` and, in ``snr_sweep`` mode, one ``rate_<dB>`` column per grid
    point (sum rate in bits per slot). ``seed`` is the first 32-bit word of the
    trial's seed sequence.
``<name>.json``
    Summary: the DoF report (ratio as ``"num/den"``), pass fractions, the
    fitted slope and the list of failed assertions.
``<name>.dat``
    ``snr_sweep`` only: two whitespace-separated columns, ``log2P`` and the
    mean sum rate.

Reals are written with 12 significant digits. Trials run in a process pool
when ``jobs > 1``; results come back in trial order, so files do not depend
on the worker count.
"""

import configparser
import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .analysis import (achievable_rate, achieved_quadruple, db_to_linear, dof_report, fit_slope,
                       frac_str, kic_dof, kx_global_dof, kx_partial_dof, mat_dof, outer_bound_ok,
                       x2_dof, verify_decodability)
from .channel_env import split_seed, trial_rngs
from .errors import ConfigError
from .schemes import SCHEMES, check_params, run_scheme, select_regime
from .transcript import audit_causality

MODES = ("rank_verify", "noiseless_decode", "snr_sweep")
DEFAULT_GRID_DB = (30.0, 40.0, 50.0, 60.0)
OUTPUT_ENV = "FBDOF_OUTPUT_DIR"
_KEYS = {"scheme", "m", "n", "k", "mode", "trials", "master_seed", "p_grid_db",
         "slope_tol", "output_dir", "name"}


def fmt_real(x):
    """12-significant-digit text for a real; ``nan`` and infinities pass through."""
    return format(float(x), ".12g")


def default_output_dir():
    return os.environ.get(OUTPUT_ENV, "results")


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    params: dict
    mode: str = "rank_verify"
    trials: int = 100
    master_seed: int = 0
    p_grid_db: tuple = DEFAULT_GRID_DB
    slope_tol: float = 0.10
    output_dir: str = field(default_factory=default_output_dir)
    name: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        object.__setattr__(self, "params", check_params(self.scheme, self.params))
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        grid = tuple(float(p) for p in self.p_grid_db)
        if self.mode == "snr_sweep":
            if len(grid) < 2:
                raise ConfigError("snr_sweep needs at least two grid points")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError("p_grid_db must be strictly ascending")
        if not self.slope_tol > 0:
            raise ConfigError("slope_tol must be positive")
        object.__setattr__(self, "p_grid_db", grid)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "master_seed", int(self.master_seed))
        if not self.name:
            tag = "_".join(f"{k}{v}" for k, v in sorted(self.params.items()))
            object.__setattr__(self, "name", f"{self.scheme}_{tag}_{self.mode}")

    @classmethod
    def from_text(cls, text, **overrides):
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                           comment_prefixes=("#",), delimiters=("=",))
        try:
            parser.read_string("[experiment]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        raw = dict(parser["experiment"])
        unknown = sorted(set(raw) - _KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "scheme" not in raw:
            raise ConfigError("config must set scheme")
        kw = {"scheme": raw["scheme"].strip()}
        try:
            kw["params"] = {k.upper(): int(raw[k]) for k in ("m", "n", "k") if k in raw}
            if "trials" in raw:
                kw["trials"] = int(raw["trials"])
            if "master_seed" in raw:
                kw["master_seed"] = int(raw["master_seed"])
            if "p_grid_db" in raw:
                kw["p_grid_db"] = tuple(float(x) for x in raw["p_grid_db"].split(",") if x.strip())
            if "slope_tol" in raw:
                kw["slope_tol"] = float(raw["slope_tol"])
        except ValueError as exc:
            raise ConfigError(f"bad value in config: {exc}") from None
        for key in ("mode", "output_dir", "name"):
            if key in raw:
                kw[key] = raw[key].strip()
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    @classmethod
    def from_file(cls, path, **overrides):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        return cls.from_text(text, **overrides)


@dataclass
class TrialResult:
    trial: int
    seed: int
    rank_margin: float
    rank_ok: bool
    decode_exact: object
    audit_ok: bool
    rates: tuple = ()


def _trial_seed(master_seed, trial):
    return int(split_seed(master_seed, trial).generate_state(1)[0])


def run_trial(job):
    """Run one trial. ``job`` is ``(config, trial)``; top-level so it pickles."""
    cfg, trial = job
    _, _, value_rng = trial_rngs(cfg.master_seed, trial)
    strict_audit = cfg.scheme == "kx_partial"
    if cfg.mode == "snr_sweep":
        rates = []
        t = None
        for p in db_to_linear(cfg.p_grid_db):
            t = run_scheme(cfg.scheme, cfg.params, cfg.master_seed, trial, power=float(p))
            rates.append(sum(achievable_rate(t)))
        verdicts = verify_decodability(t)
        decode = ""
    else:
        t = run_scheme(cfg.scheme, cfg.params, cfg.master_seed, trial, noiseless=True)
        verdicts = verify_decodability(t, rng=value_rng)
        rates = []
        decode = all(v.decode_ok for v in verdicts) if cfg.mode == "noiseless_decode" else ""
    audit = not audit_causality(t, own_feedback_only=strict_audit, allow_csi=not strict_audit)
    margin = min(v.margin for v in verdicts)
    return TrialResult(trial, _trial_seed(cfg.master_seed, trial), margin,
                       all(v.rank_ok for v in verdicts), decode, audit, tuple(rates))


def map_trials(fn, jobs_list, jobs=1):
    """Ordered map, in-process for ``jobs == 1`` and over a process pool otherwise."""
    if jobs <= 1 or len(jobs_list) <= 1:
        return [fn(j) for j in jobs_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(jobs_list) // (4 * jobs))
        return list(pool.map(fn, jobs_list, chunksize=chunk))


def trials_csv(cfg, results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["trial", "seed", "rank_margin", "rank_ok", "decode_exact", "audit_ok"]
    if cfg.mode == "snr_sweep":
        head += [f"rate_{fmt_real(db)}dB" for db in cfg.p_grid_db]
    w.writerow(head)
    for r in results:
        row = [r.trial, r.seed, fmt_real(r.rank_margin), int(r.rank_ok),
               "" if r.decode_exact == "" else int(r.decode_exact), int(r.audit_ok)]
        row += [fmt_real(x) for x in r.rates]
        w.writerow(row)
    return buf.getvalue()


def summarize(cfg, results):
    """Summary record plus failed assertions for one experiment."""
    probe = run_scheme(cfg.scheme, cfg.params, cfg.master_seed, 0, noiseless=True)
    n = len(results)
    rank_pass = sum(r.rank_ok for r in results) / n
    failures = []
    slope = None
    summary = {}
    if probe.ratio != probe.predicted:
        failures.append(f"ratio {frac_str(probe.ratio)} != predicted {frac_str(probe.predicted)}")
    if not all(r.audit_ok for r in results):
        failures.append("causality audit failed")
    if cfg.mode == "snr_sweep":
        mean = np.mean([r.rates for r in results], axis=0)
        slope = fit_slope(db_to_linear(cfg.p_grid_db), mean)
        rel = abs(slope - float(probe.predicted)) / float(probe.predicted)
        summary["slope_rel_err"] = float(fmt_real(rel))
        summary["mean_rates"] = [float(fmt_real(x)) for x in mean]
        if rel > cfg.slope_tol:
            failures.append(f"slope {slope:.4f} off predicted by {rel:.1%}")
    else:
        if rank_pass < 1.0:
            failures.append(f"rank pass fraction {rank_pass}")
        if cfg.mode == "noiseless_decode":
            decode_pass = sum(bool(r.decode_exact) for r in results) / n
            summary["decode_pass"] = decode_pass
            if decode_pass < 1.0:
                failures.append(f"decode pass fraction {decode_pass}")
    report = dof_report(probe, rank_pass=rank_pass, slope=slope)
    out = report.as_dict()
    out.update({"mode": cfg.mode, "trials": cfg.trials, "master_seed": cfg.master_seed,
                "p_grid_db": list(cfg.p_grid_db) if cfg.mode == "snr_sweep" else None,
                "min_rank_margin": float(fmt_real(min(r.rank_margin for r in results))),
                "phase_lengths": probe.meta.get("phase_lengths")})
    out.update(summary)
    out["failures"] = failures
    out["passed"] = not failures
    return out


def plot_data(cfg, summary):
    lines = ["# log2P mean_sum_rate"]
    for db, r in zip(cfg.p_grid_db, summary["mean_rates"]):
        lines.append(f"{fmt_real(np.log2(10.0 ** (db / 10.0)))} {fmt_real(r)}")
    return "\n".join(lines) + "\n"


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_experiment(cfg, jobs=1, write=True):
    """Run every trial of ``cfg``; returns ``(summary, paths)``.

    ``summary["passed"]`` is false iff some assertion for the mode failed.
    """
    results = map_trials(run_trial, [(cfg, t) for t in range(cfg.trials)], jobs)
    summary = summarize(cfg, results)
    paths = {}
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        stem = os.path.join(cfg.output_dir, cfg.name)
        files = {"csv": trials_csv(cfg, results), "json": dumps(summary)}
        if cfg.mode == "snr_sweep":
            files["dat"] = plot_data(cfg, summary)
        for ext, text in files.items():
            paths[ext] = f"{stem}.{ext}"
            with open(paths[ext], "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    return summary, paths


# ---------------------------------------------------------------------------
# acceptance matrix

RANK_MATRIX = (
    [("x2_mimo", {"M": m, "N": n}) for m, n in ((1, 2), (2, 5), (2, 3), (3, 3), (2, 2),
                                                (2, 1), (3, 2))]
    + [("kx_partial", {"K": k}) for k in range(2, 6)]
    + [("kx_global", {"K": k}) for k in range(2, 5)]
    + [("mat_bc", {"K": k}) for k in range(2, 5)]
    + [("k_ic", {"K": k}) for k in range(2, 5)]
)
SWEEP_MATRIX = (("x2_mimo", {"M": 2, "N": 3}), ("kx_partial", {"K": 3}), ("k_ic", {"K": 2}))


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title}"


def check_table(max_mn=8):
    """Executed symbols/slots against the piecewise formula for every (M, N)."""
    bad = []
    for m, n in product(range(1, max_mn + 1), repeat=2):
        t = run_scheme("x2_mimo", {"M": m, "N": n}, noiseless=True)
        if t.ratio != x2_dof(m, n):
            bad.append([m, n, frac_str(t.ratio), frac_str(x2_dof(m, n))])
    return CriterionResult(1, "x2 DoF table, 1 <= M,N <= 8", not bad,
                           {"cases": max_mn * max_mn, "mismatches": bad})


def check_worked_example(master_seed=0):
    t = run_scheme("x2_mimo", {"M": 2, "N": 3}, master_seed, noiseless=True)
    phase1 = t.phase_slots("1")
    obs = [e for s in phase1 for e in t.slots[s].received[0]]
    u = [a.id for a in t.info_atoms if a.intended_rx == 0]
    side = t.extras["side_info"]
    detail = {"phase_lengths": t.meta["phase_lengths"],
              "phase1_system": [len(obs), len(u)],
              "side_info_per_rx": [len(side.u_native), len(side.v_native)],
              "ratio": frac_str(t.ratio)}
    ok = (detail["phase_lengths"] == [3, 3, 1] and detail["phase1_system"] == [9, 12]
          and detail["side_info_per_rx"] == [3, 3] and t.ratio == Fraction(24, 7))
    return CriterionResult(2, "worked example M=2, N=3", ok, detail)


def _save(output_dir, name, text):
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        with open(os.path.join(output_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def check_rank_matrix(master_seed=0, trials=100, jobs=1, output_dir=None):
    rows = {}
    ok = True
    for scheme, params in RANK_MATRIX:
        cfg = ExperimentConfig(scheme, params, "noiseless_decode", trials, master_seed)
        results = map_trials(run_trial, [(cfg, t) for t in range(trials)], jobs)
        _save(output_dir, f"{cfg.name}.csv", trials_csv(cfg, results))
        rank = sum(r.rank_ok for r in results) / trials
        dec = sum(bool(r.decode_exact) for r in results) / trials
        ok &= rank == 1.0 and dec == 1.0
        rows[cfg.name] = {"rank_pass": rank, "decode_pass": dec,
                          "min_margin": float(fmt_real(min(r.rank_margin for r in results)))}
    return CriterionResult(3, f"rank and noiseless decode, {trials} trials per scheme", ok, rows)


def check_counts():
    cases = [("kx_global", 3, 18, 11, kx_global_dof(3)),
             ("kx_partial", 3, 9, 6, kx_partial_dof(3)),
             ("kx_partial", 2, 4, 3, kx_partial_dof(2)),
             ("k_ic", 2, 4, 5, kic_dof(2)),
             ("k_ic", 3, 18, 17, kic_dof(3))]
    detail = {}
    ok = True
    for scheme, k, sym, slots, dof in cases:
        t = run_scheme(scheme, {"K": k}, noiseless=True)
        good = (t.n_symbols, t.n_slots) == (sym, slots) and t.ratio == dof
        ok &= good
        detail[f"{scheme}_K{k}"] = {"symbols": t.n_symbols, "slots": t.n_slots,
                                    "ratio": frac_str(t.ratio), "ok": good}
    # the K-user broadcast block underlies both global-feedback schemes
    ok &= mat_dof(3) == Fraction(18, 11)
    return CriterionResult(4, "K-user symbol and slot counts", ok, detail)


def check_outer_bounds(max_mn=8):
    bad = []
    for m, n in product(range(1, max_mn + 1), repeat=2):
        t = run_scheme("x2_mimo", {"M": m, "N": n}, noiseless=True)
        quad = achieved_quadruple(t)
        ob = outer_bound_ok(quad, m, n)
        good = ob.ok and sum(quad) == x2_dof(m, n)
        if select_regime(m, n).regime == "B":
            good &= ob.slack1 == 0 and ob.slack2 == 0
        if not good:
            bad.append([m, n, [frac_str(q) for q in quad], frac_str(ob.slack1),
                        frac_str(ob.slack2)])
    return CriterionResult(5, "outer bounds hold for every achieved quadruple", not bad,
                           {"cases": max_mn * max_mn, "violations": bad})


def check_sweeps(master_seed=0, trials=50, jobs=1, tol=0.10, output_dir=None):
    detail = {}
    ok = True
    for scheme, params in SWEEP_MATRIX:
        cfg = ExperimentConfig(scheme, params, "snr_sweep", trials, master_seed, slope_tol=tol)
        results = map_trials(run_trial, [(cfg, t) for t in range(trials)], jobs)
        _save(output_dir, f"{cfg.name}.csv", trials_csv(cfg, results))
        s = summarize(cfg, results)
        _save(output_dir, f"{cfg.name}.dat", plot_data(cfg, s))
        ok &= s["passed"]
        detail[cfg.name] = {"slope": s["slope"], "predicted": s["predicted"],
                            "rel_err": s["slope_rel_err"]}
    return CriterionResult(6, f"SNR-sweep slope within {tol:.0%}", ok, detail)


def check_audits(master_seed=0):
    detail = {}
    ok = True
    for scheme, params in RANK_MATRIX:
        for noiseless in (True, False):
            t = run_scheme(scheme, params, master_seed, noiseless=noiseless)
            probs = audit_causality(t)
            if scheme == "kx_partial":
                probs += audit_causality(t, own_feedback_only=True, allow_csi=False)
            key = f"{scheme}_" + "_".join(f"{k}{v}" for k, v in sorted(params.items()))
            detail.setdefault(key, [])
            detail[key].extend(probs)
            ok &= not probs
    return CriterionResult(7, "causality audit, strict for partial feedback", ok,
                           {k: len(v) for k, v in detail.items()})


def verify_all(master_seed=0, jobs=1, output_dir=None, progress=None):
    """Criteria 1-7.

    With ``output_dir`` set, writes ``verify_all.json`` plus the per-trial CSV
    of every rank-matrix and sweep experiment (and the sweeps' plot data).

    ``progress`` is called with each :class:`CriterionResult` as it finishes.
    """
    steps = [lambda: check_table(), lambda: check_worked_example(master_seed),
             lambda: check_rank_matrix(master_seed, jobs=jobs, output_dir=output_dir),
             lambda: check_counts(), lambda: check_outer_bounds(),
             lambda: check_sweeps(master_seed, jobs=jobs, output_dir=output_dir),
             lambda: check_audits(master_seed)]
    results = []
    for step in steps:
        res = step()
        results.append(res)
        if progress is not None:
            progress(res)
    doc = {"master_seed": master_seed,
           "criteria": [{"number": r.number, "title": r.title, "passed": r.passed,
                         "detail": r.detail} for r in results]}
    _save(output_dir, "verify_all.json", dumps(doc))
    return results


__all__ = ["ExperimentConfig", "TrialResult", "MODES", "run_trial", "run_experiment",
           "map_trials", "trials_csv", "summarize", "verify_all", "CriterionResult",
           "fmt_real", "default_output_dir", "RANK_MATRIX", "SWEEP_MATRIX"]
