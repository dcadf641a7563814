"""Executable coding schemes and a uniform way to run them.

:func:`run_scheme` builds the right network, draws one trial's generators
from ``(master_seed, trial)`` and returns the transcript.
"""

from ..channel_env import ChannelEnv, trial_rngs
from ..errors import ConfigError
from .kic import kic_config, run_ic_global
from .kx import kx_config, kx_plan, run_global_fb, run_partial_fb
from .mat_bc import mat_config, mat_plan, run_mat
from .x2_mimo import (X2Plan, run_regime_a, run_regime_b, run_regime_c, run_x2_mimo,
                      select_regime, x2_config)

SCHEMES = ("x2_mimo", "kx_partial", "kx_global", "mat_bc", "k_ic")


def scheme_config(scheme, params, power=1.0, noiseless=False):
    """Network configuration a scheme runs on."""
    if scheme == "x2_mimo":
        return x2_config(params["M"], params["N"], power, noiseless)
    if scheme == "kx_partial":
        return kx_config(params["K"], "partial", power, noiseless)
    if scheme == "kx_global":
        return kx_config(params["K"], "global", power, noiseless)
    if scheme == "mat_bc":
        return mat_config(params["K"], power, noiseless)
    if scheme == "k_ic":
        return kic_config(params["K"], power, noiseless)
    raise ConfigError(f"unknown scheme {scheme!r}")


def check_params(scheme, params):
    if scheme == "x2_mimo":
        need, lo = ("M", "N"), 1
    elif scheme in ("kx_partial", "k_ic"):
        need, lo = ("K",), 2
    elif scheme in ("kx_global", "mat_bc"):
        need, lo = ("K",), 1
    else:
        raise ConfigError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    for key in need:
        if key not in params:
            raise ConfigError(f"scheme {scheme} needs parameter {key}")
        if int(params[key]) < lo:
            raise ConfigError(f"{key} must be at least {lo} for {scheme}")
    return {key: int(params[key]) for key in need}


def run_scheme(scheme, params, master_seed=0, trial=0, power=1.0, noiseless=False, strict=True):
    params = check_params(scheme, params)
    ch_rng, scheme_rng, _ = trial_rngs(master_seed, trial)
    env = ChannelEnv(scheme_config(scheme, params, power, noiseless), ch_rng, strict=strict)
    if scheme == "x2_mimo":
        return run_x2_mimo(env, params["M"], params["N"], scheme_rng)
    if scheme == "kx_partial":
        return run_partial_fb(env, params["K"], scheme_rng)
    if scheme == "kx_global":
        return run_global_fb(env, params["K"], scheme_rng)
    if scheme == "mat_bc":
        return run_mat(env, params["K"], scheme_rng)
    return run_ic_global(env, params["K"], scheme_rng)


__all__ = [
    "SCHEMES", "scheme_config", "check_params", "run_scheme",
    "X2Plan", "select_regime", "x2_config", "run_regime_a", "run_regime_b",
    "run_regime_c", "run_x2_mimo", "mat_plan", "mat_config", "run_mat",
    "kx_plan", "kx_config", "run_partial_fb", "run_global_fb",
    "kic_config", "run_ic_global",
]
