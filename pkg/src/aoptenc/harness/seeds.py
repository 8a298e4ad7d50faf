"""Seed splitting: every random stream is keyed by (base seed, purpose, task index).

A purpose-specific base seed from the config (``noise.seed``, ``aopt.seed_weights``,
``aopt.seed_trace``) wins; otherwise the master ``seed`` is used.  The integer seed of task
``index`` for a purpose is the first 63-bit word of ``SeedSequence([base, PURPOSE_ID, *index])``,
so each sample, restart or repeat can be reproduced on its own from the recorded integer.
"""
import numpy as np

PURPOSE_ID = {"noise": 1, "weights": 2, "trace": 3, "init": 4, "check": 5}
CONFIG_KEY = {"noise": "noise.seed", "weights": "aopt.seed_weights", "trace": "aopt.seed_trace"}


def base_seed(config, purpose):
    key = CONFIG_KEY.get(purpose)
    if key is not None and config[key] is not None:
        return config[key]
    return config["seed"]


def derive_seed(base, purpose, *index):
    ss = np.random.SeedSequence([int(base), PURPOSE_ID[purpose], *(int(i) for i in index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def task_seed(config, purpose, *index):
    return derive_seed(base_seed(config, purpose), purpose, *index)


def rng_for(config, purpose, *index):
    return np.random.default_rng(task_seed(config, purpose, *index))


def seed_summary(config):
    """Base seeds of every purpose, for the metadata sidecar."""
    return {f"seed.{p}": base_seed(config, p) for p in PURPOSE_ID}
