#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Named random streams derived from a master seed

Every stochastic effect of a run draws from its own stream so that
switching one feature on or off does not shift the draws of the others.
"""
import hashlib

import numpy as np
import torch

#: Streams used by the training engine
STREAM_NAMES = ("init", "noise", "gate", "augment", "eval")


def derive_seed(master_seed, label, *salt):
    """Derive a 63-bit seed from a master seed and a label"""
    key = ":".join(str(part) for part in (master_seed, label) + salt)
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little") & (2**63 - 1)


def make_generator(seed):
    gen = torch.Generator()
    gen.manual_seed(int(seed))
    return gen


class RandomStreams:
    """Container of labeled :class:`torch.Generator` streams

    Parameters
    ----------
    master_seed: int
    names: list(str)
        Stream labels
    """

    def __init__(self, master_seed, names=STREAM_NAMES):
        self.master_seed = int(master_seed)
        self._streams = {name: make_generator(derive_seed(self.master_seed, name)) for name in names}

    def __getitem__(self, name):
        return self._streams[name]

    def __contains__(self, name):
        return name in self._streams

    @property
    def names(self):
        return list(self._streams)

    def reset(self, name, *salt):
        """Reseed a stream from the master seed, a label and a salt"""
        self._streams[name] = make_generator(derive_seed(self.master_seed, name, *salt))
        return self._streams[name]

    def numpy_rng(self, label, *salt):
        """A stateless :class:`numpy.random.Generator` keyed by label and salt"""
        return np.random.default_rng(derive_seed(self.master_seed, label, *salt))

    def state_dict(self):
        return {name: gen.get_state().clone() for name, gen in self._streams.items()}

    def load_state_dict(self, states):
        for name, state in states.items():
            if name not in self._streams:
                self._streams[name] = torch.Generator()
            self._streams[name].set_state(torch.as_tensor(state, dtype=torch.uint8))
