"""Shared builders for the test suite."""

from __future__ import annotations

import math
import random

from spincorr import (
    Configuration,
    PairPotential,
    SpinSpace,
    pair_potential_field,
)

SPINS2 = SpinSpace(("0", "1"))
SPINS3 = SpinSpace(("0", "a", "b"))


def chain_field(j: float, spins: SpinSpace = SPINS2, radius: int = 1):
    """1-d chain coupling every non-vacuum pair at every offset <= radius."""
    entries = {}
    for off in range(1, radius + 1):
        for a in spins.star_indices:
            for b in spins.star_indices:
                entries[((off,), a, b)] = j
    pot = PairPotential.create(1, radius, entries, spins)
    return pair_potential_field(pot, spins)


def grid_field(j: float, spins: SpinSpace = SPINS2):
    """2-d nearest-neighbor coupling of all non-vacuum pairs."""
    entries = {}
    for off in ((1, 0), (0, 1)):
        for a in spins.star_indices:
            for b in spins.star_indices:
                entries[(off, a, b)] = j
    pot = PairPotential.create(2, 1, entries, spins)
    return pair_potential_field(pot, spins)


def random_pair_field(
    rng: random.Random,
    dimension: int,
    spins: SpinSpace,
    radius: int,
    max_coupling: float = 0.5,
):
    """Random couplings in [-max_coupling, max_coupling] on all offsets."""
    offsets = set()
    span = range(-radius, radius + 1)
    for off in __import__("itertools").product(span, repeat=dimension):
        if any(c != 0 for c in off) and off not in offsets:
            mirrored = tuple(-c for c in off)
            if mirrored not in offsets:
                offsets.add(off)
    entries = {}
    for off in sorted(offsets):
        for a in spins.star_indices:
            for b in spins.star_indices:
                key = (off, a, b)
                mirror = (tuple(-c for c in off), b, a)
                if mirror in entries:
                    continue
                entries[key] = rng.uniform(-max_coupling, max_coupling)
    pot = PairPotential.create(dimension, radius, entries, spins)
    return pair_potential_field(pot, spins)


def singleton(site: tuple, spin: int = 1) -> Configuration:
    return Configuration(((site, spin),))


def config(*pairs: tuple) -> Configuration:
    return Configuration(tuple(pairs))


def brute_force_partition(field, window, boundary, delta_volume, vacuum=None):
    """Independent partition sum: full-telescoping energies per configuration,
    no incremental walking."""
    import itertools

    from spincorr import EMPTY_CONFIG

    spins = field.spins
    sites = sorted(window)
    vac = spins.vacuum_index
    weights = []
    for assignment in itertools.product(spins.indices, repeat=len(sites)):
        x = Configuration(
            (s, sp) for s, sp in zip(sites, assignment) if sp != vac
        )
        weights.append(
            math.exp(delta_volume(field, sites, boundary, x, EMPTY_CONFIG))
        )
    return math.fsum(weights)
