"""Shared scaffolding for the unit tests."""

from dataclasses import replace

from tiersim.core import Simulator
from tiersim.memory import MemoryModel
from tiersim.media import Device, PROFILES


def build(dram=256, flash=8192, profile="flash", **overrides):
    """A fresh kernel + memory model + device stack."""
    sim = Simulator()
    model = MemoryModel(dram, flash)
    prof = PROFILES[profile]
    if overrides:
        prof = replace(prof, **overrides)
    return sim, model, Device(sim, model, prof)


def mq_law_holds(model, levels_attr=True):
    """Every DRAM cohort of a managed context satisfies freq >= 2^level."""
    for ctx in model.contexts.values():
        if ctx.levels is None:
            continue
        for c in set(ctx.pages.values()):
            if c.tier == 0 and c.freq < (1 << c.level):  # DRAM
                return False
    return True
