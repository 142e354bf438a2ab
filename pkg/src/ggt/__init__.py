"""Graphs of groups over free groups: JSJ-like decompositions, trees of
cylinders, expansions along strict maps and effective pairs of
resolutions."""

from .words import Alphabet
from .oracle import GroupHandle, SubgroupDesc, free_group, free_abelian_group
from .gog import GraphOfGroups, StrictMapDesc
from .expansion import Expansion, expand
from .resolve import EffectivePair, enumerate_pairs, verify_pair

__all__ = [
    "Alphabet",
    "GroupHandle",
    "SubgroupDesc",
    "free_group",
    "free_abelian_group",
    "GraphOfGroups",
    "StrictMapDesc",
    "Expansion",
    "expand",
    "EffectivePair",
    "enumerate_pairs",
    "verify_pair",
]

__version__ = "0.1.0"
