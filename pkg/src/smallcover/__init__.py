"""Small covers for suprema of positive canonical processes."""

__version__ = "0.1.0"

from .cover import Cover, CoverEntry, cover_weight_delta, cover_weight_weak, verify_cover
from .model import (DiscreteLaw, IndexSet, Instance, ValueMap, expected_replica_supremum,
                    expected_supremum_exact, expected_supremum_mc, maximizer, threshold_family)
from .witness import build_cover_for_y, class_partition, epsilon, is_bad, select_witness

__all__ = [
    "Cover", "CoverEntry", "DiscreteLaw", "IndexSet", "Instance", "ValueMap",
    "build_cover_for_y", "class_partition", "cover_weight_delta", "cover_weight_weak",
    "epsilon", "expected_replica_supremum", "expected_supremum_exact", "expected_supremum_mc",
    "is_bad", "maximizer", "select_witness", "threshold_family", "verify_cover",
]
