"""Empirical verifiers; each returns a VerificationReport."""

from .curves import (chord_cross_section, cross_section_sides, estimate_rough_starlike,
                     sample_bhk_triples, uniformity_scale_sweep, verify_bhk314,
                     verify_bhk_uniform_bounds, verify_faltensatz, verify_gehring_hayman,
                     verify_llc, verify_pommerenke, verify_qh_sandwich, verify_separation,
                     verify_uniformity)
from .report import DELTA_HEDGE, VerificationReport
from .sampling import lattice_candidates, near_pairs, sample_pairs, sample_points
from .boundary import (harnack_check, local_qs_radius, qs_envelope, random_vertex_pairs,
                       refinement_check, triple_ratios, verify_boundary_qs,
                       verify_deformation_bounds,
                       verify_deformed_uniformity, verify_local_qs)

__all__ = [
    "DELTA_HEDGE",
    "VerificationReport",
    "chord_cross_section",
    "cross_section_sides",
    "estimate_rough_starlike",
    "harnack_check",
    "lattice_candidates",
    "local_qs_radius",
    "near_pairs",
    "qs_envelope",
    "random_vertex_pairs",
    "refinement_check",
    "sample_bhk_triples",
    "sample_pairs",
    "sample_points",
    "triple_ratios",
    "uniformity_scale_sweep",
    "verify_bhk314",
    "verify_bhk_uniform_bounds",
    "verify_boundary_qs",
    "verify_deformation_bounds",
    "verify_deformed_uniformity",
    "verify_faltensatz",
    "verify_gehring_hayman",
    "verify_llc",
    "verify_local_qs",
    "verify_pommerenke",
    "verify_qh_sandwich",
    "verify_separation",
    "verify_uniformity",
]
