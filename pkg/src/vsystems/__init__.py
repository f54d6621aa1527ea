"""Vee-systems, their open extensions and the associated WDVV checks."""
from .algebra import DEFAULT_TOL, Tolerances
from .coxeter import CoxeterSpec, build_root_system, fundamental_weight, small_orbit_check, weyl_orbit
from .openvee import (
    OpenSystem,
    build_catalog_open_system,
    check_open_vee,
    difference_decomposition,
    find_isometry,
    solve_open_constants,
)
from .prepotential import (
    auxiliary_lemma_check,
    closed_jet,
    eval_prepotentials,
    open_jet,
    open_wdvv_residual,
    wdvv_residual_closed,
)
from .superpotential import (
    build_superpotential,
    compare_intersection_form,
    critical_points,
    residue_metrics,
)
from .veesys import CovectorSystem, check_vee, vee_lambda_table

__all__ = [
    "DEFAULT_TOL",
    "CoxeterSpec",
    "CovectorSystem",
    "OpenSystem",
    "Tolerances",
    "auxiliary_lemma_check",
    "build_catalog_open_system",
    "build_root_system",
    "build_superpotential",
    "check_open_vee",
    "check_vee",
    "closed_jet",
    "compare_intersection_form",
    "critical_points",
    "difference_decomposition",
    "eval_prepotentials",
    "find_isometry",
    "fundamental_weight",
    "open_jet",
    "open_wdvv_residual",
    "residue_metrics",
    "small_orbit_check",
    "solve_open_constants",
    "vee_lambda_table",
    "wdvv_residual_closed",
    "weyl_orbit",
]
