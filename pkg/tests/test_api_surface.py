"""The stable operation surface: every public entry point exists under its
contracted name."""

import pytest

SURFACE = {
    "curvedkakeya.jets": [
        "Jet", "jet_add", "jet_mul", "jet_diff", "jet_compose",
        "jet_solve_implicit", "jet_to_float", "jet_shift",
    ],
    "curvedkakeya.phases": [
        "Phase", "HormanderReport", "HessianCurve", "hormander_check",
        "gauss_map", "normalize_at", "curve_x0", "hessian_along_curve",
        "phase_from_json", "phase_to_json",
    ],
    "curvedkakeya.counting": [
        "RowLabel", "involutions", "sym_det_terms", "mixed_minor_terms",
        "minor_class_count", "a_n_closed", "row_labels", "a_n_bruteforce",
    ],
    "curvedkakeya.contact": [
        "ContactMatrix", "ContactReport", "build_contact_matrix", "rank",
        "contact_order", "bourgain_check", "genericity_sweep",
    ],
    "curvedkakeya.exponents": [
        "ExponentReport", "zeta_nl", "p_osc", "p_ghi", "kakeya_dim",
        "kakeya_dim_posdef", "maximal_p", "broad_p", "gamma_osc",
        "gamma_kakeya", "exponent_report",
    ],
    "curvedkakeya.wolff": [
        "DetExpansion", "PwaCertificate", "det_expansion", "h_vector",
        "certify_pwa", "rescaled_floor", "lemma52_coefficient",
    ],
    "curvedkakeya.tubes": [
        "Tube", "TubeFamily", "GridField", "phi_map", "build_family",
        "union_measure", "lp_ratio", "tubes_in_set", "compression_scan",
    ],
    "curvedkakeya.metric": [
        "MetricJet3", "contact4_condition", "metric_genericity_sweep",
    ],
    "curvedkakeya.cli": ["run"],
}


@pytest.mark.parametrize("module,names", sorted(SURFACE.items()))
def test_surface(module, names):
    mod = __import__(module, fromlist=names)
    for name in names:
        assert callable(getattr(mod, name)) or isinstance(getattr(mod, name), type), name
