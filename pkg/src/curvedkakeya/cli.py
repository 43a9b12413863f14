"""Command-line front end.

Every subcommand reads flags only (no environment state), writes canonical
JSON to stdout (and optionally a JSON/CSV file via --out), and is
byte-deterministic for a fixed seed and any thread count.

Exit codes: 0 success, 2 validation error (bad flags, malformed input, cost
guard), 3 verification failure (a computed certificate that fails its
threshold).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import counting, exponents, metric, tubes, wolff
from .contact import bourgain_check, contact_order, genericity_sweep
from .jets import JetError
from .metric import MetricError
from .phases import DegeneracyError, DomainError, Phase, hormander_check, phase_from_json
from .serialize import canonical_json, csv_lines, format_float, fraction_from_str
from .tubes import SimulationError
from .wolff import CertificateError

MAX_TUBES = 20000
MAX_LMAX = 400


class ValidationFailure(Exception):
    pass


class VerificationFailure(Exception):
    def __init__(self, payload: dict):
        super().__init__("verification failure")
        self.payload = payload


def _round_floats(obj):
    if isinstance(obj, float):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _emit(payload: dict, out: str | None, csv: str | None = None) -> None:
    text = canonical_json(_round_floats(payload))
    sys.stdout.write(text)
    if out:
        if out.endswith(".csv"):
            if csv is None:
                raise ValidationFailure("this command has no CSV form")
            Path(out).write_text(csv)
        else:
            Path(out).write_text(text)


def _load_phase(path: str, backend: str) -> Phase:
    try:
        data = json.loads(Path(path).read_text())
        p = phase_from_json(data)
    except (OSError, ValueError, KeyError) as exc:
        raise ValidationFailure(f"cannot load phase {path!r}: {exc}") from exc
    return p.to_float() if backend == "float" else p


def _parse_point(text: str | None, p: Phase):
    if text is None:
        return p.origin_point()
    parts = [fraction_from_str(s) for s in text.split(",")]
    if len(parts) != 2 * p.n - 1:
        raise ValidationFailure(f"point needs {2 * p.n - 1} coordinates")
    return tuple(parts)


def _parse_list(text: str) -> list[Fraction]:
    return [fraction_from_str(s) for s in text.split(",")]


def _parse_inline_json(text: str | None):
    if text is None:
        return None
    text = text.strip()
    try:
        if text.startswith("{"):
            return json.loads(text)
        return json.loads(Path(text).read_text())
    except (OSError, ValueError) as exc:
        raise ValidationFailure(f"cannot parse JSON argument: {exc}") from exc


def _require_seed(args) -> int:
    if args.seed is None:
        raise ValidationFailure("this command is randomized: --seed is required")
    return args.seed


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="curvedkakeya",
        description="Contact order, determinant-bound certificates, exponent "
                    "formulas, and curved tube simulation.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, *, phase=False, metric_in=False,
            seed=False, threads=True):
        sp = sub.add_parser(name, help=help_text)
        if phase:
            sp.add_argument("--phase", required=True, help="phase JSON file")
            sp.add_argument("--backend", choices=["exact", "float"],
                            default="exact", help="arithmetic backend")
            sp.add_argument("--point", help="analysis point, comma-separated rationals")
        if metric_in:
            sp.add_argument("--metric", required=True, help="metric jet JSON file")
        if seed:
            sp.add_argument("--seed", type=int, default=None,
                            help="64-bit seed (required for randomized runs)")
        if threads:
            sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                            help="worker threads (results are thread-count independent)")
        sp.add_argument("--out", help="write output to this file (.csv where applicable)")
        return sp

    sp = add("an", "row count of the contact matrix: closed form vs enumeration")
    sp.add_argument("--n", type=int, required=True)

    sp = add("involutions", "number of self-inverse permutations of k letters")
    sp.add_argument("--k", type=int, required=True)

    sp = add("exponents", "exact exponent and constant formulas at (n, l, k, m)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--l", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--m", type=int)

    sp = add("hormander-check", "rank and curvature non-degeneracy at a point",
             phase=True, seed=True)
    sp.add_argument("--trials", type=int, default=0,
                    help="extra perturbed sample points to certify")
    sp.add_argument("--magnitude", default="1/100", help="perturbation size")

    sp = add("contact-order", "smallest l with full contact-matrix rank",
             phase=True)
    sp.add_argument("--lmax", type=int, required=True)
    sp.add_argument("--tol", type=float, default=1e-8,
                    help="float-backend rank tolerance (relative to sigma_max)")

    sp = add("bourgain-check", "proportionality of normal Hessian derivatives",
             phase=True)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("pwa-verify", "sampled certificate for the determinant lower bound",
             phase=True, seed=True)
    sp.add_argument("--l", type=int)
    sp.add_argument("--num-u", type=int, default=1000, help="random matrix samples")
    sp.add_argument("--steps", type=int, default=200, help="local optimizer budget")
    sp.add_argument("--threshold", type=float, default=0.0,
                    help="fail (exit 3) when c_star is not above this")

    sp = add("rescaled-floor", "scaling of the worst-case determinant integral",
             phase=True, seed=True)
    sp.add_argument("--lambdas", required=True, help="comma list of scaling factors")
    sp.add_argument("--l", type=int)
    sp.add_argument("--samples", type=int, default=120, help="random M samples per lambda")
    sp.add_argument("--steps", type=int, default=120, help="local optimizer budget")

    sp = sub.add_parser("tubes", help="build one tube family and measure it")
    sp.add_argument("--phase", help="phase JSON file")
    sp.add_argument("--backend", choices=["exact", "float"], default="exact")
    sp.add_argument("--point", help="analysis point, comma-separated rationals")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sp.add_argument("--out", help="write output to this file (.csv allowed)")
    sp.add_argument("--family", help="family spec JSON with keys phase, delta, "
                                     "spacing, anchor_rule, seed (overrides flags)")
    sp.add_argument("--delta", help="tube thickness")
    sp.add_argument("--spacing", help="direction grid spacing")
    sp.add_argument("--grid-h", default="1/4", help="grid resolution as a fraction of delta")
    sp.add_argument("--p", default="1", help="exponent for the overlap L^p ratio")
    sp.add_argument("--anchor", help="anchor rule JSON (inline or path)")

    sp = add("pwa-count", "tubes contained in a semialgebraic test set",
             phase=True, seed=True)
    sp.add_argument("--deltas", required=True, help="comma list of tube thicknesses")
    sp.add_argument("--spacing-factor", default="17/16",
                    help="direction spacing as a multiple of delta")
    sp.add_argument("--grid-h", default="1/4", help="grid resolution as a fraction of delta")
    sp.add_argument("--set", required=True, dest="test_set",
                    help='test set JSON: {"kind": "slab", "axis": int, "center": x, '
                         '"width": w} or {"kind": "surface-band", "width": w}; '
                         'width scales like sqrt(delta) when "width-rule" is "sqrt"')
    sp.add_argument("--anchor", help="anchor rule JSON (inline or path)")

    sp = add("compression-scan", "union-measure slope across a delta sweep",
             phase=True, seed=True)
    sp.add_argument("--deltas", required=True, help="comma list of tube thicknesses")
    sp.add_argument("--grid-h", default="1/4", help="grid resolution as a fraction of delta")
    sp.add_argument("--spacing-factor", default="17/16")
    sp.add_argument("--anchor", help="anchor rule JSON (inline or path)")

    sp = add("metric-check", "R^3 metric-jet nonvanishing condition",
             metric_in=True, seed=True)
    sp.add_argument("--trials", type=int, default=0, help="genericity sweep trials")
    sp.add_argument("--magnitude", default="1/16", help="perturbation size")

    sp = add("genericity-sweep", "fraction of perturbed phases at minimal contact order",
             phase=True, seed=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--magnitude", default="1/8", help="perturbation size")
    sp.add_argument("--degree", type=int,
                    help="highest randomized t-derivative order (default A(n))")

    return ap


def _cmd_an(args) -> None:
    if args.n < 3:
        raise ValidationFailure("n must be at least 3")
    closed = counting.a_n_closed(args.n)
    if args.n <= counting.BRUTEFORCE_MAX_N:
        oracle = counting.a_n_bruteforce(args.n)
        match = oracle == closed
    else:
        oracle, match = None, None
    _emit({"A_n": closed, "oracle": oracle, "match": match}, args.out)


def _cmd_involutions(args) -> None:
    if args.k < 0:
        raise ValidationFailure("k must be non-negative")
    _emit({"k": args.k, "involutions": counting.involutions(args.k)}, args.out)


def _cmd_exponents(args) -> None:
    try:
        report = exponents.exponent_report(args.n, args.l, args.k, args.m)
    except exponents.ExponentDomainError as exc:
        raise ValidationFailure(str(exc)) from exc
    _emit(report.to_dict(), args.out)


def _cmd_hormander(args) -> None:
    p = _load_phase(args.phase, args.backend)
    point = _parse_point(args.point, p)
    seed = _require_seed(args) if args.trials > 0 else 0
    report = hormander_check(p, point, samples=args.trials,
                             magnitude=fraction_from_str(args.magnitude),
                             seed=seed)
    _emit(report.to_dict(), args.out)


def _cmd_contact_order(args) -> None:
    if args.lmax > MAX_LMAX:
        raise ValidationFailure(f"cost guard: lmax must be at most {MAX_LMAX}")
    p = _load_phase(args.phase, args.backend)
    point = _parse_point(args.point, p)
    report = contact_order(p, point, args.lmax, args.tol)
    _emit(report.to_dict(), args.out)


def _cmd_bourgain(args) -> None:
    p = _load_phase(args.phase, args.backend)
    point = _parse_point(args.point, p)
    _emit(bourgain_check(p, point, args.tol), args.out)


def _cmd_pwa_verify(args) -> None:
    seed = _require_seed(args)
    p = _load_phase(args.phase, args.backend)
    point = _parse_point(args.point, p)
    try:
        cert = wolff.certify_pwa(p, point, args.l, args.num_u, args.steps, seed)
    except CertificateError as exc:
        raise VerificationFailure({"c_star": None, "error": str(exc)}) from exc
    payload = cert.to_dict()
    if not cert.c_star > args.threshold:
        raise VerificationFailure(payload)
    _emit(payload, args.out)


def _cmd_rescaled_floor(args) -> None:
    seed = _require_seed(args)
    p = _load_phase(args.phase, args.backend)
    lambdas = [float(x) for x in _parse_list(args.lambdas)]
    report = wolff.rescaled_floor(p, lambdas, args.l, args.samples, args.steps, seed)
    csv = csv_lines(["lambda", "floor"],
                    [[lam, fl] for lam, fl in report["floors"]])
    _emit(report, args.out, csv)


def _family(args, p: Phase, delta: float, spacing: float):
    anchor = _parse_inline_json(args.anchor) if getattr(args, "anchor", None) else None
    seed = args.seed
    if anchor and anchor.get("kind") == "random":
        seed = _require_seed(args)
    fam = tubes.build_family(p, delta, spacing, anchor, seed or 0)
    if len(fam) > MAX_TUBES:
        raise ValidationFailure(f"cost guard: {len(fam)} tubes exceeds {MAX_TUBES}")
    return fam


def _cmd_tubes(args) -> None:
    if args.family:
        spec = _parse_inline_json(args.family)
        phase_ref = spec.get("phase")
        if isinstance(phase_ref, str):
            p = _load_phase(phase_ref, args.backend)
        else:
            p = phase_from_json(phase_ref)
            if args.backend == "float":
                p = p.to_float()
        delta = float(fraction_from_str(spec["delta"]))
        spacing = float(fraction_from_str(spec["spacing"]))
        anchor = spec.get("anchor_rule")
        seed = spec.get("seed", args.seed)
    else:
        if not (args.phase and args.delta and args.spacing):
            raise ValidationFailure("need either --family or --phase/--delta/--spacing")
        p = _load_phase(args.phase, args.backend)
        delta = float(fraction_from_str(args.delta))
        spacing = float(fraction_from_str(args.spacing))
        anchor = _parse_inline_json(args.anchor) if args.anchor else None
        seed = args.seed
    if anchor and anchor.get("kind") == "random" and seed is None:
        raise ValidationFailure("random anchors need a seed")
    h = float(fraction_from_str(args.grid_h)) * delta
    fam = tubes.build_family(p, delta, spacing, anchor, seed or 0)
    if len(fam) > MAX_TUBES:
        raise ValidationFailure(f"cost guard: {len(fam)} tubes exceeds {MAX_TUBES}")
    p_exp = float(fraction_from_str(args.p))
    measure = tubes.union_measure(fam, h, args.threads)
    ratio = tubes.lp_ratio(fam, p_exp, h, args.threads)
    _emit({"delta": delta, "num_tubes": len(fam),
           "separation_ok": fam.separation_ok, "measure": measure,
           "p": p_exp, "lp_ratio": ratio}, args.out,
          csv_lines(["delta", "measure", "lp_ratio"], [[delta, measure, ratio]]))


def _make_predicate(spec: dict, delta: float):
    kind = spec.get("kind")
    width = spec.get("width")
    if spec.get("width-rule") == "sqrt":
        width = float(spec.get("width-scale", 1.0)) * delta ** 0.5
    if width is None:
        raise ValidationFailure("test set needs a width")
    width = float(width)
    if kind == "slab":
        return tubes.slab_predicate(int(spec.get("axis", 0)),
                                    float(spec.get("center", 0.0)), width), width
    if kind == "surface-band":
        return tubes.surface_band_predicate(width), width
    raise ValidationFailure(f"unknown test set kind {kind!r}")


def _set_measure(spec: dict, width: float, eps0: float, n: int) -> float:
    # slab and band measures over the [-eps0, eps0]^n box
    return 2.0 * width * (2.0 * eps0) ** (n - 1)


def _cmd_pwa_count(args) -> None:
    p = _load_phase(args.phase, args.backend)
    spec = _parse_inline_json(args.test_set)
    factor = float(fraction_from_str(args.spacing_factor))
    rows = []
    for dfrac in _parse_list(args.deltas):
        delta = float(dfrac)
        fam = _family(args, p, delta, delta * factor)
        predicate, width = _make_predicate(spec, delta)
        measure = _set_measure(spec, width, fam.eps0, fam.n)
        h = float(fraction_from_str(args.grid_h)) * delta
        res = tubes.tubes_in_set(fam, predicate, measure, h)
        rows.append([delta, res["count"], res["ratio"]])
    payload = {"rows": [{"delta": r[0], "count": r[1], "ratio": r[2]} for r in rows]}
    _emit(payload, args.out, csv_lines(["delta", "count", "pwa_ratio"], rows))


def _cmd_compression_scan(args) -> None:
    p = _load_phase(args.phase, args.backend)
    deltas = [float(x) for x in _parse_list(args.deltas)]
    anchor = _parse_inline_json(args.anchor) if args.anchor else None
    seed = args.seed
    if anchor and anchor.get("kind") == "random":
        seed = _require_seed(args)
    report = tubes.compression_scan(
        p, deltas, float(fraction_from_str(args.grid_h)),
        float(fraction_from_str(args.spacing_factor)), anchor, seed or 0,
        args.threads)
    csv = csv_lines(["delta", "measure"], [[d, mv] for d, mv in report["measures"]])
    _emit(report, args.out, csv)


def _cmd_metric_check(args) -> None:
    try:
        m = metric.metric_from_json(Path(args.metric).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise ValidationFailure(f"cannot load metric: {exc}") from exc
    value, nonzero = metric.contact4_condition(m)
    payload: dict = {"value": str(value) if isinstance(value, Fraction) else value,
                     "nonzero": nonzero}
    if args.trials > 0:
        seed = _require_seed(args)
        payload["sweep"] = metric.metric_genericity_sweep(
            m, fraction_from_str(args.magnitude), args.trials, seed)
    _emit(payload, args.out)


def _cmd_genericity_sweep(args) -> None:
    seed = _require_seed(args)
    p = _load_phase(args.phase, args.backend)
    degree = args.degree if args.degree is not None else counting.a_n(p.n)
    report = genericity_sweep(p, degree, fraction_from_str(args.magnitude),
                              args.trials, seed, args.threads)
    _emit(report, args.out)


_HANDLERS = {
    "an": _cmd_an,
    "involutions": _cmd_involutions,
    "exponents": _cmd_exponents,
    "hormander-check": _cmd_hormander,
    "contact-order": _cmd_contact_order,
    "bourgain-check": _cmd_bourgain,
    "pwa-verify": _cmd_pwa_verify,
    "rescaled-floor": _cmd_rescaled_floor,
    "tubes": _cmd_tubes,
    "pwa-count": _cmd_pwa_count,
    "compression-scan": _cmd_compression_scan,
    "metric-check": _cmd_metric_check,
    "genericity-sweep": _cmd_genericity_sweep,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _HANDLERS[args.command](args)
        return 0
    except ValidationFailure as exc:
        sys.stderr.write(canonical_json({"error": str(exc)}))
        return 2
    except (DomainError, DegeneracyError, MetricError, SimulationError,
            JetError, ValueError) as exc:
        sys.stderr.write(canonical_json({"error": str(exc)}))
        return 2
    except VerificationFailure as exc:
        sys.stdout.write(canonical_json(_round_floats(exc.payload)))
        return 3


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
