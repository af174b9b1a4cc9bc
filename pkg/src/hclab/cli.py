"""Command line front end tying construction, checking, decomposition,
spectral analysis and classification into reproducible runs.

Exit codes: 0 clean verdict, 1 parse error, 2 precondition violation,
3 numerical failure, 4 inconclusive / failed verification.  With the same
spec and seed, JSON output is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .chains import chain_decomposition, isometry_tower, verify_chain_structure
from .classifier import classify
from .commutation import centered_check, centered_criterion, half_centered_check
from .errors import HclabError, SpecParseError
from .matio import dumps_matrix, parse_complex
from .operators import (
    OperatorModel,
    ToleranceConfig,
    aq_operator,
    composition_operator,
    load_operator_spec,
    shift_plus_rank_one,
    weighted_shift,
)
from .spectral import enumerate_triples, spectral_correspondence_check, structure_extract

VERIFY_TOLERANCES = {
    "space1": 1e-8,
    "space1_direct_sum": 1e-8,
    "isisis": 1e-8,
    "jups": 1e-8,
    "saknar": 1e-8,
    "labann": 1e-9,
    "key": 1e-9,
    "fuio": 1e-9,
    "fukth": 1e-9,
    "gram_invariance_residual": 1e-9,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--file", help="operator spec JSON file")
    p.add_argument("--family", help="operator family name")
    p.add_argument("--n", type=int, default=32, help="truncation dimension N")
    p.add_argument("--weights", help="comma separated shift weights")
    p.add_argument("--a", help="rank-one coefficient (complex, e.g. 0.3+0.4j)")
    p.add_argument("--index", type=int, default=0, help="rank-one column index")
    p.add_argument("--q", type=float, help="decay parameter in (0,1)")
    p.add_argument("--r", type=float, help="positivity margin (default 2/(1-q)+1)")
    p.add_argument("--psi", help="comma separated index map values")
    p.add_argument("--xi", help="comma separated composition weights")
    p.add_argument("--depth", type=int, default=6, help="analysis depth K")
    p.add_argument("--tol-rank", type=float, default=1e-10)
    p.add_argument("--tol-comm", type=float, default=1e-9)
    p.add_argument("--tol-rel", type=float, default=1e-8)
    p.add_argument("--tol-match", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--format", choices=("text", "json"), default="json")
    p.add_argument("--out", help="write the report to this path (atomically)")


def _parse_scalar_list(text: str) -> list[complex]:
    return [parse_complex(tok) for tok in text.split(",") if tok.strip()]


def build_model(args) -> OperatorModel:
    if args.file:
        return load_operator_spec(args.file)
    family = args.family
    if not family:
        raise SpecParseError("either --file or --family is required")
    N = args.n
    if family == "weighted_shift":
        if not args.weights:
            raise SpecParseError("weighted_shift needs --weights")
        return weighted_shift(_parse_scalar_list(args.weights), N)
    if family == "shift_plus_rank_one":
        if not args.weights or args.a is None:
            raise SpecParseError("shift_plus_rank_one needs --weights and --a")
        return shift_plus_rank_one(
            _parse_scalar_list(args.weights), parse_complex(args.a), args.index, N
        )
    if family == "composition":
        if not args.psi or not args.xi:
            raise SpecParseError("composition needs --psi and --xi")
        psi = [int(tok) for tok in args.psi.split(",") if tok.strip()]
        return composition_operator(psi, _parse_scalar_list(args.xi), N)
    if family == "aq":
        if args.q is None:
            raise SpecParseError("aq needs --q")
        return aq_operator(args.q, args.r, N)
    if family == "projection_product":
        raise SpecParseError("projection_product requires --file with P and Q matrices")
    raise SpecParseError(f"unknown family {family!r}")


def build_config(args) -> ToleranceConfig:
    seed = args.seed
    env_seed = os.environ.get("HCLAB_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise SpecParseError(f"HCLAB_SEED must be an integer, got {env_seed!r}") from exc
    return ToleranceConfig(
        rank_tol=args.tol_rank, commutator_tol=args.tol_comm,
        relation_tol=args.tol_rel, spectral_match_tol=args.tol_match,
        depth=args.depth, seed=seed,
    )


def _cap_depth(model: OperatorModel, cfg: ToleranceConfig) -> ToleranceConfig:
    """Cap the analysis depth to what the truncation supports."""
    if model.window_step == 0:
        return cfg
    feasible = (model.dim - 1) // (2 * model.window_step)
    if feasible < 1:
        return cfg  # let the library raise its own WindowExhausted
    return cfg.with_depth(min(cfg.depth, feasible))


def _config_echo(model: OperatorModel, cfg: ToleranceConfig,
                 requested: ToleranceConfig | None = None) -> dict:
    echo = {"operator": model.describe(), "tolerances": cfg.as_dict()}
    if requested is not None and requested.depth != cfg.depth:
        echo["depth_requested"] = requested.depth
    return echo


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hclab-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_report(report: dict, args) -> None:
    report = _jsonable(report)
    if args.format == "json":
        _emit(json.dumps(report, sort_keys=True, indent=2), args.out)
    else:
        lines = _render_text(report)
        _emit("\n".join(lines), args.out)


def _render_text(obj, prefix: str = "") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)):
                lines.append(f"{prefix}{key}:")
                lines.extend(_render_text(val, prefix + "  "))
            else:
                lines.append(f"{prefix}{key}: {val}")
    elif isinstance(obj, list):
        for val in obj:
            if isinstance(val, (dict, list)):
                lines.extend(_render_text(val, prefix + "  "))
            else:
                lines.append(f"{prefix}- {val}")
    else:
        lines.append(f"{prefix}{obj}")
    return lines


def cmd_zoo(args) -> int:
    model = build_model(args)
    cfg = build_config(args)
    text = dumps_matrix(model.matrix)
    if args.format == "text":
        if model.companion is not None:
            text += dumps_matrix(model.companion)
        _emit(text, args.out)
        return 0
    report = {
        "config": _config_echo(model, cfg),
        "matrix": text,
    }
    if model.companion is not None:
        report["companion"] = dumps_matrix(model.companion)
    _emit_report(report, args)
    return 0


def cmd_check(args) -> int:
    model = build_model(args)
    requested = build_config(args)
    cfg = _cap_depth(model, requested)
    report = centered_check(model, cfg)
    criterion = centered_criterion(model, cfg)
    out = {
        "config": _config_echo(model, cfg, requested),
        **report.as_dict(),
        "criterion": criterion.as_dict(),
    }
    _emit_report(out, args)
    return 0


def cmd_decompose(args) -> int:
    model = build_model(args)
    requested = build_config(args)
    cfg = _cap_depth(model, requested)
    chain = chain_decomposition(model, cfg)
    out = {"config": _config_echo(model, cfg, requested), **chain.as_dict()}
    try:
        tower = isometry_tower(model, cfg)
        out["structure"] = verify_chain_structure(model, chain, tower, cfg)
    except HclabError as exc:
        out["structure"] = None
        out["structure_skipped"] = f"{type(exc).__name__}: {exc}"
    _emit_report(out, args)
    return 0


def cmd_spectral(args) -> int:
    model = build_model(args)
    requested = build_config(args)
    cfg = _cap_depth(model, requested)
    chain = chain_decomposition(model, cfg)
    structure = structure_extract(model, chain, cfg)
    triples = enumerate_triples(model, chain, structure, cfg)
    correspondence = spectral_correspondence_check(model, chain, cfg)
    out = {
        "config": _config_echo(model, cfg, requested),
        **structure.as_dict(),
        "triples": [t.as_dict() for t in triples],
        "correspondence": correspondence,
    }
    _emit_report(out, args)
    return 0


def cmd_classify(args) -> int:
    model = build_model(args)
    requested = build_config(args)
    cfg = _cap_depth(model, requested)
    report = classify(model, cfg)
    out = {"config": _config_echo(model, cfg, requested), **report.as_dict()}
    _emit_report(out, args)
    if report.verdict == "inconclusive":
        return 4
    for cert, tol in ((report.relation, cfg.relation_tol),):
        if cert is not None and cert.operator_residual > tol:
            return 4
    if report.reconstruction is not None and \
            report.reconstruction.reconstruction_residual > cfg.relation_tol:
        return 4
    return 0


def cmd_verify(args) -> int:
    model = build_model(args)
    requested = build_config(args)
    cfg = _cap_depth(model, requested)
    half = half_centered_check(model, cfg)
    chain = chain_decomposition(model, cfg)
    tower = isometry_tower(model, cfg)
    table = verify_chain_structure(model, chain, tower, cfg)
    failures = {}
    for key, tol in VERIFY_TOLERANCES.items():
        val = table.get(key)
        if isinstance(val, (int, float)) and val > tol:
            failures[key] = {"residual": val, "tolerance": tol}
    if not table.get("v_dims_weakly_decreasing", True):
        failures["v_dims_weakly_decreasing"] = {"residual": "violated", "tolerance": None}
    out = {
        "config": _config_echo(model, cfg, requested),
        "half_residual": half.max_half_residual,
        "structure": table,
        "failures": failures,
        "verdict": not failures,
    }
    _emit_report(out, args)
    return 0 if not failures else 4


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hclab",
        description="numerical laboratory for half-centered operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "zoo": cmd_zoo,
        "check": cmd_check,
        "decompose": cmd_decompose,
        "spectral": cmd_spectral,
        "classify": cmd_classify,
        "verify": cmd_verify,
    }
    for name in handlers:
        _add_common(sub.add_parser(name))
    args = parser.parse_args(argv)
    try:
        return handlers[args.command](args)
    except HclabError as exc:
        sys.stderr.write(f"error[{type(exc).__name__}]: {exc}\n")
        return exc.exit_code
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error[{type(exc).__name__}]: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
