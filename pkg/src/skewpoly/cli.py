"""Command line runner: configure, execute pipelines, emit artifacts.

Exit codes: 0 success (zero-structure mismatches are warnings, not
failures), 2 invariant violation (the manifest names it), 3 precision
exhaustion, 4 configuration error.  A manifest.json is written on every
path where the output directory is usable; apart from the recorded wall
time its contents are deterministic for a fixed configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

from mpmath import mp

from .analysis import (
    cross_pipeline_report,
    duality_report,
    gram_report,
    zero_report,
)
from .bootstrap import bootstrap_d2
from .errors import ConfigError, PrecisionExhaustion, SkewPolyError
from .moments import moments_quadrature, required_k_max
from .precision import MIN_PRECISION_BITS, real_str, working
from .recursion_diffeq import SEED_K_MAX, run_diffeq
from .recursion_integral import run_integral
from .weight import quartic_spec

EMIT_TOKENS = ("coeffs", "g", "R", "gram", "zeros", "ledger", "moments")
METHODS = ("integral", "diffeq", "both")
ENV_PRECISION = "SKEWPOLY_PRECISION_BITS"

#: structural bound on band reconstruction, independent of user tolerance
BAND_RESIDUAL_LIMIT = mp.mpf("1e-10")

#: highest polynomial index for which zero structure is reported
ZERO_REPORT_TOP = 20


@dataclasses.dataclass
class RunConfig:
    """Fully resolved configuration of one run."""

    alpha: str = "0"
    n_max: int = 8
    precision_bits: int = 256
    method: str = "integral"
    tolerance: str = "1e-8"
    emit: tuple = ("g", "gram")
    output_dir: str = "skewpoly-out"


def _parse_emit(raw) -> tuple:
    if isinstance(raw, (list, tuple)):
        tokens = [str(t) for t in raw]
    else:
        tokens = [t.strip() for t in str(raw).split(",") if t.strip()]
    bad = [t for t in tokens if t not in EMIT_TOKENS]
    if bad:
        raise ConfigError(
            f"unknown emit tokens {bad}; valid tokens are {', '.join(EMIT_TOKENS)}"
        )
    # canonical order, duplicates collapsed
    return tuple(t for t in EMIT_TOKENS if t in tokens)


def validate_config(cfg: RunConfig) -> RunConfig:
    """Check every field; raises ConfigError with a specific message."""
    try:
        mp.mpf(cfg.alpha)
    except Exception as exc:
        raise ConfigError(f"alpha must be a real number, got {cfg.alpha!r}") from exc
    if not isinstance(cfg.n_max, int) or cfg.n_max < 4 or cfg.n_max % 2 != 0:
        raise ConfigError(f"n_max must be an even integer >= 4, got {cfg.n_max}")
    if not isinstance(cfg.precision_bits, int) or cfg.precision_bits < MIN_PRECISION_BITS:
        raise ConfigError(
            f"precision_bits must be an integer >= {MIN_PRECISION_BITS}, "
            f"got {cfg.precision_bits}"
        )
    if cfg.method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {cfg.method!r}")
    try:
        tol = mp.mpf(cfg.tolerance)
    except Exception as exc:
        raise ConfigError(f"tolerance must be a real number, got {cfg.tolerance!r}") from exc
    if not (0 < tol <= mp.mpf("1e-2")):
        raise ConfigError(f"tolerance must lie in (0, 1e-2], got {cfg.tolerance}")
    emit = _parse_emit(cfg.emit)
    needs_pairs = {"coeffs", "R", "gram", "zeros"}
    if cfg.method == "diffeq" and needs_pairs & set(emit):
        raise ConfigError(
            "emit tokens coeffs/R/gram/zeros need polynomial pairs; "
            "use --method integral or both"
        )
    if cfg.method == "integral" and "ledger" in emit:
        raise ConfigError(
            "emit token ledger needs the difference-equation run; "
            "use --method diffeq or both"
        )
    return dataclasses.replace(cfg, emit=emit)


def load_config(argv, env=None) -> RunConfig:
    """Merge flags over config-file values over environment defaults."""
    env = os.environ if env is None else env
    parser = argparse.ArgumentParser(
        prog="skewpoly",
        description=(
            "Construct skew-orthogonal polynomial pairs for the quartic "
            "exponential weight, by moment integrals and by difference "
            "equations, and validate them against each other."
        ),
    )
    parser.add_argument("--alpha", type=str, default=None, help="quadratic coefficient of the potential")
    parser.add_argument("--n-max", type=int, default=None, help="highest polynomial index (even, >= 4)")
    parser.add_argument("--precision-bits", type=int, default=None, help="working precision in bits (>= 64)")
    parser.add_argument("--method", type=str, default=None, choices=METHODS, help="which pipeline(s) to run")
    parser.add_argument("--tolerance", type=str, default=None, help="validation tolerance in (0, 1e-2]")
    parser.add_argument("--emit", type=str, default=None, help=f"comma-separated artifacts from {{{','.join(EMIT_TOKENS)}}}")
    parser.add_argument("--output", type=str, default=None, help="output directory for artifacts")
    parser.add_argument("--config", type=str, default=None, help="JSON file with the same keys as the flags")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        # argparse exits 2 on bad flags; normalize to the config exit code
        raise ConfigError("unrecognized or malformed command line flags") from exc

    merged: dict = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        allowed = {"alpha", "n_max", "precision_bits", "method", "tolerance", "emit", "output"}
        unknown = set(file_cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown config file keys {sorted(unknown)}")
        merged.update(file_cfg)

    for key, value in (
        ("alpha", args.alpha),
        ("n_max", args.n_max),
        ("precision_bits", args.precision_bits),
        ("method", args.method),
        ("tolerance", args.tolerance),
        ("emit", args.emit),
        ("output", args.output),
    ):
        if value is not None:
            merged[key] = value

    if "precision_bits" not in merged and ENV_PRECISION in env:
        raw = env[ENV_PRECISION]
        try:
            merged["precision_bits"] = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{ENV_PRECISION} must be an integer, got {raw!r}") from exc

    defaults = RunConfig()
    try:
        n_max = int(merged.get("n_max", defaults.n_max))
        precision_bits = int(merged.get("precision_bits", defaults.precision_bits))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"n_max and precision_bits must be integers: {exc}") from exc
    cfg = RunConfig(
        alpha=str(merged.get("alpha", defaults.alpha)),
        n_max=n_max,
        precision_bits=precision_bits,
        method=str(merged.get("method", defaults.method)),
        tolerance=str(merged.get("tolerance", defaults.tolerance)),
        emit=merged.get("emit", defaults.emit),
        output_dir=str(merged.get("output", defaults.output_dir)),
    )
    return validate_config(cfg)


# ---------------------------------------------------------------------------
# artifact writers


def _write_text(path: str, text: str, artifacts: list) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    artifacts.append(os.path.basename(path))


def _csv(header, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(str(c) for c in row))
    return "\n".join(lines) + "\n"


class _InvariantViolation(SkewPolyError):
    def __init__(self, invariant: str, detail: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}")


def run(cfg: RunConfig) -> int:
    """Execute one configured run; returns the process exit code."""
    t_start = time.time()
    bits = cfg.precision_bits
    tol = mp.mpf(cfg.tolerance)
    manifest: dict = {
        "schema_version": 1,
        "config": {
            "alpha": cfg.alpha,
            "n_max": cfg.n_max,
            "precision_bits": cfg.precision_bits,
            "method": cfg.method,
            "tolerance": cfg.tolerance,
            "emit": list(cfg.emit),
            "output": cfg.output_dir,
        },
        "stages": [],
        "warnings": [],
        "artifacts": [],
        "failed_invariant": None,
        "error": None,
        "exit_code": 0,
    }
    stages = manifest["stages"]
    artifacts = manifest["artifacts"]

    def stage(name: str) -> None:
        stages.append({"name": name, "status": "running"})

    def stage_ok() -> None:
        stages[-1]["status"] = "ok"

    exit_code = 0
    outdir_ready = False
    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
        outdir_ready = True
    except OSError as exc:
        manifest["error"] = {"type": "ConfigError", "stage": "config", "message": str(exc)}
        manifest["exit_code"] = 4
        sys.stderr.write(f"error: cannot create output directory: {exc}\n")
        return 4

    spec = quartic_spec(cfg.alpha)
    table = None
    boot = None
    integral = None
    ledger = None
    gram = None
    duality = None
    cross = None
    zero_reports = []
    try:
        # -- moments ------------------------------------------------------
        stage("moments")
        k_max = required_k_max(cfg.n_max) if cfg.method != "diffeq" else SEED_K_MAX
        table = moments_quadrature(spec, k_max, bits)
        ibp = table.max_ibp_residual()
        manifest["moments"] = {
            "k_max": k_max,
            "truncation_radius": table.truncation_radius,
            "panels": table.panels,
            "est_rel_error": real_str(table.est_rel_error, 32),
            "max_ibp_residual": real_str(ibp, 32),
        }
        if ibp > tol:
            raise _InvariantViolation(
                "moment-integration-by-parts",
                f"residual {mp.nstr(ibp, 5)} exceeds tolerance {cfg.tolerance}",
            )
        stage_ok()

        # -- bootstrap ----------------------------------------------------
        stage("bootstrap")
        boot = bootstrap_d2(spec, table)
        manifest["bootstrap"] = {
            "g0": real_str(boot.g0, bits),
            "g2": real_str(boot.g2, bits),
            "c0_deg2": real_str(boot.c0_deg2, bits),
            "c1_deg3": real_str(boot.c1_deg3, bits),
        }
        stage_ok()

        # -- integral pipeline ---------------------------------------------
        if cfg.method in ("integral", "both"):
            stage("integral")
            integral = run_integral(spec, table, cfg.n_max, bits)
            manifest["integral"] = {
                "pairs_built": len(integral.pairs),
                "band_rows": len(integral.bands),
                "band_residual": real_str(integral.band_residual, 32),
            }
            if integral.band_residual > BAND_RESIDUAL_LIMIT:
                raise _InvariantViolation(
                    "band-reconstruction",
                    f"residual {mp.nstr(integral.band_residual, 5)} exceeds "
                    f"{mp.nstr(BAND_RESIDUAL_LIMIT, 3)}",
                )
            stage_ok()

        # -- difference-equation pipeline -----------------------------------
        if cfg.method in ("diffeq", "both"):
            stage("diffeq")
            # the recursion amplifies roundoff, so it runs at twice the
            # requested precision; results are reported at the requested one
            diffeq_bits = 2 * bits
            with working(diffeq_bits):
                seed_table = moments_quadrature(spec, SEED_K_MAX, diffeq_bits)
                fallback = (integral, table) if integral is not None else None
                ledger = run_diffeq(
                    spec,
                    cfg.n_max // 2,
                    diffeq_bits,
                    table=seed_table,
                    fallback=fallback,
                )
            seed_worst = max(ledger.seed_residuals) / ledger.g[0]
            manifest["diffeq"] = {
                "precision_bits": diffeq_bits,
                "pairs_covered": ledger.n_pair_top + 1,
                "max_seed_residual": real_str(seed_worst, 32),
                "fallback_steps": list(ledger.fallback_steps),
            }
            if seed_worst > tol:
                raise _InvariantViolation(
                    "diffeq-seed-consistency",
                    f"normalized seed residual {mp.nstr(seed_worst, 5)} exceeds "
                    f"tolerance {cfg.tolerance}",
                )
            stage_ok()

        # -- validation -----------------------------------------------------
        stage("validation")
        if integral is not None:
            gram = gram_report(integral.pairs, integral.g, table, cfg.n_max)
            manifest["gram"] = {
                "dimension": gram.dimension,
                "max_residual": real_str(gram.max_residual, 32),
                "worst_entry": list(gram.worst_entry),
            }
            if gram.max_residual > tol:
                raise _InvariantViolation(
                    "gram-residual",
                    f"{mp.nstr(gram.max_residual, 5)} exceeds tolerance {cfg.tolerance}",
                )
            duality = duality_report(integral, table, cfg.n_max)
            ratio = duality.max_deviation / duality.max_entry
            manifest["duality"] = {
                "rows_checked": duality.rows_checked,
                "entries_checked": duality.entries_checked,
                "max_deviation": real_str(duality.max_deviation, 32),
                "max_entry": real_str(duality.max_entry, 32),
                "worst_entry": list(duality.worst_entry),
            }
            if ratio > tol:
                raise _InvariantViolation(
                    "band-duality",
                    f"relative deviation {mp.nstr(ratio, 5)} exceeds tolerance "
                    f"{cfg.tolerance}",
                )
        if integral is not None and ledger is not None:
            cross = cross_pipeline_report(integral, ledger, cfg.n_max // 2)
            manifest["cross_pipeline"] = {
                "pairs_compared": cross.pairs_compared,
                "max_rel_g": real_str(cross.max_rel_g, 32),
                "max_rel_off_even": real_str(cross.max_rel_off_even, 32),
                "max_rel_off_odd": real_str(cross.max_rel_off_odd, 32),
                "max_rel_diag": real_str(cross.max_rel_diag, 32),
            }
            if cross.overall_max > tol:
                raise _InvariantViolation(
                    "cross-pipeline-agreement",
                    f"relative disagreement {mp.nstr(cross.overall_max, 5)} exceeds "
                    f"tolerance {cfg.tolerance}",
                )
        if "zeros" in cfg.emit and integral is not None:
            mismatches = 0
            for n in range(0, min(cfg.n_max, ZERO_REPORT_TOP) + 1):
                for which in ("phi", "psi"):
                    report = zero_report(integral.pairs[n], which, bits)
                    zero_reports.append(report)
                    if not report.matches_claim:
                        mismatches += 1
                        manifest["warnings"].append(
                            f"zero-structure mismatch: {which} index {n} found "
                            f"{report.real_zero_count} real zeros, expected "
                            f"{report.claimed_count}"
                            + (" (non-simple roots)" if report.multiple_roots_flag else "")
                        )
            manifest["zero_claim_mismatches"] = mismatches
        stage_ok()

        # -- emit -----------------------------------------------------------
        stage("emit")
        _emit_artifacts(cfg, manifest, artifacts, table, integral, ledger, gram, zero_reports)
        stage_ok()

    except ConfigError as exc:
        _record_error(manifest, exc, "ConfigError")
        exit_code = 4
    except PrecisionExhaustion as exc:
        _record_error(manifest, exc, type(exc).__name__)
        exit_code = 3
    except _InvariantViolation as exc:
        manifest["failed_invariant"] = exc.invariant
        _record_error(manifest, exc, "InvariantViolation")
        exit_code = 2
    except SkewPolyError as exc:
        _record_error(manifest, exc, type(exc).__name__)
        exit_code = 2

    manifest["exit_code"] = exit_code
    manifest["wall_time_seconds"] = round(time.time() - t_start, 3)
    if outdir_ready:
        manifest_path = os.path.join(cfg.output_dir, "manifest.json")
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if exit_code == 0:
        sys.stdout.write(f"ok: artifacts in {cfg.output_dir}\n")
    else:
        err = manifest["error"] or {}
        sys.stderr.write(
            f"error ({err.get('type', 'unknown')}) in stage "
            f"{err.get('stage', 'unknown')}: {err.get('message', '')}\n"
        )
    return exit_code


def _record_error(manifest: dict, exc: Exception, type_name: str) -> None:
    failing = None
    for entry in manifest["stages"]:
        if entry["status"] == "running":
            entry["status"] = "failed"
            failing = entry["name"]
    manifest["error"] = {
        "type": type_name,
        "stage": failing or "config",
        "message": str(exc),
    }


def _emit_artifacts(cfg, manifest, artifacts, table, integral, ledger, gram, zero_reports):
    bits = cfg.precision_bits
    out = cfg.output_dir

    if "moments" in cfg.emit:
        _write_text(
            os.path.join(out, "moments.csv"),
            _csv("k,M_k,method,est_rel_error", table.csv_rows()),
            artifacts,
        )

    if "g" in cfg.emit:
        if integral is not None:
            source = integral.g
        else:
            source = ledger.g
        rows = [(2 * c, real_str(source[c], bits)) for c in range(cfg.n_max // 2 + 1)]
        _write_text(os.path.join(out, "g.csv"), _csv("n,g_n", rows), artifacts)

    if "R" in cfg.emit and integral is not None:
        rows = []
        for band in integral.bands:
            if band.row_n > cfg.n_max:
                break
            for m in sorted(band.entries):
                rows.append((band.row_n, m, real_str(band.entries[m], bits)))
        _write_text(os.path.join(out, "R.csv"), _csv("n,m,R_nm", rows), artifacts)

    if "gram" in cfg.emit and gram is not None:
        payload = {
            "dimension": gram.dimension,
            "max_residual": real_str(gram.max_residual, 32),
            "worst_entry": list(gram.worst_entry),
            "g_sequence": [real_str(v, bits) for v in gram.g_sequence],
        }
        _write_text(
            os.path.join(cfg.output_dir, "gram.json"),
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
            artifacts,
        )

    if "zeros" in cfg.emit and zero_reports:
        rows = [
            (
                r.which,
                r.index_n,
                r.degree,
                r.real_zero_count,
                r.claimed_count,
                str(r.matches_claim).lower(),
                str(r.multiple_roots_flag).lower(),
            )
            for r in zero_reports
        ]
        _write_text(
            os.path.join(out, "zeros.csv"),
            _csv("which,n,degree,real_zeros,claimed,match,multiple_roots", rows),
            artifacts,
        )
        detail = {
            f"{r.which}:{r.index_n}": {
                "degree": r.degree,
                "real_zero_count": r.real_zero_count,
                "claimed_count": r.claimed_count,
                "matches_claim": r.matches_claim,
                "multiple_roots": r.multiple_roots_flag,
                "zeros": list(r.zeros),
            }
            for r in zero_reports
        }
        _write_text(
            os.path.join(out, "zeros.json"),
            json.dumps(detail, indent=2, sort_keys=True) + "\n",
            artifacts,
        )

    if "ledger" in cfg.emit and ledger is not None:
        rows = []
        for c in range(ledger.n_pair_top + 1):
            rows.append(
                (
                    c,
                    real_str(ledger.g[c], bits),
                    real_str(ledger.gamma[c], bits),
                    real_str(ledger.off_even[c], bits),
                    real_str(ledger.off_odd[c], bits),
                    real_str(ledger.diag[c], bits),
                )
            )
        _write_text(
            os.path.join(out, "ledger.csv"),
            _csv("n,g_2n,gamma_n,R_2n_2n2,R_2n1_2n3,R_2n_2n", rows),
            artifacts,
        )

    if "coeffs" in cfg.emit and integral is not None:
        rows = []
        for n in range(cfg.n_max + 1):
            pair = integral.pairs[n]
            for k, c in enumerate(pair.phi):
                rows.append((n, "phi", k, real_str(c, bits)))
            for k, c in enumerate(pair.psi):
                rows.append((n, "psi", k, real_str(c, bits)))
        _write_text(
            os.path.join(out, "coeffs.csv"),
            _csv("n,which,k,value", rows),
            artifacts,
        )


def main(argv=None) -> int:
    try:
        cfg = load_config(argv if argv is not None else sys.argv[1:])
    except ConfigError as exc:
        sys.stderr.write(f"error (ConfigError): {exc}\n")
        return 4
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
