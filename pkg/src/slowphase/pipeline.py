"""Pipeline orchestration and artifact persistence.

Stages: cycle -> floquet -> resonances -> frames (+independent cross-check)
-> manifold -> response -> validation.  Each stage writes its artifacts into
the output directory so later subcommands can resume without recomputation;
the manifest records the configuration echo, the spectral tables, per-order
residuals, and a checksummed file inventory.  A flagged resonance or a
hyperbolicity failure aborts the run; artifacts produced so far are kept and
the manifest records the failed stage.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import RunConfig
from .cycle import (
    CycleResult,
    FloquetSpectrum,
    check_resonances,
    find_cycle,
    floquet_spectrum,
)
from .errors import ResonanceError, SlowphaseError
from .frames import (
    Frame,
    RealBlock,
    build_adjoint_frame,
    build_bundle_frame,
    build_real_frames,
    cross_check_adjoint_frame,
)
from .manifold import ManifoldExpansion, expand_slow_manifold
from .models import get_model
from .response import ResponseExpansion, expand_response_functions
from .series import FourierTaylor
from .store import (
    read_json,
    read_series_csv,
    sha256_file,
    write_json,
    write_series_csv,
)
from .validation import run_validation

__all__ = ["PipelineResult", "run_pipeline", "Stage", "load_result"]


@dataclass
class PipelineResult:
    config: RunConfig
    model: object = None
    cycle: CycleResult | None = None
    spectrum: FloquetSpectrum | None = None
    resonance: object = None
    bundle: Frame | None = None
    adjoint: Frame | None = None
    bundle_real: Frame | None = None
    adjoint_real: Frame | None = None
    crosscheck: dict | None = None
    band_cut: int | None = None
    manifold: ManifoldExpansion | None = None
    response: ResponseExpansion | None = None
    validation: object = None
    manifest: dict = field(default_factory=dict)


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# save / load of individual artifacts

def save_cycle(out, cycle: CycleResult):
    write_series_csv(os.path.join(out, "cycle_coeff.csv"), cycle.series)
    write_json(
        os.path.join(out, "cycle.json"),
        {
            "period": cycle.period,
            "anchor": list(cycle.anchor),
            "grid_size": cycle.grid_size,
            "shooting_residual": cycle.shooting_residual,
        },
    )


def load_cycle(out) -> CycleResult:
    meta = read_json(os.path.join(out, "cycle.json"))
    series = read_series_csv(os.path.join(out, "cycle_coeff.csv"))
    samples = series.samples().real
    return CycleResult(
        anchor=np.asarray(meta["anchor"]),
        period=float(meta["period"]),
        series=series,
        samples=samples,
        shooting_residual=float(meta["shooting_residual"]),
        grid_size=int(meta["grid_size"]),
    )


def save_spectrum(out, spectrum: FloquetSpectrum):
    payload = spectrum.as_dict()
    payload["eigenvectors"] = [
        [[z.real, z.imag] for z in spectrum.eigenvectors[:, j]]
        for j in range(spectrum.dim)
    ]
    payload["monodromy"] = spectrum.monodromy.tolist()
    write_json(os.path.join(out, "spectrum.json"), payload)


def _complex_list(pairs):
    return np.array([complex(re, im) for re, im in pairs])


def load_spectrum(out) -> FloquetSpectrum:
    meta = read_json(os.path.join(out, "spectrum.json"))
    vecs = np.stack(
        [_complex_list(col) for col in meta["eigenvectors"]], axis=1
    )
    return FloquetSpectrum(
        period=float(meta["period"]),
        multipliers=_complex_list(meta["multipliers"]),
        exponents=_complex_list(meta["exponents"]),
        lyapunov=np.asarray(meta["lyapunov"]),
        eigenvectors=vecs,
        classes=tuple(meta["classes"]),
        monodromy=np.asarray(meta["monodromy"]),
        hyperbolicity_defect=float(meta["hyperbolicity_defect"]),
        eigenvector_condition=float(meta["eigenvector_condition"]),
        slow_index=int(meta["slow_index"]),
    )


def _frame_payload(frame: Frame) -> dict:
    return {
        "kind": frame.kind,
        "representation": frame.representation,
        "exponents": [[z.real, z.imag] for z in frame.exponents],
        "classes": list(frame.classes),
        "blocks": [
            {"kind": b.kind, "index": b.index, "alpha": b.alpha, "beta": b.beta}
            for b in frame.blocks
        ],
        "residual": frame.residual,
    }


def _frame_from_payload(meta, series) -> Frame:
    return Frame(
        kind=meta["kind"],
        representation=meta["representation"],
        series=series,
        exponents=_complex_list(meta["exponents"]),
        classes=tuple(meta["classes"]),
        blocks=tuple(
            RealBlock(b["kind"], b["index"], b["alpha"], b["beta"])
            for b in meta["blocks"]
        ),
        residual=float(meta["residual"]),
    )


def save_frames(out, result: PipelineResult):
    frames = {
        "bundle": result.bundle,
        "adjoint": result.adjoint,
        "bundle_real": result.bundle_real,
        "adjoint_real": result.adjoint_real,
    }
    meta = {"band_cut": result.band_cut}
    for name, frame in frames.items():
        if frame is None:
            continue
        write_series_csv(os.path.join(out, f"frame_{name}_coeff.csv"), frame.series)
        meta[name] = _frame_payload(frame)
    if result.crosscheck is not None:
        write_json(os.path.join(out, "adjoint_crosscheck.json"), result.crosscheck)
    write_json(os.path.join(out, "frames.json"), meta)


def load_frames(out, result: PipelineResult):
    meta = read_json(os.path.join(out, "frames.json"))
    result.band_cut = meta.get("band_cut")
    for name in ("bundle", "adjoint", "bundle_real", "adjoint_real"):
        if name not in meta:
            continue
        series = read_series_csv(os.path.join(out, f"frame_{name}_coeff.csv"))
        setattr(result, name, _frame_from_payload(meta[name], series))
    path = os.path.join(out, "adjoint_crosscheck.json")
    if os.path.exists(path):
        result.crosscheck = read_json(path)


def save_manifold(out, manifold: ManifoldExpansion):
    for n in range(manifold.total_order + 1):
        write_series_csv(
            os.path.join(out, f"manifold_order_{n:02d}_coeff.csv"),
            manifold.order_series(n),
        )
    write_json(
        os.path.join(out, "manifold.json"),
        {
            "nominal_order": manifold.nominal_order,
            "total_order": manifold.total_order,
            "period": manifold.period,
            "slow_exponent": manifold.slow_exponent,
            "gauge": manifold.gauge,
            "residuals": list(manifold.residuals),
            "divisor_minima": {str(k): v for k, v in manifold.divisor_minima.items()},
            "conjugation_drift": manifold.conjugation_drift,
        },
    )


def load_manifold(out) -> ManifoldExpansion:
    meta = read_json(os.path.join(out, "manifold.json"))
    orders = [
        read_series_csv(os.path.join(out, f"manifold_order_{n:02d}_coeff.csv"))
        for n in range(int(meta["total_order"]) + 1)
    ]
    return ManifoldExpansion(
        coeffs=FourierTaylor(tuple(orders)),
        nominal_order=int(meta["nominal_order"]),
        period=float(meta["period"]),
        slow_exponent=float(meta["slow_exponent"]),
        gauge=float(meta["gauge"]),
        residuals=np.asarray(meta["residuals"]),
        divisor_minima={int(k): v for k, v in meta["divisor_minima"].items()},
        conjugation_drift=float(meta["conjugation_drift"]),
    )


def save_response(out, response: ResponseExpansion):
    for n in range(response.order + 1):
        write_series_csv(
            os.path.join(out, f"response_phase_order_{n:02d}_coeff.csv"),
            response.phase.order_series(n),
        )
        write_series_csv(
            os.path.join(out, f"response_amplitude_order_{n:02d}_coeff.csv"),
            response.amplitude.order_series(n),
        )
    write_json(
        os.path.join(out, "response.json"),
        {
            "order": response.order,
            "period": response.period,
            "slow_exponent": response.slow_exponent,
            "solvability_residual": response.solvability_residual,
            "free_coefficient": response.free_coefficient,
            "normalization_defect": response.normalization_defect,
            "phase_residuals": list(response.phase_residuals),
            "amplitude_residuals": list(response.amplitude_residuals),
            "representation": response.representation,
            "fold_defect": response.fold_defect,
        },
    )


def load_response(out) -> ResponseExpansion:
    meta = read_json(os.path.join(out, "response.json"))
    L = int(meta["order"])
    phase = [
        read_series_csv(os.path.join(out, f"response_phase_order_{n:02d}_coeff.csv"))
        for n in range(L + 1)
    ]
    amp = [
        read_series_csv(
            os.path.join(out, f"response_amplitude_order_{n:02d}_coeff.csv")
        )
        for n in range(L + 1)
    ]
    return ResponseExpansion(
        phase=FourierTaylor(tuple(phase)),
        amplitude=FourierTaylor(tuple(amp)),
        period=float(meta["period"]),
        slow_exponent=float(meta["slow_exponent"]),
        solvability_residual=float(meta["solvability_residual"]),
        free_coefficient=float(meta["free_coefficient"]),
        normalization_defect=float(meta["normalization_defect"]),
        phase_residuals=np.asarray(meta["phase_residuals"]),
        amplitude_residuals=np.asarray(meta["amplitude_residuals"]),
        representation=meta["representation"],
        fold_defect=float(meta["fold_defect"]),
    )


def save_validation(out, report):
    payload = report.summary()
    payload["orthogonality"] = {
        k: (list(v) if isinstance(v, np.ndarray) else v)
        for k, v in report.orthogonality.items()
    }
    payload["trajectory"] = {
        k: (list(v) if isinstance(v, np.ndarray) else v)
        for k, v in report.trajectory.items()
    }
    write_json(os.path.join(out, "validation.json"), payload)
    domain = report.domain
    header = ["theta"]
    for tol in domain.tolerances:
        header += [f"sigma_max_pos_{tol:.0e}", f"sigma_max_neg_{tol:.0e}"]
    rows = []
    for i, th in enumerate(domain.theta):
        row = [th]
        for t_i in range(len(domain.tolerances)):
            row += [domain.sigma_pos[t_i][i], domain.sigma_neg[t_i][i]]
        rows.append(row)
    from .store import write_rows_csv

    write_rows_csv(os.path.join(out, "accuracy_domain.csv"), header, rows)


# ---------------------------------------------------------------------------
# stages

class Stage:
    CYCLE = "cycle"
    FLOQUET = "floquet"
    FRAMES = "frames"
    MANIFOLD = "manifold"
    RESPONSE = "response"
    VALIDATE = "validate"
    ORDER = (CYCLE, FLOQUET, FRAMES, MANIFOLD, RESPONSE, VALIDATE)


def run_pipeline(
    config: RunConfig,
    out_dir: str | None = None,
    through: str = Stage.VALIDATE,
    resume: PipelineResult | None = None,
) -> PipelineResult:
    """Execute stages up to ``through`` inclusive, persisting artifacts.

    ``resume`` carries artifacts of earlier stages (e.g. loaded from disk by
    the CLI); stages with artifacts present are skipped.
    """
    config = config.validate()
    out = _ensure_dir(out_dir or config.out_dir)
    result = resume or PipelineResult(config=config)
    result.config = config
    result.model = get_model(config.model, config.model_params)
    model = result.model
    last = Stage.ORDER.index(through)
    failed_stage = None

    try:
        if last >= 0 and result.cycle is None:
            result.cycle = find_cycle(
                model,
                np.asarray(config.effective_guess(), dtype=float),
                settings=config.integrator,
                grid_size=config.grid_size,
                relax_time=config.relax_time,
                newton_tol=config.newton_tol,
            )
            save_cycle(out, result.cycle)

        if last >= 1:
            if result.spectrum is None:
                result.spectrum = floquet_spectrum(
                    model, result.cycle.anchor, result.cycle.period, config.integrator
                )
                save_spectrum(out, result.spectrum)
            if result.resonance is None:
                order = config.resonance_order or max(config.order, 2)
                result.resonance = check_resonances(
                    result.spectrum, order, config.resonance_tol
                )
                write_json(
                    os.path.join(out, "resonance.json"), result.resonance.summary()
                )
                if result.resonance.is_resonant:
                    worst = result.resonance.flagged[0]
                    raise ResonanceError(
                        f"flagged resonance: multi-index {worst[0]} against "
                        f"direction {worst[1] + 1}, residual {worst[2]:.3e}"
                    )

        if last >= 2 and result.bundle is None:
            build = build_bundle_frame(
                model,
                result.cycle,
                result.spectrum,
                settings=config.integrator,
                scales=config.bundle_scale,
            )
            result.bundle = build.bundle
            result.cycle = build.cycle  # spectrally polished orbit and period
            result.band_cut = build.diagnostics["band_cut"]
            save_cycle(out, result.cycle)
            jac = model.jacobian(result.cycle.samples)
            result.adjoint = build_adjoint_frame(
                result.bundle, jac, result.cycle.period, k_cut=result.band_cut
            )
            result.bundle_real, result.adjoint_real = build_real_frames(
                result.bundle, result.adjoint
            )
            result.crosscheck = cross_check_adjoint_frame(
                model,
                result.cycle,
                result.spectrum,
                result.bundle,
                result.adjoint,
                settings=config.integrator,
            )
            save_frames(out, result)

        if last >= 3 and result.manifold is None:
            result.manifold = expand_slow_manifold(
                model,
                result.cycle,
                result.bundle,
                result.adjoint,
                order=config.order,
                extra_orders=config.extra_orders,
                gauge=config.gauge,
                small_divisor_tol=config.small_divisor_tol,
            )
            save_manifold(out, result.manifold)

        if last >= 4 and result.response is None:
            result.response = expand_response_functions(
                model,
                result.manifold,
                result.bundle,
                result.adjoint,
                order=config.order,
                representation=config.representation,
                bundle_real=result.bundle_real,
                adjoint_real=result.adjoint_real,
                small_divisor_tol=config.small_divisor_tol,
                solvability_tol=config.solvability_tol,
            )
            save_response(out, result.response)

        if last >= 5 and result.validation is None:
            result.validation = run_validation(
                model,
                result.manifold,
                result.response,
                tolerances=config.tolerances,
                scan_max=config.sigma_scan_max,
                n_samples=config.n_samples,
                horizon_periods=config.horizon_periods,
                seed=config.seed,
                settings=config.integrator,
            )
            save_validation(out, result.validation)
    except SlowphaseError as exc:
        failed_stage = _current_stage(result)
        result.manifest = _build_manifest(out, result, failed_stage, str(exc))
        write_json(os.path.join(out, "manifest.json"), result.manifest)
        raise

    result.manifest = _build_manifest(out, result, None, None)
    write_json(os.path.join(out, "manifest.json"), result.manifest)
    return result


def _current_stage(result: PipelineResult) -> str:
    if result.cycle is None:
        return Stage.CYCLE
    if result.spectrum is None or result.resonance is None or (
        result.resonance is not None and result.resonance.is_resonant
    ):
        return Stage.FLOQUET
    if result.bundle is None:
        return Stage.FRAMES
    if result.manifold is None:
        return Stage.MANIFOLD
    if result.response is None:
        return Stage.RESPONSE
    return Stage.VALIDATE


def _build_manifest(out, result: PipelineResult, failed_stage, error) -> dict:
    manifest = {
        "tool": "slowphase",
        "version": __version__,
        "config": result.config.echo_text(),
        "failed_stage": failed_stage,
        "error": error,
    }
    if result.cycle is not None:
        manifest["period"] = result.cycle.period
        manifest["shooting_residual"] = result.cycle.shooting_residual
    if result.spectrum is not None:
        spectrum = result.spectrum
        manifest["multipliers_shooting"] = [
            [z.real, z.imag] for z in spectrum.multipliers
        ]
        manifest["exponents_shooting"] = [
            [z.real, z.imag] for z in spectrum.exponents
        ]
        manifest["lyapunov"] = list(map(float, spectrum.lyapunov))
        manifest["classes"] = list(spectrum.classes)
        manifest["hyperbolicity_defect"] = spectrum.hyperbolicity_defect
    if result.resonance is not None:
        manifest["resonance"] = result.resonance.summary()
    if result.bundle is not None:
        # table recomputed from the polished Floquet frame: the refined
        # exponents are spectrally accurate, unlike raw eigenvalues of the
        # monodromy for strongly contracting directions
        T = result.cycle.period
        refined = result.bundle.exponents
        manifest["exponents"] = [[z.real, z.imag] for z in refined]
        manifest["multipliers"] = [
            [np.exp(z * T).real, np.exp(z * T).imag] for z in refined
        ]
        manifest["frame_residuals"] = {
            "bundle": result.bundle.residual,
            "adjoint": result.adjoint.residual if result.adjoint else None,
        }
        manifest["band_cut"] = result.band_cut
    if result.crosscheck is not None:
        manifest["adjoint_crosscheck"] = {
            k: (list(v) if isinstance(v, np.ndarray) else v)
            for k, v in result.crosscheck.items()
        }
    if result.manifold is not None:
        manifest["manifold_residuals"] = list(result.manifold.residuals)
        manifest["manifold_divisor_minima"] = {
            str(k): v for k, v in result.manifold.divisor_minima.items()
        }
    if result.response is not None:
        manifest["response"] = {
            "solvability_residual": result.response.solvability_residual,
            "normalization_defect": result.response.normalization_defect,
            "phase_residuals": list(result.response.phase_residuals),
            "amplitude_residuals": list(result.response.amplitude_residuals),
            "representation": result.response.representation,
        }
    if result.validation is not None:
        manifest["validation"] = result.validation.summary()

    inventory = {}
    for name in sorted(os.listdir(out)):
        if name == "manifest.json" or not (
            name.endswith(".csv") or name.endswith(".json")
        ):
            continue
        inventory[name] = sha256_file(os.path.join(out, name))
    manifest["files"] = inventory
    return manifest


def load_result(config: RunConfig, out_dir: str | None = None) -> PipelineResult:
    """Load whatever artifacts exist in the output directory."""
    out = out_dir or config.out_dir
    result = PipelineResult(config=config)
    result.model = get_model(config.model, config.model_params)
    try:
        result.cycle = load_cycle(out)
    except (OSError, ValueError):
        return result
    try:
        result.spectrum = load_spectrum(out)
    except (OSError, ValueError):
        return result
    try:
        load_frames(out, result)
    except (OSError, ValueError):
        return result
    try:
        result.manifold = load_manifold(out)
    except (OSError, ValueError):
        return result
    try:
        result.response = load_response(out)
    except (OSError, ValueError):
        return result
    return result
