"""Main CLI application."""
import argparse
import json
import math
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from analyzer.aom import GROUPS, AomExperiment
from analyzer.comb_signals import CombSignals
from analyzer.inversion import Inversion
from analyzer.lockin import WINDOW_FACTOR, LockIn
from analyzer.material import Material
from analyzer.oracle import RESOLUTION, Oracle
from config.config import Config
from data.loader import INVERTIBLE_KINDS, validate_config
from models.comb import GRID_TOLERANCE, OFFSET_REGIME_LIMIT
from models.errors import CombSpecError, CombSpecWarning, ConfigValidationError, RankDeficiencyError
from models.experiment import ExperimentConfig
from models.signal import Spectrum
from storage.export import Artifact, Exporter


def error_payload(error: BaseException) -> dict:
    """Машиночитаемое описание ошибки с цепочкой причин."""
    context = []
    cause = error.__cause__ or error.__context__
    while cause is not None:
        context.append(f"{type(cause).__name__}: {cause}")
        cause = cause.__cause__ or cause.__context__
    payload = {"error": type(error).__name__, "message": str(error), "context": context}
    if isinstance(error, ConfigValidationError):
        payload["errors"] = error.errors
    return payload


def tolerances(cfg: ExperimentConfig) -> dict:
    """Все допуски и ограничения, действующие в запуске (для манифеста)."""
    return {
        "tooth_floor": [c.tooth_floor for c in cfg.combs],
        "grid_tolerance": GRID_TOLERANCE,
        "offset_regime_limit": OFFSET_REGIME_LIMIT,
        "lowpass_cutoff": cfg.lowpass,
        "max_order": cfg.max_order,
        "max_terms": cfg.max_terms,
        "lockin_tau": cfg.lockin.tau if cfg.lockin else None,
        "lockin_window_factor": WINDOW_FACTOR,
        "shots": cfg.shots,
        "lam": cfg.inversion.lam,
        "oracle_resolution": RESOLUTION,
        "threads": cfg.threads,
        "seed": cfg.seed,
    }


def _times(cfg: ExperimentConfig) -> np.ndarray:
    return cfg.time.t0 + cfg.time.dt * np.arange(cfg.time.samples)


def _spectrum_artifacts(cfg: ExperimentConfig, spectrum: Spectrum, artifacts: Dict[str, Artifact]):
    if cfg.lowpass is not None:
        spectrum = CombSignals.apply_lowpass(spectrum, cfg.lowpass)
    artifacts["spikes.csv"] = spectrum.to_frame()
    if cfg.write_terms:
        artifacts["terms.csv"] = spectrum.terms
    if cfg.time is not None and cfg.kind != "dual_linear":
        artifacts["time_series.csv"] = CombSignals.signal_time(spectrum, _times(cfg)).to_frame()
    return spectrum


def _third_order(cfg: ExperimentConfig, combs) -> Spectrum:
    budget = {**cfg.budget, "threads": cfg.threads}
    if cfg.kind == "quad_third":
        return CombSignals.quad_comb_signal(combs, cfg.system, cfg.grid, cfg.detect, cfg.projection, **budget)
    if cfg.variant == "two_by_two":
        return CombSignals.dual_comb_two_by_two(combs, cfg.system, cfg.grid, cfg.detect, cfg.projection, **budget)
    return CombSignals.dual_comb_third_order(combs, cfg.system, cfg.grid, cfg.detect, cfg.projection, **budget)


def run_dual_linear(cfg: ExperimentConfig) -> Dict[str, Artifact]:
    """Линейный двухгребёночный эксперимент."""
    artifacts: Dict[str, Artifact] = {}
    spectrum = CombSignals.linear_signal_freq(cfg.combs, cfg.system, cfg.grid, cfg.detect, cfg.projection)
    spectrum = _spectrum_artifacts(cfg, spectrum, artifacts)
    if cfg.time is not None:
        series = CombSignals.linear_signal_time(
            cfg.combs, cfg.system, cfg.grid, _times(cfg), cfg.detect, cfg.projection, cfg.time.prefilter,
        )
        if not cfg.time.prefilter and cfg.lowpass is not None:
            series = CombSignals.apply_lowpass(series, cfg.lowpass)
        artifacts["time_series.csv"] = series.to_frame()
    if cfg.inversion.enabled:
        recovered = Inversion.invert_linear(spectrum, cfg.combs)
        table = recovered.table.copy()
        model = np.asarray(Material.chi1(cfg.system, table["frequency"].to_numpy(), cfg.projection))
        table["model_re"], table["model_imag"] = model.real, model.imag
        artifacts["chi1_recovered.csv"] = table
        artifacts["inversion_report.json"] = recovered.report
    return artifacts


def run_third_order(cfg: ExperimentConfig) -> Dict[str, Artifact]:
    """Четырёхгребёночный или двухгребёночный эксперимент третьего порядка."""
    artifacts: Dict[str, Artifact] = {}
    spectrum = _spectrum_artifacts(cfg, _third_order(cfg, cfg.combs), artifacts)
    if not cfg.inversion.enabled:
        return artifacts

    spectra = [spectrum]
    for offsets in cfg.inversion.runs:
        print(f"⏳ Дополнительный прогон со смещениями {list(offsets)}")
        combs = [comb.with_offset(offset) for comb, offset in zip(cfg.combs, offsets)]
        extra = _third_order(cfg, combs)
        spectra.append(CombSignals.apply_lowpass(extra, cfg.lowpass) if cfg.lowpass is not None else extra)
    system = Inversion.build_folding_system(spectra, cfg.inversion.lam)
    report = Inversion.rank_report(system)
    try:
        solution = Inversion.solve_folding(system)
    except RankDeficiencyError as e:
        print(f"⚠️  {e}")
        report["solved"] = False
        report["solver_error"] = str(e)
    else:
        table = solution.table.copy()
        rows = table[["omega1", "omega2", "omega3"]].to_numpy()
        model = Material.chi3_batch(cfg.system, rows, cfg.projection) if len(rows) else np.zeros(0, complex)
        table["model_re"], table["model_imag"] = model.real, model.imag
        artifacts["chi3_recovered.csv"] = table
        report.update({
            "solved": True,
            "condition": solution.condition,
            "max_residual": float(np.max(np.abs(solution.residuals), initial=0.0)),
        })
    report["unconstrained_keys"] = [list(k) for k in system.unconstrained]
    artifacts["rank_report.json"] = report
    return artifacts


def _group_of(frequency: float, cfg) -> str:
    for name, sign in GROUPS.items():
        if math.isclose(abs(frequency), abs(cfg.beat(sign)), rel_tol=1e-9):
            return name
    return ""


def run_aom(cfg: ExperimentConfig) -> Dict[str, Artifact]:
    """AOM-флуоресценция: карта задержек для групп путей R_+ и R_−."""
    system, lockin, grid = cfg.system, cfg.lockin, cfg.delays
    pathways = AomExperiment.enumerate_pathways(system)
    print(f"✅ Найдено путей: {len(pathways)}")
    # запись должна покрывать окно детектора 5·τ
    shots = max(cfg.shots, LockIn.window_samples(cfg.trains[0].rep_period, lockin.tau))
    print(f"✅ Выстрелов в записи: {shots}")
    record = AomExperiment.shot_sequence(system, cfg.trains, grid, shots, pathways, cfg.threads)
    groups = AomExperiment.extract_pathway_groups(record, lockin, cfg.unmix)

    t1, t2, t3 = np.meshgrid(grid.t1, grid.t2, grid.t3, indexing="ij")
    frames = []
    report = {"groups": {}}
    for name, sign in GROUPS.items():
        values = groups[name]
        ideal = AomExperiment.group_amplitude(record, lockin, sign)
        frames.append(pd.DataFrame({
            "group": name,
            "t1": t1.ravel(), "t2": t2.ravel(), "t3": t3.ravel(),
            "re": values.real.ravel(), "imag": values.imag.ravel(),
            "ideal_re": ideal.real.ravel(), "ideal_imag": ideal.imag.ravel(),
        }))
        scale = float(np.max(np.abs(ideal), initial=0.0))
        entry = {
            "beat": lockin.beat(sign),
            "crosstalk": float(np.max(np.abs(values - ideal), initial=0.0)) / scale if scale > 0 else None,
        }
        if grid.t3.size > 1:
            entry["t3_frequency"] = AomExperiment.fit_oscillation(values[0, 0, :], grid.step("t3"))
        report["groups"][name] = entry
    report["downshift"] = {
        f"{system.labels[e]}-{system.labels[system.ground]}": LockIn.downshift_map(
            float(system.energies[e] - system.energies[system.ground]), lockin.wbar43,
        )
        for e in system.emitting
    }

    artifacts: Dict[str, Artifact] = {
        "aom_map.csv": pd.concat(frames, ignore_index=True),
        "pathways.csv": pd.DataFrame({
            "diagram_id": [p.diagram_id for p in pathways],
            "interactions": [p.label for p in pathways],
            "signs": [" ".join(f"{s:+d}" for s in p.signs) for p in pathways],
            "modulation": record.modulation,
            "group": [_group_of(f, lockin) for f in record.modulation],
        }),
        "aom_report.json": report,
    }
    return artifacts


def run_oracle(cfg: ExperimentConfig) -> Dict[str, Artifact]:
    """Сравнение линейного приближения с прямым интегрированием для конечного цуга."""
    settings = cfg.oracle
    comb = cfg.combs[settings.comb - 1]
    deviations = []
    largest = None
    for scale in settings.scales:
        print(f"⏳ Интегрирование, |E| = {scale:g}")
        run = Oracle.comb_run(cfg.system, comb, settings.n_pulses, settings.dt, scale, settings.padding)
        full = Oracle.propagate(run)
        linear = Oracle.propagate_linear(run)
        deviations.append(float(np.linalg.norm(full.signal - linear.signal) / np.linalg.norm(linear.signal)))
        if largest is None or scale > largest[0]:
            largest = (scale, run, full)

    scale, run, full = largest
    flux = Oracle.population_flux_check(run, full)
    report = {
        "scales": list(settings.scales),
        "deviations": deviations,
        "slope": Oracle.scaling_slope(settings.scales, deviations) if len(deviations) > 1 else None,
        "trace_error": full.trace_error,
        "hermiticity_error": full.hermiticity_error,
        "min_population": full.min_population,
        "max_population": full.max_population,
        "population_flux": flux,
        "energy_balance": Oracle.energy_balance(full),
        "trajectory_scale": scale,
    }
    trajectory = pd.DataFrame({
        "t": full.times,
        "field": full.field,
        "dipole": full.dipole,
        "signal": full.signal,
        "emitting_population": full.emitting_population,
        "emitting_signal": full.emitting_signal,
        "work": full.work,
        "energy": full.energy,
    })
    return {"trajectory.csv": trajectory, "oracle_report.json": report}


RUNNERS = {
    "dual_linear": run_dual_linear,
    "quad_third": run_third_order,
    "dual_third": run_third_order,
    "aom_fluorescence": run_aom,
    "oracle_check": run_oracle,
}


def run_experiment(cfg: ExperimentConfig) -> Dict[str, Artifact]:
    """Выполнить эксперимент и вернуть артефакты {имя файла: таблица или словарь}."""
    print(f"\n⏳ Эксперимент {cfg.kind}...")
    try:
        return RUNNERS[cfg.kind](cfg)
    except CombSpecError as e:
        raise CombSpecError(f"{cfg.kind} failed: {e}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="combspec", description="Multi-comb nonlinear spectroscopy simulator")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="проверить конфигурацию")
    validate.add_argument("--config", required=True, type=Path)

    for name, text in (("run", "запустить эксперимент"),
                       ("invert", "запустить эксперимент с обращением χ"),
                       ("oracle", "прямое интегрирование для проверки")):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--config", required=True, type=Path)
        sub.add_argument("--out-dir", type=Path, default=None)
        sub.add_argument("--threads", type=int, default=None)
        sub.add_argument("--seed", type=int, default=None)
    return parser


def execute(args: argparse.Namespace) -> Optional[Path]:
    """Выполнить команду; возвращает каталог с результатами (None для validate)."""
    cfg = validate_config(args.config)
    if args.command == "validate":
        print("✅ Конфигурация корректна")
        Config.print_config()
        print(json.dumps(cfg.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))
        return None

    if args.command == "invert":
        if cfg.kind not in INVERTIBLE_KINDS:
            raise CombSpecError(f"invert needs one of {list(INVERTIBLE_KINDS)}, got {cfg.kind!r}")
        cfg = cfg.with_inversion()
    if args.command == "oracle" and cfg.kind != "oracle_check":
        raise CombSpecError(f"oracle needs an oracle_check config, got {cfg.kind!r}")
    if args.threads is not None:
        if args.threads < 1:
            raise CombSpecError("--threads must be >= 1")
        cfg = replace(cfg, threads=args.threads)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    output_dir = args.out_dir or cfg.output_dir

    artifacts = run_experiment(cfg)
    Exporter.print_summary(cfg.kind, artifacts)
    return Exporter.export_bundle(artifacts, cfg.settings, tolerances(cfg), output_dir)


def _print_warnings(caught) -> None:
    for item in caught:
        print(f"⚠️  {item.message}")


def main(argv: Optional[List[str]] = None) -> int:
    """Главная функция: 0 при успехе, 1 и JSON ошибки в stdout при сбое."""
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CombSpecWarning)
        try:
            Config.validate()
            execute(args)
        except Exception as e:
            _print_warnings(caught)
            print(f"❌ Ошибка: {e}")
            print(json.dumps(error_payload(e), ensure_ascii=False, sort_keys=True))
            return 1
    _print_warnings(caught)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
