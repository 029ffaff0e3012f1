"""Experiment configuration loading and validation."""
import re
import warnings
from pathlib import Path
from typing import Callable, Dict, List, Optional

import yaml

from analyzer.comb_signals import CombSignals
from analyzer.combfield import CombField
from config.config import Config
from models.comb import AomPulseTrainSpec, CombSpec, FrequencyGrid
from models.errors import CombSpecError, CombSpecWarning, ConfigValidationError
from models.experiment import (
    DUAL_THIRD_VARIANTS,
    EXPERIMENT_KINDS,
    REQUIRED_COMBS,
    REQUIRED_TRAINS,
    ExperimentConfig,
    InversionSettings,
    OracleSettings,
    TimeSampling,
)
from models.lockin import LockInConfig
from models.pathway import DelayGrid
from models.system import PROJECTIONS, LevelSystem, ladder, random_system, two_level

REQUIRED = "<required>"

# секция -> ключ -> значение по умолчанию
SECTIONS: Dict[str, Dict[str, object]] = {
    "experiment": {"kind": REQUIRED, "variant": "third", "detect": 1, "projection": "full",
                   "threads": None, "seed": None},
    "comb": {"rep_spacing": REQUIRED, "carrier": REQUIRED, "width": REQUIRED, "offset": 0.0,
             "amplitude": 1.0, "ce_offset": 0.0, "global_phase": 0.0,
             "tooth_floor": Config.TOOTH_FLOOR, "label": ""},
    "train": {"rep_period": REQUIRED, "aom_freq": REQUIRED, "carrier": 0.0, "delay": 0.0,
              "amplitude": 1.0, "duration": None, "pulse_count": 1},
    "grid": {"step": REQUIRED, "dt": None, "samples": None, "t0": 0.0, "prefilter": True},
    "lowpass": {"cutoff": REQUIRED},
    "budget": {"max_order": None, "max_terms": Config.MAX_TERMS},
    "lockin": {"phi21": None, "phi43": None, "wbar21": 0.0, "wbar43": 0.0, "theta": 0.0,
               "tau": Config.LOCKIN_TAU, "shots": Config.SHOTS, "unmix": False},
    "delays": {"t1_max": REQUIRED, "t3_max": REQUIRED, "steps": REQUIRED, "t2": 0.0},
    "inversion": {"enabled": False, "lam": 0.0, "runs": []},
    "oracle": {"comb": 1, "n_pulses": 50, "dt": 0.01, "scales": [1e-3, 1e-4, 1e-5], "padding": None},
    "output": {"dir": str(Config.OUTPUT_DIR), "terms": True},
}

# модель системы -> (обязательные ключи, необязательные ключи)
SYSTEM_MODELS = {
    "two_level": ({"omega_eg", "gamma"}, {"mu", "decay"}),
    "ladder": ({"omega_eg", "omega_fg", "gamma"}, {"mu_eg", "mu_fe", "decay"}),
    "random": ({"size"}, {"seed"}),
    "explicit": ({"energies", "dipoles", "dephasing"}, {"decay", "ground", "emitting", "labels"}),
}

NUMBERED = re.compile(r"^(comb|train)\.(\d+)$")

INVERTIBLE_KINDS = ("dual_linear", "quad_third", "dual_third")


class ConfigLoader:
    """Загрузка YAML-конфигурации эксперимента и полная проверка."""

    @staticmethod
    def load(file_path) -> Dict:
        """
        Прочитать YAML-файл конфигурации.

        Raises:
            ConfigValidationError: файл не читается или не является YAML
        """
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
        except OSError as e:
            raise ConfigValidationError([f"cannot read config {file_path}: {e}"]) from e
        except yaml.YAMLError as e:
            raise ConfigValidationError([f"invalid YAML in {file_path}: {e}"]) from e
        return {} if data is None else data

    @staticmethod
    def _section_base(name: str) -> Optional[str]:
        match = NUMBERED.match(name)
        if match:
            return match.group(1)
        if name == "system" or name in SECTIONS and name not in ("comb", "train"):
            return name
        return None

    @staticmethod
    def _normalise(data: Dict, errors: List[str]) -> Dict[str, Dict]:
        """Проверить имена секций и ключей, подставить значения по умолчанию."""
        sections = {}
        for raw_name, body in data.items():
            name = str(raw_name)
            base = ConfigLoader._section_base(name)
            if base is None:
                errors.append(f"unknown section [{name}]")
                continue
            body = {} if body is None else body
            if not isinstance(body, dict):
                errors.append(f"section [{name}] must be a mapping")
                continue
            body = {str(k): v for k, v in body.items()}
            if base == "system":
                sections[name] = body
                continue
            allowed = SECTIONS[base]
            for key in sorted(set(body) - set(allowed)):
                errors.append(f"unknown key '{key}' in [{name}]")
            for key, default in allowed.items():
                if default == REQUIRED and key not in body:
                    errors.append(f"missing key '{key}' in [{name}]")
            merged = {k: v for k, v in allowed.items() if v != REQUIRED}
            merged.update({k: v for k, v in body.items() if k in allowed})
            sections[name] = merged
        return sections

    @staticmethod
    def _build(name: str, factory: Callable, errors: List[str]):
        """Вызвать конструктор модели и собрать ошибку вместо исключения."""
        try:
            return factory()
        except (CombSpecError, TypeError, ValueError) as e:
            errors.append(f"[{name}] {e}")
            return None

    @staticmethod
    def build_system(body: Dict, errors: List[str]) -> Optional[LevelSystem]:
        """LevelSystem из секции [system] (модели two_level, ladder, random, explicit)."""
        model = body.get("model", "explicit")
        if model not in SYSTEM_MODELS:
            errors.append(f"[system] unknown model {model!r}; expected one of {sorted(SYSTEM_MODELS)}")
            return None
        required, optional = SYSTEM_MODELS[model]
        keys = set(body) - {"model"}
        for key in sorted(keys - required - optional):
            errors.append(f"unknown key '{key}' in [system] for model '{model}'")
        missing = sorted(required - keys)
        for key in missing:
            errors.append(f"missing key '{key}' in [system] for model '{model}'")
        if missing:
            return None

        params = {k: v for k, v in body.items() if k != "model" and k in required | optional}
        builders = {
            "two_level": lambda: two_level(**params),
            "ladder": lambda: ladder(**params),
            "random": lambda: random_system(**params),
            "explicit": lambda: LevelSystem(**{
                **params,
                "emitting": tuple(params.get("emitting", ())),
                "labels": tuple(params.get("labels", ())),
            }),
        }
        return ConfigLoader._build("system", builders[model], errors)

    @staticmethod
    def _numbered(sections: Dict[str, Dict], base: str, errors: List[str]) -> List[Dict]:
        numbers = sorted(int(NUMBERED.match(n).group(2)) for n in sections if n.startswith(base + "."))
        if numbers != list(range(1, len(numbers) + 1)):
            errors.append(f"[{base}.N] sections must be numbered 1..N, got {numbers}")
        return [(n, sections[f"{base}.{n}"]) for n in numbers]

    @staticmethod
    def validate(data: Dict) -> ExperimentConfig:
        """
        Проверить конфигурацию целиком и собрать ExperimentConfig.

        Все нарушения собираются в один список: неизвестные секции и
        ключи, пропущенные обязательные поля, число гребёнок для вида
        эксперимента, кратность частот шагу сетки и т.д.

        Raises:
            ConfigValidationError: со списком всех найденных ошибок
        """
        errors: List[str] = []
        if not isinstance(data, dict):
            raise ConfigValidationError(["config must be a mapping of sections"])
        sections = ConfigLoader._normalise(data, errors)

        experiment = sections.get("experiment")
        if experiment is None:
            errors.append("missing section [experiment]")
            experiment = {k: v for k, v in SECTIONS["experiment"].items() if v != REQUIRED}
        kind = experiment.get("kind")
        if kind is not None and kind not in EXPERIMENT_KINDS:
            errors.append(f"unknown experiment kind {kind!r}; expected one of {list(EXPERIMENT_KINDS)}")

        system = None
        if "system" not in sections:
            errors.append("missing section [system]")
        else:
            system = ConfigLoader.build_system(sections["system"], errors)

        combs = []
        for n, body in ConfigLoader._numbered(sections, "comb", errors):
            params = {k: v for k, v in body.items() if k != "label"}
            label = body.get("label") or f"comb.{n}"
            comb = ConfigLoader._build(f"comb.{n}", lambda: CombSpec(**params, label=label), errors)
            if comb is not None:
                combs.append(comb)
        trains = []
        for n, body in ConfigLoader._numbered(sections, "train", errors):
            train = ConfigLoader._build(f"train.{n}", lambda: AomPulseTrainSpec(**body), errors)
            if train is not None:
                trains.append(train)

        comb_count = sum(1 for n in sections if n.startswith("comb."))
        train_count = sum(1 for n in sections if n.startswith("train."))
        if kind in REQUIRED_COMBS and comb_count != REQUIRED_COMBS[kind]:
            errors.append(f"{kind} requires {REQUIRED_COMBS[kind]} combs, got {comb_count}")
        if kind in REQUIRED_TRAINS and train_count != REQUIRED_TRAINS[kind]:
            errors.append(f"{kind} requires {REQUIRED_TRAINS[kind]} pulse trains, got {train_count}")

        grid = None
        time = None
        if "grid" in sections:
            body = sections["grid"]
            grid = ConfigLoader._build("grid", lambda: FrequencyGrid(float(body["step"])), errors) \
                if "step" in body else None
            if body.get("dt") is not None or body.get("samples") is not None:
                time = ConfigLoader._build("grid", lambda: ConfigLoader._time_sampling(body), errors)
        elif kind in REQUIRED_COMBS and kind != "oracle_check":
            errors.append(f"{kind} requires a [grid] section")
        if grid is not None and kind != "oracle_check":
            for comb in combs:
                for what, value in (("spacing", comb.spacing), ("ce_offset", comb.ce_offset)):
                    ConfigLoader._build(comb.label, lambda: grid.index_of(value, f"{comb.label} {what}"), errors)

        detect = experiment.get("detect", 1)
        if combs and not (isinstance(detect, int) and 1 <= detect <= len(combs)):
            errors.append(f"[experiment] detect must be a comb number 1..{len(combs)}, got {detect!r}")
        projection = experiment.get("projection", "full")
        if not (projection in PROJECTIONS or isinstance(projection, int) and system is not None
                and 0 <= projection < system.size):
            errors.append(f"[experiment] projection {projection!r} is not 'full', 'ground', 'emitting' or a level index")
        variant = experiment.get("variant", "third")
        if variant not in DUAL_THIRD_VARIANTS:
            errors.append(f"[experiment] variant must be one of {list(DUAL_THIRD_VARIANTS)}")

        lowpass = None
        if "lowpass" in sections and "cutoff" in sections["lowpass"]:
            lowpass = sections["lowpass"]["cutoff"]
            if not isinstance(lowpass, (int, float)) or lowpass <= 0:
                errors.append("[lowpass] cutoff must be > 0")
            elif combs and lowpass >= min(c.spacing for c in combs):
                errors.append("[lowpass] cutoff must be below the comb spacing")

        budget = sections.get("budget", {k: v for k, v in SECTIONS["budget"].items()})
        max_order = budget.get("max_order")
        if max_order is not None and not (isinstance(max_order, int) and max_order >= 0):
            errors.append("[budget] max_order must be a non-negative integer")
        max_terms = budget.get("max_terms", Config.MAX_TERMS)
        if not (isinstance(max_terms, int) and max_terms >= 1):
            errors.append("[budget] max_terms must be a positive integer")

        lockin_body = sections.get("lockin", {k: v for k, v in SECTIONS["lockin"].items()})
        lockin = None
        delays = None
        if kind == "aom_fluorescence":
            lockin = ConfigLoader._build("lockin", lambda: ConfigLoader._lockin(lockin_body, trains), errors)
            if "delays" not in sections:
                errors.append("aom_fluorescence requires a [delays] section")
            else:
                body = sections["delays"]
                if all(k in body for k in ("t1_max", "t3_max", "steps")):
                    delays = ConfigLoader._build("delays", lambda: DelayGrid.uniform(
                        float(body["t1_max"]), float(body["t3_max"]), int(body["steps"]), float(body["t2"]),
                    ), errors)
        shots = lockin_body.get("shots", Config.SHOTS)
        if not (isinstance(shots, int) and shots >= 2):
            errors.append("[lockin] shots must be an integer >= 2")

        inversion = ConfigLoader._build(
            "inversion", lambda: ConfigLoader._inversion(sections.get("inversion", {}), kind, len(combs)), errors,
        )
        if (kind in ("quad_third", "dual_third") and system is not None and grid is not None
                and len(combs) == REQUIRED_COMBS[kind] and not errors):
            problem = ConfigLoader._population_check(kind, variant, system, combs, grid, max_order, inversion)
            if problem is not None:
                errors.append(f"[system] {problem}")
        oracle = ConfigLoader._build("oracle", lambda: ConfigLoader._oracle(sections.get("oracle", {}), len(combs)), errors)

        output = sections.get("output", {k: v for k, v in SECTIONS["output"].items()})
        output_dir = Config.output_override() or Path(output.get("dir", Config.OUTPUT_DIR))
        threads = experiment.get("threads") or Config.THREADS
        if not (isinstance(threads, int) and threads >= 1):
            errors.append("[experiment] threads must be a positive integer")

        if errors:
            raise ConfigValidationError(errors)

        return ExperimentConfig(
            kind=kind,
            system=system,
            combs=combs,
            trains=trains,
            grid=grid,
            variant=variant,
            detect=detect,
            projection=projection,
            time=time,
            lowpass=float(lowpass) if lowpass is not None else None,
            max_order=max_order,
            max_terms=max_terms,
            lockin=lockin,
            shots=shots,
            unmix=bool(lockin_body.get("unmix", False)),
            delays=delays,
            inversion=inversion,
            oracle=oracle,
            output_dir=output_dir,
            write_terms=bool(output.get("terms", True)),
            threads=threads,
            seed=experiment.get("seed"),
            settings={name: sections[name] for name in sorted(sections)},
        )

    @staticmethod
    def _population_check(kind: str, variant: str, system: LevelSystem, combs: List[CombSpec],
                          grid: FrequencyGrid, max_order: Optional[int],
                          inversion: Optional[InversionSettings]) -> Optional[str]:
        """Нулевая частота Ω₂ на уровне без распада - для основного и дополнительных прогонов."""
        if not system.undamped_levels():
            return None
        runs = [combs]
        if inversion is not None:
            runs += [[c.with_offset(v) for c, v in zip(combs, offsets)] for offsets in inversion.runs]
        slots = CombSignals.slots_for(kind, variant)
        for run in runs:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", CombSpecWarning)
                    spikes = [CombField.field_spikes(comb, grid) for comb in run]
            except CombSpecError:
                continue
            problem = CombSignals.population_singularity(spikes, system, grid, slots, max_order)
            if problem is not None:
                return problem
        return None

    @staticmethod
    def _time_sampling(body: Dict) -> TimeSampling:
        if body.get("dt") is None or body.get("samples") is None:
            raise CombSpecError("time sampling needs both dt and samples")
        dt, samples = float(body["dt"]), int(body["samples"])
        if dt <= 0 or samples < 2:
            raise CombSpecError("time sampling needs dt > 0 and samples >= 2")
        return TimeSampling(dt=dt, samples=samples, t0=float(body["t0"]), prefilter=bool(body["prefilter"]))

    @staticmethod
    def _lockin(body: Dict, trains: List[AomPulseTrainSpec]) -> LockInConfig:
        """LockInConfig; φ₂₁ и φ₄₃ по умолчанию берутся из частот AOM цугов."""
        phi21, phi43 = body.get("phi21"), body.get("phi43")
        if (phi21 is None or phi43 is None) and len(trains) != 4:
            raise CombSpecError("phi21/phi43 need four pulse trains to default from")
        if phi21 is None:
            phi21 = trains[1].aom_freq - trains[0].aom_freq
        if phi43 is None:
            phi43 = trains[3].aom_freq - trains[2].aom_freq
        return LockInConfig(
            phi21=float(phi21), phi43=float(phi43),
            wbar21=float(body["wbar21"]), wbar43=float(body["wbar43"]),
            theta=float(body["theta"]), tau=float(body["tau"]),
        )

    @staticmethod
    def _inversion(body: Dict, kind: Optional[str], comb_count: int) -> InversionSettings:
        enabled = bool(body.get("enabled", False))
        lam = float(body.get("lam", 0.0))
        if lam < 0:
            raise CombSpecError("lam must be >= 0")
        if enabled and kind not in INVERTIBLE_KINDS:
            raise CombSpecError(f"inversion is available for {list(INVERTIBLE_KINDS)}, not {kind!r}")
        runs = []
        for run in body.get("runs") or []:
            if not isinstance(run, (list, tuple)) or len(run) != comb_count:
                raise CombSpecError(f"each extra run must list {comb_count} comb offsets")
            runs.append(tuple(float(v) for v in run))
        return InversionSettings(enabled=enabled, lam=lam, runs=tuple(runs))

    @staticmethod
    def _oracle(body: Dict, comb_count: int) -> OracleSettings:
        settings = OracleSettings(
            comb=int(body.get("comb", 1)),
            n_pulses=int(body.get("n_pulses", 50)),
            dt=float(body.get("dt", 0.01)),
            scales=tuple(float(s) for s in body.get("scales", (1e-3, 1e-4, 1e-5))),
            padding=None if body.get("padding") is None else float(body["padding"]),
        )
        if comb_count and not 1 <= settings.comb <= comb_count:
            raise CombSpecError(f"oracle comb must be 1..{comb_count}")
        if settings.n_pulses < 1 or settings.dt <= 0:
            raise CombSpecError("oracle needs n_pulses >= 1 and dt > 0")
        if not settings.scales or any(s <= 0 for s in settings.scales):
            raise CombSpecError("oracle scales must be a non-empty list of positive numbers")
        return settings


def validate_config(file_path) -> ExperimentConfig:
    """Прочитать и проверить файл конфигурации."""
    return ConfigLoader.validate(ConfigLoader.load(file_path))
