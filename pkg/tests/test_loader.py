"""Tests for ConfigLoader."""
from pathlib import Path

import pytest

from data.loader import ConfigLoader, validate_config
from models.errors import ConfigValidationError

SAMPLES = Path(__file__).resolve().parent.parent / "data_samples"


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    monkeypatch.delenv("COMBSPEC_OUTPUT_DIR", raising=False)


def dual_linear(**changes):
    data = {
        "experiment": {"kind": "dual_linear"},
        "system": {"model": "two_level", "omega_eg": 100.0, "gamma": 1.0},
        "comb.1": {"rep_spacing": 1.0, "carrier": 100.0, "width": 20.0},
        "comb.2": {"rep_spacing": 1.0, "offset": 0.001, "carrier": 100.0, "width": 20.0},
        "grid": {"step": 0.001},
    }
    data.update(changes)
    return data


def errors_of(data):
    with pytest.raises(ConfigValidationError) as info:
        ConfigLoader.validate(data)
    return info.value.errors


@pytest.mark.parametrize("name", [
    "dual_linear.yaml", "quad_third.yaml", "quad_third_recovery.yaml", "dual_third.yaml",
    "aom_fluorescence.yaml", "oracle_check.yaml",
])
def test_sample_configs_validate(name):
    """Все примеры из data_samples проходят проверку."""
    cfg = validate_config(SAMPLES / name)
    assert name.startswith(cfg.kind)


def test_minimal_dual_linear():
    """Значения по умолчанию подставляются, гребёнки получают метки comb.N."""
    cfg = ConfigLoader.validate(dual_linear())

    assert [c.label for c in cfg.combs] == ["comb.1", "comb.2"]
    assert cfg.combs[1].offset == 0.001
    assert cfg.detect == 1
    assert cfg.projection == "full"
    assert cfg.lowpass is None
    assert cfg.time is None
    assert not cfg.inversion.enabled
    assert cfg.settings["comb.1"]["tooth_floor"] == 1e-8


def test_time_sampling_and_lowpass():
    """Секция [grid] с dt и samples задаёт временную сетку."""
    cfg = ConfigLoader.validate(dual_linear(
        grid={"step": 0.001, "dt": 0.5, "samples": 64, "prefilter": False},
        lowpass={"cutoff": 0.5},
    ))

    assert cfg.time.samples == 64
    assert not cfg.time.prefilter
    assert cfg.lowpass == 0.5


def test_quad_third_comb_count():
    """quad_third с тремя гребёнками."""
    data = dual_linear(experiment={"kind": "quad_third"})
    data["comb.3"] = {"rep_spacing": 1.0, "offset": 0.002, "carrier": 100.0, "width": 20.0}

    assert "quad_third requires 4 combs, got 3" in errors_of(data)


def test_incommensurate_offset_names_comb():
    """Интервал гребёнки не кратен шагу сетки: ошибка называет гребёнку."""
    errors = errors_of(dual_linear(**{
        "comb.2": {"rep_spacing": 1.0, "offset": 0.0015, "carrier": 100.0, "width": 20.0},
    }))

    assert any("comb.2 spacing" in e for e in errors)


def test_unknown_section_and_key():
    """Неизвестные секции и ключи не игнорируются."""
    data = dual_linear(colour={"value": 1})
    data["comb.1"] = {**data["comb.1"], "colour": "red"}
    errors = errors_of(data)

    assert "unknown section [colour]" in errors
    assert "unknown key 'colour' in [comb.1]" in errors


def test_missing_required_key():
    """Пропущенная ширина огибающей."""
    data = dual_linear()
    del data["comb.1"]["width"]

    assert "missing key 'width' in [comb.1]" in errors_of(data)


def test_all_errors_collected():
    """Все нарушения собираются в одну ошибку."""
    data = dual_linear(experiment={"kind": "dual_linear", "detect": 3, "projection": "bra"})
    data["system"] = {"model": "two_level", "omega_eg": 100.0, "gamma": 1.0, "spin": 0.5}
    data["lowpass"] = {"cutoff": 2.0}
    errors = errors_of(data)

    assert len(errors) >= 4
    assert any("detect" in e for e in errors)
    assert any("projection" in e for e in errors)
    assert any("unknown key 'spin'" in e for e in errors)
    assert any("[lowpass]" in e for e in errors)


def test_combs_numbered_consecutively():
    """Секции comb.N нумеруются подряд с 1."""
    data = dual_linear()
    data["comb.3"] = data.pop("comb.2")

    assert any("numbered 1..N" in e for e in errors_of(data))


def test_unknown_kind_and_model():
    """Неизвестный вид эксперимента и модель системы."""
    errors = errors_of(dual_linear(
        experiment={"kind": "triple_linear"},
        system={"model": "spin_chain"},
    ))

    assert any("unknown experiment kind" in e for e in errors)
    assert any("unknown model" in e for e in errors)


def test_grid_required_for_comb_kinds():
    """Эксперименты с гребёнками требуют [grid]."""
    data = dual_linear()
    del data["grid"]

    assert "dual_linear requires a [grid] section" in errors_of(data)


def test_inversion_runs_need_offset_per_comb():
    """Каждый дополнительный прогон задаёт смещение для каждой гребёнки."""
    errors = errors_of(dual_linear(inversion={"enabled": True, "runs": [[0.0]]}))
    assert any("2 comb offsets" in e for e in errors)


def test_inversion_not_available_for_aom():
    """Обращение доступно только для спектров гребёнок."""
    data = ConfigLoader.load(SAMPLES / "aom_fluorescence.yaml")
    data["inversion"] = {"enabled": True}

    assert any("inversion is available" in e for e in errors_of(data))


def test_lockin_defaults_from_trains():
    """φ₂₁ и φ₄₃ по умолчанию - разности частот АОМ."""
    cfg = validate_config(SAMPLES / "aom_fluorescence.yaml")

    assert cfg.lockin.phi21 == pytest.approx(cfg.trains[1].aom_freq - cfg.trains[0].aom_freq)
    assert cfg.lockin.phi43 == pytest.approx(cfg.trains[3].aom_freq - cfg.trains[2].aom_freq)
    assert cfg.delays.shape == (64, 1, 64)


def test_explicit_system():
    """Явная модель: энергии, диполи, дефазировка."""
    cfg = ConfigLoader.validate(dual_linear(system={
        "model": "explicit",
        "energies": [0.0, 100.0],
        "dipoles": [[0.0, 1.0], [1.0, 0.0]],
        "dephasing": 1.0,
    }))
    assert cfg.system.size == 2
    assert cfg.system.emitting == (1,)


def test_output_dir_override(monkeypatch, tmp_path):
    """COMBSPEC_OUTPUT_DIR заменяет каталог из [output]."""
    monkeypatch.setenv("COMBSPEC_OUTPUT_DIR", str(tmp_path))
    cfg = ConfigLoader.validate(dual_linear(output={"dir": "elsewhere"}))
    assert cfg.output_dir == tmp_path


def test_invalid_yaml(tmp_path):
    """Файл не является YAML."""
    path = tmp_path / "broken.yaml"
    path.write_text("experiment: [kind\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match="invalid YAML"):
        validate_config(path)


def test_missing_file(tmp_path):
    """Файл не существует."""
    with pytest.raises(ConfigValidationError, match="cannot read config"):
        validate_config(tmp_path / "absent.yaml")


def dual_third(decay):
    return {
        "experiment": {"kind": "dual_third"},
        "system": {"model": "two_level", "omega_eg": 2.0, "gamma": 0.1, "decay": decay},
        "comb.1": {"rep_spacing": 1.0, "carrier": 2.0, "width": 3.0},
        "comb.2": {"rep_spacing": 1.0, "offset": 0.0003, "carrier": 2.0, "width": 3.0},
        "grid": {"step": 0.0001},
        "budget": {"max_order": 3},
    }


def test_undamped_population_rejected():
    """Пара зубцов с суммой 0 возбуждает e без распада: ошибка до расчёта."""
    errors = errors_of(dual_third(0.0))

    assert any(e.startswith("[system]") and "no decay" in e for e in errors)
    assert ConfigLoader.validate(dual_third(0.05)).system.decay.tolist() == [0.0, 0.05]


def test_lowpass_below_effective_spacing():
    """Срез сравнивается с фактическим интервалом Δω + δω, а не с rep_spacing."""
    data = dual_linear(lowpass={"cutoff": 0.998})
    data["comb.2"] = {"rep_spacing": 1.0, "offset": -0.005, "carrier": 100.0, "width": 20.0}

    assert "[lowpass] cutoff must be below the comb spacing" in errors_of(data)
    data["lowpass"] = {"cutoff": 0.9}
    assert ConfigLoader.validate(data).lowpass == 0.9
