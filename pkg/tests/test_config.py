import pytest

from ajdn.config import (
    AjdnConfig,
    DetectConfig,
    RunConfig,
    ScalesConfig,
    dump_toml,
    load_config,
)
from ajdn.errors import ConfigurationError
from ajdn.output import best_as_toml
from ajdn.tuning import HyperParams


def test_defaults():
    config = load_config(None)

    assert config == AjdnConfig()
    assert config.detect == DetectConfig(alpha=0.05, c=0.01, threads=1)
    assert config.scales.delta_cap == 40
    assert config.bootstrap.k0 == 500
    assert config.refine.alpha_tilde == -0.5


def test_loads_a_file(tmp_path):
    path = tmp_path / "ajdn.toml"
    path.write_text(
        "[scales]\ns_min = 0.05\ns_max = 1\n\n"
        "[detect]\nalpha = 0.1\n\n"
        "[tune]\nsegment = [100, 400]\n"
    )

    config = load_config(path)

    assert config.scales == ScalesConfig(s_min=0.05, s_max=1.0)
    assert isinstance(config.scales.s_max, float)
    assert config.detect.alpha == 0.1
    assert config.tune.segment == (100, 400)
    assert config.bootstrap.k0 == 500


@pytest.mark.parametrize(
    "text",
    [
        "[scales]\nunknown = 1\n",
        "[nonsense]\nx = 1\n",
        "[bootstrap]\nk0 = 1.5\n",
        "[refine]\nenabled = 1\n",
        "[detect]\nalpha = true\n",
        "[tune]\ns_min = 0.1\n",
        "[simulate]\nprocess = 3\n",
        "scales = 1\n",
        "[scales\n",
    ],
)
def test_invalid_files_are_configuration_errors(tmp_path, text):
    path = tmp_path / "bad.toml"
    path.write_text(text)

    with pytest.raises(ConfigurationError):
        load_config(path)


def test_missing_file_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.toml")


def test_overrides_replace_single_keys():
    config = AjdnConfig().with_overrides(
        {"detect.alpha": 0.01, "bootstrap.k0": 200, "scales.s_min": None}
    )

    assert config.detect.alpha == 0.01
    assert config.detect.c == 0.01
    assert config.bootstrap.k0 == 200
    assert config.scales.s_min == 0.0

    with pytest.raises(ConfigurationError):
        AjdnConfig().with_overrides({"detect.beta": 1.0})
    with pytest.raises(ConfigurationError):
        AjdnConfig().with_overrides({"nowhere.alpha": 1.0})


def test_json_holds_every_section():
    json = AjdnConfig().to_json()

    assert set(json) == {"scales", "bootstrap", "detect", "refine", "tune", "simulate", "bench"}
    assert json["detect"]["alpha"] == 0.05


def test_best_candidate_file_loads_back(tmp_path):
    path = tmp_path / "best.toml"
    path.write_text(best_as_toml(HyperParams(0.07, 0.12, 0.004, k0=300, seed=5), 9))

    config = load_config(path)

    assert config.scales.s_min == 0.07
    assert config.scales.s_max == 0.12
    assert config.scales.delta_n == 9
    assert config.bootstrap == config.bootstrap._replace(k0=300, s_prime=0.004, seed=5)


def test_dump_toml_quotes_strings():
    text = dump_toml({"simulate": {"scenario": 'S"1', "with_trend": True, "n": 3}})

    assert text == '[simulate]\nscenario = "S\\"1"\nwith_trend = true\nn = 3\n'


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2])
def test_run_config_rejects_alpha_outside_the_unit_interval(alpha):
    config = AjdnConfig().with_overrides({"detect.alpha": alpha})

    with pytest.raises(ConfigurationError):
        RunConfig(config).validate()


def test_run_config_checks_threads_and_output_directories(tmp_path):
    RunConfig(AjdnConfig(), output=str(tmp_path / "jumps.json")).validate()

    with pytest.raises(ConfigurationError):
        RunConfig(AjdnConfig(), threads=0).validate()
    with pytest.raises(ConfigurationError):
        RunConfig(AjdnConfig(), summary=str(tmp_path / "missing" / "summary.txt")).validate()
