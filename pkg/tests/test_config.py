import pytest

from entprompt.config import PRESETS, ConfigError, RunConfig, load_config
from entprompt.pipeline import ARMS


def test_defaults_follow_training_settings():
    cfg = RunConfig()
    assert (cfg.epochs, cfg.batch_size, cfg.lr, cfg.lam) == (10, 4, 1e-4, 0.1)
    assert (cfg.alpha_E, cfg.alpha_I) == (0.9, 0.1)
    assert cfg.split_ratio == (7, 2, 1)


def test_large_preset_widths():
    cfg = load_config(overrides={"preset": "large"})
    assert (cfg.d_h, cfg.d_s, cfg.d_w, cfg.lora_rank) == (512, 2048, 4096, 64)
    assert set(PRESETS) == {"desk", "large"}


def test_status_requires_entity():
    with pytest.raises(ConfigError, match="entity_embed"):
        RunConfig(entity_embed=False, status_embed=True)


@pytest.mark.parametrize("key,val", [("ema_decay", 1.0), ("tau", 1.5), ("lr", 0.0), ("lam", -0.1),
                                     ("d_h", 30), ("preset", "huge")])
def test_invalid_values(key, val):
    with pytest.raises(ConfigError):
        RunConfig().with_overrides({key: val})


def test_precedence_defaults_preset_file_flags(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\npreset = large\n[model]\nd_w = 256\n[train]\nepochs = 3\n")
    cfg = load_config(path, {"epochs": "5"})
    assert cfg.d_h == 512          # preset
    assert cfg.d_w == 256          # file beats preset
    assert cfg.epochs == 5         # flag beats file
    assert cfg.batch_size == 4     # default
    assert cfg._sources == ["defaults", str(path), "flags"]


def test_ini_round_trip_and_hash(tmp_path):
    cfg = RunConfig(prevalence=(0.5,) * 8, d_r=16, split_ratio=(1, 0, 0), instruction="write it .")
    path = tmp_path / "c.ini"
    path.write_text(cfg.to_ini())
    back = load_config(path)
    assert back.to_dict() == cfg.to_dict()
    assert back.hash() == cfg.hash()
    assert cfg.with_overrides({"out_dir": "elsewhere"}).hash() == cfg.hash()
    assert cfg.with_overrides({"seed": 1}).hash() != cfg.hash()


def test_missing_file_names_path(tmp_path):
    with pytest.raises(ConfigError, match="nothere.ini"):
        load_config(tmp_path / "nothere.ini")


@pytest.mark.parametrize("text,match", [("[model]\nbogus = 1\n", "bogus"), ("[extra]\na = 1\n", "extra"),
                                        ("[train]\nepochs = many\n", "epochs"),
                                        ("[prompt]\nuse_M_E = maybe\n", "use_M_E")])
def test_bad_file_contents(tmp_path, text, match):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(path)


def test_every_arm_is_a_valid_config():
    for name, overrides in ARMS.items():
        cfg = RunConfig().with_overrides(overrides)
        assert cfg.toggles.entity_embed == overrides["entity_embed"], name
    assert not RunConfig().with_overrides(ARMS["baseline"]).uses_entities
    assert RunConfig().with_overrides(ARMS["embed+category"]).category_words
