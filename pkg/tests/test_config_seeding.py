import threading

import pytest

from icucet.config import PipelineConfig, load_config
from icucet.errors import (
    BadEnum,
    CetError,
    DataError,
    DegenerateFraction,
    NonFinite,
    UsageError,
)
from icucet.seeding import derive_seed, parallel_map, rng_for, worker_count


def test_defaults():
    cfg = load_config()
    assert (cfg.seed, cfg.test_fraction, cfg.k, cfg.repeats) == (42, 0.2, 5, 5)


def test_ini_grammar(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(
        "# comment\n[pipeline]\nseed = 7\nrepeats = 3  ; inline\n"
        "[split]\ntest_fraction = 0.25\nk = 4\n"
        "[rules]\nmap_threshold = 60\n"
        "[params.gbt]\nn_estimators = 20\n"
        "[grid.forest]\nmax_depth = 4, 8\n"
    )
    cfg = load_config(p)
    assert (cfg.seed, cfg.repeats, cfg.test_fraction, cfg.k) == (7, 3, 0.25, 4)
    assert cfg.rules.map_threshold == 60.0
    assert cfg.params == {"gbt": {"n_estimators": "20"}}
    assert cfg.grids == {"forest": {"max_depth": [4, 8]}}


@pytest.mark.parametrize("body", ["[split]\nk = 1\n", "[split]\ntest_fraction = 1.0\n", "[rules]\nbogus = 1\n",
                                  "no header\n"])
def test_bad_config(tmp_path, body):
    p = tmp_path / "bad.ini"
    p.write_text(body)
    with pytest.raises(UsageError):
        load_config(p)


def test_pipeline_config_invariants():
    with pytest.raises(UsageError):
        PipelineConfig(k=1)


def test_error_categories_and_exit_codes():
    e = BadEnum(4, "gender 'X'")
    assert isinstance(e, DataError) and isinstance(e, ValueError)
    assert e.row == 4 and e.exit_code == 3 and e.category == "BadEnum"
    assert DegenerateFraction("x").exit_code == 2
    assert NonFinite("x").exit_code == 4 and isinstance(NonFinite("x"), CetError)


def test_seed_derivation():
    assert derive_seed(42, "a", 1) == derive_seed(42, "a", 1)
    assert len({derive_seed(42, "a", 1), derive_seed(42, "a", 2), derive_seed(43, "a", 1),
                derive_seed(42, "b", 1)}) == 4
    assert rng_for(1, "x").integers(1 << 30) == rng_for(1, "x").integers(1 << 30)


def test_worker_count(monkeypatch):
    monkeypatch.delenv("ICUCET_WORKERS", raising=False)
    assert worker_count(None) == 1
    monkeypatch.setenv("ICUCET_WORKERS", "3")
    assert worker_count(None) == 3
    assert worker_count(2) == 2


def test_parallel_map_preserves_order():
    names = set()

    def f(x):
        names.add(threading.current_thread().name)
        return x * x

    assert parallel_map(f, range(50), 4) == [x * x for x in range(50)]
    assert parallel_map(f, range(5), 1) == [0, 1, 4, 9, 16]
