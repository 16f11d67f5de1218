"""Pipeline configuration file.

INI grammar (``key = value`` lines under ``[section]`` headers, ``#`` or
``;`` comments). Recognised sections::

    [pipeline]      seed, out_dir, stays, events, family, repeats
    [split]         test_fraction, k
    [rules]         any CetRuleConfig field, e.g. map_threshold = 65
    [synth]         n_stays, signal_strength, prevalence = 0.3,0.25,0.15,0.2
    [params.<fam>]  fixed hyperparameters for family <fam>
    [grid.<fam>]    comma-separated candidate values per hyperparameter

Command-line flags override file values.
"""

import configparser
from dataclasses import dataclass, field

from .errors import UsageError
from .labeler import CetRuleConfig
from .seeding import DEFAULT_SEED


@dataclass
class PipelineConfig:
    seed: int = DEFAULT_SEED
    test_fraction: float = 0.2
    k: int = 5
    repeats: int = 5
    rules: CetRuleConfig = field(default_factory=CetRuleConfig)
    params: dict = field(default_factory=dict)  # family -> {name: value}
    grids: dict = field(default_factory=dict)  # family -> {name: [values]}
    synth: dict = field(default_factory=dict)
    pipeline: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise UsageError("test_fraction must lie in (0, 1)")
        if self.k < 2:
            raise UsageError("k must be >= 2")


def _number(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as f:
            cp.read_file(f)
    except configparser.Error as exc:
        raise UsageError(f"bad config file: {exc}") from None
    pipe = dict(cp["pipeline"]) if cp.has_section("pipeline") else {}
    split = dict(cp["split"]) if cp.has_section("split") else {}
    params, grids = {}, {}
    for sec in cp.sections():
        if sec.startswith("params."):
            params[sec[len("params."):]] = dict(cp[sec])
        elif sec.startswith("grid."):
            grids[sec[len("grid."):]] = {k: [_number(v.strip()) for v in val.split(",") if v.strip()] for k, val in cp[sec].items()}
    try:
        return PipelineConfig(
            seed=int(pipe.get("seed", DEFAULT_SEED)),
            test_fraction=float(split.get("test_fraction", 0.2)),
            k=int(split.get("k", 5)),
            repeats=int(pipe.get("repeats", 5)),
            rules=CetRuleConfig.from_mapping(dict(cp["rules"])) if cp.has_section("rules") else CetRuleConfig(),
            params=params,
            grids=grids,
            synth=dict(cp["synth"]) if cp.has_section("synth") else {},
            pipeline=pipe,
        )
    except ValueError as exc:
        raise UsageError(f"bad config value: {exc}") from None
