"""Flat key-value run configuration.

The config file is plain text: one ``section.key = value`` per line, ``#``
comments, blank lines ignored.  Unknown keys are errors that name the key.
The full grammar is documented in the README.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .channel import MODES, ChannelConfig
from .extractor import ExtractorConfig
from .receiver import COMPOSE_MODES, COMPOSE_PAPER_LITERAL, ReconstructorSpec
from .synthgen import BackgroundSpec, ObjectSpec, SceneSpec

SEED_ENV_VAR = "SEMCOM_SEED"

_OBJECT_KEY = re.compile(r"^scene\.object(\d+)\.(shape|size|color|velocity|start)$")

_KNOWN_KEYS = {
    "input.kind",
    "input.frames_dir",
    "scene.width",
    "scene.height",
    "scene.frames",
    "scene.seed",
    "scene.margin",
    "scene.background.kind",
    "scene.background.color",
    "scene.background.color2",
    "scene.background.path",
    "extractor.diff_threshold",
    "extractor.min_region_area",
    "extractor.dilation_radius",
    "extractor.mask_mode",
    "extractor.background_period",
    "extractor.prompt",
    "extractor.external_cmd",
    "extractor.timeout",
    "channel.mode",
    "channel.snr_db",
    "channel.gain_model",
    "channel.seed",
    "channel.strict_headers",
    "channel.bep_table",
    "compose.mode",
    "reconstructor.kind",
    "reconstructor.window",
    "reconstructor.command",
    "reconstructor.timeout",
    "receiver.denoise_background",
    "output.dir",
    "report.csv",
    "report.plot_dir",
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    input_kind: str = "scene"
    frames_dir: str | None = None
    scene: SceneSpec = field(default_factory=SceneSpec)
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    extractor_cmd: str | None = None
    extractor_timeout: float = 120.0
    channels: list[ChannelConfig] = field(default_factory=lambda: [ChannelConfig()])
    compose_mode: str = COMPOSE_PAPER_LITERAL
    reconstructor: ReconstructorSpec = field(default_factory=ReconstructorSpec)
    denoise_background: bool = False
    output_dir: str = "out"
    report_csv: str = "report.csv"
    plot_dir: str = "plots"


def parse_kv_file(path) -> dict[str, str]:
    """Read the flat key-value grammar; preserves order, rejects duplicates."""
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: missing key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_bool(key: str, value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _parse_color(key: str, value: str) -> tuple[int, int, int]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 'r,g,b', got {value!r}")
    rgb = tuple(_parse_int(key, p) for p in parts)
    if any(not 0 <= v <= 255 for v in rgb):
        raise ConfigError(f"{key}: color components must be 0..255, got {value!r}")
    return rgb  # type: ignore[return-value]


def _parse_pair(key: str, value: str) -> tuple[int, int]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected 'x,y', got {value!r}")
    return (_parse_int(key, parts[0]), _parse_int(key, parts[1]))


def _parse_size(key: str, value: str) -> tuple[int, int]:
    if "x" in value:
        w, _, h = value.partition("x")
        return (_parse_int(key, w.strip()), _parse_int(key, h.strip()))
    side = _parse_int(key, value)
    return (side, side)


def _parse_bep_table(key: str, value: str) -> dict[float, float]:
    table = {}
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        snr, sep, p = item.partition(":")
        if not sep:
            raise ConfigError(f"{key}: expected 'snr:prob' entries, got {item!r}")
        table[_parse_float(key, snr.strip())] = _parse_float(key, p.strip())
    if not table:
        raise ConfigError(f"{key}: empty table")
    return table


def _collect_objects(kv: dict[str, str]) -> tuple[ObjectSpec, ...]:
    grouped: dict[int, dict[str, str]] = {}
    for key, value in kv.items():
        match = _OBJECT_KEY.match(key)
        if match:
            grouped.setdefault(int(match.group(1)), {})[match.group(2)] = value
    objects = []
    for idx in sorted(grouped):
        fields = grouped[idx]
        prefix = f"scene.object{idx}"
        kwargs: dict = {}
        if "shape" in fields:
            kwargs["shape"] = fields["shape"]
        if "size" in fields:
            kwargs["size"] = _parse_size(f"{prefix}.size", fields["size"])
        if "color" in fields:
            kwargs["color"] = _parse_color(f"{prefix}.color", fields["color"])
        if "velocity" in fields:
            kwargs["velocity"] = _parse_pair(f"{prefix}.velocity", fields["velocity"])
        if "start" in fields:
            kwargs["start"] = _parse_pair(f"{prefix}.start", fields["start"])
        try:
            objects.append(ObjectSpec(**kwargs))
        except Exception as exc:
            raise ConfigError(f"{prefix}: {exc}") from exc
    return tuple(objects)


def build_run_config(kv: dict[str, str], config_dir: Path | None = None) -> RunConfig:
    """Validate keys and assemble the run configuration."""
    for key in kv:
        if key not in _KNOWN_KEYS and not _OBJECT_KEY.match(key):
            raise ConfigError(f"unknown config key {key!r}")

    def get(key: str, default: str | None = None) -> str | None:
        return kv.get(key, default)

    cfg = RunConfig()
    cfg.input_kind = get("input.kind", "scene")
    if cfg.input_kind not in ("scene", "frames"):
        raise ConfigError(f"input.kind: expected scene|frames, got {cfg.input_kind!r}")
    cfg.frames_dir = get("input.frames_dir")
    if cfg.input_kind == "frames" and not cfg.frames_dir:
        raise ConfigError("input.kind=frames requires input.frames_dir")

    bg_kwargs: dict = {}
    if "scene.background.kind" in kv:
        bg_kwargs["kind"] = kv["scene.background.kind"]
    if "scene.background.color" in kv:
        bg_kwargs["color"] = _parse_color(
            "scene.background.color", kv["scene.background.color"]
        )
    if "scene.background.color2" in kv:
        bg_kwargs["color2"] = _parse_color(
            "scene.background.color2", kv["scene.background.color2"]
        )
    if "scene.background.path" in kv:
        bg_kwargs["path"] = kv["scene.background.path"]
    scene_kwargs: dict = {}
    if "scene.width" in kv:
        scene_kwargs["width"] = _parse_int("scene.width", kv["scene.width"])
    if "scene.height" in kv:
        scene_kwargs["height"] = _parse_int("scene.height", kv["scene.height"])
    if "scene.frames" in kv:
        scene_kwargs["frame_count"] = _parse_int("scene.frames", kv["scene.frames"])
    if "scene.seed" in kv:
        scene_kwargs["seed"] = _parse_int("scene.seed", kv["scene.seed"])
    if "scene.margin" in kv:
        scene_kwargs["margin"] = _parse_int("scene.margin", kv["scene.margin"])
    try:
        cfg.scene = SceneSpec(
            background=BackgroundSpec(**bg_kwargs),
            objects=_collect_objects(kv),
            **scene_kwargs,
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"scene: {exc}") from exc

    ex_kwargs: dict = {}
    if "extractor.diff_threshold" in kv:
        ex_kwargs["diff_threshold"] = _parse_int(
            "extractor.diff_threshold", kv["extractor.diff_threshold"]
        )
    if "extractor.min_region_area" in kv:
        ex_kwargs["min_region_area"] = _parse_int(
            "extractor.min_region_area", kv["extractor.min_region_area"]
        )
    if "extractor.dilation_radius" in kv:
        ex_kwargs["dilation_radius"] = _parse_int(
            "extractor.dilation_radius", kv["extractor.dilation_radius"]
        )
    if "extractor.mask_mode" in kv:
        ex_kwargs["mask_mode"] = kv["extractor.mask_mode"]
    if "extractor.background_period" in kv:
        ex_kwargs["background_period"] = _parse_int(
            "extractor.background_period", kv["extractor.background_period"]
        )
    if "extractor.prompt" in kv:
        ex_kwargs["prompt"] = kv["extractor.prompt"]
    try:
        cfg.extractor = ExtractorConfig(**ex_kwargs)
    except Exception as exc:
        raise ConfigError(f"extractor: {exc}") from exc
    cfg.extractor_cmd = get("extractor.external_cmd")
    if "extractor.timeout" in kv:
        cfg.extractor_timeout = _parse_float("extractor.timeout", kv["extractor.timeout"])

    seed = _parse_int("channel.seed", get("channel.seed", "0"))
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        seed = _parse_int(SEED_ENV_VAR, env_seed)
    mode = get("channel.mode", "CLEAN")
    if mode not in MODES:
        raise ConfigError(f"channel.mode: expected one of {MODES}, got {mode!r}")
    snrs = [
        _parse_float("channel.snr_db", part.strip())
        for part in get("channel.snr_db", "10").split(",")
        if part.strip()
    ]
    if not snrs:
        raise ConfigError("channel.snr_db: need at least one value")
    gain = get("channel.gain_model", "unit")
    strict = _parse_bool(
        "channel.strict_headers", get("channel.strict_headers", "false")
    )
    ch_kwargs: dict = {}
    if "channel.bep_table" in kv:
        ch_kwargs["bep_table"] = _parse_bep_table(
            "channel.bep_table", kv["channel.bep_table"]
        )
    try:
        cfg.channels = [
            ChannelConfig(
                mode=mode,
                snr_db=snr,
                gain_model=gain,
                seed=seed,
                strict_headers=strict,
                **ch_kwargs,
            )
            for snr in snrs
        ]
    except Exception as exc:
        raise ConfigError(f"channel: {exc}") from exc

    cfg.compose_mode = get("compose.mode", COMPOSE_PAPER_LITERAL)
    if cfg.compose_mode not in COMPOSE_MODES:
        raise ConfigError(
            f"compose.mode: expected one of {COMPOSE_MODES}, got {cfg.compose_mode!r}"
        )

    rec_kwargs: dict = {"kind": get("reconstructor.kind", "identity")}
    if "reconstructor.window" in kv:
        rec_kwargs["window"] = _parse_int(
            "reconstructor.window", kv["reconstructor.window"]
        )
    if "reconstructor.command" in kv:
        rec_kwargs["external_cmd"] = kv["reconstructor.command"]
    if "reconstructor.timeout" in kv:
        rec_kwargs["timeout"] = _parse_float(
            "reconstructor.timeout", kv["reconstructor.timeout"]
        )
    try:
        cfg.reconstructor = ReconstructorSpec(**rec_kwargs)
    except Exception as exc:
        raise ConfigError(f"reconstructor: {exc}") from exc

    cfg.denoise_background = _parse_bool(
        "receiver.denoise_background", get("receiver.denoise_background", "false")
    )
    cfg.output_dir = get("output.dir", "out")
    cfg.report_csv = get("report.csv", "report.csv")
    cfg.plot_dir = get("report.plot_dir", "plots")

    if config_dir is not None:
        if cfg.frames_dir and not Path(cfg.frames_dir).is_absolute():
            cfg.frames_dir = str(config_dir / cfg.frames_dir)
        if not Path(cfg.output_dir).is_absolute():
            cfg.output_dir = str(config_dir / cfg.output_dir)
    return cfg


def load_run_config(path) -> RunConfig:
    path = Path(path)
    return build_run_config(parse_kv_file(path), config_dir=path.parent)
