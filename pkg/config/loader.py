"""Run-config loading: defaults < environment < paper-scale counts < KEY=VALUE file < CLI flags."""
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from models.request import RunConfig, paper_counts
from stochastic.errors import ConfigError

logger = logging.getLogger("asianhedge.config")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)


def _format_validation(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err.get("loc", ())) or "config"
        parts.append(f"{loc}: {err.get('msg')}")
    return "; ".join(parts)


def _validate(values: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {_format_validation(e)}") from e


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Merge a config file and flag overrides on top of the environment defaults.

    ``paper_scale`` swaps in the study's sample counts underneath the file and the flags,
    so ``--paper-scale --samples 5000`` still runs 5000 samples.
    """
    values: Dict[str, Any] = {}
    if path:
        file = Path(path)
        if not file.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = dotenv_values(file)
        values.update({k.lower(): v for k, v in raw.items() if v is not None})
        logger.info(f"[Config] Loaded {len(values)} keys from {path}")
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    config = _validate(values)
    if config.paper_scale:
        config = _validate({**paper_counts(), **values, "paper_scale": True})
    return config


def ensure_out_dir(config: RunConfig) -> Path:
    """Create the output directory and confirm it is writable."""
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        marker = out / ".write_check"
        marker.write_text("")
        marker.unlink()
    except OSError as e:
        raise ConfigError(f"output directory not writable: {out} ({e})") from e
    return out
