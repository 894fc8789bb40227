# src/config.py
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import errors

APP_NAME = "padicx"
APP_VERSION = "v0.4.0"

# Path to user config (./src/../config.toml)
CONFIG_TOML_PATH = os.path.join(os.path.dirname(__file__), "..", "config.toml")

# Default values
DEFAULT_DIGITS = 20
DEFAULT_DEPTH = 8
DEFAULT_SERIES_ORDER = 4
DEFAULT_FORMAT = "json"
DEFAULT_LANGUAGE = "en"
DEFAULT_WORKERS = 4

OUTPUT_FORMATS = ("json", "tsv", "html")

# Overrides [precision] digits
PRECISION_ENV = "PADICX_PRECISION"


def _defaults() -> dict:
    return {
        "digits": DEFAULT_DIGITS,
        "depth": DEFAULT_DEPTH,
        "series_order": DEFAULT_SERIES_ORDER,
        "format": DEFAULT_FORMAT,
        "language": DEFAULT_LANGUAGE,
        "workers": DEFAULT_WORKERS,
    }


def load_user_config(path: str | None = None) -> dict:
    # Load settings from the TOML file.
    # If the file is missing or invalid, creates/resets it with defaults.
    path = path or CONFIG_TOML_PATH
    defaults = _defaults()
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except (FileNotFoundError, tomllib.TOMLDecodeError):
        save_user_config(defaults, path)
        return defaults

    precision = data.get("precision", {})
    output = data.get("output", {})
    return {
        "digits": int(precision.get("digits", defaults["digits"])),
        "depth": int(precision.get("depth", defaults["depth"])),
        "series_order": int(precision.get("series_order", defaults["series_order"])),
        "format": output.get("format", defaults["format"]),
        "language": output.get("language", defaults["language"]),
        "workers": int(output.get("workers", defaults["workers"])),
    }


def save_user_config(cfg: dict, path: str | None = None):
    # Save settings to the TOML file.
    content = f"""[precision]
digits = {cfg["digits"]}
depth = {cfg["depth"]}
series_order = {cfg["series_order"]}

[output]
format = "{cfg["format"]}"
language = "{cfg["language"]}"
workers = {cfg["workers"]}
"""
    with open(path or CONFIG_TOML_PATH, "w", encoding="utf-8") as f:
        f.write(content)


def env_digits(environ=None) -> int | None:
    # PADICX_PRECISION must be an integer >= 2
    raw = (environ if environ is not None else os.environ).get(PRECISION_ENV)
    if raw is None or raw == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise errors.UsageError(f"{PRECISION_ENV}={raw!r} is not an integer") from None
    if value < 2:
        raise errors.UsageError(f"{PRECISION_ENV} must be at least 2, got {value}")
    return value



def reload_config():
    # Reload the module-level settings from the config file and environment.
    global DIGITS, DEPTH, SERIES_ORDER, OUTPUT_FORMAT, LANGUAGE, WORKERS
    cfg = load_user_config()
    DIGITS = env_digits() or cfg["digits"]
    DEPTH = cfg["depth"]
    SERIES_ORDER = cfg["series_order"]
    OUTPUT_FORMAT = cfg["format"]
    LANGUAGE = cfg["language"]
    WORKERS = cfg["workers"]


# Initialize from config file
DIGITS = DEFAULT_DIGITS
DEPTH = DEFAULT_DEPTH
SERIES_ORDER = DEFAULT_SERIES_ORDER
OUTPUT_FORMAT = DEFAULT_FORMAT
LANGUAGE = DEFAULT_LANGUAGE
WORKERS = DEFAULT_WORKERS
