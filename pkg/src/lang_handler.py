# src/lang_handler.py

import os
import json

# Map display names to filenames
LANGUAGES = {
    "English": "en",
}

FALLBACK_LANGUAGE = "en"


def get_default_language():
    # Guesses the default language code from the locale environment
    for var in ("LC_ALL", "LC_MESSAGES", "LANG"):
        code = os.environ.get(var, "")[:2].lower()
        if code in LANGUAGES.values():
            return code
    return FALLBACK_LANGUAGE


def load_language(lang_code=None):
    # Resolve path relative to this file; unknown codes fall back to English
    lang_code = lang_code or get_default_language()
    if lang_code not in LANGUAGES.values():
        lang_code = FALLBACK_LANGUAGE
    base_dir = os.path.dirname(__file__)
    file_path = os.path.join(base_dir, "i18n", f"{lang_code}.json")

    with open(file_path, "r", encoding="utf-8") as f:
        return json.load(f)


def tr(strings: dict, key: str, *args) -> str:
    # Missing keys show up as the key itself
    text = strings.get(key, key)
    return text.format(*args) if args else text
