"""Drop this whole directory when the exporter is not installed.

The main library's suite must stay runnable on its own, and raising a
skip here would abort the run during initial conftest loading, so the
guard works through collection instead.
"""

import importlib.util

if importlib.util.find_spec("semmap_exporter") is None:
    collect_ignore_glob = ["*"]
