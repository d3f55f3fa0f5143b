"""Shared helper: run one CLI invocation, return (exit code, parsed JSON report)."""
import io
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dirichlet_spaces import cli  # noqa: E402


def run(*argv):
    buf = io.StringIO()
    code = cli.main([str(a) for a in argv], stdout=buf)
    return code, json.loads(buf.getvalue())
