"""Regenerate the committed golden journal fixture.

Run after any deliberate protocol or engine change:
    python3 -m tests.make_golden
"""

import shutil
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from infopower.service import SessionManager, create_app

from .test_service import GOLDEN_PATH, scripted_commands


def main() -> None:
    tmp = Path(tempfile.mkdtemp())
    try:
        manager = SessionManager(step_seconds=0.0, journal_dir=tmp)
        with TestClient(create_app(manager)) as client:
            sid = client.post("/sessions", json={}).json()["session_id"]
            scripted_commands(client, sid)
        GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(tmp / f"{sid}.jsonl", GOLDEN_PATH)
        print(f"wrote {GOLDEN_PATH} ({GOLDEN_PATH.stat().st_size} bytes)")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


if __name__ == "__main__":
    main()
