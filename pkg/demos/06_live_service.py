"""A scripted client against the live session service.

Starts the service in-process, plays a short session over HTTP exactly
like the control panel would, then prints the report and shows the
journal replaying into the same state.

Run: python3 demos/06_live_service.py
"""

import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from infopower.service import SessionManager, create_app, replay_journal

journal_dir = Path(tempfile.mkdtemp())
manager = SessionManager(step_seconds=0.5, journal_dir=journal_dir, mode="user-aware")

with TestClient(create_app(manager)) as client:
    session = client.post("/sessions", json={}).json()
    sid = session["session_id"]
    print(f"created {sid} (mode={session['mode']}, step={session['step_seconds']}s)")

    client.post(f"/sessions/{sid}/start")
    print("briefing over, the clock is running\n")

    suggestion = client.post(f"/sessions/{sid}/what").json()["suggestion"]
    print(f"advisor: {suggestion['text']}")
    explanation = client.post(f"/sessions/{sid}/why").json()["explanation"]
    print(f"advisor: {explanation['text']}")

    client.post(f"/sessions/{sid}/action", json={"action": suggestion["action_name"]})
    print(f"you follow the advice: {suggestion['action_name']}")

    print("\n...now you hesitate past the deadline...")
    time.sleep(1.2)
    state = client.get(f"/sessions/{sid}/state").json()
    print(f"the timer skipped for you: step={state['step']}, "
          f"last action source={state['last_action']['source']}\n")

    while client.get(f"/sessions/{sid}/state").json()["phase"] == "running":
        client.post(f"/sessions/{sid}/action", json={"action": "skip"})

    sheet = client.get(f"/sessions/{sid}/quiz").json()
    print(f"quiz time: {len(sheet['items'])} rule items, {len(sheet['what_if'])} what-if items")
    answers = {item["item_id"]: 0 for item in sheet["items"]}
    client.post(f"/sessions/{sid}/quiz", json={"answers": answers, "questionnaire": {"satisfaction": 4}})

    report = client.get(f"/sessions/{sid}/report").json()
    print(f"final score (M1): {report['m1_final_score']:.2f}")
    print(f"rules learned (M2): {sum(report['m2_learned_per_feature'])}, "
          f"what={report['m2_what_count']} why={report['m2_why_count']}")
    print(f"per-user information power: {report['ip_user']:.4f}\n")

    live_state = manager.get(sid).state

replayed = replay_journal(journal_dir / f"{sid}.jsonl", manager.tree)
print(f"journal replay matches the live session: {replayed.state == live_state}")
print(f"journal: {journal_dir / (sid + '.jsonl')}")
