"""HTTP session service: endpoints, revisions, undo, error mapping."""

import json

import pytest
from fastapi.testclient import TestClient

from rustproof.service import create_app

from conftest import LOOP_PRODUCT, MUL_SRC


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def session(client):
    r = client.post("/sessions", json={"source": LOOP_PRODUCT.read_text(),
                                       "overflow": "ignore"})
    assert r.status_code == 200
    return r.json()


def test_create_session_lists_functions(session):
    assert session["functions"] == ["product"]
    assert session["revision"] == 1


def test_goals_carry_pretty_and_trees(client, session):
    sid = session["session_id"]
    g = client.get(f"/sessions/{sid}/goals").json()
    assert g["status"] == {"product": "Open"}
    [goal] = g["goals"]
    assert "|-" in goal["pretty"]
    assert goal["succ"][0]["path"] == [1, 0]
    assert goal["succ"][0]["tree"]["children"] or goal["succ"][0]["tree"]["text"]


def test_rules_listing(client, session):
    sid = session["session_id"]
    gid = client.get(f"/sessions/{sid}/goals").json()["goals"][0]["id"]
    rules = client.get(f"/goals/{gid}/rules").json()["rules"]
    names = [r["name"] for r in rules]
    assert "let" in names


def test_apply_bumps_revision_and_stale_409(client, session):
    sid = session["session_id"]
    g = client.get(f"/sessions/{sid}/goals").json()
    gid = g["goals"][0]["id"]
    stale = client.post(f"/goals/{gid}/apply",
                        json={"rule": "let", "path": [1, 0], "revision": 999})
    assert stale.status_code == 409
    ok = client.post(f"/goals/{gid}/apply",
                     json={"rule": "let", "path": [1, 0],
                           "revision": g["revision"]})
    assert ok.status_code == 200
    assert ok.json()["revision"] == g["revision"] + 1
    assert len(ok.json()["goals"]) == 1


def test_not_applicable_maps_to_422(client, session):
    sid = session["session_id"]
    gid = client.get(f"/sessions/{sid}/goals").json()["goals"][0]["id"]
    r = client.post(f"/goals/{gid}/apply",
                    json={"rule": "ifElseSplit", "path": [1, 0]})
    assert r.status_code == 422
    assert r.json()["error"] == "NotApplicable"


def test_missing_spec_maps_to_422(client):
    bare_loop = """\
//@ ensures res == 0
fn spin() -> i32 {
    let mut i: i32 = 1;
    loop {
        if i == 0 { break 0; }
        i = i - 1;
    }
}
"""
    r = client.post("/sessions", json={"source": bare_loop})
    sid = r.json()["session_id"]
    # run the automation until it parks on the loop, then poke the loop rule
    client.post(f"/sessions/{sid}/auto", json={})
    goals = client.get(f"/sessions/{sid}/goals").json()["goals"]
    hits = [g for g in goals for _ in [0]
            if "loop" in g["pretty"]]
    assert hits, goals
    resp = client.post(f"/goals/{hits[0]['id']}/apply",
                       json={"rule": "loopScopeInvBox", "path": [1, 0]})
    assert resp.status_code == 422
    assert resp.json()["error"] == "MissingSpec"


def test_undo_restores_previous_goal_list(client, session):
    sid = session["session_id"]
    before = client.get(f"/sessions/{sid}/goals").json()
    gid = before["goals"][0]["id"]
    client.post(f"/goals/{gid}/apply", json={"rule": "let", "path": [1, 0]})
    r = client.post(f"/sessions/{sid}/undo", json={})
    assert r.status_code == 200
    after = client.get(f"/sessions/{sid}/goals").json()
    assert [g["id"] for g in after["goals"]] == [g["id"] for g in before["goals"]]
    assert [g["pretty"] for g in after["goals"]] == \
        [g["pretty"] for g in before["goals"]]


def test_undo_restores_serialized_state_bytes(client, session):
    sid = session["session_id"]
    before = client.get(f"/sessions/{sid}/proof").json()["proofs"]
    gid = client.get(f"/sessions/{sid}/goals").json()["goals"][0]["id"]
    client.post(f"/goals/{gid}/apply", json={"rule": "let", "path": [1, 0]})
    client.post(f"/sessions/{sid}/undo", json={})
    after = client.get(f"/sessions/{sid}/proof").json()["proofs"]
    assert json.dumps(after, sort_keys=True) == json.dumps(before, sort_keys=True)


def test_undo_empty_stack_rejected(client, session):
    sid = session["session_id"]
    r = client.post(f"/sessions/{sid}/undo", json={})
    assert r.status_code == 422


def test_auto_closes_loop_product(client, session):
    sid = session["session_id"]
    r = client.post(f"/sessions/{sid}/auto", json={})
    assert r.json()["results"]["product"]["status"] == "Closed"
    tree = client.get(f"/sessions/{sid}/tree").json()["trees"]["product"]
    assert tree["children"]


def test_proof_export_has_file_shape(client, session):
    sid = session["session_id"]
    client.post(f"/sessions/{sid}/auto", json={})
    doc = client.get(f"/sessions/{sid}/proof").json()["proofs"]["product"]
    assert set(doc) == {"source_sha256", "settings", "nodes"}
    assert all("position-path" in n for n in doc["nodes"])


def test_unknown_ids_404(client):
    assert client.get("/sessions/nope/goals").status_code == 404
    assert client.get("/goals/nope:f:0/rules").status_code == 404
    assert client.post("/sessions/nope/auto", json={}).status_code == 404


def test_parse_error_422(client):
    r = client.post("/sessions", json={"source": "fn broken( {"})
    assert r.status_code == 422
    assert r.json()["error"] == "ParseError"


def test_api_determinism_modulo_session_id(client):
    def transcript():
        r = client.post("/sessions", json={"source": MUL_SRC,
                                           "overflow": "ignore"})
        sid = r.json()["session_id"]
        out = [{"functions": r.json()["functions"],
                "revision": r.json()["revision"]}]
        auto = client.post(f"/sessions/{sid}/auto", json={}).json()
        results = {fn: {k: v for k, v in d.items() if k != "open"}
                   for fn, d in auto["results"].items()}
        out.append({"revision": auto["revision"], "results": results})
        goals = client.get(f"/sessions/{sid}/goals").json()
        out.append({"revision": goals["revision"], "status": goals["status"],
                    "pretty": [g["pretty"] for g in goals["goals"]]})
        return out

    assert transcript() == transcript()


def test_schema_endpoint(client):
    doc = client.get("/schema").json()
    assert doc["schema_version"] == 1
    assert "POST /sessions" in doc["endpoints"]
