import json

import pytest
from fastapi.testclient import TestClient

from monoglot import corpus as cm
from monoglot import service as svc
from monoglot import toylang as tl
from monoglot import transformer as tfm
from monoglot.decoder import ModelBundle


@pytest.fixture(scope="module")
def bundle():
    pairs = tl.generate_corpus(3, 12, seed=4)
    pipe = cm.train_pipeline(pairs, vocab_size=150)
    config = tfm.ModelConfig(
        layers=1, heads=2, model_dim=16, ff_dim=32, max_positions=64,
        token_vocab=len(pipe.unit_vocab), lang_factors=3, style_factors=2,
        factor_dim=4, dropout=0.0,
    )
    return ModelBundle(config, tfm.init_params(config, seed=0), pipe)


@pytest.fixture(scope="module")
def client(bundle):
    app = svc.create_app(bundle=bundle)
    with TestClient(app) as c:
        yield c


def translate_body(**over):
    body = {
        "text": "kipa mamaeme popaop .",
        "source_lang": "aa",
        "target_lang": "bb",
        "target_style": "fm",
        "beam": 1,
    }
    body.update(over)
    return body


class TestHealth:
    def test_ok_when_loaded(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok"}

    def test_503_before_load(self):
        app = svc.create_app(bundle_dir="/nonexistent", defer_load=True)
        with TestClient(app) as c:
            r = c.get("/health")
            assert r.status_code == 503
            assert r.json() == {"status": "loading"}
            assert c.post("/translate", json=translate_body()).status_code == 503
            assert c.get("/languages").status_code == 503


class TestLanguages:
    def test_lists_tags(self, client):
        r = client.get("/languages")
        assert r.status_code == 200
        assert r.json() == {"languages": ["aa", "bb", "cc"], "styles": ["fm", "inf"]}


class TestTranslate:
    def test_success_schema(self, client):
        r = client.post("/translate", json=translate_body())
        assert r.status_code == 200
        data = r.json()
        assert set(data) == {"output", "score", "tokens_in", "tokens_out"}
        assert isinstance(data["output"], str)
        assert data["tokens_in"] == 4

    def test_monolingual_request(self, client):
        r = client.post("/translate", json=translate_body(target_lang="aa"))
        assert r.status_code == 200

    def test_malformed_json_400(self, client):
        r = client.post(
            "/translate", content=b"{not json", headers={"content-type": "application/json"}
        )
        assert r.status_code == 400
        assert "malformed" in r.json()["error"]

    def test_non_object_body_400(self, client):
        r = client.post("/translate", json=["a", "list"])
        assert r.status_code == 400

    def test_missing_field_400(self, client):
        body = translate_body()
        del body["target_style"]
        r = client.post("/translate", json=body)
        assert r.status_code == 400
        assert "target_style" in r.json()["error"]

    def test_oversize_text_413(self, client):
        r = client.post(
            "/translate", json=translate_body(text="a" * (svc.MAX_TEXT_CHARS + 1))
        )
        assert r.status_code == 413

    def test_unknown_language_422_lists_available(self, client):
        r = client.post("/translate", json=translate_body(target_lang="zz"))
        assert r.status_code == 422
        assert r.json()["available_languages"] == ["aa", "bb", "cc"]

    def test_unknown_style_422_lists_available(self, client):
        r = client.post("/translate", json=translate_body(target_style="loud"))
        assert r.status_code == 422
        assert r.json()["available_styles"] == ["fm", "inf"]

    def test_bad_beam(self, client):
        assert client.post(
            "/translate", json=translate_body(beam="many")
        ).status_code == 400
        assert client.post(
            "/translate", json=translate_body(beam=0)
        ).status_code == 422

    def test_empty_text_ok(self, client):
        r = client.post("/translate", json=translate_body(text=""))
        assert r.status_code == 200
        assert r.json()["output"] == ""

    def test_request_counter_increments(self, client, bundle):
        app_state = client.app.state.service
        before = app_state.request_count
        client.post("/translate", json=translate_body())
        assert app_state.request_count == before + 1
