"""Record real server traffic into recorded.json for the contract test.

Usage: python3 record.py <bundle_dir>

Plays a short session against the rewrite service (in-process ASGI, same
handlers as the live server) and stores every request/response pair. The
monolingual case uses an adjacent-swap corruption that the bundled toy
model demonstrably restores; the swapped tokens are stored alongside so
the contract test can assert the diff highlights exactly those.
"""

import json
import os
import sys

from fastapi.testclient import TestClient

from monoglot import service, textpipe, toylang


def display(sentence):
    """Raw toy realization -> the form a user would type (cased, detokenized)."""
    return textpipe.detokenize(textpipe.detruecase(sentence.split(" ")))


def find_restorable_swap(client, lang):
    """An order-corrupted sentence (swap not sentence-initial) the model fixes."""
    import numpy as np

    for i in range(200):
        cs = toylang.sample_concept(np.random.default_rng(31000 + i))
        clean = toylang.realize(cs, lang, "fm")
        toks = clean.split(" ")
        if len(toks) < 5:
            continue
        swap = 1  # not position 0, so display casing is unaffected
        bad = list(toks)
        bad[swap], bad[swap + 1] = bad[swap + 1], bad[swap]
        res = client.post("/translate", json={
            "text": display(" ".join(bad)),
            "source_lang": lang.id,
            "target_lang": lang.id,
            "target_style": "fm",
        })
        if res.status_code == 200 and res.json()["output"] == display(clean):
            return display(" ".join(bad)), display(clean), sorted([toks[swap], toks[swap + 1]])
    raise SystemExit("no restorable swap found; is the bundle trained?")


def main():
    if len(sys.argv) != 2:
        raise SystemExit(__doc__)
    bundle_dir = sys.argv[1]
    app = service.create_app(bundle_dir=bundle_dir)
    recordings = []
    with TestClient(app) as client:
        def record(name, method, path, body=None):
            if method == "GET":
                res = client.get(path)
            else:
                res = client.post(path, json=body)
            entry = {
                "name": name,
                "request": {"method": method, "path": path},
                "response": {"status": res.status_code, "body": res.json()},
            }
            if body is not None:
                entry["request"]["body"] = body
            recordings.append(entry)
            return res

        record("health", "GET", "/health")
        langs_res = record("languages", "GET", "/languages")
        lang_tags = langs_res.json()["languages"]
        styles = langs_res.json()["styles"]

        lang = next(l for l in toylang.make_languages(3) if l.id == lang_tags[0])
        swapped_input, clean, swapped_tokens = find_restorable_swap(client, lang)
        record("ordered-swap-monolingual", "POST", "/translate", {
            "text": swapped_input,
            "source_lang": lang.id,
            "target_lang": lang.id,
            "target_style": "fm",
        })
        record("cross-lingual", "POST", "/translate", {
            "text": clean,
            "source_lang": lang_tags[0],
            "target_lang": lang_tags[1],
            "target_style": "fm",
        })
        record("unknown-style", "POST", "/translate", {
            "text": clean,
            "source_lang": lang_tags[0],
            "target_lang": lang_tags[0],
            "target_style": "casual",
        })

    out = {
        "orderedSwap": {
            "input": swapped_input,
            "clean": clean,
            "swapped": swapped_tokens,
        },
        "tags": {"languages": lang_tags, "styles": styles},
        "recordings": recordings,
    }
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "recorded.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(out, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {path} with {len(recordings)} recordings")


if __name__ == "__main__":
    main()
