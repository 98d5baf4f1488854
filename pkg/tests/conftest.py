"""Shared fixtures: a toy ontology, corpus builders, and an HTTP stub."""

from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ictrack.corpus import Ontology, parse_corpus, parse_ontology

TOY_ONTOLOGY = {
    "slots": [
        {"domain": "hotel", "name": "area", "kind": "categorical",
         "values": ["centre", "north", "south", "east", "west"]},
        {"domain": "hotel", "name": "stars", "kind": "categorical",
         "values": ["1", "2", "3", "4", "5"]},
        {"domain": "hotel", "name": "price range", "kind": "categorical",
         "values": ["cheap", "moderate", "expensive"]},
        {"domain": "train", "name": "day", "kind": "span", "values": []},
        {"domain": "train", "name": "leave at", "kind": "span", "values": []},
        {"domain": "restaurant", "name": "food", "kind": "span", "values": []},
    ]
}


@pytest.fixture(scope="session")
def ontology() -> Ontology:
    return parse_ontology(json.dumps(TOY_ONTOLOGY).encode("utf-8"))


def corpus_bytes(dialogues: list[dict]) -> bytes:
    return json.dumps(dialogues).encode("utf-8")


def make_corpus(dialogues: list[dict], ontology: Ontology):
    return parse_corpus(corpus_bytes(dialogues), ontology)


TWO_DIALOGUES = [
    {
        "id": "d-hotel",
        "turns": [
            {"system": "", "user": "i need a hotel in the centre",
             "state": {"hotel-area": "centre"}},
            {"system": "how many stars ?", "user": "4 stars please",
             "state": {"hotel-area": "centre", "hotel-stars": "4"}},
        ],
    },
    {
        "id": "d-train",
        "turns": [
            {"system": "", "user": "a train on monday leaving at 08:45",
             "state": {"train-day": "monday", "train-leave at": "08:45"}},
        ],
    },
]


@pytest.fixture()
def small_corpus(ontology):
    return make_corpus(TWO_DIALOGUES, ontology)


_WORDS = [
    "please", "book", "find", "cheap", "expensive", "moderate", "nice", "fast",
    "city", "centre", "north", "south", "monday", "friday", "early", "late",
    "table", "room", "ticket", "parking", "wifi", "quiet", "big", "small",
]

_DOMAIN_SLOTS = {
    "hotel": ["area", "stars", "price range"],
    "train": ["day", "leave at"],
    "restaurant": ["food"],
}

_SLOT_VALUES = {
    "hotel-area": ["centre", "north", "south", "east", "west"],
    "hotel-stars": ["1", "2", "3", "4", "5"],
    "hotel-price range": ["cheap", "moderate", "expensive"],
    "train-day": ["monday", "tuesday", "friday", "sunday"],
    "train-leave at": ["08:45", "09:30", "12:15", "17:00"],
    "restaurant-food": ["italian", "indian", "chinese", "british"],
}


def synthetic_corpus_dicts(
    n_dialogues: int,
    seed: int = 0,
    domains: list[str] | None = None,
    max_turns: int = 3,
    multi_domain_fraction: float = 0.0,
) -> list[dict]:
    """Random but reproducible corpus in the toolkit schema.

    Utterances embed the dialogue id and turn index, so every context
    rendering in the corpus is unique (a mock-oracle requirement).
    """
    rng = random.Random(seed)
    pool = domains or list(_DOMAIN_SLOTS)
    dialogues = []
    for i in range(n_dialogues):
        if multi_domain_fraction and rng.random() < multi_domain_fraction:
            active = rng.sample(pool, 2)
        else:
            active = [rng.choice(pool)]
        turns = []
        state: dict[str, str] = {}
        for t in range(rng.randint(1, max_turns)):
            domain = rng.choice(active)
            slot = f"{domain}-{rng.choice(_DOMAIN_SLOTS[domain])}"
            value = rng.choice(_SLOT_VALUES[slot])
            state[slot] = value
            filler = rng.choice(_WORDS)
            turns.append(
                {
                    "system": "" if t == 0 else f"sys {filler} d{i} t{t}",
                    "user": f"user {rng.choice(_WORDS)} {value} d{i} t{t}",
                    "state": dict(state),
                }
            )
        dialogues.append({"id": f"dlg{i:04d}", "turns": turns})
    return dialogues


@pytest.fixture()
def synthetic_corpus(ontology):
    return make_corpus(synthetic_corpus_dicts(20, seed=11), ontology)


class _StubHandler(BaseHTTPRequestHandler):
    """Replays canned (status, payload) responses and records requests."""

    def do_POST(self):  # noqa: N802 (stdlib naming)
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else None
        self.server.requests.append((self.path, body))
        if self.server.responses:
            status, payload = self.server.responses.pop(0)
        else:
            status, payload = 200, {}
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # keep test output clean
        pass


class StubServer:
    def __init__(self):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.httpd.responses = []
        self.httpd.requests = []
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def endpoint(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def enqueue(self, status: int, payload: dict) -> None:
        self.httpd.responses.append((status, payload))

    @property
    def requests(self):
        return self.httpd.requests

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture()
def stub_server():
    server = StubServer()
    yield server
    server.close()
