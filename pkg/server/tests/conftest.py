"""Fixtures: an in-process client, a live HTTP server, and fixture pairs."""

from __future__ import annotations

import random
import socket
import threading
import time

import pytest
import uvicorn
from fastapi.testclient import TestClient

from slotserve import ServerConfig, create_app


@pytest.fixture()
def client():
    app = create_app(ServerConfig())
    with TestClient(app) as test_client:
        test_client.app = app
        yield test_client


def fixture_pairs(n: int = 200, seed: int = 0) -> list[dict]:
    """Templated (input, target) pairs in the training-pair payload shape."""
    rng = random.Random(seed)
    colors = ["red", "blue", "green", "amber", "violet"]
    pairs = []
    for i in range(n):
        color = rng.choice(colors)
        pairs.append({
            "input": f"[context] [system] none [user] paint it {color} ref {i}"
                     f" [slot] paint-color",
            "target": color,
        })
    return pairs


class LiveServer:
    """uvicorn in a daemon thread on an ephemeral port."""

    def __init__(self, config: ServerConfig):
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        self.port = sock.getsockname()[1]
        sock.close()
        self._server = uvicorn.Server(
            uvicorn.Config(
                create_app(config), host="127.0.0.1", port=self.port,
                log_level="warning",
            )
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def start(self, timeout: float = 30.0) -> "LiveServer":
        self._thread.start()
        deadline = time.time() + timeout
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.05)
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)
