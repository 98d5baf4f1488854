"""Run the server: `python -m slotserve --port 8900` or the `slotserve` script."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import PRESETS, ServerConfig


def main() -> None:
    parser = argparse.ArgumentParser(description="seq2seq slot-value model server")
    parser.add_argument("--model", default="tiny", choices=sorted(PRESETS))
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-input-len", type=int, default=256)
    parser.add_argument("--port", type=int, default=8900)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--epochs", type=int, default=3,
                        help="default epochs when /finetune omits the field")
    args = parser.parse_args()

    config = ServerConfig(
        model=args.model,
        device=args.device,
        max_input_len=args.max_input_len,
        port=args.port,
        lr=args.lr,
        default_epochs=args.epochs,
    )
    uvicorn.run(create_app(config), host=args.host, port=config.port,
                log_level="warning")


if __name__ == "__main__":
    main()
