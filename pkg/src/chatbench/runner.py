"""Command-line entry point: load the task config and topics, serve one
platform instance.

Port and store path can be overridden with the ``CHATBENCH_PORT`` and
``CHATBENCH_STORE`` environment variables, which take precedence over the
config file but not over explicit flags.
"""

from __future__ import annotations

import argparse
import logging
import os
from pathlib import Path

import uvicorn

from .config import parse_task_config
from .service import create_app
from .topics import load_topics


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Human evaluation platform instance")
    parser.add_argument("--config", required=True, help="task configuration YAML")
    parser.add_argument("--topics", required=True, help="topics JSON file")
    parser.add_argument("--store", default=None, help="SQLite database path")
    parser.add_argument("--host", default="0.0.0.0")
    parser.add_argument("--port", type=int, default=None,
                        help="override the configured TCP port")
    parser.add_argument("--public-url", default=None,
                        help="externally visible base URL (behind the reverse proxy)")
    parser.add_argument("--static-dir", default=None,
                        help="directory of built frontend assets to serve under /static")
    parser.add_argument("--admin", default=None, metavar="USER:SECRET",
                        help="bootstrap an administrator account")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    config_path = Path(args.config)
    config = parse_task_config(config_path.read_text(encoding="utf-8"),
                               base_dir=config_path.parent)
    topics = load_topics(Path(args.topics).read_text(encoding="utf-8"))

    port = args.port or int(os.environ.get("CHATBENCH_PORT", config.instance.tcp_port))
    store_path = args.store or os.environ.get("CHATBENCH_STORE", "chatbench.db")

    admin_credentials = None
    if args.admin:
        user, _, secret = args.admin.partition(":")
        if not user or not secret:
            parser.error("--admin must look like USER:SECRET")
        admin_credentials = (user, secret)

    static_dir = args.static_dir
    if static_dir is None:
        default_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if default_dist.is_dir():
            static_dir = default_dist

    app = create_app(config, topics, store_path=store_path,
                     public_base_url=args.public_url, static_dir=static_dir,
                     admin_credentials=admin_credentials)
    uvicorn.run(app, host=args.host, port=port)


if __name__ == "__main__":
    main()
