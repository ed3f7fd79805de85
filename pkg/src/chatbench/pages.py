"""Minimal HTML shells. All real UI lives in the static frontend bundle;
these pages mount it and inject the bootstrap payload it needs."""

from __future__ import annotations

import html
import json
from typing import Any


def _bootstrap(payload: dict[str, Any]) -> str:
    # Escape so user text can never close the script tag.
    return json.dumps(payload, ensure_ascii=False).replace("</", "<\\/")


def _shell(title: str, prefix: str, script: str | None, payload: dict[str, Any],
           body: str = "") -> str:
    boot = f"<script>window.CHATBENCH = {_bootstrap(payload)};</script>"
    module = f'<script type="module" src="{prefix}/static/{script}"></script>' if script else ""
    return f"""<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<meta name="viewport" content="width=device-width, initial-scale=1">
<title>{html.escape(title)}</title>
<link rel="stylesheet" href="{prefix}/static/style.css">
</head>
<body>
<div id="app">{body}</div>
{boot}
{module}
</body>
</html>
"""


def index_page(prefix: str, task_name: str, needs_consent: bool) -> str:
    return _shell(task_name, prefix, "landing.js",
                  {"pathPrefix": prefix, "taskName": task_name, "needsConsent": needs_consent},
                  body="<noscript>This platform requires JavaScript.</noscript>")


def thread_page(prefix: str, thread_id: str, task_name: str, render_model: list[dict],
                role: str, instruction: dict[str, str]) -> str:
    return _shell(f"{task_name} - thread {thread_id}", prefix, "evaluator.js", {
        "pathPrefix": prefix,
        "threadId": thread_id,
        "taskName": task_name,
        "renderModel": render_model,
        "role": role,
        "instruction": instruction,
    })


def admin_page(prefix: str, task_name: str) -> str:
    return _shell(f"{task_name} - admin", prefix, "admin.js",
                  {"pathPrefix": prefix, "taskName": task_name})


def consent_page(prefix: str, agreement_html: str, checkbox_texts: list[str],
                 return_to: str) -> str:
    """Self-contained consent gate; usable even without the frontend bundle."""
    boxes = "\n".join(
        f'<label><input type="checkbox" class="consent-box"> {html.escape(text)}</label><br>'
        for text in checkbox_texts)
    inline = f"""
<script>
document.getElementById('consent-submit').addEventListener('click', async () => {{
  const checked = [...document.querySelectorAll('.consent-box')].map(b => b.checked);
  const res = await fetch('{prefix}/api/consent', {{
    method: 'POST',
    headers: {{'Content-Type': 'application/json'}},
    body: JSON.stringify({{checked}}),
  }});
  if (res.ok) {{ window.location = {json.dumps(return_to)}; }}
  else {{
    const body = await res.json();
    document.getElementById('consent-error').textContent =
      body.error ? body.error.message : 'Please check every box.';
  }}
}});
</script>
"""
    return f"""<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>Agreement</title></head>
<body>
<div id="agreement">{agreement_html}</div>
<form onsubmit="return false">
{boxes}
<p id="consent-error" style="color:#b00"></p>
<button id="consent-submit">Continue</button>
</form>
{inline}
</body>
</html>
"""


def preview_page(title: str, description: str) -> str:
    return f"""<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>{html.escape(title or 'Task preview')}</title></head>
<body>
<h1>{html.escape(title or 'Task preview')}</h1>
<p>{html.escape(description)}</p>
<p>This is a read-only preview. Accept the task to participate.</p>
</body>
</html>
"""


def message_page(title: str, message: str) -> str:
    return f"""<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>{html.escape(title)}</title></head>
<body><h1>{html.escape(title)}</h1><p>{html.escape(message)}</p></body>
</html>
"""
