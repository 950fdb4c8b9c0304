"""A scripted OpenAI-compatible chat-completions server on localhost."""

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubEndpoint:
    """``script`` maps 0-based request number to reply text (or an int HTTP status)."""

    def __init__(self, script=None):
        self.script = dict(script or {})
        self.requests = []
        self.lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with stub.lock:
                    k = len(stub.requests)
                    stub.requests.append({"path": self.path, "auth": self.headers.get("Authorization"), "body": body})
                reply = stub.script.get(k)
                if isinstance(reply, int):
                    self._send(reply, {"error": "scripted failure"})
                    return
                if reply is None:
                    prompt = body["messages"][0]["content"]
                    reply = f"{int(hashlib.sha256(prompt.encode()).hexdigest(), 16) % 1000 / 1000:.3f}"
                self._send(200, {"choices": [{"index": 0, "message": {"role": "assistant", "content": reply}}]})

            def _send(self, status, payload):
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1"

    def __enter__(self):
        threading.Thread(target=self.server.serve_forever, daemon=True).start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
