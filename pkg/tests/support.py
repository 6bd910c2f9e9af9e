"""HTTP and event-stream helpers shared by the service-level tests."""
import json
import time
from http.client import HTTPConnection


def get_json(svc, path):
    host, port = svc.http_address
    conn = HTTPConnection(host, port, timeout=10)
    try:
        conn.request("GET", path)
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read())
    finally:
        conn.close()


def post_json(svc, path, body=None, raw=None):
    host, port = svc.http_address
    if raw is not None:
        payload = raw
    elif body is None:
        payload = b""
    else:
        payload = json.dumps(body).encode()
    conn = HTTPConnection(host, port, timeout=10)
    try:
        conn.request("POST", path, body=payload,
                     headers={"Content-Type": "application/json"})
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read())
    finally:
        conn.close()


def wait_for(predicate, timeout=30.0, interval=0.02, message="condition"):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(interval)
    raise AssertionError(f"timed out after {timeout}s waiting for {message}")


def wait_phase(svc, phase, timeout=30.0):
    def check():
        code, state = get_json(svc, "/api/state")
        assert code == 200
        return state if state["phase"] == phase else None
    return wait_for(check, timeout, message=f"phase {phase!r}")


def wait_kind_count(svc, kind, count, timeout=30.0):
    """Block until the bus holds at least `count` events of `kind`."""
    def check():
        events = svc.bus.events_after(0)
        return len([e for e in events if e["kind"] == kind]) >= count
    wait_for(check, timeout, message=f"{count}x {kind!r} on the bus")


def bus_kinds(svc):
    return [e["kind"] for e in svc.bus.events_after(0)]


class SseClient:
    """Minimal text/event-stream reader over http.client."""

    def __init__(self, svc, last_event_id=None, query=""):
        host, port = svc.http_address
        self.conn = HTTPConnection(host, port, timeout=10)
        headers = {}
        if last_event_id is not None:
            headers["Last-Event-ID"] = str(last_event_id)
        self.conn.request("GET", "/api/events" + query, headers=headers)
        self.resp = self.conn.getresponse()
        assert self.resp.status == 200
        assert self.resp.getheader("Content-Type") == "text/event-stream"

    def events(self, *, count=None, until_kind=None, timeout=30.0):
        """Parse events until `count` collected or `until_kind` seen.

        Each parsed event dict gains an `_sse_id` key holding the id:
        field, so resume bookkeeping can be checked against seq.
        """
        got = []
        pending_id = None
        data_lines = []
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            raw = self.resp.readline()
            if raw == b"":
                break  # server closed the stream
            line = raw.decode().rstrip("\r\n")
            if line.startswith(":"):
                continue  # keep-alive comment
            if line.startswith("id:"):
                pending_id = int(line[3:].strip())
            elif line.startswith("data:"):
                data_lines.append(line[5:].strip())
            elif line == "" and data_lines:
                ev = json.loads("\n".join(data_lines))
                ev["_sse_id"] = pending_id
                got.append(ev)
                pending_id, data_lines = None, []
                if until_kind is not None and ev["kind"] == until_kind:
                    return got
                if count is not None and len(got) >= count:
                    return got
        if count is None and until_kind is None:
            return got
        raise AssertionError(
            f"stream ended after {len(got)} events "
            f"(wanted count={count}, until_kind={until_kind})"
        )

    def close(self):
        try:
            self.resp.close()
        except Exception:
            pass
        self.conn.close()
