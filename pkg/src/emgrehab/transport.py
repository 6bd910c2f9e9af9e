"""Byte transports carrying the framed wire format.

Two flavors: an in-process duplex pipe for tests and the bundled
simulator, and a thin TCP adapter. Both sides see the same interface:
send(bytes), recv(timeout) -> bytes (b"" on timeout), close().
"""
from __future__ import annotations

import queue
import socket

from .errors import TransportClosed


class PipeEndpoint:
    """One end of an in-process duplex byte pipe."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False

    @property
    def closed(self) -> bool:
        return self._closed

    def send(self, data: bytes) -> None:
        if self._closed:
            raise TransportClosed("pipe endpoint closed")
        try:
            self._outbox.put(bytes(data), timeout=10.0)
        except queue.Full:
            raise TransportClosed("peer stopped draining the pipe") from None

    def recv(self, timeout: float = 0.0) -> bytes:
        """Next chunk, b"" if nothing arrives in time.

        Raises TransportClosed once the peer has closed and the pipe drained.
        """
        try:
            chunk = self._inbox.get(timeout=timeout) if timeout > 0 else self._inbox.get_nowait()
        except queue.Empty:
            if self._closed:
                raise TransportClosed("pipe closed") from None
            return b""
        if chunk is None:
            self._closed = True
            raise TransportClosed("peer closed the pipe")
        return chunk

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._outbox.put_nowait(None)
            except queue.Full:
                pass


def make_pipe(maxsize: int = 1024) -> tuple[PipeEndpoint, PipeEndpoint]:
    """Connected endpoint pair; the queue bound provides backpressure."""
    a_to_b: queue.Queue = queue.Queue(maxsize=maxsize)
    b_to_a: queue.Queue = queue.Queue(maxsize=maxsize)
    return PipeEndpoint(b_to_a, a_to_b), PipeEndpoint(a_to_b, b_to_a)


class TcpTransport:
    """Socket adapter with the pipe endpoint's interface."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._closed = False

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = 5.0) -> "TcpTransport":
        sock = socket.create_connection((host, port), timeout=timeout)
        sock.settimeout(None)
        return cls(sock)

    @property
    def closed(self) -> bool:
        return self._closed

    def send(self, data: bytes) -> None:
        if self._closed:
            raise TransportClosed("socket closed")
        try:
            self._sock.sendall(data)
        except OSError as exc:
            self._closed = True
            raise TransportClosed(str(exc)) from exc

    def recv(self, timeout: float = 0.0) -> bytes:
        if self._closed:
            raise TransportClosed("socket closed")
        self._sock.settimeout(timeout if timeout > 0 else 0.000001)
        try:
            chunk = self._sock.recv(65536)
        except (socket.timeout, BlockingIOError):
            return b""
        except OSError as exc:
            self._closed = True
            raise TransportClosed(str(exc)) from exc
        if chunk == b"":
            self._closed = True
            raise TransportClosed("peer closed the socket")
        return chunk

    def close(self) -> None:
        self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def parse_address(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)
