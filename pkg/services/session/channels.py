# services/session/channels.py

import logging
import queue
import socket
import threading
from collections import Counter

from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from services.errors import ChannelError
from services.session.messages import Message

logger = logging.getLogger('ClassicalChannel')  # pylint: disable=no-member

RECEIVE_TIMEOUT_S = 30.0


class Transcript:
    """
    Ordered record of every message sent in either direction.

    Per-block parity counts are always kept; the messages themselves only when
    `retain` is set.
    """
    def __init__(self, retain=True):
        self.retain = retain
        self._entries = []
        self._parity = Counter()
        self._count = 0
        self._lock = threading.Lock()

    def record(self, sender, message):
        with self._lock:
            self._count += 1
            if sender == 'alice':
                self._parity[message.block] += message.parity_bits
            if self.retain:
                self._entries.append((sender, message))

    def __iter__(self):
        with self._lock:
            return iter(list(self._entries))

    def __len__(self):
        with self._lock:
            return self._count

    def messages(self, sender=None, block=None, type_=None):
        return [
            m for s, m in self
            if (sender is None or s == sender) and (block is None or m.block == block)
            and (type_ is None or m.type == type_)
        ]

    def parity_bits(self, block=None):
        """
        Total parity bits Alice disclosed, optionally for one block.
        """
        with self._lock:
            return self._parity[block] if block is not None else sum(self._parity.values())

    def to_lines(self):
        return [f"{sender} {message.to_wire()}" for sender, message in self]


class QueuePort:
    """
    One end of an in-process channel. When `on_idle` is set, an empty inbox runs it
    once before blocking; the interleaved schedule uses that to let Alice catch up.
    """
    def __init__(self, name, inbox, outbox, transcript):
        self.name = name
        self._inbox = inbox
        self._outbox = outbox
        self.transcript = transcript
        self.on_idle = None

    def send(self, message):
        self.transcript.record(self.name, message)
        self._outbox.put(message)

    def receive(self, timeout=RECEIVE_TIMEOUT_S):
        if self.on_idle is not None and self._inbox.empty():
            self.on_idle()
        try:
            message = self._inbox.get(timeout=timeout)
        except queue.Empty:
            raise ChannelError(f"{self.name}: no message within {timeout} s") from None
        if message is None:
            raise ChannelError(f"{self.name}: channel closed")
        return message

    def pending(self):
        """
        Drains the messages already waiting, without blocking.
        """
        drained = []
        while True:
            try:
                message = self._inbox.get_nowait()
            except queue.Empty:
                return drained
            if message is not None:
                drained.append(message)

    def close(self):
        self._outbox.put(None)


class InProcessChannel:
    """
    Two queue-backed ports sharing one transcript.
    """
    def __init__(self, transcript=None):
        self.transcript = transcript if transcript is not None else Transcript()
        to_alice, to_bob = queue.Queue(), queue.Queue()
        self.alice = QueuePort('alice', to_alice, to_bob, self.transcript)
        self.bob = QueuePort('bob', to_bob, to_alice, self.transcript)


class SocketPort:
    """
    One end of a channel carried as newline-delimited JSON over a stream socket.
    """
    def __init__(self, name, sock, transcript=None):
        self.name = name
        self._sock = sock
        self._reader = sock.makefile('r', encoding='utf-8', newline='\n')
        self._lock = threading.Lock()
        self.transcript = transcript if transcript is not None else Transcript()

    def send(self, message):
        self.transcript.record(self.name, message)
        data = (message.to_wire() + '\n').encode('utf-8')
        with self._lock:
            try:
                self._sock.sendall(data)
            except OSError as e:
                raise ChannelError(f"{self.name}: send failed: {e}") from e

    def receive(self, timeout=RECEIVE_TIMEOUT_S):
        self._sock.settimeout(timeout)
        try:
            line = self._reader.readline()
        except (OSError, socket.timeout) as e:
            raise ChannelError(f"{self.name}: receive failed: {e}") from e
        if not line:
            raise ChannelError(f"{self.name}: peer closed the connection")
        return Message.from_wire(line)

    def close(self):
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._reader.close()
        self._sock.close()


class SocketChannel:
    """
    Both ends of a loopback TCP connection, sharing one transcript.
    Bob dials Alice's listening socket through connect_port.
    """
    def __init__(self, transcript=None, host='127.0.0.1'):
        self.transcript = transcript if transcript is not None else Transcript()
        with socket.create_server((host, 0)) as listener:
            port = listener.getsockname()[1]
            self.bob = connect_port('bob', host, port, transcript=self.transcript)
            alice_sock, _ = listener.accept()
        self.alice = SocketPort('alice', alice_sock, self.transcript)

    def close(self):
        self.alice.close()
        self.bob.close()


@retry(
    retry=retry_if_exception_type(ConnectionError),
    stop=stop_after_attempt(5),
    wait=wait_exponential(multiplier=0.2, max=5),
    reraise=True,
)
def connect_port(name, host, port, timeout=RECEIVE_TIMEOUT_S, transcript=None):
    """
    Opens a SocketPort to a listening peer, retrying while the peer starts up.
    """
    logger.debug(f"{name}: connecting to {host}:{port}")
    sock = socket.create_connection((host, port), timeout=timeout)
    return SocketPort(name, sock, transcript)
