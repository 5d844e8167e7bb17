# data/log_parsers/DETECTION/log_parsers_detection.py

import logging
import re

import numpy as np

from services.errors import MalformedLogError
from services.protocol.block_simulator import DetectionLog

logger = logging.getLogger('DetectionLogParser')  # pylint: disable=no-member

HEADER_RE = re.compile(r'^#\s*scwqkd-log v1,\s*n_cycles=(\d+)\s*$')
TRAILER_RE = re.compile(r'^#\s*end clicks=(\d+)\s*$')
META_RE = re.compile(r'^#\s*meta\s+([\w.\-]+)\s*=\s*(.*)$')


def write_detection_log(file_obj, log, metadata=None):
    """
    Writes a DetectionLog in the scwqkd-log v1 format: header, optional
    '# meta key = value' lines, one click per line and an '# end clicks=<K>' trailer.
    """
    file_obj.write(f"# scwqkd-log v1, n_cycles={log.n_cycles}\n")
    for key, value in (metadata or {}).items():
        file_obj.write(f"# meta {key} = {value}\n")
    for cycle, a, b in zip(log.cycle_index, log.alice_states, log.bob_states):
        file_obj.write(f"{int(cycle)},{int(a) % 2},{int(a) // 2},{int(b) % 2},{int(b) // 2}\n")
    file_obj.write(f"# end clicks={len(log)}\n")
    logger.debug(f"Wrote detection log with {len(log)} clicks.")


def parse_detection_log_generator(file_obj):
    """
    Generator that parses a detection log line by line.
    Yields ('header', n_cycles), ('meta', (key, value)), ('click', (line, 5 ints))
    and ('end', (line, count)) when the optional trailer is present.

    Every click record ends with a newline; a last record without one, or a
    partial one, means the file was cut. Raises MalformedLogError on the first bad line.
    """
    logger.info("Starting detection log parsing.")
    seen_header = False
    seen_end = False
    line_num = 0

    for line_num, raw in enumerate(file_obj, start=1):
        line = raw.strip()
        if not line:
            continue

        if seen_end:
            raise MalformedLogError(line_num, "content after the end marker")

        if not seen_header:
            match = HEADER_RE.match(line)
            if not match:
                raise MalformedLogError(line_num, "expected header '# scwqkd-log v1, n_cycles=<N>'")
            seen_header = True
            yield 'header', int(match.group(1))
            continue

        # Handle comments and metadata
        if line.startswith('#'):
            trailer = TRAILER_RE.match(line)
            if trailer:
                seen_end = True
                yield 'end', (line_num, int(trailer.group(1)))
                continue
            meta = META_RE.match(line)
            if meta:
                yield 'meta', (meta.group(1), meta.group(2).strip())
            # Ignore other # lines
            continue

        if not raw.endswith('\n'):
            raise MalformedLogError(line_num, f"record '{line}' has no line end, file truncated")
        parts = line.split(',')
        if len(parts) != 5:
            raise MalformedLogError(line_num, f"expected 5 comma-separated fields, found {len(parts)}")
        try:
            values = tuple(int(p) for p in parts)
        except ValueError:
            raise MalformedLogError(line_num, f"non-integer field in '{line}'") from None
        if any(v not in (0, 1) for v in values[1:]):
            raise MalformedLogError(line_num, "basis and bit fields must be 0 or 1")
        yield 'click', (line_num, values)

    if not seen_header:
        raise MalformedLogError(max(line_num, 1), "empty file, header missing")


def read_detection_log(file_obj):
    """
    Reads a whole detection log. Returns (DetectionLog, metadata dict).
    """
    n_cycles = None
    metadata = {}
    cycles, alice, bob = [], [], []
    last_cycle = -1

    for kind, payload in parse_detection_log_generator(file_obj):
        if kind == 'header':
            n_cycles = payload
            if n_cycles < 1:
                raise MalformedLogError(1, "n_cycles must be >= 1")
        elif kind == 'meta':
            metadata[payload[0]] = payload[1]
        elif kind == 'click':
            line_num, (cycle, a_basis, a_bit, b_basis, b_bit) = payload
            if cycle <= last_cycle:
                raise MalformedLogError(line_num, f"cycle index {cycle} is not increasing")
            if cycle >= n_cycles:
                raise MalformedLogError(line_num, f"cycle index {cycle} outside [0, {n_cycles})")
            last_cycle = cycle
            cycles.append(cycle)
            alice.append(a_basis + 2 * a_bit)
            bob.append(b_basis + 2 * b_bit)
        elif kind == 'end':
            line_num, count = payload
            if count != len(cycles):
                raise MalformedLogError(line_num, f"end marker announces {count} clicks, found {len(cycles)}; file truncated or padded")

    log = DetectionLog(
        n_cycles,
        np.asarray(cycles, dtype=np.int64),
        np.asarray(alice, dtype=np.uint8),
        np.asarray(bob, dtype=np.uint8),
    )
    logger.info(f"Parsed {len(log)} clicks over {n_cycles} cycles.")
    return log, metadata
